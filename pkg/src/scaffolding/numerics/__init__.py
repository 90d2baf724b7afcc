from .gradcheck import CheckInvalidError, GradCheckReport, grad_check
from .lstm import lstm_sequence
from .optim import AdamState, adam_step
from .tensor import (
    ContractError,
    Parameter,
    ShapeError,
    Tape,
    Tensor,
    TrainingError,
    add,
    as_tensor,
    backward,
    blend,
    concat,
    cosine,
    cross_entropy,
    embed,
    index,
    matmul,
    mean,
    mean_rows,
    mse,
    mul,
    no_grad,
    pad_axis,
    pick,
    reshape,
    scale,
    sigmoid,
    sub,
    tanh,
    total,
)

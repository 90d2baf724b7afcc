"""Dense float64 tensors with tape-based reverse-mode differentiation.

Every op reads ``.data`` (a numpy array) from its inputs and returns a new
:class:`Tensor`.  When a :class:`Tape` is active and at least one input
requires a gradient, the op appends a record holding a closure that maps
the output gradient to input gradients.  ``backward`` walks that record in
reverse, so every record is visited exactly once.

Without an active tape the ops are plain numpy evaluations, which is the
inference path used by acting and target-network evaluation.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

DTYPE = np.float64


class ShapeError(ValueError):
    """Operands with incompatible shapes."""


class ContractError(RuntimeError):
    """A precondition of an operation was violated."""


class TrainingError(RuntimeError):
    """Non-finite values reached the optimizer."""


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data, dtype=DTYPE)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return index(self, key)


class Parameter(Tensor):
    """A trainable tensor.  ``decay`` marks it for L2 weight decay."""

    __slots__ = ("decay",)

    def __init__(self, data, name: str = "", decay: bool = True):
        super().__init__(data, requires_grad=True, name=name)
        self.decay = decay
        self.grad = np.zeros_like(self.data)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape}, decay={self.decay})"


@dataclass
class _Record:
    out: Tensor
    inputs: tuple[Tensor, ...]
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]
    op: str


@dataclass
class Tape:
    """The computation record: executed primitive ops in execution order.

    Use as a context manager; ops executed inside the ``with`` block are
    recorded.  Tapes nest, the innermost one records.
    """

    records: list[_Record] = field(default_factory=list)

    def __enter__(self) -> "Tape":
        _TAPES.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _TAPES.remove(self)

    def __len__(self) -> int:
        return len(self.records)

    def ops(self) -> list[str]:
        return [r.op for r in self.records]

    def backward(self, loss: Tensor) -> None:
        backward(self, loss)


_TAPES: list[Tape] = []


@contextlib.contextmanager
def no_grad():
    """Suspend recording for the enclosed block."""
    saved = list(_TAPES)
    _TAPES.clear()
    try:
        yield
    finally:
        _TAPES.extend(saved)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _emit(data: np.ndarray, inputs: tuple[Tensor, ...], grad_fn, op: str) -> Tensor:
    if not _TAPES or not any(t.requires_grad for t in inputs):
        return Tensor(data)
    out = Tensor(data, requires_grad=True)
    _TAPES[-1].records.append(_Record(out, inputs, grad_fn, op))
    return out


def backward(record: Tape, loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every reachable leaf.

    Gradients add onto whatever the leaves already hold; clearing is the
    optimizer's job.  Leaves the loss does not depend on are left alone.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    produced = {id(r.out) for r in record.records}
    if loss.requires_grad and id(loss) not in produced:
        raise ContractError("loss was not produced on this tape")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for rec in reversed(record.records):
        g = grads.pop(id(rec.out), None)
        if g is None:
            continue
        for inp, gi in zip(rec.inputs, rec.backward(g)):
            if gi is None or not inp.requires_grad:
                continue
            if id(inp) in produced:
                acc = grads.get(id(inp))
                grads[id(inp)] = gi if acc is None else acc + gi
            else:
                inp.grad = gi.copy() if inp.grad is None else inp.grad + gi


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


# -- elementwise -------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")
    return _emit(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
        "add",
    )


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")
    return _emit(
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
        "sub",
    )


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")
    return _emit(
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
        "mul",
    )


def scale(x, c: float) -> Tensor:
    x = as_tensor(x)
    return _emit(x.data * c, (x,), lambda g: (g * c,), "scale")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # exp of a non-positive argument only, so no overflow
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    y = _sigmoid(x.data)
    return _emit(y, (x,), lambda g: (g * y * (1.0 - y),), "sigmoid")


def tanh(x) -> Tensor:
    x = as_tensor(x)
    y = np.tanh(x.data)
    return _emit(y, (x,), lambda g: (g * (1.0 - y * y),), "tanh")


def blend(mask, new, old) -> Tensor:
    """``mask * new + (1 - mask) * old`` with a constant 0/1 mask."""
    new, old = as_tensor(new), as_tensor(old)
    m = np.asarray(mask, dtype=DTYPE)
    if new.shape != old.shape:
        raise ShapeError(f"blend: {new.shape} vs {old.shape}")
    while m.ndim < new.ndim:
        m = m[..., None]
    return _emit(
        m * new.data + (1.0 - m) * old.data,
        (new, old),
        lambda g: (g * m, g * (1.0 - m)),
        "blend",
    )


# -- linear algebra ----------------------------------------------------------

def matmul(a, b) -> Tensor:
    """Matrix product.  ``b`` is a vector or matrix; ``a`` may carry leading
    batch axes, which are flattened for the weight gradient."""
    a, b = as_tensor(a), as_tensor(b)
    if b.ndim not in (1, 2) or a.ndim < 1:
        raise ShapeError(f"matmul: unsupported shapes {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    out = a.data @ b.data

    def grad_fn(g):
        if b.ndim == 1:
            ga = g[..., None] * b.data
            gb = np.tensordot(a.data, g, axes=(tuple(range(a.ndim - 1)), tuple(range(g.ndim))))
            return ga, gb
        ga = g @ b.data.T
        if a.ndim == 1:
            gb = np.outer(a.data, g)
        else:
            gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, b.shape[1])
        return ga, gb

    return _emit(out, (a, b), grad_fn, "matmul")


# -- reductions --------------------------------------------------------------

def total(x) -> Tensor:
    """Sum of all entries, as a scalar."""
    x = as_tensor(x)
    return _emit(np.asarray(x.data.sum()), (x,), lambda g: (np.broadcast_to(g, x.shape).copy(),), "sum")


def mean(x) -> Tensor:
    x = as_tensor(x)
    n = x.data.size
    return _emit(
        np.asarray(x.data.mean()), (x,), lambda g: (np.full(x.shape, float(g) / n),), "mean"
    )


def mean_rows(x) -> Tensor:
    """Column-wise mean over the rows of an ``n x d`` matrix."""
    x = as_tensor(x)
    if x.ndim != 2:
        raise ShapeError(f"mean_rows expects a matrix, got {x.shape}")
    n = x.shape[0]
    if n == 0:
        raise ContractError("mean_rows of an empty matrix")
    return _emit(
        x.data.mean(axis=0),
        (x,),
        lambda g: (np.broadcast_to(g / n, x.shape).copy(),),
        "mean_rows",
    )


# -- structural --------------------------------------------------------------

def concat(tensors: Iterable, axis: int = -1) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    if not ts:
        raise ContractError("concat of nothing")
    nd = ts[0].ndim
    ax = axis % nd
    for t in ts[1:]:
        if t.ndim != nd or any(
            t.shape[i] != ts[0].shape[i] for i in range(nd) if i != ax
        ):
            raise ShapeError(f"concat: {[t.shape for t in ts]} along axis {axis}")
    sizes = [t.shape[ax] for t in ts]
    bounds = np.cumsum([0] + sizes)

    def grad_fn(g):
        return [
            np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=ax) for i in range(len(ts))
        ]

    return _emit(np.concatenate([t.data for t in ts], axis=ax), tuple(ts), grad_fn, "concat")


def index(x, key) -> Tensor:
    """Basic slicing/indexing (``x[key]``)."""
    x = as_tensor(x)
    out = x.data[key]

    def grad_fn(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, key, g)
        return (gx,)

    return _emit(np.array(out), (x,), grad_fn, "index")


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: {x.shape} -> {shape}") from None
    return _emit(out, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def pad_axis(x, axis: int, length: int) -> Tensor:
    """Zero-pad (or truncate) ``axis`` to ``length``."""
    x = as_tensor(x)
    ax = axis % x.ndim
    n = x.shape[ax]
    if n >= length:
        sl = [slice(None)] * x.ndim
        sl[ax] = slice(0, length)
        return index(x, tuple(sl))
    widths = [(0, 0)] * x.ndim
    widths[ax] = (0, length - n)
    sl = [slice(None)] * x.ndim
    sl[ax] = slice(0, n)
    sl = tuple(sl)
    return _emit(np.pad(x.data, widths), (x,), lambda g: (g[sl],), "pad")


def embed(table, ids) -> Tensor:
    """Row lookup ``table[ids]`` for an integer array of any shape."""
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)

    def grad_fn(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids.reshape(-1), g.reshape(-1, table.shape[1]))
        return (gt,)

    return _emit(table.data[ids], (table,), grad_fn, "embed")


def pick(x, cols) -> Tensor:
    """``x[i, cols[i]]`` for each row ``i`` of a matrix."""
    x = as_tensor(x)
    cols = np.asarray(cols, dtype=np.int64)
    rows = np.arange(x.shape[0])

    def grad_fn(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, (rows, cols), g)
        return (gx,)

    return _emit(x.data[rows, cols], (x,), grad_fn, "pick")


# -- losses ------------------------------------------------------------------

def mse(pred, target) -> Tensor:
    pred = as_tensor(pred)
    t = np.asarray(target.data if isinstance(target, Tensor) else target, dtype=DTYPE)
    if pred.shape != t.shape:
        raise ShapeError(f"mse: {pred.shape} vs {t.shape}")
    diff = pred.data - t
    n = diff.size
    return _emit(
        np.asarray((diff**2).mean()), (pred,), lambda g: (2.0 * float(g) * diff / n,), "mse"
    )


def cross_entropy(logits, labels) -> Tensor:
    """Mean negative log-likelihood of integer ``labels`` under softmax(logits)."""
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
    rows = np.arange(logits.shape[0])
    loss = -logp[rows, labels].mean()

    def grad_fn(g):
        p = np.exp(logp)
        p[rows, labels] -= 1.0
        return (float(g) * p / len(labels),)

    return _emit(np.asarray(loss), (logits,), grad_fn, "cross_entropy")


# -- non-differentiable helpers ----------------------------------------------

def cosine(a, b) -> float:
    """Cosine similarity; 0 when either vector has zero norm."""
    a = np.asarray(a.data if isinstance(a, Tensor) else a, dtype=DTYPE).ravel()
    b = np.asarray(b.data if isinstance(b, Tensor) else b, dtype=DTYPE).ravel()
    if a.shape != b.shape:
        raise ShapeError(f"cosine: lengths {a.size} and {b.size}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))

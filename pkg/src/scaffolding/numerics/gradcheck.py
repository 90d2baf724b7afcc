"""Central finite-difference check of taped gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .tensor import Parameter, Tape, Tensor, backward, no_grad


class CheckInvalidError(RuntimeError):
    """The closure under test is not deterministic."""


@dataclass
class GradCheckReport:
    max_rel_error: dict[str, float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(e < self.tolerance for e in self.max_rel_error.values())

    @property
    def worst(self) -> tuple[str, float]:
        name = max(self.max_rel_error, key=self.max_rel_error.get)
        return name, self.max_rel_error[name]


def numeric_gradient(closure: Callable[[], Tensor], p: Parameter, h: float = 1e-5) -> np.ndarray:
    grad = np.zeros_like(p.data)
    flat = p.data.reshape(-1)
    out = grad.reshape(-1)
    for k in range(flat.size):
        saved = flat[k]
        flat[k] = saved + h
        up = closure().item()
        flat[k] = saved - h
        down = closure().item()
        flat[k] = saved
        out[k] = (up - down) / (2 * h)
    return grad


def analytic_gradient(closure: Callable[[], Tensor], params: list[Parameter]) -> dict[str, np.ndarray]:
    saved = {p.name: p.grad for p in params}
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = closure()
    backward(tape, loss)
    grads = {p.name: p.grad.copy() for p in params}
    for p in params:
        p.grad = saved[p.name]
    return grads


def grad_check(
    closure: Callable[[], Tensor],
    params: list[Parameter],
    tolerance: float = 1e-4,
    h: float = 1e-5,
    analytic: dict[str, np.ndarray] | None = None,
    floor: float = 1e-6,
) -> GradCheckReport:
    """Compare analytic gradients against central differences.

    Relative error per coordinate is ``|a - n| / max(|a| + |n|, floor)``;
    the floor keeps coordinates whose true gradient is ~0 from reporting
    round-off as a large relative error.  ``analytic`` may be supplied to
    check externally produced gradients (used for negative controls).
    """
    with no_grad():
        first, second = closure().item(), closure().item()
    if first != second:
        raise CheckInvalidError(f"closure is not deterministic: {first!r} != {second!r}")
    if analytic is None:
        analytic = analytic_gradient(closure, params)
    errors = {}
    with no_grad():
        for p in params:
            num = numeric_gradient(closure, p, h)
            a = analytic[p.name]
            rel = np.abs(a - num) / np.maximum(np.abs(a) + np.abs(num), floor)
            errors[p.name] = float(rel.max()) if rel.size else 0.0
    return GradCheckReport(errors, tolerance)

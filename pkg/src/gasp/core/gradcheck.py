"""Central finite-difference verification of reverse-mode gradients."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


@dataclass
class GradCheckReport:
    max_rel_error: float
    tolerance: float
    n_checked: int
    worst: str = ""
    per_input: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} max_rel_err={self.max_rel_error:.3e} tol={self.tolerance:.0e} n={self.n_checked} worst={self.worst}"


def relative_error(analytic: float, numeric: float, floor: float = 1e-6) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def grad_check(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    tolerance: float = 1e-4,
    h: float = 1e-5,
    max_entries: int | None = None,
    seed: int = 0,
    names: Sequence[str] | None = None,
    floor: float = 1e-6,
    stencil: int = 2,
    steps: Sequence[float] | None = None,
) -> GradCheckReport:
    """Compare reverse-mode gradients of ``fn()`` with central differences.

    ``fn`` is re-evaluated from scratch for each perturbation and must
    return a tensor; non-scalar outputs are contracted with a fixed random
    projection first. Each input tensor is perturbed in place at (at most
    ``max_entries``) sampled positions. ``stencil=4`` uses the fourth-order
    central difference, which tolerates a larger ``h`` and so suffers far
    less cancellation on deep graphs.

    ``steps`` lists alternative step sizes; an entry is scored by the step
    that agrees best. Small steps suffer cancellation, large ones may cross
    a ReLU or max-pool kink, and a wrong gradient disagrees at every step.
    """
    if stencil not in (2, 4):
        raise ValueError("stencil must be 2 or 4")
    rng = np.random.default_rng(seed)
    names = list(names) if names is not None else [f"input{i}" for i in range(len(inputs))]
    out = fn()
    proj = rng.standard_normal(out.shape) if out.size > 1 else None

    def scalar() -> Tensor:
        y = fn()
        return (y * proj).sum() if proj is not None else y.sum()

    for t in inputs:
        t.grad = None
    scalar().backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]

    worst, worst_name, n = 0.0, "", 0
    per_input: dict[str, float] = {}
    for t, g, name in zip(inputs, analytic, names):
        t.data = np.ascontiguousarray(t.data)
        flat = t.data.reshape(-1)
        if max_entries is not None and flat.size > max_entries:
            positions = rng.choice(flat.size, size=max_entries, replace=False)
        else:
            positions = np.arange(flat.size)
        gflat = g.reshape(-1)
        local = 0.0
        for pos in positions:
            orig = flat[pos]

            def at(offset: float) -> float:
                flat[pos] = orig + offset
                return scalar().item()

            err, numeric = np.inf, np.nan
            for step in steps or (h,):
                if stencil == 2:
                    est = (at(step) - at(-step)) / (2.0 * step)
                else:
                    est = (8.0 * (at(step) - at(-step)) - (at(2 * step) - at(-2 * step))) / (12.0 * step)
                e = relative_error(gflat[pos], est, floor)
                if e < err:
                    err, numeric = e, est
                if err < tolerance:
                    break
            flat[pos] = orig
            n += 1
            local = max(local, err)
            if err > worst:
                worst, worst_name = err, f"{name}[{int(pos)}] analytic={gflat[pos]:.6e} numeric={numeric:.6e}"
        per_input[name] = local
    for t in inputs:
        t.grad = None
    return GradCheckReport(worst, tolerance, n, worst_name, per_input)

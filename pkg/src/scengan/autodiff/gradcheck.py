"""Central finite-difference verification of recorded gradients.

The check probes d/dx of s(x) = sum(f(x) * v) for a fixed random projection
v, comparing the taped gradient against (s(x+h e_i) - s(x-h e_i)) / 2h per
coordinate. The probe sums are accumulated in float64 regardless of the
tensor dtype so the oracle's own rounding stays far below the tolerance the
gradient is being held to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor


@dataclass
class GradCheckResult:
    passed: bool
    max_rel_error: float
    tolerance: float
    worst_index: tuple

    def __bool__(self):
        return self.passed


def nudge_from_kinks(x: np.ndarray, kinks=(0.0,), margin=1e-4, shift=3e-3) -> np.ndarray:
    """Move entries that sit within ``margin`` of a non-differentiable point."""
    out = np.array(x, copy=True)
    for kink in kinks:
        near = np.abs(out - kink) < margin
        out[near] = kink + shift
    return out


def finite_difference_check(fn, x: Tensor, tolerance: float = 1e-3, h: float = 1e-3,
                            rng: np.random.Generator | None = None) -> GradCheckResult:
    """Compare the recorded gradient of ``fn`` at ``x`` against central differences.

    ``fn`` maps a Tensor to a Tensor of any shape. Returns a report rather
    than raising, so callers can aggregate over seeds.
    """
    rng = rng or np.random.default_rng(0)
    probe = Tensor(x.data, requires_grad=True, dtype=x.data.dtype)
    out = fn(probe)
    v = rng.standard_normal(out.data.shape)

    out.backward(v.astype(out.data.dtype))
    analytic = np.asarray(probe.grad, dtype=np.float64).ravel()

    base = x.data.copy()
    fd = np.empty(base.size, dtype=np.float64)
    flat = base.ravel()
    for i in range(base.size):
        orig = flat[i]
        flat[i] = orig + h
        splus = float(np.dot(fn(Tensor(base.reshape(x.data.shape), dtype=x.data.dtype))
                             .data.astype(np.float64).ravel(), v.ravel()))
        flat[i] = orig - h
        sminus = float(np.dot(fn(Tensor(base.reshape(x.data.shape), dtype=x.data.dtype))
                              .data.astype(np.float64).ravel(), v.ravel()))
        flat[i] = orig
        fd[i] = (splus - sminus) / (2.0 * h)

    scale = max(np.abs(analytic).max(), np.abs(fd).max(), 1e-8)
    rel = np.abs(analytic - fd) / scale
    worst = int(rel.argmax())
    result = GradCheckResult(
        passed=bool(rel[worst] <= tolerance),
        max_rel_error=float(rel[worst]),
        tolerance=tolerance,
        worst_index=np.unravel_index(worst, x.data.shape),
    )
    return result

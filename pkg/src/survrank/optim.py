"""Deterministic first-order minimizer shared by every estimator.

Plain gradient descent with Armijo backtracking: slower than quasi-Newton but
dependency-free, bit-reproducible, and adequate at d ~ 10. The accepted loss
trace is monotone non-increasing by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptConfig:
    max_iters: int = 2000
    grad_tol: float = 1e-6
    init: np.ndarray | None = None
    backtrack_shrink: float = 0.5
    armijo_c: float = 1e-4

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (self.grad_tol > 0):
            raise ValueError("grad_tol must be > 0")
        if not (0.0 < self.backtrack_shrink < 1.0):
            raise ValueError("backtrack_shrink must lie in (0, 1)")
        if not (0.0 < self.armijo_c < 1.0):
            raise ValueError("armijo_c must lie in (0, 1)")


@dataclass
class OptReport:
    iters: int
    final_grad_norm: float
    converged: bool
    loss_trace: np.ndarray = field(repr=False)


# Upper cap on the adaptive trial step; growth past the last accepted step
# keeps Rosenbrock-style valleys from crawling at a fixed unit step.
_MAX_STEP = 1e3
_MIN_STEP = 1e-18


def minimize(loss_grad_fn, config: OptConfig | None = None, dim: int | None = None):
    """Minimize ``loss_grad_fn(theta) -> (loss, grad)`` from ``config.init``.

    Returns ``(theta, OptReport)``. Raises RuntimeError when the loss or
    gradient is non-finite at the current iterate (the trace so far is
    attached to the exception message).
    """
    config = config or OptConfig()
    if config.init is not None:
        theta = np.asarray(config.init, dtype=float).copy()
    elif dim is not None:
        theta = np.zeros(dim)
    else:
        raise ValueError("either config.init or dim is required")

    loss, grad = loss_grad_fn(theta)
    if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
        raise RuntimeError(f"non-finite loss/gradient at the initial point: loss={loss!r}")

    trace = [float(loss)]
    step = 1.0
    converged = False
    iters = 0
    for iters in range(config.max_iters):
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= config.grad_tol:
            converged = True
            break

        sq = grad_norm * grad_norm
        t = min(step * 2.0, _MAX_STEP)
        accepted = False
        while t >= _MIN_STEP:
            cand = theta - t * grad
            cand_loss, cand_grad = loss_grad_fn(cand)
            ok = np.isfinite(cand_loss) and np.all(np.isfinite(cand_grad))
            if ok and cand_loss <= loss - config.armijo_c * t * sq:
                accepted = True
                break
            t *= config.backtrack_shrink
        if not accepted:
            # No step of any representable size helps: stalled.
            break
        theta, loss, grad, step = cand, float(cand_loss), cand_grad, t
        trace.append(loss)
    else:
        iters = config.max_iters

    grad_norm = float(np.linalg.norm(grad))
    if grad_norm <= config.grad_tol:
        converged = True
    report = OptReport(
        iters=iters,
        final_grad_norm=grad_norm,
        converged=converged,
        loss_trace=np.asarray(trace),
    )
    return theta, report


def finite_diff_gradient(loss_fn, beta, step):
    """Central-difference gradient of a scalar loss; the test-side oracle."""
    if not (step > 0):
        raise ValueError("step must be > 0")
    beta = np.asarray(beta, dtype=float)
    out = np.empty_like(beta)
    for k in range(beta.size):
        hi = beta.copy()
        lo = beta.copy()
        hi[k] += step
        lo[k] -= step
        out[k] = (loss_fn(hi) - loss_fn(lo)) / (2.0 * step)
    return out

"""A small BFGS minimiser with a backtracking (Armijo) line search."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    converged: bool
    iterations: int
    message: str
    trace: list = field(default_factory=list)


def bfgs(fun_and_grad, x0, inv_hess0=None, gtol=1e-8, ftol=1e-12, max_iter=500,
         c1=1e-4, shrink=0.5, max_backtracks=60, keep_trace=False, max_stall=10, fnoise=1e-10):
    """Minimise ``f`` given ``fun_and_grad(x) -> (f, grad)``.

    Stops when ``max|grad| <= gtol``, or when both the achieved decrease of an
    accepted step and the decrease predicted for the next one (``-g'Hg``) are
    at most ``ftol`` relative to ``|f|``.  Steps satisfy the Armijo condition,
    or, once changes in ``f`` are below its rounding level (``fnoise`` relative),
    an approximate Wolfe condition on the directional derivative, so the
    gradient can still be driven down where ``f`` no longer resolves progress.
    Trial points where ``f`` is not finite are treated as line-search failures
    and the step is shortened.  Gives up after ``max_stall`` consecutive
    accepted steps without decrease.
    """
    x = np.array(x0, dtype=float)
    f, g = fun_and_grad(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        return OptimizeResult(x, f, g, False, 0, "objective not finite at start")
    n = x.size
    H0 = np.eye(n) if inv_hess0 is None else np.array(inv_hess0, dtype=float)
    H = H0.copy()
    trace = [f] if keep_trace else []
    fresh = True  # H currently equals H0
    stalled = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) <= gtol:
            return OptimizeResult(x, f, g, True, it - 1, "gradient tolerance reached", trace)
        d = -H @ g
        slope = g @ d
        if not slope < 0.0:
            H = H0.copy()
            fresh = True
            d = -H @ g
            slope = g @ d
            if not slope < 0.0:
                return OptimizeResult(x, f, g, False, it - 1, "no descent direction", trace)
        t = 1.0
        noise = fnoise * max(abs(f), 1.0)
        for _ in range(max_backtracks):
            x_new = x + t * d
            f_new, g_new = fun_and_grad(x_new)
            if np.isfinite(f_new) and np.all(np.isfinite(g_new)):
                if f_new <= f + c1 * t * slope:
                    break
                # approximate Wolfe: f unchanged up to rounding, directional slope shrank
                if f_new <= f + noise and abs(g_new @ d) <= 0.9 * abs(slope):
                    break
            t *= shrink
        else:
            if not fresh:
                H = H0.copy()
                fresh = True
                continue
            return OptimizeResult(x, f, g, False, it - 1, "line search failed", trace)
        s = x_new - x
        yv = g_new - g
        g_prev = np.max(np.abs(g))
        decrease = f - f_new
        x, f, g = x_new, f_new, g_new
        if keep_trace:
            trace.append(f)
        scale = ftol * max(abs(f), 1.0)
        if decrease <= scale and -(g @ (H @ g)) >= -scale:
            return OptimizeResult(x, f, g, True, it, "relative function tolerance reached", trace)
        # accepted steps that change f by nothing at all: f is flat at rounding level
        stalled = stalled + 1 if decrease <= 0.0 and not np.max(np.abs(g)) < g_prev else 0
        if stalled >= max_stall:
            return OptimizeResult(x, f, g, False, it, "no progress (objective flat at rounding level)", trace)
        sy = s @ yv
        if sy > 1e-12 * np.sqrt((s @ s) * (yv @ yv)):
            rho = 1.0 / sy
            Hy = H @ yv
            H = (H - rho * (np.outer(s, Hy) + np.outer(Hy, s))
                 + (rho * rho * (yv @ Hy) + rho) * np.outer(s, s))
            fresh = False
    converged = bool(np.max(np.abs(g)) <= gtol)
    return OptimizeResult(x, f, g, converged, max_iter, "maximum iterations reached", trace)

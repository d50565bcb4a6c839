"""Limited-memory BFGS with a strong-Wolfe line search.

Works on a flat numpy parameter vector; the objective callback returns
(loss, gradient). Two-loop recursion with the usual gamma scaling, memory
10 by default, Wolfe constants c1 = 1e-4, c2 = 0.9. Accepted steps satisfy
the Armijo condition, so the recorded loss history never increases. If the
line search fails, one steepest-descent rescue step is attempted before
stopping with a status.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import math

import numpy as np


@dataclass
class OptimResult:
    x: np.ndarray
    loss: float
    grad_inf_norm: float
    n_iters: int
    status: str
    # rows (iter, loss, grad_inf_norm, step_length); iter 0 is the start point
    history: list = field(default_factory=list)


def _wolfe_line_search(fun, x, f0, g0, d, c1, c2, max_evals=30):
    """Strong Wolfe search along d. Returns (alpha, f, g, n_evals) or None."""
    dg0 = float(np.dot(g0, d))
    if dg0 >= 0.0:
        return None
    alpha_prev, f_prev, dg_prev = 0.0, f0, dg0
    alpha = 1.0
    alpha_max = 1e4
    evals = 0

    def phi(a):
        nonlocal evals
        evals += 1
        f, g = fun(x + a * d)
        return f, g

    bracket = None
    for _ in range(max_evals):
        f, g = phi(alpha)
        dg = float(np.dot(g, d)) if math.isfinite(f) else math.inf
        if (not math.isfinite(f)) or f > f0 + c1 * alpha * dg0 or (alpha_prev > 0.0 and f >= f_prev):
            bracket = (alpha_prev, alpha, f_prev, f, dg_prev)
            break
        if abs(dg) <= -c2 * dg0:
            return alpha, f, g, evals
        if dg >= 0.0:
            bracket = (alpha, alpha_prev, f, f_prev, dg)
            break
        alpha_prev, f_prev, dg_prev = alpha, f, dg
        alpha = min(2.0 * alpha, alpha_max)
        if alpha >= alpha_max:
            return None
    if bracket is None:
        return None

    lo, hi, f_lo, f_hi, dg_lo = bracket
    for _ in range(max_evals):
        # bisection with a quadratic-interpolation attempt
        if math.isfinite(f_hi) and math.isfinite(dg_lo) and f_hi > f_lo:
            denom = 2.0 * (f_hi - f_lo - dg_lo * (hi - lo))
            trial = lo - dg_lo * (hi - lo) ** 2 / denom if denom != 0.0 else 0.5 * (lo + hi)
        else:
            trial = 0.5 * (lo + hi)
        span = abs(hi - lo)
        lo_, hi_ = min(lo, hi), max(lo, hi)
        if not (lo_ + 0.1 * span <= trial <= hi_ - 0.1 * span):
            trial = 0.5 * (lo + hi)
        f, g = phi(trial)
        dg = float(np.dot(g, d)) if math.isfinite(f) else math.inf
        if (not math.isfinite(f)) or f > f0 + c1 * trial * dg0 or f >= f_lo:
            hi, f_hi = trial, f
        else:
            if abs(dg) <= -c2 * dg0:
                return trial, f, g, evals
            if dg * (hi - lo) >= 0.0:
                hi, f_hi = lo, f_lo
            lo, f_lo, dg_lo = trial, f, dg
        if abs(hi - lo) < 1e-16:
            break
    return None


def lbfgs(fun, x0, max_iters=200, grad_tol=1e-8, memory=10, c1=1e-4, c2=0.9,
          callback=None) -> OptimResult:
    """Minimize fun(x) -> (loss, grad). Deterministic for a given objective."""
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    if not math.isfinite(f):
        return OptimResult(x=x, loss=f, grad_inf_norm=math.inf, n_iters=0,
                           status="nonfinite_at_start", history=[(0, f, math.inf, 0.0)])
    g = np.asarray(g, dtype=float)
    ginf = float(np.max(np.abs(g))) if g.size else 0.0
    history = [(0, f, ginf, 0.0)]
    s_list: list[np.ndarray] = []
    y_list: list[np.ndarray] = []
    rho_list: list[float] = []
    status = "max_iters"
    it = 0
    while it < max_iters:
        if ginf < grad_tol:
            status = "converged"
            break
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(s_list), reversed(y_list), reversed(rho_list)):
            a = rho * float(np.dot(s, q))
            alphas.append(a)
            q -= a * y
        if y_list:
            y_last = y_list[-1]
            gamma = float(np.dot(s_list[-1], y_last) / np.dot(y_last, y_last))
        else:
            gamma = 1.0 / max(ginf, 1.0)   # unit-length first trial step
        q *= gamma
        for (s, y, rho), a in zip(zip(s_list, y_list, rho_list), reversed(alphas)):
            b = rho * float(np.dot(y, q))
            q += (a - b) * s
        d = -q

        ls = _wolfe_line_search(fun, x, f, g, d, c1, c2)
        if ls is None:
            # one steepest-descent rescue, then give up
            d = -g / max(ginf, 1.0)
            ls = _wolfe_line_search(fun, x, f, g, d, c1, c2)
            if ls is None:
                status = "line_search_failed"
                break
            s_list.clear(); y_list.clear(); rho_list.clear()
        alpha, f_new, g_new, _ = ls
        x_new = x + alpha * d
        s_vec = x_new - x
        if not np.any(s_vec):
            status = "stalled"
            break
        g_new = np.asarray(g_new, dtype=float)
        y_vec = g_new - g
        sy = float(np.dot(s_vec, y_vec))
        if sy > 1e-12 * float(np.linalg.norm(s_vec) * np.linalg.norm(y_vec) + 1e-300):
            s_list.append(s_vec)
            y_list.append(y_vec)
            rho_list.append(1.0 / sy)
            if len(s_list) > memory:
                s_list.pop(0); y_list.pop(0); rho_list.pop(0)
        x, f, g = x_new, f_new, g_new
        ginf = float(np.max(np.abs(g))) if g.size else 0.0
        it += 1
        history.append((it, f, ginf, float(alpha)))
        if callback is not None:
            callback(it, x, f, ginf)
    return OptimResult(x=x, loss=f, grad_inf_norm=ginf, n_iters=it,
                       status=status, history=history)

"""Scalar root finding: bracketed bisection with safeguarded Newton steps."""

from __future__ import annotations

import math
from typing import Callable

from .errors import BracketFailure


def safeguarded_newton(f: Callable[[float], float], lo: float, hi: float,
                       fprime: Callable[[float], float] | None = None,
                       xtol: float = 1e-13, rtol: float = 4e-16,
                       maxiter: int = 400) -> float:
    """Find a root of ``f`` in ``[lo, hi]``.

    A Newton step is taken when ``fprime`` is given and the step lands
    strictly inside the current bracket; otherwise the bracket is bisected.
    The bracket always shrinks, so convergence is guaranteed.

    Parameters
    ----------
    f : callable
        Continuous function with a sign change on ``[lo, hi]``.
    lo, hi : float
        Bracket endpoints.
    fprime : callable, optional
        Derivative of ``f``.
    xtol, rtol : float
        Stop when the bracket is narrower than ``xtol + rtol*|x|``.
    maxiter : int
        Iteration cap.

    Returns
    -------
    float
        The root estimate.

    Raises
    ------
    BracketFailure
        If ``f(lo)`` and ``f(hi)`` share a sign.
    """
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if not (math.isfinite(f_lo) and math.isfinite(f_hi)) or (f_lo > 0) == (f_hi > 0):
        raise BracketFailure("no sign change on bracket", lo, hi, f_lo, f_hi)

    x = 0.5 * (lo + hi)
    fx = f(x)
    for _ in range(maxiter):
        if fx == 0.0:
            return x
        if (fx > 0) == (f_lo > 0):
            lo, f_lo = x, fx
        else:
            hi, f_hi = x, fx
        if hi - lo <= xtol + rtol * abs(x):
            break
        x_new = None
        if fprime is not None:
            d = fprime(x)
            if d != 0.0 and math.isfinite(d):
                cand = x - fx / d
                if lo < cand < hi:
                    x_new = cand
        if x_new is None:
            x_new = 0.5 * (lo + hi)
        x = x_new
        fx = f(x)
    # return the better of the final iterate and the bracket ends
    best = min(((abs(fx), x), (abs(f_lo), lo), (abs(f_hi), hi)))
    return best[1]


def bisect(f: Callable[[float], float], lo: float, hi: float,
           iterations: int = 200) -> float:
    """Plain bisection for a fixed number of iterations (used as an oracle)."""
    f_lo, f_hi = f(lo), f(hi)
    if (f_lo > 0) == (f_hi > 0):
        raise BracketFailure("no sign change on bracket", lo, hi, f_lo, f_hi)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if (fm > 0) == (f_lo > 0):
            lo, f_lo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def expand_bracket(f: Callable[[float], float], x0: float, factor: float = 2.0,
                   max_steps: int = 200) -> tuple[float, float]:
    """Grow a bracket around ``x0`` for a monotone ``f`` on the positive axis.

    Multiplies or divides by ``factor`` until the sign of ``f`` changes.
    """
    f0 = f(x0)
    if f0 == 0.0:
        return x0, x0
    # find the direction that moves f toward zero
    up = f(x0 * factor)
    go_up = abs(up) < abs(f0) or (up > 0) != (f0 > 0)
    a, fa = x0, f0
    for _ in range(max_steps):
        b = a * factor if go_up else a / factor
        fb = f(b)
        if (fb > 0) != (fa > 0) or fb == 0.0:
            return (a, b) if a < b else (b, a)
        a, fa = b, fb
    raise BracketFailure("bracket expansion failed", x0, a, f0, fa)

"""Scalar root bracketing shared by the threshold solvers."""

from __future__ import annotations

import math
from typing import Callable

from scipy.optimize import brentq

from .exceptions import BracketFailure

XTOL = 1e-15
RTOL = 1e-14
MAX_DOUBLINGS = 200


def expand_right(f: Callable[[float], float], lo: float, step: float = 1.0) -> float:
    """Return ``hi > lo`` with ``sign(f(hi)) != sign(f(lo))``, doubling the step each try."""
    f_lo = f(lo)
    if f_lo == 0.0:
        return lo
    for _ in range(MAX_DOUBLINGS):
        hi = lo + step
        f_hi = f(hi)
        if math.isnan(f_hi):
            break
        if (f_hi > 0) != (f_lo > 0) or f_hi == 0.0:
            return hi
        step *= 2.0
    raise BracketFailure(f"no sign change right of {lo!r}")


def expand_left(f: Callable[[float], float], hi: float, step: float = 1.0) -> float:
    f_hi = f(hi)
    if f_hi == 0.0:
        return hi
    for _ in range(MAX_DOUBLINGS):
        lo = hi - step
        f_lo = f(lo)
        if math.isnan(f_lo):
            break
        if (f_lo > 0) != (f_hi > 0) or f_lo == 0.0:
            return lo
        step *= 2.0
    raise BracketFailure(f"no sign change left of {hi!r}")


def bracketed_root(f: Callable[[float], float], lo: float, hi: float) -> float:
    """Root of ``f`` on ``[lo, hi]``; the endpoints must straddle zero."""
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0) == (f_hi > 0) or math.isnan(f_lo) or math.isnan(f_hi):
        raise BracketFailure(f"f({lo!r})={f_lo!r} and f({hi!r})={f_hi!r} do not bracket a root")
    x = brentq(f, lo, hi, xtol=XTOL, rtol=RTOL, maxiter=500)
    return polish_root(f, x, lo, hi)


def polish_root(f: Callable[[float], float], x: float, lo: float, hi: float) -> float:
    """Shrink a near-root ``x`` to the adjacent pair of floats where ``f`` changes sign.

    Returns whichever of the pair has the smaller ``|f|``. Steep functions
    (roots next to a pole) need this: a few ulps of slack in ``x`` can
    cost several orders of magnitude in the residual.
    """
    fx = f(x)
    if fx == 0.0 or math.isnan(fx):
        return x
    pos = fx > 0
    a, b = x, x
    step = abs(math.ulp(x))
    for _ in range(64):
        left, right = max(lo, x - step), min(hi, x + step)
        f_left, f_right = f(left), f(right)
        if (f_left > 0) != pos or f_left == 0.0:
            a, b = left, x
            break
        if (f_right > 0) != pos or f_right == 0.0:
            a, b = x, right
            break
        step *= 2.0
    else:
        return x
    f_a = f(a)
    while True:
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_a > 0):
            a, f_a = mid, f_mid
        else:
            b = mid
    return a if abs(f_a) <= abs(f(b)) else b

"""Bracketed root finding."""

from __future__ import annotations

import math
from typing import Callable

from .errors import DomainError


def bisect(f: Callable[[float], float], lo: float, hi: float, max_iter: int = 200) -> float:
    """Bisection on ``[lo, hi]`` until the bracket cannot shrink further in floating point.

    ``f(lo)`` and ``f(hi)`` must differ in sign (a zero at either end is
    returned as is).
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if math.copysign(1.0, flo) == math.copysign(1.0, fhi):
        raise DomainError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid < 0.0) == (flo < 0.0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
    return lo if abs(flo) <= abs(fhi) else hi

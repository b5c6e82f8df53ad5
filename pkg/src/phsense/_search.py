"""Scalar bisection and golden-section search."""

from __future__ import annotations

import math
from typing import Callable

from .errors import NumericalError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def bisect(f: Callable[[float], float], a: float, b: float, ftol: float = 0.0, xtol: float = 0.0,
           max_iter: int = 200) -> float:
    """Root of ``f`` in [a, b]; ``f(a)`` and ``f(b)`` must differ in sign.

    Stops once |f| <= ftol, the bracket is narrower than xtol, or the bracket
    cannot shrink any further in floating point.
    """
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise NumericalError(f"root not bracketed: f({a!r})={fa!r}, f({b!r})={fb!r}")
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        if m == a or m == b:
            break
        fm = f(m)
        if abs(fm) <= ftol or abs(b - a) <= xtol:
            return m
        if (fm > 0.0) == (fa > 0.0):
            a, fa = m, fm
        else:
            b, fb = m, fm
    return a if abs(fa) <= abs(fb) else b


def expand_bracket(f: Callable[[float], float], x0: float, step: float, direction: float,
                   max_doublings: int = 200) -> tuple[float, float]:
    """Walk away from ``x0`` with doubling steps until ``f`` changes sign.

    Returns an ordered bracket (lo, hi). ``f(x0)`` sets the reference sign.
    """
    f0 = f(x0)
    inner = x0
    h = step
    for _ in range(max_doublings):
        outer = x0 + direction * h
        if (f(outer) > 0.0) != (f0 > 0.0):
            return (inner, outer) if inner < outer else (outer, inner)
        inner = outer
        h *= 2.0
    raise NumericalError("no sign change found while expanding the bracket")


def golden_max(f: Callable[[float], float], a: float, b: float, xtol: float) -> float:
    """Maximizer of a unimodal ``f`` on [a, b] to within ``xtol``."""
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= xtol:
        return 0.5 * (a + b)
    n = int(math.ceil(math.log(xtol / h) / math.log(INV_PHI)))
    c = a + INV_PHI2 * h
    d = a + INV_PHI * h
    fc, fd = f(c), f(d)
    for _ in range(n):
        if fc > fd:
            b, d, fd = d, c, fc
            h *= INV_PHI
            c = a + INV_PHI2 * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h *= INV_PHI
            d = a + INV_PHI * h
            fd = f(d)
    return c if fc > fd else d


def golden_min(f: Callable[[float], float], a: float, b: float, xtol: float) -> float:
    return golden_max(lambda x: -f(x), a, b, xtol)

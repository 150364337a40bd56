"""Deterministic 1-D search used by the key-length and p_X optimisers."""

from __future__ import annotations

import math
from typing import Callable

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_min(f: Callable[[float], float], a: float, b: float,
               tol: float = 1e-6) -> tuple[float, float]:
    """Minimise a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``.

    Stops once the bracket is narrower than ``tol * max(1, |x|)``.  The
    bracket end points are evaluated too, so a minimum sitting on the
    boundary is not lost.
    """
    if b < a:
        a, b = b, a
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol * max(1.0, abs(c)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    best = min(((fc, c), (fd, d), (f(a), a), (f(b), b)))
    return best[1], best[0]


def golden_max(f: Callable[[float], float], a: float, b: float,
               tol: float = 1e-6) -> tuple[float, float]:
    x, fx = golden_min(lambda t: -f(t), a, b, tol)
    return x, -fx

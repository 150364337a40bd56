"""Generalised entropy accumulation: smooth min-entropy lower bounds.

Two forms are provided.  :func:`geat_full_bound` is the finite-alpha bound

    N h - N (a-1) ln2 / (2 (2-a)) V^2
        - (g(eps) + a log2(1/p_omega)) / (a-1)
        - N ((a-1) / (2-a))^2 K'(a)

and :func:`geat_simplified_bound` the alpha-free ``N h - v1 sqrt(N) - v0``.
The array helpers starting with an underscore broadcast over numpy inputs
and are what the key-length optimiser evaluates on its grids.  Exponentials
that can overflow are assembled in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

LN2 = math.log(2.0)
XI = 2.0 * LN2 / (1.0 + 2.0 * LN2)


@dataclass(frozen=True)
class MinTradeoff:
    """Summary of an affine min-tradeoff function.

    ``h`` is its minimum over the accepted statistics, ``max_f`` and
    ``min_f`` are Max(f) and Min_Sigma(f), ``var_f`` bounds Var(f).
    """

    h: float
    max_f: float
    min_f: float
    var_f: float

    def __post_init__(self):
        if self.max_f < self.min_f:
            raise DomainError(f"Max(f)={self.max_f} below Min(f)={self.min_f}")
        if self.var_f < 0:
            raise DomainError("Var(f) bound must be non-negative")

    def scaled(self, factor: float) -> "MinTradeoff":
        """Tradeoff of ``factor * f``; the variance bound scales quadratically."""
        return MinTradeoff(factor * self.h, factor * self.max_f, factor * self.min_f,
                           factor * factor * self.var_f)


@dataclass(frozen=True)
class GeatInput:
    n_rounds: float
    d_x: int
    eps_smooth: float
    p_omega: float = 1.0
    alpha: float | None = None

    def __post_init__(self):
        if self.n_rounds < 0:
            raise DomainError("n_rounds must be non-negative")
        if self.d_x < 2:
            raise DomainError("d_x must be >= 2")
        if not 0.0 < self.eps_smooth < 1.0:
            raise DomainError(f"eps_smooth must lie in (0, 1), got {self.eps_smooth}")
        if not 0.0 < self.p_omega <= 1.0:
            raise DomainError(f"p_omega must lie in (0, 1], got {self.p_omega}")
        if self.alpha is not None and not 1.0 < self.alpha < 1.5:
            raise DomainError(f"alpha must lie in (1, 3/2), got {self.alpha}")


def g_eps(eps: float) -> float:
    """``-log2(1 - sqrt(1 - eps^2))`` without cancellation for small eps."""
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    # 1 - sqrt(1 - e^2) = e^2 / (1 + sqrt(1 - e^2)), taken in logs so e^2 may underflow
    return -2.0 * math.log2(eps) + math.log2(1.0 + math.sqrt(1.0 - eps * eps))


def _g_from_log2(log2_eps):
    """g(eps) from ``log2(eps)``; stays finite when eps itself underflows."""
    log2_eps = np.asarray(log2_eps, dtype=float)
    eps2 = np.exp2(2.0 * log2_eps)
    return -2.0 * log2_eps + np.log2(1.0 + np.sqrt(1.0 - eps2))


def v_of(tradeoff: MinTradeoff, d_x: int) -> float:
    if d_x < 2:
        raise DomainError("d_x must be >= 2")
    return float(_v(d_x, tradeoff.var_f))


def _v(d_x, var_f):
    return np.log2(2.0 * d_x * d_x + 1.0) + np.sqrt(2.0 + np.asarray(var_f, dtype=float))


def _nu(d_x, max_f, min_f):
    return 2.0 * np.log2(d_x) + np.asarray(max_f, dtype=float) - min_f


def _ln_cube_term(nu):
    # ln(2^nu + e^2), safe for large nu
    return np.logaddexp(np.asarray(nu, dtype=float) * LN2, 2.0)


def _full_bound(n, d_x, g, log2_inv_pomega, alpha, h, max_f, min_f, var_f):
    """Theorem-form bound, broadcasting over every argument."""
    alpha = np.asarray(alpha, dtype=float)
    am1 = alpha - 1.0
    tma = 2.0 - alpha
    v = _v(d_x, var_f)
    nu = _nu(d_x, max_f, min_f)
    log_kprime = (3.0 * np.log(tma) - np.log(6.0 * LN2) - 3.0 * np.log(3.0 - 2.0 * alpha)
                  + (am1 / tma) * nu * LN2 + 3.0 * np.log(_ln_cube_term(nu)))
    second = n * (am1 * LN2 / (2.0 * tma)) * v * v
    const = (g + alpha * log2_inv_pomega) / am1
    with np.errstate(over="ignore"):
        third = n * np.exp(2.0 * np.log(am1 / tma) + log_kprime)
    return n * np.asarray(h, dtype=float) - second - const - third


def _simplified_terms(d_x, g, log2_inv_pomega, max_f, min_f, var_f):
    v = _v(d_x, var_f)
    nu = _nu(d_x, max_f, min_f)
    beta = (((2.0 - XI) * XI * XI * log2_inv_pomega + XI * XI * g)
            / (3.0 * LN2 * LN2 * (2.0 * XI - 1.0) ** 3))
    gamma = np.sqrt((2.0 * LN2 / XI) * (g + (2.0 - XI) * log2_inv_pomega))
    with np.errstate(divide="ignore"):
        log_v0 = (np.log(beta) - 2.0 * np.log(v) + ((1.0 - XI) / XI) * nu * LN2
                  + 3.0 * np.log(_ln_cube_term(nu)))
    v0 = np.exp(log_v0)
    v1 = gamma * v
    return v0, v1


def geat_full_bound(inp: GeatInput, tradeoff: MinTradeoff) -> float:
    if inp.alpha is None:
        raise DomainError("the theorem form needs alpha in (1, 3/2)")
    g = g_eps(inp.eps_smooth)
    return float(_full_bound(inp.n_rounds, inp.d_x, g, -math.log2(inp.p_omega), inp.alpha,
                             tradeoff.h, tradeoff.max_f, tradeoff.min_f, tradeoff.var_f))


def geat_simplified_bound(inp: GeatInput, tradeoff: MinTradeoff) -> tuple[float, float, float]:
    """Return ``(v0, v1, N h - v1 sqrt(N) - v0)``.  ``alpha`` is ignored."""
    g = g_eps(inp.eps_smooth)
    v0, v1 = _simplified_terms(inp.d_x, g, -math.log2(inp.p_omega),
                               tradeoff.max_f, tradeoff.min_f, tradeoff.var_f)
    v0, v1 = float(v0), float(v1)
    return v0, v1, inp.n_rounds * tradeoff.h - v1 * math.sqrt(inp.n_rounds) - v0

"""Independent reference implementations used by the tests.

Nothing here imports the package.  The GF(2) oracle is a plain nested loop,
the binomial tail is summed exactly from log-factorials, and the bounds are
re-typed from their printed formulas in 50-digit mpmath arithmetic.
"""

import math
from functools import lru_cache

import mpmath as mp
import numpy as np

mp.mp.dps = 50


# -- GF(2) ------------------------------------------------------------------

def dense_matrix(seed_bits, m, n):
    """Toeplitz matrix with T[i][j] = seed[(n - 1) + i - j], as nested lists."""
    return [[int(seed_bits[(n - 1) + i - j]) for j in range(n)] for i in range(m)]


def dense_hash(seed_bits, x_bits, m):
    n = len(x_bits)
    t = dense_matrix(seed_bits, m, n)
    out = []
    for i in range(m):
        acc = 0
        for j in range(n):
            acc ^= t[i][j] & int(x_bits[j])
        out.append(acc)
    return out


# -- binomial tail ----------------------------------------------------------

@lru_cache(maxsize=None)
def _log_factorials(n):
    return np.array([math.lgamma(i + 1) for i in range(n + 1)])


def binom_sf_exact(n, p):
    """``Pr[Bin(n, p) > L]`` for L = 0..n, summed from log-pmf terms."""
    k = np.arange(n + 1)
    lg = _log_factorials(max(n, 2048))[: n + 1]
    logpmf = lg[n] - lg - lg[::-1] + k * math.log(p) + (n - k) * math.log1p(-p)
    # tail sums from the top: S[k] = sum_{j >= k} pmf[j]
    rev = np.logaddexp.accumulate(logpmf[::-1])[::-1]
    sf = np.zeros(n + 1)
    sf[:-1] = np.exp(rev[1:])
    return sf


# -- scalar functions ---------------------------------------------------------

def mp_hb(x):
    x = mp.mpf(x)
    if x == 0 or x == 1:
        return mp.mpf(0)
    return -x * mp.log(x, 2) - (1 - x) * mp.log(1 - x, 2)


def mp_relative_entropy(x, p):
    x, p = mp.mpf(x), mp.mpf(p)
    return x * mp.log(x / p) + (1 - x) * mp.log((1 - x) / (1 - p))


def mp_g(eps):
    # 1 - sqrt(1 - eps^2) needs about 2 |log10 eps| extra digits to resolve
    extra = 2 * max(0, -math.floor(math.log10(eps)))
    with mp.workdps(mp.mp.dps + extra):
        eps = mp.mpf(eps)
        g = -mp.log(1 - mp.sqrt(1 - eps ** 2), 2)
    return +g


def mp_v(d_x, var_f):
    return mp.log(2 * mp.mpf(d_x) ** 2 + 1, 2) + mp.sqrt(2 + mp.mpf(var_f))


def mp_xi():
    ln2 = mp.log(2)
    return 2 * ln2 / (1 + 2 * ln2)


# -- bounds -------------------------------------------------------------------

def mp_geat_full(n, d_x, eps, p_omega, alpha, h, max_f, min_f, var_f):
    n, alpha = mp.mpf(n), mp.mpf(alpha)
    ln2 = mp.log(2)
    v = mp_v(d_x, var_f)
    nu = 2 * mp.log(d_x, 2) + mp.mpf(max_f) - mp.mpf(min_f)
    kprime = ((2 - alpha) ** 3 / (6 * (3 - 2 * alpha) ** 3 * ln2)
              * mp.power(2, ((alpha - 1) / (2 - alpha)) * nu)
              * mp.log(mp.power(2, nu) + mp.e ** 2) ** 3)
    return (n * mp.mpf(h)
            - n * ((alpha - 1) * ln2 / (2 * (2 - alpha))) * v ** 2
            - (mp_g(eps) + alpha * mp.log(1 / mp.mpf(p_omega), 2)) / (alpha - 1)
            - n * ((alpha - 1) / (2 - alpha)) ** 2 * kprime)


def mp_geat_simplified(n, d_x, eps, p_omega, h, max_f, min_f, var_f):
    """Returns ``(v0, v1, bound)``."""
    ln2 = mp.log(2)
    xi = mp_xi()
    g = mp_g(eps)
    lp = mp.log(1 / mp.mpf(p_omega), 2)
    v = mp_v(d_x, var_f)
    nu = 2 * mp.log(d_x, 2) + mp.mpf(max_f) - mp.mpf(min_f)
    beta = ((2 - xi) * xi ** 2 * lp + xi ** 2 * g) / (3 * ln2 ** 2 * (2 * xi - 1) ** 3)
    gamma = mp.sqrt(2 * ln2 / xi * (g + (2 - xi) * lp))
    v0 = beta / v ** 2 * mp.power(2, (1 - xi) / xi * nu) * mp.log(mp.power(2, nu) + mp.e ** 2) ** 3
    v1 = gamma * v
    return v0, v1, mp.mpf(n) * mp.mpf(h) - v1 * mp.sqrt(n) - v0


def mp_tradeoff(p_x, eta_tol, q_tol, e):
    """``(h, Max, Min, Var)`` of the BBM92 min-tradeoff function."""
    p_x, e = mp.mpf(p_x), mp.mpf(e)
    pz2 = (1 - p_x) ** 2
    up = 1 + mp.log(1 - e, 2)
    h = pz2 * mp.mpf(eta_tol) * (1 - mp_hb(e) - (mp.mpf(q_tol) - e) * mp.log(1 / e - 1, 2))
    return h, pz2 * up, pz2 * (1 + mp.log(e, 2)), pz2 ** 2 / p_x ** 2 * up ** 2


def affine_f(p_x, e, q1, q2):
    """The affine function itself at statistics ``q = (., q1, q2, .)``."""
    p_x, e = mp.mpf(p_x), mp.mpf(e)
    pz2 = (1 - p_x) ** 2
    return pz2 * ((1 - mp.mpf(q2) / p_x ** 2) * (1 + mp.log(1 - e, 2))
                  - mp.mpf(q1) / p_x ** 2 * mp.log(1 / e - 1, 2))


def close(a, b, digits=10):
    """Agreement to ``digits`` significant digits."""
    a, b = mp.mpf(a), mp.mpf(b)
    if b == 0:
        return abs(a) < mp.mpf(10) ** (-digits)
    return abs(a - b) <= abs(b) * mp.mpf(10) ** (-digits)

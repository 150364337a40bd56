"""Finite-size security of entanglement-based BB84 (BBM92) under GEAT.

Key length and secrecy are solved for three ways of hashing ``N`` rounds:

* ``full``       one extractor over the whole sifted string;
* ``splitting``  sampled sub-block hashing into ``N_S`` blocks, each bounded
                 with the tradeoff ``f / N_S`` over all ``N`` rounds;
* ``smallblock`` ``N_S`` independent protocol runs of ``N / N_S`` rounds.

Every solve optimises the Renyi order ``alpha``, the tangent point ``e'`` of
the min-tradeoff function and the smoothing/hashing split of the secrecy
budget: a fixed grid first, then cyclic golden-section refinement of each
coordinate.  No randomness is involved, so results are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import geat
from .errors import DomainError, InfeasibleError, ParameterError
from .geat import MinTradeoff
from .optimize import golden_max, golden_min

# Optimisation coordinates are log10(alpha - 1), log10(e') and, for key
# length, log10 of the share of the per-block budget left for hashing.
_ALPHA_GRID = np.linspace(-9.0, math.log10(0.4999), 32)
_TANGENT_GRID = np.linspace(-4.0, math.log10(0.49), 200)
# Share of the per-block budget left for hashing, as log10; the optimum has
# a closed form in alpha, so only its bounds are needed.
_SHARE_BOUNDS = np.array([-15.0, math.log10(0.999)])
# For secrecy the third coordinate is log2(eps_sm) itself.
_LOG2_SMOOTH_FLOOR = -1e12
# Fixed point search range for log2 of the hashing secrecy.
_LOG2_EPS_FLOOR = -20000.0
_LOG2_EPS_TOL = 1e-4
_PX_GRID = np.geomspace(1e-3, 0.5, 40)
_REFINE_SWEEPS = 3
_REFINE_TOL = 1e-6


BOUND_FORMS = ("theorem", "simplified")
_SIMPLE_SHARE_GRID = np.linspace(-15.0, math.log10(0.999), 32)


class ScenarioKind(str, Enum):
    FULL = "full"
    SPLITTING = "splitting"
    SMALL_BLOCK = "smallblock"


@dataclass(frozen=True)
class Scenario:
    kind: ScenarioKind
    n_subblocks: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", ScenarioKind(self.kind))
        if self.n_subblocks < 1:
            raise ParameterError("n_subblocks must be >= 1")
        if self.kind is ScenarioKind.FULL and self.n_subblocks != 1:
            raise ParameterError("the full scenario has exactly one block")

    @classmethod
    def full(cls) -> "Scenario":
        return cls(ScenarioKind.FULL, 1)

    @classmethod
    def splitting(cls, n_subblocks: int) -> "Scenario":
        return cls(ScenarioKind.SPLITTING, n_subblocks)

    @classmethod
    def small_block(cls, n_subblocks: int) -> "Scenario":
        return cls(ScenarioKind.SMALL_BLOCK, n_subblocks)


@dataclass(frozen=True)
class Bbm92Params:
    """Protocol and security parameters.

    ``q_tol`` defaults to ``e_ph`` and ``eta_tol`` to ``p_det``.  ``p_omega``
    left as None means the worst case over acceptance probabilities that the
    secrecy target does not already cover (see ``_blocks``).  ``bound_form``
    picks the finite-alpha GEAT bound ("theorem") or the alpha-free one.  With
    ``scaled_leakage`` the error-correction cost is charged on the expected
    sifted length; ``per_block_ec`` charges each sampled sub-block only its own
    share of the syndrome.
    """

    n_rounds: int = 10**9
    p_x: float = 0.02
    e_ph: float = 0.0082
    e_bit: float = 0.058
    q_tol: float | None = None
    eta_tol: float | None = None
    f_ec: float = 1.16
    p_det: float = 1.0
    d_x: int = 2
    eps_sec: float = 1e-6
    eps_abort: float = 1e-8
    p_omega: float | None = None
    scaled_leakage: bool = True
    per_block_ec: bool = True
    bound_form: str = "theorem"

    def __post_init__(self):
        if self.bound_form not in BOUND_FORMS:
            raise ParameterError(f"bound_form must be one of {BOUND_FORMS}, got {self.bound_form!r}")
        if self.n_rounds < 1:
            raise ParameterError("n_rounds must be >= 1")
        if not 0.0 < self.p_x < 1.0:
            raise DomainError(f"p_x must lie in (0, 1), got {self.p_x}")
        for name in ("e_ph", "e_bit"):
            if not 0.0 <= getattr(self, name) <= 0.5:
                raise DomainError(f"{name} must lie in [0, 0.5]")
        if not 0.0 < self.p_det <= 1.0:
            raise DomainError("p_det must lie in (0, 1]")
        if self.f_ec < 1.0:
            raise DomainError("f_ec must be >= 1")
        if self.d_x < 2:
            raise DomainError("d_x must be >= 2")
        if not 0.0 < self.eps_sec < 1.0:
            raise DomainError("eps_sec must lie in (0, 1)")
        if not 0.0 <= self.eps_abort < 1.0:
            raise DomainError("eps_abort must lie in [0, 1)")
        if self.p_omega is not None and not 0.0 < self.p_omega <= 1.0:
            raise DomainError("p_omega must lie in (0, 1]")

    @property
    def p_z(self) -> float:
        return 1.0 - self.p_x

    @property
    def q_threshold(self) -> float:
        return self.e_ph if self.q_tol is None else self.q_tol

    @property
    def eta_threshold(self) -> float:
        return self.p_det if self.eta_tol is None else self.eta_tol

    @property
    def p_sift(self) -> float:
        """Probability that a round lands in the sifted key."""
        return self.p_z * self.p_z * self.p_det


@dataclass(frozen=True)
class KeyLengthResult:
    scenario: Scenario
    length: int
    per_block: int
    raw_per_block: float
    alpha: float
    e_tangent: float
    eps_smooth: float
    eps_pa: float

    @property
    def feasible(self) -> bool:
        return self.length > 0


@dataclass(frozen=True)
class SecrecyResult:
    scenario: Scenario
    length: int
    epsilon: float
    log2_epsilon_hash: float
    alpha: float = math.nan
    e_tangent: float = math.nan
    log2_eps_smooth: float = math.nan
    secure: bool = True


# -- per-round quantities ---------------------------------------------------

def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def _hb(x):
    x = np.asarray(x, dtype=float)
    return -x * np.log2(x) - (1.0 - x) * np.log2(1.0 - x)


def _tradeoff_arrays(params: Bbm92Params, e):
    e = np.asarray(e, dtype=float)
    pz2 = params.p_z ** 2
    upper = 1.0 + np.log2(1.0 - e)
    max_f = pz2 * upper
    min_f = pz2 * (1.0 + np.log2(e))
    var_f = (pz2 * pz2 / params.p_x ** 2) * upper * upper
    slope = np.log2(1.0 / e - 1.0)
    h = pz2 * params.eta_threshold * (1.0 - _hb(e) - (params.q_threshold - e) * slope)
    return h, max_f, min_f, var_f


def min_tradeoff(params: Bbm92Params, e_ph_tangent: float) -> MinTradeoff:
    """Affine min-tradeoff summary for the tangent point ``e'``.

    ``Var`` is the upper bound, not the variance itself.
    """
    if not 0.0 < e_ph_tangent < 0.5:
        raise DomainError(f"tangent point must lie in (0, 0.5), got {e_ph_tangent}")
    return MinTradeoff(*(float(v) for v in _tradeoff_arrays(params, e_ph_tangent)))


def ec_leakage(params: Bbm92Params, n_rounds: float | None = None) -> float:
    """Bits of error-correction syndrome charged against ``n_rounds`` rounds."""
    n = params.n_rounds if n_rounds is None else n_rounds
    rate = params.f_ec * binary_entropy(params.e_bit)
    if params.scaled_leakage:
        rate *= params.p_sift
    return n * rate


# -- block bookkeeping -------------------------------------------------------

@dataclass(frozen=True)
class _Block:
    """One of ``copies`` identical extraction problems."""

    n: float
    scale: float
    leak: float
    copies: int
    budget: float        # secrecy available to this block's hash + smoothing
    p_omega: float


def _blocks(params: Bbm92Params, scenario: Scenario) -> _Block:
    ns = scenario.n_subblocks
    kind = scenario.kind
    if kind is ScenarioKind.FULL:
        b = _Block(params.n_rounds, 1.0, ec_leakage(params), 1, params.eps_sec, params.eps_sec)
    elif kind is ScenarioKind.SPLITTING:
        lhl = params.eps_sec - params.eps_abort
        if lhl <= 0.0:
            raise DomainError("splitting needs eps_abort < eps_sec")
        leak = ec_leakage(params)
        if params.per_block_ec:
            leak /= ns
        b = _Block(params.n_rounds, 1.0 / ns, leak, ns, lhl / ns, lhl)
    else:
        n = params.n_rounds // ns
        if n < 1:
            raise ParameterError(f"{ns} blocks of {params.n_rounds} rounds leave nothing per block")
        share = params.eps_sec / ns
        b = _Block(n, 1.0, ec_leakage(params, n), ns, share, share)
    if params.p_omega is not None:
        b = replace(b, p_omega=params.p_omega)
    return b


def _entropy(params: Bbm92Params, block: _Block, log2_inv_pomega, u, w, g):
    """GEAT bound for one block at ``alpha = 1 + 10**u``, ``e' = 10**w``."""
    h, max_f, min_f, var_f = _tradeoff_arrays(params, np.power(10.0, w))
    s = block.scale
    return geat._full_bound(block.n, params.d_x, g, log2_inv_pomega, 1.0 + np.power(10.0, u),
                            s * h, s * max_f, s * min_f, s * s * var_f)


def _refine(f, x0: list[float], lows: list[float], highs: list[float],
            maximise: bool) -> tuple[list[float], float]:
    """Cyclic coordinate golden-section search inside fixed brackets."""
    x = list(x0)
    search = golden_max if maximise else golden_min
    best = f(*x)
    for _ in range(_REFINE_SWEEPS):
        for k in range(len(x)):

            def along(t, k=k):
                y = list(x)
                y[k] = t
                return f(*y)

            t, val = search(along, lows[k], highs[k], _REFINE_TOL)
            if (val > best) if maximise else (val < best):
                x[k], best = t, val
    return x, best


def _grid_optimum(f, third, grids, span: float, bounds, maximise: bool):
    """Optimise ``f(u, w, z)`` with ``z`` tied to the closed form ``third(u, w)``.

    The tied function is searched on the ``(u, w)`` grid and refined between
    grid neighbours; ``z`` is then polished within ``span`` of its tied value,
    clipped to ``bounds``.
    """
    def tied(u, w):
        return f(u, w, third(u, w))

    mesh = np.ix_(*grids)
    vals = tied(*mesh)
    vals = np.where(np.isfinite(vals), vals, -np.inf if maximise else np.inf)
    flat = int(np.argmax(vals) if maximise else np.argmin(vals))
    idx = np.unravel_index(flat, vals.shape)
    x0 = [float(g[i]) for g, i in zip(grids, idx)]
    lows = [float(g[max(i - 1, 0)]) for g, i in zip(grids, idx)]
    highs = [float(g[min(i + 1, len(g) - 1)]) for g, i in zip(grids, idx)]
    (u, w), best = _refine(lambda *x: float(tied(*x)), x0, lows, highs, maximise)
    z0 = float(third(u, w))
    a, b = max(bounds[0], z0 - span), min(bounds[1], z0 + span)
    search = golden_max if maximise else golden_min
    z, val = search(lambda t: float(f(u, w, t)), a, b, _REFINE_TOL)
    if (val > best) if maximise else (val < best):
        return [u, w, z], val
    return [u, w, z0], best


def _block_key(params: Bbm92Params, block: _Block):
    log2_inv_pomega = -math.log2(block.p_omega)
    log2_budget = math.log2(block.budget)

    def value(u, w, z):
        share = np.power(10.0, z)
        log2_sm = log2_budget + np.log2((1.0 - share) / 2.0)
        g = geat._g_from_log2(log2_sm)
        ent = _entropy(params, block, log2_inv_pomega, u, w, g)
        # inverse of eps_pa = 2^(-1 - (H - leak - l) / 2)
        return ent - block.leak + 2.0 + 2.0 * (log2_budget + np.log2(share))

    def share_star(u, w):
        # d/d eps_sm = 0 with g(eps) ~ 1 - 2 log2(eps) gives share = (a-1)/a
        am1 = np.power(10.0, np.asarray(u, dtype=float)) + 0.0 * np.asarray(w, dtype=float)
        return np.clip(np.log10(am1 / (1.0 + am1)), _SHARE_BOUNDS[0], _SHARE_BOUNDS[-1])

    return _grid_optimum(value, share_star, (_ALPHA_GRID, _TANGENT_GRID), 1.0,
                         (_SHARE_BOUNDS[0], _SHARE_BOUNDS[-1]), True)


def _block_key_simplified(params: Bbm92Params, block: _Block):
    log2_inv_pomega = -math.log2(block.p_omega)
    log2_budget = math.log2(block.budget)
    sqrt_n = math.sqrt(block.n)

    def value(w, z):
        share = np.power(10.0, z)
        g = geat._g_from_log2(log2_budget + np.log2((1.0 - share) / 2.0))
        h, max_f, min_f, var_f = _tradeoff_arrays(params, np.power(10.0, w))
        s = block.scale
        v0, v1 = geat._simplified_terms(params.d_x, g, log2_inv_pomega,
                                        s * max_f, s * min_f, s * s * var_f)
        ent = block.n * s * h - v1 * sqrt_n - v0
        return ent - block.leak + 2.0 + 2.0 * (log2_budget + np.log2(share))

    grids = (_TANGENT_GRID, _SIMPLE_SHARE_GRID)
    vals = value(*np.ix_(*grids))
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    idx = np.unravel_index(int(np.argmax(vals)), vals.shape)
    x0 = [float(g[i]) for g, i in zip(grids, idx)]
    lows = [float(g[max(i - 1, 0)]) for g, i in zip(grids, idx)]
    highs = [float(g[min(i + 1, len(g) - 1)]) for g, i in zip(grids, idx)]
    (w, z), best = _refine(lambda *x: float(value(*x)), x0, lows, highs, True)
    return [math.nan, w, z], best


def secrecy_budget(params: Bbm92Params, scenario: Scenario) -> tuple[float, float]:
    """``(eps', eps_abort_charged)``; the run is ``N_S eps' + charged``-secret."""
    block = _blocks(params, scenario)
    penalty = params.eps_abort if scenario.kind is ScenarioKind.SPLITTING else 0.0
    return block.budget, penalty


def solve_key_length(params: Bbm92Params, scenario: Scenario = Scenario.full()) -> KeyLengthResult:
    """Largest key meeting ``eps_sec`` in the given scenario.

    Returns a zero-length result (``feasible`` False) when no choice of
    ``alpha``, ``e'`` and smoothing gives a positive key.  With the simplified
    bound ``alpha`` is reported as NaN.
    """
    block = _blocks(params, scenario)
    if params.bound_form == "simplified":
        (u, w, z), raw = _block_key_simplified(params, block)
    else:
        (u, w, z), raw = _block_key(params, block)
    per_block = max(0, math.floor(raw))
    share = 10.0 ** z
    return KeyLengthResult(
        scenario=scenario,
        length=per_block * block.copies,
        per_block=per_block,
        raw_per_block=raw,
        alpha=1.0 + 10.0 ** u,
        e_tangent=10.0 ** w,
        eps_smooth=block.budget * (1.0 - share) / 2.0,
        eps_pa=block.budget * share,
    )


def key_length(params: Bbm92Params, scenario: Scenario = Scenario.full()) -> int:
    return solve_key_length(params, scenario).length


# -- secrecy at fixed length -------------------------------------------------

def _log2_block_delta(params: Bbm92Params, block: _Block, l_block: int, log2_pomega: float):
    """Minimised ``log2(copies * (2 eps_sm + 2^(-1 - (H - leak - l) / 2)))``.

    Returns ``(log2 value, (u, w, log2 eps_sm))``.
    """
    log2_copies = math.log2(block.copies)

    def value(u, w, y):
        g = geat._g_from_log2(y)
        ent = _entropy(params, block, -log2_pomega, u, w, g)
        hashing = -1.0 - (ent - block.leak - l_block) / 2.0
        return log2_copies + np.logaddexp2(1.0 + y, hashing)

    def smooth_star(u, w):
        # balance 2^(1+y) against 2^(K - y/(a-1)), again with g ~ 1 - 2y
        b = 1.0 / np.power(10.0, u)
        ent0 = _entropy(params, block, -log2_pomega, u, w, 0.0)
        k = -1.0 - (ent0 - block.leak - l_block) / 2.0 + b / 2.0
        y = (k - 1.0 + np.log2(b)) / (1.0 + b)
        return np.clip(np.where(np.isfinite(y), y, -1.0), _LOG2_SMOOTH_FLOOR, -1.0)

    x, best = _grid_optimum(value, smooth_star, (_ALPHA_GRID, _TANGENT_GRID), 2.0,
                            (_LOG2_SMOOTH_FLOOR, -1.0), False)
    return best, x


def solve_secrecy(params: Bbm92Params, length: int,
                  scenario: Scenario = Scenario.full()) -> SecrecyResult:
    """Smallest total secrecy at which ``length`` bits can be extracted.

    ``eps_sec`` of ``params`` is ignored.  The hashing part ``eps`` is a fixed
    point, since the worst-case acceptance probability is tied to it:
    ``p_omega = eps`` (``eps / N_S`` per run for small blocks).  Splitting adds
    the abort penalty ``eps_abort`` on top.  Everything is carried as log2 so
    secrecies far below the double range still order correctly.
    """
    if length < 0:
        raise DomainError("length must be non-negative")
    if params.bound_form != "theorem":
        raise ParameterError("secrecy is solved with the theorem-form bound only")
    block = _blocks(params, scenario)
    l_block = -(-int(length) // block.copies)
    penalty = params.eps_abort if scenario.kind is ScenarioKind.SPLITTING else 0.0
    pomega_shift = (math.log2(block.copies)
                    if scenario.kind is ScenarioKind.SMALL_BLOCK else 0.0)

    def at(log2_eps):
        if params.p_omega is not None:
            return _log2_block_delta(params, block, l_block, math.log2(params.p_omega))
        return _log2_block_delta(params, block, l_block, log2_eps - pomega_shift)

    def result(log2_eps, x, secure=True):
        eps = min(1.0, 2.0 ** log2_eps + penalty) if secure else 1.0
        return SecrecyResult(scenario, int(length), eps, log2_eps, 1.0 + 10.0 ** x[0],
                             10.0 ** x[1], x[2], secure)

    if params.p_omega is not None:
        val, x = at(0.0)
        if val >= 0.0:
            return result(0.0, x, secure=False)
        return result(val, x)
    val, x = at(0.0)
    if val > 0.0:
        return result(0.0, x, secure=False)
    lo, hi, x_hi = _LOG2_EPS_FLOOR, 0.0, x
    val, x = at(lo)
    if val <= lo:
        return result(lo, x)
    # invariant: F(lo) > lo and F(hi) <= hi, with F(L) - L decreasing
    while hi - lo > _LOG2_EPS_TOL * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        val, x = at(mid)
        if val <= mid:
            hi, x_hi = mid, x
        else:
            lo = mid
    return result(hi, x_hi)


def secrecy_for_length(params: Bbm92Params, length: int,
                       scenario: Scenario = Scenario.full()) -> float:
    """Optimised ``eps_sec`` for a key of ``length`` bits; 1.0 when impossible."""
    return solve_secrecy(params, length, scenario).epsilon


# -- p_X optimisation ---------------------------------------------------------

def optimize_px(params: Bbm92Params, scenario: Scenario = Scenario.full()) -> float:
    """``p_X`` maximising the key length; ties go to the smaller ``p_X``.

    A log-spaced grid on ``[1e-3, 0.5]`` is refined by golden-section search in
    ``log p_X`` between the neighbours of the best grid point.  The objective
    is the unrounded total, which keeps the search smooth.
    """
    def total(log_px):
        res = solve_key_length(replace(params, p_x=math.exp(log_px)), scenario)
        return res.raw_per_block * scenario.n_subblocks

    logs = np.log(_PX_GRID)
    vals = np.array([total(v) for v in logs])
    i = int(np.argmax(vals))
    if not vals[i] >= 1.0:
        raise InfeasibleError(f"no p_X in [{_PX_GRID[0]}, {_PX_GRID[-1]}] yields a key")
    a, b = logs[max(i - 1, 0)], logs[min(i + 1, len(logs) - 1)]
    x, fx = golden_max(total, a, b, _REFINE_TOL)
    if fx < vals[i]:
        x = logs[i]
    return float(math.exp(x))

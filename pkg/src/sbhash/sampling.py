"""Sub-block sampling with sifting, plus the block-size abort threshold."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import erfc

from .errors import DomainError, InfeasibleError, ParameterError
from .stream import Seed, normalize_seed, uniform_ints

SAMPLING_PURPOSE = "sampling"
# Below this the double-precision normal tail is meaningless.
_MIN_THRESHOLD = 1e-300


@dataclass(frozen=True)
class SamplingPlan:
    n_subblocks: int
    eps_abort: float
    block_limit: int | None
    master_seed: bytes

    def __post_init__(self):
        if self.n_subblocks < 1:
            raise ParameterError("n_subblocks must be >= 1")
        if not 0.0 <= self.eps_abort < 1.0:
            raise DomainError("eps_abort must lie in [0, 1)")
        if self.block_limit is not None and self.block_limit < 1:
            raise ParameterError("block_limit must be >= 1")
        object.__setattr__(self, "master_seed", normalize_seed(self.master_seed))

    @property
    def p_sample(self) -> Fraction:
        return Fraction(1, self.n_subblocks)


@dataclass(frozen=True)
class Partition:
    """Sub-block label per round, 1-based as in ``V_i in [1, N_S]``."""

    assignments: np.ndarray
    n_subblocks: int

    @property
    def n_rounds(self) -> int:
        return int(self.assignments.size)

    def counts(self) -> np.ndarray:
        """Raw (unsifted) round count per sub-block."""
        return np.bincount(self.assignments - 1, minlength=self.n_subblocks)


def assign_subblocks(n_rounds: int, n_subblocks: int, master_seed: Seed) -> Partition:
    """Draw ``V_i`` uniformly on ``[1, N_S]`` for every round.

    Round ``i`` always consumes word ``i`` of the "sampling" stream, so the
    labels do not depend on how the rounds are batched.
    """
    if n_subblocks < 1:
        raise ParameterError("n_subblocks must be >= 1")
    if n_rounds < 1:
        raise ParameterError("n_rounds must be >= 1")
    if n_subblocks == 1:
        return Partition(np.ones(n_rounds, dtype=np.int64), 1)
    v = uniform_ints(master_seed, SAMPLING_PURPOSE, 0, n_rounds, n_subblocks) + 1
    return Partition(v, n_subblocks)


def sift_partition(keep: np.ndarray, partition: Partition) -> list[np.ndarray]:
    """Indices of kept rounds per sub-block, in round order."""
    keep = np.asarray(keep, dtype=bool)
    if keep.size != partition.n_rounds:
        raise ParameterError(f"{keep.size} flags for {partition.n_rounds} rounds")
    kept = np.flatnonzero(keep)
    labels = partition.assignments[kept]
    # stable sort keeps round order inside each block
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(1, partition.n_subblocks + 2))
    ordered = kept[order]
    return [ordered[bounds[j] : bounds[j + 1]] for j in range(partition.n_subblocks)]


def relative_entropy(x: float, p: float) -> float:
    """Binary relative entropy ``x ln(x/p) + (1-x) ln((1-x)/(1-p))`` in nats."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return -math.log1p(-p)
    if x == 1.0:
        return -math.log(p)
    # log1p keeps the two nearly cancelling terms accurate when x ~ p
    d = x * math.log1p((x - p) / p) + (1.0 - x) * math.log1p((p - x) / (1.0 - p))
    return max(d, 0.0)


def tail_bound(n_rounds: int, limit, p_sift: float):
    """Upper bound on ``Pr[Bin(N, p) > limit]`` for ``limit >= N p``.

    ``1 - Phi(sqrt(2 N H(limit / N, p)))``, evaluated as ``erfc(z / sqrt 2) / 2``.
    ``limit`` may be an array; below ``N p`` the value is 1/2.
    """
    if not 0.0 < p_sift < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p_sift}")
    scalar = np.ndim(limit) == 0
    x = np.clip(np.asarray(limit, dtype=float), 0.0, n_rounds) / n_rounds
    xi = np.clip(x, p_sift, 1.0)
    q = 1.0 - xi
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(xi > 0.0, xi * np.log1p((xi - p_sift) / p_sift), 0.0)
        b = np.where(q > 0.0, q * np.log1p((p_sift - xi) / (1.0 - p_sift)), 0.0)
    d = np.maximum(a + b, 0.0)
    out = np.where(x > p_sift, 0.5 * erfc(np.sqrt(n_rounds * d)), 0.5)
    return float(out) if scalar else out


def block_limit(n_rounds: int, p_sift: float, eps_abort: float, m_blocks: int) -> int:
    """Smallest ``L >= ceil(N p)`` whose tail bound is at most ``eps_abort / m``.

    ``m`` is the number of sub-blocks covered by the union bound.
    """
    if n_rounds < 1 or m_blocks < 1:
        raise ParameterError("n_rounds and m_blocks must be >= 1")
    if not 0.0 < p_sift < 1.0:
        raise DomainError(f"p_sift must lie in (0, 1), got {p_sift}")
    if not 0.0 < eps_abort < 1.0:
        raise DomainError(f"eps_abort must lie in (0, 1), got {eps_abort}")
    target = eps_abort / m_blocks
    if target < _MIN_THRESHOLD:
        raise InfeasibleError(f"threshold {target:g} is below double precision")
    lo = math.ceil(n_rounds * p_sift)
    if tail_bound(n_rounds, lo, p_sift) <= target:
        return lo
    hi = n_rounds
    if tail_bound(n_rounds, hi, p_sift) > target:
        raise InfeasibleError(f"no block limit up to N={n_rounds} reaches {target:g}")
    # invariant: bound(lo) > target >= bound(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_bound(n_rounds, mid, p_sift) <= target:
            hi = mid
        else:
            lo = mid
    return hi


def abort_check(subblock_lengths: Sequence[int], limit: int) -> bool:
    """True when any sifted sub-block is strictly longer than ``limit``."""
    return any(int(n) > limit for n in subblock_lengths)


def write_partition_csv(path, partition: Partition, keep: np.ndarray) -> None:
    keep = np.asarray(keep, dtype=bool)
    if keep.size != partition.n_rounds:
        raise ParameterError(f"{keep.size} flags for {partition.n_rounds} rounds")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round_index", "V_i", "kept"])
        for i, (v, k) in enumerate(zip(partition.assignments.tolist(), keep.tolist()), start=1):
            w.writerow([i, v, int(k)])

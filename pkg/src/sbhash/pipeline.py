"""Simulated BBM92 runs, sampled sub-block extraction and the cycle model.

Rounds are held as parallel arrays (:class:`Rounds`); indexing one gives a
:class:`RoundRecord`.  Basis ``0`` is Z and ``1`` is X, and a bit of ``-1``
stands for no outcome.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import bbm92
from .bbm92 import Bbm92Params, Scenario, ScenarioKind
from .bitstring import BitString
from .errors import InfeasibleError, ParameterError
from .sampling import SamplingPlan, abort_check, assign_subblocks, block_limit, sift_partition
from .stream import Seed, normalize_seed, random_bits, uniforms
from .toeplitz import BlockingParams, ToeplitzSeed, blocked_toeplitz_hash, cycle_estimate

Z, X = 0, 1
NO_BIT = -1
# rounds generated per batch; the streams make batching invisible
_BATCH = 1 << 20

ABORT_OVERSIZE = "oversize"
ABORT_STATISTICS = "statistics"
ABORT_INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class RoundRecord:
    basis_a: str
    basis_b: str
    detected: bool
    bit_a: int | None
    bit_b: int | None

    @property
    def is_test(self) -> bool:
        return self.basis_a == "X" and self.basis_b == "X"


@dataclass(frozen=True)
class Rounds:
    basis_a: np.ndarray
    basis_b: np.ndarray
    detected: np.ndarray
    bit_a: np.ndarray
    bit_b: np.ndarray

    def __len__(self) -> int:
        return int(self.basis_a.size)

    def __getitem__(self, i: int) -> RoundRecord:
        names = "ZX"
        a, b = int(self.bit_a[i]), int(self.bit_b[i])
        return RoundRecord(names[self.basis_a[i]], names[self.basis_b[i]], bool(self.detected[i]),
                           None if a < 0 else a, None if b < 0 else b)

    @property
    def is_test(self) -> np.ndarray:
        return (self.basis_a == X) & (self.basis_b == X)

    @property
    def key_mask(self) -> np.ndarray:
        """Rounds contributing to the sifted key: both Z and detected."""
        return (self.basis_a == Z) & (self.basis_b == Z) & self.detected

    def test_counts(self) -> tuple[int, int, int]:
        """``(XX detected and equal, XX detected and different, XX undetected)``."""
        t = self.is_test
        hit = t & self.detected
        diff = int(np.count_nonzero(hit & (self.bit_a != self.bit_b)))
        return int(np.count_nonzero(hit)) - diff, diff, int(np.count_nonzero(t & ~self.detected))


def simulate_rounds(params: Bbm92Params, master_seed: Seed,
                    n_rounds: int | None = None) -> Rounds:
    """Honest BBM92 rounds drawn from purpose-tagged streams.

    Matching bases disagree with probability ``e_bit`` (ZZ) or ``e_ph`` (XX);
    mismatched bases give Bob an independent uniform bit.
    """
    n = params.n_rounds if n_rounds is None else n_rounds
    if n < 1:
        raise ParameterError("n_rounds must be >= 1")
    seed = normalize_seed(master_seed)
    parts = []
    for start in range(0, n, _BATCH):
        count = min(_BATCH, n - start)

        def u(purpose):
            return uniforms(seed, purpose, start, count)

        ba = (u("basis_a") < params.p_x).astype(np.int8)
        bb = (u("basis_b") < params.p_x).astype(np.int8)
        det = u("detect") < params.p_det
        a = (u("bit") < 0.5).astype(np.int8)
        flip_p = np.where(ba == Z, params.e_bit, params.e_ph)
        flipped = a ^ (u("error") < flip_p).astype(np.int8)
        other = (u("bit_b") < 0.5).astype(np.int8)
        b = np.where(ba == bb, flipped, other).astype(np.int8)
        a = np.where(det, a, NO_BIT).astype(np.int8)
        b = np.where(det, b, NO_BIT).astype(np.int8)
        parts.append((ba, bb, det, a, b))
    return Rounds(*(np.concatenate(cols) for cols in zip(*parts)))


def statistics_ok(rounds: Rounds, sec: Bbm92Params) -> bool:
    """Whether the observed test counts lie in the accepted set.

    Accepting ``mismatches <= N p_X^2 eta_tol Q_tol`` and ``undetected <=
    N p_X^2 (1 - eta_tol)`` keeps the min-tradeoff function at or above ``h``.
    """
    _, diff, lost = rounds.test_counts()
    px2n = sec.p_x * sec.p_x * len(rounds)
    return (diff <= px2n * sec.eta_threshold * sec.q_threshold
            and lost <= px2n * (1.0 - sec.eta_threshold))


@dataclass
class ExtractionReport:
    key: BitString
    per_block_lengths: list[int]
    output_per_block: int
    total_epsilon: float
    block_limit: int
    aborted: bool = False
    reason: str | None = None
    cycle_count: int = 0
    wall_time: float = 0.0
    test_counts: tuple[int, int, int] = (0, 0, 0)

    def summary(self) -> dict:
        return {
            "aborted": self.aborted,
            "reason": self.reason,
            "key_bits": len(self.key),
            "n_subblocks": len(self.per_block_lengths),
            "output_per_block": self.output_per_block,
            "per_block_lengths": list(self.per_block_lengths),
            "block_limit": self.block_limit,
            "total_epsilon": self.total_epsilon,
            "cycle_count": self.cycle_count,
            "wall_time": self.wall_time,
            "test_counts": list(self.test_counts),
        }


def hash_subblocks(blocks: Sequence[BitString], out_bits: int, master_seed: Seed,
                   blocking: BlockingParams = BlockingParams()) -> BitString:
    """Hash block ``j`` to ``out_bits`` with seed stream ``toeplitz/j``; concatenate."""
    outs = []
    for j, data in enumerate(blocks):
        n = len(data)
        seed_bits = random_bits(master_seed, f"toeplitz/{j}", max(out_bits + n - 1, 0))
        outs.append(blocked_toeplitz_hash(ToeplitzSeed(seed_bits, out_bits, n), data, blocking))
    return BitString.concat(outs)


def run_extraction(rounds: Rounds, plan: SamplingPlan, sec: Bbm92Params,
                   blocking: BlockingParams = BlockingParams()) -> ExtractionReport:
    """Sift, sample into ``N_S`` sub-blocks, hash each and concatenate.

    ``sec.n_rounds`` must equal ``len(rounds)``; ``plan.eps_abort`` overrides
    ``sec.eps_abort``.  Alice's sifted bits are the reconciled string.
    """
    n = len(rounds)
    if sec.n_rounds != n:
        raise ParameterError(f"security parameters are for {sec.n_rounds} rounds, got {n}")
    bits = np.where(rounds.bit_a < 0, 0, rounds.bit_a).astype(np.uint8)
    return _extract(bits, rounds.key_mask, plan, sec, blocking, rounds)


def extract_sifted(data: BitString, plan: SamplingPlan, sec: Bbm92Params,
                   blocking: BlockingParams = BlockingParams()) -> ExtractionReport:
    """Extraction from an already sifted string produced by ``sec.n_rounds`` rounds.

    Sub-block labels are drawn per sifted bit and no test statistics are
    available, so only the oversize abort applies.
    """
    bits = data.to_bits()
    return _extract(bits, np.ones(bits.size, dtype=bool), plan, sec, blocking, None)


def _extract(bits, keep, plan, sec, blocking, rounds) -> ExtractionReport:
    ns = plan.n_subblocks
    sec = replace(sec, eps_abort=plan.eps_abort)
    scenario = Scenario.splitting(ns)
    budget, penalty = bbm92.secrecy_budget(sec, scenario)
    limit = plan.block_limit
    if limit is None:
        limit = (sec.n_rounds if ns == 1
                 else block_limit(sec.n_rounds, sec.p_sift / ns, plan.eps_abort, ns))
    counts = rounds.test_counts() if rounds is not None else (0, 0, 0)
    if bits.size == 0:
        lengths = [0] * ns
        index_sets = [np.zeros(0, dtype=np.int64)] * ns
    else:
        partition = assign_subblocks(bits.size, ns, plan.master_seed)
        index_sets = sift_partition(keep, partition)
        lengths = [int(ix.size) for ix in index_sets]
    report = ExtractionReport(BitString(), lengths, 0, ns * budget + penalty, limit,
                              test_counts=counts)
    if rounds is not None and not statistics_ok(rounds, sec):
        report.aborted, report.reason = True, ABORT_STATISTICS
        return report
    if abort_check(lengths, limit):
        report.aborted, report.reason = True, ABORT_OVERSIZE
        return report
    out_bits = bbm92.solve_key_length(sec, scenario).per_block
    if out_bits == 0:
        report.aborted, report.reason = True, ABORT_INFEASIBLE
        return report

    blocks = [BitString.from_bits(bits[ix]) for ix in index_sets]
    t0 = time.perf_counter()
    report.key = hash_subblocks(blocks, out_bits, plan.master_seed, blocking)
    report.wall_time = time.perf_counter() - t0
    report.output_per_block = out_bits
    # hardware pads each block to the cap; a single block is hashed as is
    padded = limit if ns > 1 else lengths[0]
    report.cycle_count = ns * cycle_estimate(padded, out_bits, blocking.m_prime)
    return report


def timing_model(input_len: int, output_len: int, scenario: Scenario,
                 blocking: BlockingParams = BlockingParams(), block_limit_len: int | None = None,
                 eps_abort: float = 1e-8) -> int:
    """Modelled cycles to hash ``input_len`` sifted bits into ``output_len`` bits.

    Blocks are hashed one after another.  Splitting pads every block to the
    length cap, computed from ``Bin(input_len, 1 / N_S)`` unless given.
    """
    if input_len < 0 or output_len < 0:
        raise ParameterError("lengths must be non-negative")
    ns = scenario.n_subblocks
    mp = blocking.m_prime
    if scenario.kind is ScenarioKind.FULL or (ns == 1 and block_limit_len is None):
        return cycle_estimate(input_len, output_len, mp)
    per_out = output_len // ns
    if scenario.kind is ScenarioKind.SPLITTING:
        limit = block_limit_len
        if limit is None:
            limit = block_limit(input_len, 1.0 / ns, eps_abort, ns)
        return ns * cycle_estimate(limit, per_out, mp)
    return ns * cycle_estimate(-(-input_len // ns), per_out, mp)


# -- scenario sweeps -----------------------------------------------------------

CSV_COLUMNS = ("scenario", "N_S", "p_X", "l", "l_per_signal", "epsilon", "cycles",
               "rate_per_cycle", "status", "l_theorem", "l_simplified")


@dataclass(frozen=True)
class ScenarioResult:
    scenario: str
    n_subblocks: int
    p_x: float
    length: int
    per_signal: float
    epsilon: float
    cycles: int
    rate_per_cycle: float
    status: str = "ok"
    by_form: dict = field(default_factory=dict)

    def row(self) -> list[str]:
        return [self.scenario, str(self.n_subblocks), repr(self.p_x), str(self.length),
                repr(self.per_signal), repr(self.epsilon), str(self.cycles),
                repr(self.rate_per_cycle), self.status,
                str(self.by_form.get("theorem", "")), str(self.by_form.get("simplified", ""))]


def scenario_cycles(params: Bbm92Params, scenario: Scenario, length: int,
                    blocking: BlockingParams = BlockingParams()) -> int:
    """Cycles for ``scenario`` on the expected sifted length of ``params``."""
    n, ns = params.n_rounds, scenario.n_subblocks
    sifted = math.ceil(n * params.p_sift)
    if scenario.kind is ScenarioKind.SPLITTING and ns > 1:
        limit = block_limit(n, params.p_sift / ns, params.eps_abort, ns)
        return timing_model(sifted, length, scenario, blocking, limit)
    if scenario.kind is ScenarioKind.SMALL_BLOCK:
        per_in = math.ceil((n // ns) * params.p_sift)
        return ns * cycle_estimate(per_in, length // ns, blocking.m_prime)
    return cycle_estimate(sifted, length, blocking.m_prime)


def evaluate_point(params: Bbm92Params, scenario: Scenario, optimize: bool = False,
                   blocking: BlockingParams = BlockingParams()) -> ScenarioResult:
    """One sweep row; failures become a status string instead of an exception."""
    kind = scenario.kind.value
    p_x = params.p_x
    try:
        if optimize:
            p_x = bbm92.optimize_px(params, scenario)
            params = replace(params, p_x=p_x)
        res = bbm92.solve_key_length(params, scenario)
        other = "simplified" if params.bound_form == "theorem" else "theorem"
        by_form = {params.bound_form: res.length,
                   other: bbm92.key_length(replace(params, bound_form=other), scenario)}
        budget, penalty = bbm92.secrecy_budget(params, scenario)
        cycles = scenario_cycles(params, scenario, res.length, blocking)
    except (InfeasibleError, ValueError) as exc:
        return ScenarioResult(kind, scenario.n_subblocks, p_x, 0, 0.0, math.nan, 0, 0.0,
                              f"error: {exc}")
    status = "ok" if res.length > 0 else "infeasible"
    rate = res.length / cycles if cycles else 0.0
    return ScenarioResult(kind, scenario.n_subblocks, p_x, res.length,
                          res.length / params.n_rounds, scenario.n_subblocks * budget + penalty,
                          cycles, rate, status, by_form)


def scenario_compare(params: Bbm92Params, ns_range: Iterable[int], optimize_px: bool = False,
                     blocking: BlockingParams = BlockingParams(),
                     kinds: Sequence[ScenarioKind] = tuple(ScenarioKind),
                     jobs: int = 1) -> list[ScenarioResult]:
    """Rows for Full once, then Splitting and SmallBlock at every ``N_S``.

    With ``jobs > 1`` points are evaluated in worker processes; rows keep
    the serial order.
    """
    ns_list = list(ns_range)
    if not ns_list:
        return []
    kinds = [ScenarioKind(k) for k in kinds]
    points = [Scenario.full()] if ScenarioKind.FULL in kinds else []
    points += [Scenario(kind, ns) for ns in ns_list for kind in kinds
               if kind is not ScenarioKind.FULL]
    args = [(params, sc, optimize_px, blocking) for sc in points]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_evaluate_args, args))
    return [_evaluate_args(a) for a in args]


def _evaluate_args(args) -> ScenarioResult:
    return evaluate_point(*args)


def write_results_csv(fh, rows: Iterable[ScenarioResult]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.row())

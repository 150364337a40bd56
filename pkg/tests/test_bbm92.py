import math
from dataclasses import replace

import pytest

from oracles import affine_f, close, mp_hb, mp_tradeoff
from sbhash.bbm92 import (Bbm92Params, Scenario, ScenarioKind, binary_entropy, ec_leakage,
                          key_length, min_tradeoff, optimize_px, secrecy_for_length,
                          solve_key_length, solve_secrecy)
from sbhash.errors import DomainError, InfeasibleError, ParameterError

BASE = Bbm92Params()


def test_binary_entropy():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0 == binary_entropy(1.0)
    assert binary_entropy(0.11) == pytest.approx(0.499916, abs=5e-7)
    assert close(binary_entropy(0.058), mp_hb(0.058), 14)
    with pytest.raises(DomainError):
        binary_entropy(1.5)


def test_scenario_validation():
    assert Scenario.full().n_subblocks == 1
    assert Scenario("splitting", 3).kind is ScenarioKind.SPLITTING
    with pytest.raises(ParameterError):
        Scenario(ScenarioKind.FULL, 2)
    with pytest.raises(ParameterError):
        Scenario.small_block(0)
    with pytest.raises(ParameterError):
        Bbm92Params(bound_form="other")


def test_tradeoff_tangent_at_threshold():
    t = min_tradeoff(BASE, 0.0082)
    assert t.h == pytest.approx(0.98 ** 2 * (1 - binary_entropy(0.0082)), rel=1e-14)


def test_tradeoff_min_diverges():
    p = Bbm92Params(p_x=1e-6)
    assert min_tradeoff(p, 1e-4).min_f < -10
    assert min_tradeoff(p, 1e-12).max_f == pytest.approx(1.0, abs=1e-5)


def test_tradeoff_matches_oracle():
    for e in [0.0082, 1e-3, 0.2, 0.45]:
        t = min_tradeoff(BASE, e)
        for got, want in zip((t.h, t.max_f, t.min_f, t.var_f), mp_tradeoff(0.02, 1.0, 0.0082, e)):
            assert close(got, want, 12)
    with pytest.raises(DomainError):
        min_tradeoff(BASE, 0.5)


def test_tradeoff_is_affine_function_extremes():
    """Max and Min are the affine function at its extreme statistics; h at the threshold."""
    e = 0.01
    t = min_tradeoff(BASE, e)
    px2 = 0.02 ** 2
    assert close(t.max_f, affine_f(0.02, e, 0, 0), 12)
    # all test rounds detected, every one an error
    assert close(t.min_f, affine_f(0.02, e, px2, 0), 12)
    assert close(t.h, affine_f(0.02, e, px2 * 0.0082, 0), 12)


def test_scaled_tradeoff_matches_direct_scaling():
    t = min_tradeoff(BASE, 0.01)
    s = t.scaled(1 / 17)
    assert (s.h, s.max_f, s.min_f) == pytest.approx((t.h / 17, t.max_f / 17, t.min_f / 17), rel=1e-15)
    assert s.var_f == pytest.approx(t.var_f / 17 ** 2, rel=1e-15)


def test_ec_leakage():
    assert ec_leakage(replace(BASE, e_bit=0.0)) == 0.0
    p = Bbm92Params(n_rounds=1000, p_x=1e-12, f_ec=1.0, e_bit=0.5)
    assert ec_leakage(p) == pytest.approx(1000, rel=1e-9)
    want = 1e9 * 0.98 ** 2 * 1.16 * float(mp_hb(0.058))
    assert ec_leakage(BASE) == pytest.approx(want, rel=1e-13)
    assert ec_leakage(replace(BASE, scaled_leakage=False)) == pytest.approx(1e9 * 1.16 * float(mp_hb(0.058)))


def test_full_key_rate_in_range():
    res = solve_key_length(BASE)
    assert 0.45 <= res.length / 1e9 <= 0.60
    assert 1.0 < res.alpha < 1.5 and 0.0 < res.e_tangent < 0.5
    assert 2 * res.eps_smooth + res.eps_pa == pytest.approx(1e-6, rel=1e-9)


def test_no_key_when_leakage_dominates():
    p = replace(BASE, e_bit=0.5, f_ec=1.0)
    for sc in [Scenario.full(), Scenario.splitting(4), Scenario.small_block(4)]:
        assert key_length(p, sc) == 0
        assert not solve_key_length(p, sc).feasible


def test_splitting_below_full():
    assert key_length(BASE, Scenario.splitting(2)) <= key_length(BASE)


def test_splitting_one_block_is_full():
    p = replace(BASE, eps_abort=0.0)
    assert key_length(p, Scenario.splitting(1)) == key_length(p)
    assert key_length(p, Scenario.small_block(1)) == key_length(p)


def test_splitting_non_increasing_over_ns():
    lengths = [key_length(BASE, Scenario.splitting(ns)) for ns in range(1, 31)]
    assert all(a >= b for a, b in zip(lengths, lengths[1:]))


def test_totals_are_block_multiples():
    for sc in [Scenario.splitting(7), Scenario.small_block(7)]:
        res = solve_key_length(BASE, sc)
        assert res.length == 7 * res.per_block == 7 * math.floor(res.raw_per_block)


def test_simplified_form_is_reported():
    res = solve_key_length(replace(BASE, bound_form="simplified"))
    assert math.isnan(res.alpha)
    assert 0.45 <= res.length / 1e9 <= 0.60


def test_optimizer_reproducible():
    assert solve_key_length(BASE, Scenario.splitting(5)) == solve_key_length(BASE, Scenario.splitting(5))


def test_secrecy_zero_length_tiny():
    assert secrecy_for_length(BASE, 0) < 1e-10


def test_secrecy_reference_point():
    res = solve_secrecy(BASE, 430_000_000)
    assert res.secure and res.epsilon <= 1e-5


def test_secrecy_monotone_in_length():
    logs = [solve_secrecy(BASE, l).log2_epsilon_hash
            for l in range(500_000_000, 530_000_001, 5_000_000)]
    assert all(a <= b for a, b in zip(logs, logs[1:]))


def test_secrecy_impossible_length():
    res = solve_secrecy(BASE, 900_000_000)
    assert not res.secure and res.epsilon == 1.0


@pytest.mark.parametrize("scenario", [Scenario.full(), Scenario.splitting(4),
                                      Scenario.small_block(4), Scenario.splitting(17)])
def test_secrecy_and_key_length_consistent(scenario):
    base = key_length(BASE, scenario)
    for l in (base - 1_000_000, base + 1_000_000):
        eps = secrecy_for_length(BASE, l, scenario)
        assert BASE.eps_abort < eps < 1.0
        assert key_length(replace(BASE, eps_sec=eps), scenario) >= l - scenario.n_subblocks


def test_secrecy_splitting_charges_abort():
    res = solve_secrecy(BASE, 400_000_000, Scenario.splitting(3))
    assert res.epsilon >= BASE.eps_abort


def test_optimize_px_full():
    assert optimize_px(BASE) == pytest.approx(0.0176, abs=0.004)


def test_optimize_px_trends():
    sb = [optimize_px(BASE, Scenario.small_block(ns)) for ns in (1, 2, 5, 10, 20)]
    assert all(a <= b for a, b in zip(sb, sb[1:]))
    sp = [optimize_px(BASE, Scenario.splitting(ns)) for ns in (1, 2, 5, 10, 20)]
    assert max(sp) / min(sp) < 1.5


def test_optimize_px_infeasible():
    with pytest.raises(InfeasibleError):
        optimize_px(replace(BASE, e_bit=0.5, f_ec=1.0))


def test_eta_and_q_defaults():
    assert BASE.q_threshold == BASE.e_ph and BASE.eta_threshold == BASE.p_det
    assert replace(BASE, q_tol=0.02).q_threshold == 0.02
    # a looser threshold can only cost key
    assert key_length(replace(BASE, q_tol=0.01)) < key_length(BASE)

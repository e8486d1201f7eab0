import itertools
import warnings
from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randistill.analysis import WClassParams, q_rnd_lower_bound
from randistill.errors import ParameterError, ShapeError
from randistill.measures import concurrence, entanglement_entropy
from randistill.protocols import (
    History,
    KCoefficients,
    Status,
    UnderflowWarning,
    WProtocolConfig,
    alice_flag_expected_concurrence,
    alice_flag_series,
    dicke_reachable,
    dicke_round,
    evolve_k_coefficients,
    execute_dicke_moves,
    finite_round_schedule,
    optimal_flag_schedule,
    printed_dicke_condition,
    random_distill_w_class,
    richardson_limit,
    run_w_protocol_tree,
    sample_w_protocol,
    success_probability_formulas,
    symmetrize_w_class,
    two_copy_quantities,
    two_copy_round,
    two_copy_w_state,
    w_protocol_round,
)
from randistill.state import (
    BipartiteCut,
    basis_state,
    dicke_state,
    overlap,
    random_state,
    w_state,
)


def brute_force_round(amps, eps, n=3):
    """Pattern probabilities from an explicit full-space isometry and flag projectors."""
    u = np.array([[sqrt(1 - eps**2), 0], [0, 1], [eps, 0]])
    big = u
    for _ in range(n - 1):
        big = np.kron(big, u)
    out = big @ amps
    t = out.reshape((3,) * n)
    probs = {}
    for flags in itertools.product((False, True), repeat=n):
        idx = tuple(slice(2, 3) if g else slice(0, 2) for g in flags)
        blk = t[idx]
        probs[flags] = float(np.vdot(blk, blk).real)
    return probs


def by_flags(leaves):
    return {leaf.flagged: leaf for leaf in leaves}


def test_w_round_probabilities():
    eps = 0.1
    leaves = by_flags(w_protocol_round(w_state(3), eps))
    assert leaves[()].probability == pytest.approx((1 - eps**2) ** 2, abs=1e-15)
    assert leaves[()].probability == pytest.approx(0.9801)
    for p in "ABC":
        assert leaves[(p,)].probability == pytest.approx(2 / 3 * eps**2 * (1 - eps**2))
        assert leaves[(p,)].probability == pytest.approx(0.0066)
    abort = sum(l.probability for l in leaves.values() if l.status is Status.ABORT)
    assert abort == pytest.approx(eps**4, abs=1e-15)


def test_w_round_matches_brute_force(rng):
    for _ in range(10):
        s = random_state((2, 2, 2), rng)
        eps = rng.uniform(0.05, 0.9)
        want = brute_force_round(s.amps, eps)
        got = {l.flagged: l.probability for l in w_protocol_round(s, eps, prune=0.0)}
        for flags, p in want.items():
            key = tuple(q for q, g in zip("ABC", flags) if g)
            assert got.get(key, 0.0) == pytest.approx(p, abs=1e-12)


def test_reset_and_epr_branches():
    w = w_state(3)
    leaves = by_flags(w_protocol_round(w, 0.2))
    assert leaves[()].status is Status.EXHAUSTED
    assert abs(overlap(leaves[()].terminal_state, w)) == pytest.approx(1, abs=1e-12)
    a = leaves[("A",)]
    assert a.status is Status.SUCCESS and a.pair == ("B", "C")
    assert concurrence(a.terminal_state) == pytest.approx(1)


def test_round_epsilon_domain():
    with pytest.raises(ParameterError):
        w_protocol_round(w_state(3), 1.0)
    with pytest.raises(ParameterError):
        WProtocolConfig(0.0)
    with pytest.raises(ParameterError):
        WProtocolConfig(0.1, max_rounds=0)


def test_tree_w3():
    _, rep = run_w_protocol_tree(w_state(3), WProtocolConfig(0.05, 4000))
    assert rep.total_expected_q == pytest.approx(1 - 0.05**2 / (2 - 0.05**2), abs=1e-6)
    for v in rep.per_pair_expected_q.values():
        assert v == pytest.approx(rep.total_expected_q / 3, abs=1e-12)
    assert rep.accounted_mass == pytest.approx(1, abs=1e-9)


def test_tree_rejects_four_parties():
    with pytest.raises(ShapeError):
        run_w_protocol_tree(w_state(4), WProtocolConfig(0.1, 10))


def test_tree_product_state_has_no_yield():
    leaves, rep = run_w_protocol_tree(basis_state("000"), WProtocolConfig(0.1, 50))
    assert rep.total_expected_q == 0
    assert all(concurrence(l.terminal_state) == 0 for l in leaves if l.status is Status.SUCCESS)


def test_history_is_compact():
    leaves, _ = run_w_protocol_tree(w_state(3), WProtocolConfig(0.1, 1000))
    last = leaves[-1]
    assert last.status is Status.EXHAUSTED and last.rounds == 1000
    assert list(last.outcomes)[-1] == (("A", "F"), ("B", "F"), ("C", "F"))
    assert History(suffix=((("A", "F"),),)) == History(suffix=((("A", "F"),),))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), eps=st.floats(0.05, 0.9), rounds=st.integers(1, 30))
def test_tree_conserves_probability(seed, eps, rounds):
    s = random_state((2, 2, 2), np.random.default_rng(seed))
    _, rep = run_w_protocol_tree(s, WProtocolConfig(eps, rounds))
    assert rep.accounted_mass == pytest.approx(1, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_tree_is_deterministic(seed):
    s = random_state((2, 2, 2), np.random.default_rng(seed))
    cfg = WProtocolConfig(0.2, 20)
    assert run_w_protocol_tree(s, cfg)[1] == run_w_protocol_tree(s, cfg)[1]


def test_monotone_in_epsilon():
    totals = [run_w_protocol_tree(w_state(3), WProtocolConfig(e, int(12 / e**2)))[1].total_expected_q
              for e in (0.2, 0.1, 0.05)]
    assert totals == sorted(totals)


def test_k_evolution_identity_and_w():
    k0 = KCoefficients.from_state(w_state(3))
    assert evolve_k_coefficients(k0, 0, 0.1) is k0
    for r in (1, 5, 50):
        kr = evolve_k_coefficients(k0, r, 0.1)
        assert kr.k01 == pytest.approx(kr.k10)
        assert abs(kr.determinant) == pytest.approx(1 / 3)


def test_k_evolution_matches_engine_spine(rng):
    for _ in range(5):
        s = random_state((2, 2, 2), rng)
        leaves, _ = run_w_protocol_tree(s, WProtocolConfig(0.1, 7))
        spine = leaves[-1].terminal_state
        kr = evolve_k_coefficients(KCoefficients.from_state(s), 7, 0.1)
        assert np.allclose(kr.to_state().amps, spine.amps, atol=1e-10)
        assert kr.cumulative_pf == pytest.approx(leaves[-1].probability, rel=1e-10)


def test_k_underflow_is_reported():
    k0 = KCoefficients.from_state(w_state(3))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        evolve_k_coefficients(k0, 100_000, 0.3)
    assert any(issubclass(w.category, UnderflowWarning) for w in caught)


def test_success_formulas():
    k = KCoefficients.from_state(w_state(3))
    p_f, p_g = success_probability_formulas(k, 1e-8)
    assert p_f == pytest.approx(1) and p_g == pytest.approx(0, abs=1e-15)
    p_f, p_g = success_probability_formulas(k, 0.1)
    assert p_g == pytest.approx(0.0066)
    assert p_f == pytest.approx(0.9801)


def test_success_formulas_match_engine(rng):
    s = random_state((2, 2, 2), rng)
    p_f, p_g = success_probability_formulas(KCoefficients.from_state(s), 0.3)
    leaves = by_flags(w_protocol_round(s, 0.3))
    assert p_f == pytest.approx(leaves[()].probability, abs=1e-12)
    assert p_g == pytest.approx(leaves[("A",)].probability, abs=1e-12)


def test_geometric_series_limit():
    for eps in (1e-2, 1e-3):
        assert alice_flag_series(0.5, eps) == pytest.approx(0.5, abs=eps)


def test_alice_flag_limit_richardson(rng):
    s = random_state((2, 2, 2), rng)
    det = abs(KCoefficients.from_state(s).determinant)
    eps = (0.2, 0.14, 0.1)
    vals = []
    for e in eps:
        leaves, _ = run_w_protocol_tree(s, WProtocolConfig(e, int(np.ceil(12 / e**2))))
        vals.append(alice_flag_expected_concurrence(leaves, "A"))
    assert richardson_limit(eps, vals) == pytest.approx(det, abs=1e-3)


def test_sampler_deterministic_and_consistent():
    cfg = WProtocolConfig(0.3, 200)
    a = sample_w_protocol(w_state(3), cfg, 400, seed=7)
    b = sample_w_protocol(w_state(3), cfg, 400, seed=7)
    assert a == b
    _, rep = run_w_protocol_tree(w_state(3), cfg)
    total = sum(a.per_pair_mean_q.values())
    assert total == pytest.approx(rep.total_expected_q, abs=0.05)


def test_symmetrize_identity_case():
    a = 1 / sqrt(3)
    leaves = symmetrize_w_class(WClassParams(a, a, sqrt(1 - 2 * a * a)))
    assert len(leaves) == 1 and leaves[0].status is Status.EXHAUSTED
    assert leaves[0].probability == pytest.approx(1)


def test_symmetrize_reaches_w():
    params = WClassParams(0.3, 0.4, sqrt(0.75))
    sym = [l for l in symmetrize_w_class(params) if l.status is Status.EXHAUSTED][0]
    w = w_state(3)
    assert abs(overlap(sym.terminal_state.normalized(), w)) == pytest.approx(1, abs=1e-12)
    total = sum(l.probability for l in symmetrize_w_class(params))
    assert total == pytest.approx(1, abs=1e-12)


def test_random_distill_converges_from_below():
    params = WClassParams(0.3, 0.4, sqrt(0.75))
    target = q_rnd_lower_bound(params)
    assert target == pytest.approx(0.808882, abs=1e-6)
    prev = 0.0
    for eps in (0.2, 0.1, 0.05):
        _, rep = random_distill_w_class(params, WProtocolConfig(eps, int(12 / eps**2)))
        assert prev < rep.total_expected_q < target
        prev = rep.total_expected_q
    assert target - prev < 2e-3


def test_random_distill_w_point():
    a = 1 / sqrt(3)
    _, rep = random_distill_w_class(WClassParams(a, a, a), WProtocolConfig(0.02, 12000))
    assert rep.total_expected_q == pytest.approx(1, abs=1e-3)


@pytest.mark.parametrize("rounds,value", [(1, 1 / 2), (2, 2 / 3), (3, 3 / 4), (12, 12 / 13)])
def test_finite_round_schedule(rounds, value):
    sched = finite_round_schedule(rounds)
    assert sched.success_probability == pytest.approx(value, abs=1e-9)
    assert sched.dp_value == pytest.approx(value, abs=1e-12)


def test_finite_round_schedule_r2():
    xs, _ = optimal_flag_schedule(2)
    assert xs == pytest.approx([1 / 3, 1 / 2])


def test_finite_round_grid_oracle():
    # grid search over (x1, x2) of 2x1(1-x1) + (1-x1)^2 2x2(1-x2)
    x = np.linspace(0, 1, 2001)
    one = 2 * x * (1 - x)
    best = np.max(one[:, None] + ((1 - x) ** 2)[:, None] * one[None, :].max())
    assert best == pytest.approx(optimal_flag_schedule(2)[1], abs=1e-6)
    assert one.max() == pytest.approx(optimal_flag_schedule(1)[1], abs=1e-6)


def test_dicke_round_branches():
    d = dicke_state(4, 2)
    g0 = by_flags(dicke_round(d, 0, 0.1))[("D",)]
    assert abs(overlap(g0.terminal_state, dicke_state(3, 2))) == pytest.approx(1)
    g1 = by_flags(dicke_round(d, 1, 0.1))[("D",)]
    assert abs(overlap(g1.terminal_state, w_state(3))) == pytest.approx(1)
    w5 = w_state(5)
    g = by_flags(dicke_round(w5, 0, 0.1))[("A",)]
    assert abs(overlap(g.terminal_state, w_state(4, ("B", "C", "D", "E")))) == pytest.approx(1)


def test_dicke_drop_one_without_support():
    leaves = dicke_round(basis_state("000"), 1, 0.1, prune=0.0)
    assert all(l.probability == 0 for l in leaves if l.status is Status.SUCCESS)


def test_dicke_reachability():
    r = dicke_reachable(4, 2, 3, 1)
    assert r.reachable and r.moves == ("drop1",)
    with pytest.raises(ParameterError):
        dicke_reachable(3, 3, 2, 1)
    assert not dicke_reachable(3, 1, 4, 2).reachable
    r = dicke_reachable(5, 2, 3, 2)
    assert r.reachable and r.moves == ("drop0", "drop0")
    assert dicke_reachable(5, 2, 3, 1).reachable


def test_printed_condition_misses_party_count():
    assert printed_dicke_condition(6, 1, 5, 3)
    assert not dicke_reachable(6, 1, 5, 3).reachable


def test_dicke_witnesses_execute():
    for m in range(3, 7):
        for n in range(1, m):
            for m2 in range(3, m + 1):
                for n2 in range(1, m2):
                    r = dicke_reachable(m, n, m2, n2)
                    if not r.reachable:
                        continue
                    final = execute_dicke_moves(m, n, r.moves)
                    target = dicke_state(m2, n2, final.parties)
                    assert abs(overlap(final, target)) == pytest.approx(1, abs=1e-10)


def test_two_copy_numbers():
    tc = two_copy_quantities()
    assert tc.zeta == pytest.approx(0.1354693, abs=1e-6)
    assert tc.e_rnd_bound == pytest.approx(1.843, abs=1e-3)
    assert tc.e_sp_asym == pytest.approx(1.83659, abs=1e-5)
    assert tc.advantage > 0


def test_two_copy_round():
    ww = two_copy_w_state()
    only = two_copy_round(ww, 0.0, prune=0.0)
    assert only[0].probability == pytest.approx(1)
    assert abs(overlap(only[0].terminal_state, ww)) == pytest.approx(1)
    leaves = two_copy_round(ww, 0.05)
    assert sum(l.probability for l in leaves) == pytest.approx(1, abs=1e-10)
    single = by_flags(leaves)[("A",)].terminal_state
    assert entanglement_entropy(single, BipartiteCut(("B",), ("C",))) <= 2 + 1e-12
    nf = by_flags(two_copy_round(ww, 0.3))[()]
    assert abs(overlap(nf.terminal_state, ww)) < 1 - 1e-4
    with pytest.raises(ShapeError):
        two_copy_round(w_state(3), 0.1)

"""Executable acceptance criteria.

Each check returns a :class:`CriterionResult` carrying the measured value, the
target and the tolerance it was judged at. ``run_all`` is what ``randistill
verify`` and ``tests/test_acceptance.py`` both call.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from math import ceil, sqrt
from typing import Callable

import numpy as np

from .analysis import (
    WClassParams,
    _q_rnd,
    assisted_entropy_mincut,
    dicke_printed_single_party_entropy,
    ghz_advantage_boundary,
    lemma2_terms,
    sample_w_class_params,
)
from .config import DEFAULT, Tolerances
from .measures import (
    binary_entropy,
    concurrence,
    f_of_q,
    f_of_q_array,
    single_party_entropy,
    three_tangle,
)
from .protocols import (
    KCoefficients,
    Status,
    WProtocolConfig,
    alice_flag_expected_concurrence,
    dicke_round,
    evolve_k_coefficients,
    finite_round_schedule,
    random_distill_w_class,
    richardson_limit,
    run_w_protocol_tree,
    two_copy_quantities,
    w_protocol_round,
)
from .state import (
    PureState,
    basis_state,
    dicke_state,
    ghz_example_state,
    ghz_state,
    overlap,
    random_state,
    w_state,
)

DEFAULT_SEED = 20080115
H2_THIRD = binary_entropy(1.0 / 3.0)


@dataclass
class CriterionResult:
    number: int
    name: str
    measured: float
    target: float
    tolerance: float
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"[{flag}] {self.number:2d} {self.name}: measured={self.measured:.12g} "
                f"target={self.target:.12g} tol={self.tolerance:.3g} ({self.seconds:.1f}s)")


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


def w_reliability(tol: Tolerances, seed: int) -> CriterionResult:
    _, rep = run_w_protocol_tree(w_state(3), WProtocolConfig(0.02, 5000, tol.prune))
    per_pair = list(rep.per_pair_expected_q.values())
    total = rep.total_expected_q
    spread = max(per_pair) - min(per_pair)
    ok = total >= 1.0 - tol.reliability and spread <= tol.reliability and total > H2_THIRD
    return CriterionResult(1, "W distillation reliability", total, 1.0, tol.reliability, ok, {
        "per_pair": rep.per_pair_expected_q, "pair_spread": spread,
        "exhausted_mass": rep.exhausted_mass, "abort_mass": rep.abort_mass,
        "truncated_mass": rep.truncated_mass, "exceeds_h2_third": total > H2_THIRD,
    })


def reset_property(tol: Tolerances, seed: int) -> CriterionResult:
    w = w_state(3)
    worst = 0.0
    for eps in (0.3, 0.1, 0.01):
        all_f = [b for b in w_protocol_round(w, eps) if b.status is Status.EXHAUSTED][0]
        worst = max(worst, 1.0 - abs(overlap(w, all_f.terminal_state)))
    return CriterionResult(2, "Reset property", worst, 0.0, tol.reset, worst <= tol.reset)


def recurrence_equivalence(tol: Tolerances, seed: int, n_states: int = 200) -> CriterionResult:
    rng = _rng(seed, 3)
    worst = 0.0
    for _ in range(n_states):
        s = random_state((2, 2, 2), rng)
        rounds = int(rng.integers(1, 11))
        leaves, _ = run_w_protocol_tree(s, WProtocolConfig(0.1, rounds, 0.0))
        spine = [b for b in leaves if b.status is Status.EXHAUSTED][0]
        closed = evolve_k_coefficients(KCoefficients.from_state(s), rounds, 0.1)
        worst = max(worst,
                    float(np.abs(closed.to_state().amps - spine.terminal_state.amps).max()),
                    abs(closed.cumulative_pf - spine.probability))
    return CriterionResult(3, "Closed-form recurrence equivalence", worst, 0.0, tol.recurrence,
                           worst <= tol.recurrence, {"states": n_states, "epsilon": 0.1})


def expected_concurrence_limit(tol: Tolerances, seed: int, n_states: int = 50,
                               epsilons=(0.2, 0.14, 0.1)) -> CriterionResult:
    rng = _rng(seed, 4)
    worst = 0.0
    for _ in range(n_states):
        s = random_state((2, 2, 2), rng)
        det = abs(KCoefficients.from_state(s).determinant)
        values = []
        for eps in epsilons:
            leaves, _ = run_w_protocol_tree(s, WProtocolConfig(eps, ceil(12 / eps**2), tol.prune))
            values.append(alice_flag_expected_concurrence(leaves, "A"))
        worst = max(worst, abs(richardson_limit(epsilons, values) - det))
    return CriterionResult(4, "Expected-concurrence limit", worst, 0.0, tol.limit,
                           worst <= tol.limit, {"states": n_states, "epsilons": list(epsilons)})


def theorem_one(tol: Tolerances, seed: int, n_params: int = 100_000, n_engine: int = 20,
                max_rounds: int = 12_000) -> CriterionResult:
    rng = _rng(seed, 5)
    a, b, g, _ = sample_w_class_params(rng, n_params)
    q_rnd = _q_rnd(a, b, g)
    q_b = 2 * b * np.sqrt(a * a + g * g)
    gap = q_rnd**2 - q_b**2
    t1, t2, t3 = lemma2_terms(a, b, g)
    f_margin = f_of_q_array(np.minimum(q_rnd, 1.0)) - f_of_q_array(q_b)
    algebra_ok = bool(np.all(gap > 0) and np.all(np.abs(gap - (t1 + t2 + t3)) <= 1e-10)
                      and min(t1.min(), t2.min(), t3.min()) >= -1e-12)
    f_ok = bool(np.all(f_margin > 1e-12))
    worst = 0.0
    for _ in range(n_engine):
        p = WClassParams.random(rng)
        _, rep = random_distill_w_class(p, WProtocolConfig(0.02, max_rounds, tol.prune))
        worst = max(worst, abs(rep.total_expected_q - _q_rnd(p.alpha, p.beta, p.gamma)))
    ok = algebra_ok and f_ok and worst <= tol.engine_vs_closed
    return CriterionResult(5, "Random-distillation advantage for W-class", worst, 0.0,
                           tol.engine_vs_closed, ok, {
        "min_gap": float(gap.min()), "min_f_margin": float(f_margin.min()),
        "gap_algebra_ok": algebra_ok, "f_strict_ok": f_ok, "params": n_params,
        "engine_params": n_engine,
    })


def ghz_threshold(tol: Tolerances, seed: int) -> CriterionResult:
    boundary = ghz_advantage_boundary()
    err = abs(boundary - 0.32)
    tangle_err = 0.0
    for a2 in np.linspace(0.01, 1.0 / 3.0, 40):
        alpha = sqrt(a2)
        eps = sqrt(max(0.0, 1.0 - 3.0 * a2))
        tangle_err = max(tangle_err, abs(three_tangle(ghz_example_state(alpha)) - 16 * eps * alpha**3))
    ok = err <= tol.threshold and tangle_err <= tol.tangle
    return CriterionResult(6, "GHZ-example threshold", boundary, 0.32, tol.threshold, ok,
                           {"tangle_max_error": tangle_err})


def finite_round_claim(tol: Tolerances, seed: int) -> CriterionResult:
    worst, values = 0.0, {}
    for r in range(1, 13):
        sched = finite_round_schedule(r)
        values[r] = sched.success_probability
        worst = max(worst, abs(sched.success_probability - r / (r + 1)))
    ok = worst <= tol.finite_round and values[3] > 2 / 3 and values[12] > H2_THIRD
    return CriterionResult(7, "Finite-round claim", worst, 0.0, tol.finite_round, ok,
                           {"success": {str(k): v for k, v in values.items()}})


def _dicke_or_product(m: int, n: int, parties) -> PureState:
    if n == 0:
        return basis_state("0" * m, parties)
    if n == m:
        return basis_state("1" * m, parties)
    return dicke_state(m, n, parties)


def dicke_conversions(tol: Tolerances, seed: int) -> CriterionResult:
    worst = 0.0
    entropies = []
    for m in range(3, 7):
        for n in range(1, m):
            state = dicke_state(m, n)
            for drop in (0, 1):
                n_out = n - drop
                for leaf in dicke_round(state, drop, 0.05):
                    if leaf.status is not Status.SUCCESS:
                        continue
                    out = leaf.terminal_state
                    target = _dicke_or_product(m - 1, n_out, out.parties)
                    worst = max(worst, 1.0 - abs(overlap(target, out)))
                if 0 < n_out < m - 1:
                    entropies.append({
                        "M": m, "N": n, "drop": drop,
                        "input_entropy": single_party_entropy(state, "A"),
                        "output_entropy": single_party_entropy(dicke_state(m - 1, n_out), "A"),
                        "printed_input": dicke_printed_single_party_entropy(m, n),
                        "printed_output": dicke_printed_single_party_entropy(m - 1, n_out),
                    })
    return CriterionResult(8, "Dicke conversions", worst, 0.0, tol.dicke, worst <= tol.dicke,
                           {"entropies": entropies})


def two_copy_numbers(tol: Tolerances, seed: int) -> CriterionResult:
    tc = two_copy_quantities()
    errs = {
        "zeta": abs(tc.zeta - 0.1354693),
        "spectrum_entropy": abs(tc.e_rnd_bound - 1.84262),
        "two_h2": abs(tc.e_sp_asym - 1.83659),
    }
    ok = (errs["zeta"] <= tol.zeta and errs["spectrum_entropy"] <= tol.spectrum_entropy
          and errs["two_h2"] <= tol.two_h2 and tc.advantage > 0)
    return CriterionResult(9, "Two-copy numbers", tc.e_rnd_bound, 1.84262, tol.spectrum_entropy, ok, {
        "published": 1.843, "err_vs_published": abs(tc.e_rnd_bound - 1.843),
        "zeta": tc.zeta, "e_sp_asym": tc.e_sp_asym, "advantage": tc.advantage,
        "printed_form": tc.printed_form, **{f"err_{k}": v for k, v in errs.items()},
    })


def mincut_rates(tol: Tolerances, seed: int) -> CriterionResult:
    w, ghz = w_state(3), ghz_state(3)
    pairs = [("A", "B"), ("A", "C"), ("B", "C")]
    err_w = max(abs(assisted_entropy_mincut(w, *p) - H2_THIRD) for p in pairs)
    err_g = max(abs(assisted_entropy_mincut(ghz, *p) - 1.0) for p in pairs)
    worst = max(err_w, err_g)
    return CriterionResult(10, "Min-cut rates", worst, 0.0, tol.mincut, worst <= tol.mincut,
                           {"w_error": err_w, "ghz_error": err_g})


def lemma_one(tol: Tolerances, seed: int, grid: int = 10_000, n_states: int = 1000) -> CriterionResult:
    q = np.linspace(0.0, 1.0, grid)
    f = np.array([f_of_q(x) for x in q])
    monotone = bool(np.all(np.diff(f) > 0))
    min_second = float(np.diff(f, 2).min())
    rng = _rng(seed, 11)
    bridge = 0.0
    for _ in range(n_states):
        s = random_state((2, 2), rng)
        bridge = max(bridge, abs(f_of_q(min(concurrence(s), 1.0)) - single_party_entropy(s, "A")))
    ok = monotone and min_second >= -tol.convexity and bridge <= tol.bridge
    return CriterionResult(11, "Convexity of f", bridge, 0.0, tol.bridge, ok,
                           {"monotone": monotone, "min_second_difference": min_second})


CRITERIA: list[Callable[[Tolerances, int], CriterionResult]] = [
    w_reliability,
    reset_property,
    recurrence_equivalence,
    expected_concurrence_limit,
    theorem_one,
    ghz_threshold,
    finite_round_claim,
    dicke_conversions,
    two_copy_numbers,
    mincut_rates,
    lemma_one,
]


def timed(check: Callable[[Tolerances, int], CriterionResult], tol: Tolerances,
          seed: int) -> CriterionResult:
    t0 = time.perf_counter()
    res = check(tol, seed)
    res.seconds = time.perf_counter() - t0
    return res


def run_all(tol: Tolerances = DEFAULT, seed: int = DEFAULT_SEED, echo=None) -> list[CriterionResult]:
    results = []
    for check in CRITERIA:
        res = timed(check, tol, seed)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results

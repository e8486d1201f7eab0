"""LOCC protocols run exactly on small pure states.

The workhorse is :func:`flag_round`: every listed party leaks part of one
local level into a fresh flag level and then measures flag / no-flag. The W
protocol repeats it until exactly one party sees the flag; Dicke drops and the
two-copy variant reuse the same round with a different source level or local
dimension.
"""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import product
from math import exp, fsum, log, log1p, sqrt
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .analysis import WClassParams
from .config import DEFAULT
from .errors import ParameterError, ShapeError
from .measures import binary_entropy, concurrence, entropy_of_spectrum, f_of_q
from .state import (
    PureState,
    apply_local_isometry,
    bit_flip_all,
    dicke_state,
    filter_isometry,
    flag_projectors,
    measure_party,
    tensor_copies,
    w_state,
)

F, G = "F", "G"


class Status(str, Enum):
    SUCCESS = "success"
    ABORT = "abort"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class WProtocolConfig:
    epsilon: float
    max_rounds: int = 1000
    prune_threshold: float = DEFAULT.prune

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ParameterError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.max_rounds < 1:
            raise ParameterError("max_rounds must be at least 1")
        if self.prune_threshold < 0:
            raise ParameterError("prune_threshold must be nonnegative")


Step = tuple  # tuple of (party, label) pairs for one round


class History(Sequence):
    """Outcome history ``prefix + [repeated] * count + suffix`` stored compactly.

    W-protocol trees have long all-F spines; materializing every leaf's full
    history would cost O(rounds^2) memory.
    """

    __slots__ = ("prefix", "repeated", "count", "suffix")

    def __init__(self, prefix=(), repeated=None, count=0, suffix=()):
        self.prefix = tuple(prefix)
        self.repeated = repeated
        self.count = count if repeated is not None else 0
        self.suffix = tuple(suffix)

    def __len__(self):
        return len(self.prefix) + self.count + len(self.suffix)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return tuple(self)[i]
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(i)
        if i < len(self.prefix):
            return self.prefix[i]
        i -= len(self.prefix)
        if i < self.count:
            return self.repeated
        return self.suffix[i - self.count]

    def __iter__(self) -> Iterator[Step]:
        yield from self.prefix
        for _ in range(self.count):
            yield self.repeated
        yield from self.suffix

    def __eq__(self, other):
        if isinstance(other, (History, tuple, list)):
            return len(self) == len(other) and all(a == b for a, b in zip(self, other))
        return NotImplemented

    def __repr__(self):
        return f"History(len={len(self)}, last={self[-1] if len(self) else None})"


@dataclass(frozen=True, eq=False)
class BranchTrace:
    outcomes: History
    probability: float
    terminal_state: PureState
    status: Status
    pair: tuple[str, ...] | None = None

    def __post_init__(self):
        if not -1e-15 <= self.probability <= 1.0 + 1e-12:
            raise ValueError(f"branch probability {self.probability} outside [0, 1]")
        if self.status is Status.SUCCESS:
            flags = [p for p, lab in self.outcomes[-1] if lab == G]
            if len(flags) != 1:
                raise ValueError("success branch must end with exactly one flag")

    @property
    def rounds(self) -> int:
        return len(self.outcomes)

    @property
    def flagged(self) -> tuple[str, ...]:
        if not len(self.outcomes):
            return ()
        return tuple(p for p, lab in self.outcomes[-1] if lab == G)


def _pair_key(pair: Sequence[str]) -> str:
    return "-".join(pair)


@dataclass
class DistillReport:
    per_pair_expected_q: dict[str, float]
    per_pair_expected_E: dict[str, float]
    truncated_mass: float
    exhausted_mass: float
    abort_mass: float
    success_mass: float
    branch_count: int

    @property
    def total_expected_q(self) -> float:
        return fsum(self.per_pair_expected_q.values())

    @property
    def total_expected_E(self) -> float:
        return fsum(self.per_pair_expected_E.values())

    @property
    def accounted_mass(self) -> float:
        return self.success_mass + self.abort_mass + self.exhausted_mass + self.truncated_mass

    def as_dict(self) -> dict:
        return {
            "per_pair_expected_q": dict(self.per_pair_expected_q),
            "per_pair_expected_E": dict(self.per_pair_expected_E),
            "total_expected_q": self.total_expected_q,
            "total_expected_E": self.total_expected_E,
            "success_mass": self.success_mass,
            "abort_mass": self.abort_mass,
            "exhausted_mass": self.exhausted_mass,
            "truncated_mass": self.truncated_mass,
            "branch_count": self.branch_count,
        }


def build_report(leaves: Sequence[BranchTrace], truncated_mass: float,
                 pairs: Sequence[tuple[str, str]] = ()) -> DistillReport:
    """Aggregate leaves in list order; exhausted and aborted mass score zero."""
    q_terms: dict[str, list[float]] = {_pair_key(p): [] for p in pairs}
    e_terms: dict[str, list[float]] = {_pair_key(p): [] for p in pairs}
    mass = {s: [] for s in Status}
    for leaf in leaves:
        mass[leaf.status].append(leaf.probability)
        if leaf.status is Status.SUCCESS and leaf.terminal_state.n_parties == 2:
            key = _pair_key(leaf.terminal_state.parties)
            q = concurrence(leaf.terminal_state)
            q_terms.setdefault(key, []).append(leaf.probability * q)
            e_terms.setdefault(key, []).append(leaf.probability * f_of_q(min(q, 1.0)))
    return DistillReport(
        per_pair_expected_q={k: fsum(v) for k, v in q_terms.items()},
        per_pair_expected_E={k: fsum(v) for k, v in e_terms.items()},
        truncated_mass=truncated_mass,
        exhausted_mass=fsum(mass[Status.EXHAUSTED]),
        abort_mass=fsum(mass[Status.ABORT]),
        success_mass=fsum(mass[Status.SUCCESS]),
        branch_count=len(leaves),
    )


# ---------------------------------------------------------------------------
# one round

class RoundOutcome(NamedTuple):
    flags: tuple[bool, ...]
    probability: float
    block: np.ndarray  # unnormalized amplitudes of the unflagged parties


def _flag_matrix(dim: int, epsilon: float, source: int) -> np.ndarray:
    m = np.zeros((dim + 1, dim))
    m[:dim, :dim] = np.eye(dim)
    m[source, source] = sqrt(1.0 - epsilon**2)
    m[dim, source] = epsilon
    return m


@lru_cache(maxsize=256)
def _round_operator(shape: tuple[int, ...], epsilon: float, source: int) -> np.ndarray:
    # all parties' isometries at once, acting on the flattened amplitudes
    op = np.ones((1, 1))
    for d in shape:
        op = np.kron(op, _flag_matrix(d, epsilon, source))
    return op


@lru_cache(maxsize=64)
def _patterns(shape: tuple[int, ...]):
    out = []
    for flags in product((False, True), repeat=len(shape)):
        out.append((flags, tuple(d if g else slice(0, d) for g, d in zip(flags, shape))))
    return tuple(out)


def flag_round(tensor: np.ndarray, epsilon: float, source: int = 0) -> list[RoundOutcome]:
    """All parties apply the flag isometry on level ``source`` and measure flag/no-flag.

    ``tensor`` has one axis per party. Returns every outcome pattern with its
    probability and the post-measurement block of the unflagged parties
    (flagged axes are removed; unflagged axes keep their original dimension).
    """
    shape = tensor.shape
    op = _round_operator(shape, float(epsilon), source)
    t = (op @ tensor.reshape(-1)).reshape(tuple(d + 1 for d in shape))
    out = []
    for flags, idx in _patterns(shape):
        block = t[idx]
        out.append(RoundOutcome(flags, float(np.vdot(block, block).real), block))
    return out


@lru_cache(maxsize=1024)
def _pattern_meta(parties: tuple[str, ...], flags: tuple[bool, ...]):
    step = tuple((p, G if g else F) for p, g in zip(parties, flags))
    rest = tuple(p for p, g in zip(parties, flags) if not g)
    return step, rest, sum(flags)


def _leaves_from_round(state: PureState, results, weight: float, history_head: History,
                       prune: float):
    """Turn one round's outcomes into (success/abort leaves, all-F outcome, truncated mass)."""
    leaves, truncated, all_f = [], 0.0, None
    for r in results:
        step, rest, n_flags = _pattern_meta(state.parties, r.flags)
        if n_flags == 0:
            all_f = (r, step)
            continue
        p = weight * r.probability
        if p < prune:
            truncated += p
            continue
        hist = History(history_head.prefix, history_head.repeated, history_head.count,
                       history_head.suffix + (step,))
        scale = 1.0 / sqrt(r.probability) if r.probability > 0 else 0.0
        if n_flags == 1:
            terminal = PureState._trusted(rest, r.block * scale)
            leaves.append(BranchTrace(hist, p, terminal, Status.SUCCESS,
                                      rest if len(rest) == 2 else None))
        else:
            if rest:
                terminal = PureState._trusted(rest, r.block * scale)
            else:
                terminal = state
            leaves.append(BranchTrace(hist, p, terminal, Status.ABORT))
    return leaves, all_f, truncated


def w_protocol_round(state: PureState, epsilon: float, source: int = 0,
                     prune: float = DEFAULT.prune) -> list[BranchTrace]:
    """One W-protocol round on every party, as depth-1 branch traces.

    The all-F branch is returned with status ``exhausted`` (a single round is
    the round budget) and its state restricted back to the input dimensions.
    """
    if not 0.0 <= epsilon < 1.0:
        raise ParameterError(f"epsilon must lie in [0, 1), got {epsilon}")
    state = _as_qubits(state) if max(state.dims) == 3 else state
    results = flag_round(state.tensor, epsilon, source)
    leaves, all_f, truncated = _leaves_from_round(state, results, 1.0, History(), prune)
    r, step = all_f
    if r.probability >= prune:
        terminal = PureState.from_tensor(state.parties, r.block / sqrt(r.probability))
        leaves.insert(0, BranchTrace(History(suffix=(step,)), r.probability, terminal,
                                     Status.EXHAUSTED))
    return leaves


def _as_qubits(state: PureState) -> PureState:
    if all(d == 2 for d in state.dims):
        return state
    return state.restrict_all(2)


# ---------------------------------------------------------------------------
# multi-round tree

def _run_tree(state: PureState, epsilons, prune: float, weight: float = 1.0,
              prefix: tuple = ()) -> tuple[list[BranchTrace], float]:
    leaves: list[BranchTrace] = []
    truncated = 0.0
    spine = state.tensor
    p_spine = weight
    fail_step = tuple((p, F) for p in state.parties)
    rounds_done = 0
    for eps in epsilons:
        head = History(prefix, fail_step, rounds_done)
        results = flag_round(spine, eps)
        new, all_f, trunc = _leaves_from_round(state, results, p_spine, head, prune)
        leaves.extend(new)
        truncated += trunc
        r, _ = all_f
        rounds_done += 1
        p_next = p_spine * r.probability
        if p_next < prune:
            truncated += p_next
            p_spine = 0.0
            break
        spine = r.block / sqrt(r.probability)
        p_spine = p_next
    if p_spine > 0.0:
        terminal = PureState.from_tensor(state.parties, spine)
        leaves.append(BranchTrace(History(prefix, fail_step, rounds_done), p_spine, terminal,
                                  Status.EXHAUSTED))
    return leaves, truncated


def run_w_protocol_tree(state: PureState, cfg: WProtocolConfig,
                        schedule: Sequence[float] | None = None
                        ) -> tuple[list[BranchTrace], DistillReport]:
    """Enumerate the W protocol on three qubits up to ``cfg.max_rounds`` rounds.

    ``schedule`` optionally replaces the constant epsilon with per-round values
    (its length is then the round budget). Leaves below ``cfg.prune_threshold``
    are folded into the report's truncated mass.
    """
    if state.n_parties != 3:
        raise ShapeError("the W-protocol tree runs on exactly three parties; use dicke_round for more")
    state = _as_qubits(state)
    if state.dims != (2, 2, 2):
        raise ShapeError(f"three qubits required, got dims {state.dims}")
    state = state.normalized()
    if schedule is None:
        epsilons = [cfg.epsilon] * cfg.max_rounds
    else:
        epsilons = [float(e) for e in schedule]
        if any(not 0.0 < e < 1.0 for e in epsilons):
            raise ParameterError("schedule epsilons must lie in (0, 1)")
    leaves, truncated = _run_tree(state, epsilons, cfg.prune_threshold)
    pairs = [(a, b) for i, a in enumerate(state.parties) for b in state.parties[i + 1:]]
    return leaves, build_report(leaves, truncated, pairs)


def alice_flag_expected_concurrence(leaves: Sequence[BranchTrace], party: str) -> float:
    """Expected concurrence of the other two parties over branches where only ``party`` flagged."""
    return fsum(leaf.probability * concurrence(leaf.terminal_state) for leaf in leaves
                if leaf.status is Status.SUCCESS and leaf.flagged == (party,))


# ---------------------------------------------------------------------------
# closed-form recurrences

class UnderflowWarning(RuntimeWarning):
    pass


def _zeros(idx: tuple[int, ...]) -> int:
    return sum(1 for b in idx if b == 0)


@dataclass(frozen=True)
class KCoefficients:
    """Alice-``|0>`` block ``k[b, c]`` of a three-qubit state plus the Alice-``|1>`` block.

    ``cumulative_pf`` is the product of all-F probabilities accumulated so far.
    """

    k00: complex
    k01: complex
    k10: complex
    k11: complex
    rest: tuple[complex, complex, complex, complex] = (0j, 0j, 0j, 0j)
    cumulative_pf: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.cumulative_pf <= 1.0 + 1e-12:
            raise ValueError(f"cumulative_pf {self.cumulative_pf} outside (0, 1]")

    @classmethod
    def from_state(cls, state: PureState) -> "KCoefficients":
        if state.dims != (2, 2, 2):
            raise ShapeError("k coefficients need three qubits")
        t = state.normalized().tensor
        return cls(complex(t[0, 0, 0]), complex(t[0, 0, 1]), complex(t[0, 1, 0]),
                   complex(t[0, 1, 1]), tuple(complex(x) for x in t[1].reshape(-1)))

    @property
    def k(self) -> np.ndarray:
        return np.array([[self.k00, self.k01], [self.k10, self.k11]])

    def to_state(self, parties=("A", "B", "C")) -> PureState:
        t = np.stack([self.k, np.array(self.rest).reshape(2, 2)])
        return PureState.from_tensor(parties, t)

    @property
    def determinant(self) -> complex:
        return self.k01 * self.k10 - self.k00 * self.k11


def evolve_k_coefficients(k0: KCoefficients, rounds: int, epsilon: float,
                          prune: float = DEFAULT.prune) -> KCoefficients:
    """Closed-form state after ``rounds`` all-F rounds.

    Basis string ``s`` picks up ``(1-eps^2)^(R z(s)/2)`` with ``z`` its number of
    zeros, so the Alice-``|0>`` amplitudes scale with exponents 3R/2, R, R, R/2;
    the product of all-F probabilities is the squared norm of the result.
    """
    if rounds < 0:
        raise ParameterError("rounds must be nonnegative")
    if rounds == 0:
        return k0
    log_c = log1p(-epsilon**2)
    k_vals = {(0, 0): k0.k00, (0, 1): k0.k01, (1, 0): k0.k10, (1, 1): k0.k11}
    r_vals = dict(zip(((0, 0), (0, 1), (1, 0), (1, 1)), k0.rest))
    entries = {(0,) + bc: (v, 1 + _zeros(bc)) for bc, v in k_vals.items()}
    entries.update({(1,) + bc: (v, _zeros(bc)) for bc, v in r_vals.items()})
    live = [z for v, z in entries.values() if v != 0]
    if not live:
        raise ArithmeticError("all-F branch has zero probability")
    # factor out the slowest-decaying exponent so the ratios never underflow together
    z_min = min(live)
    amps = {key: v * np.exp(0.5 * rounds * (z - z_min) * log_c) if v != 0 else 0j
            for key, (v, z) in entries.items()}
    pf_scaled = fsum(abs(v) ** 2 for v in amps.values())
    log_cumulative = log(k0.cumulative_pf) + rounds * z_min * log_c + log(pf_scaled)
    cumulative = exp(log_cumulative)
    if cumulative < prune:
        warnings.warn(f"cumulative all-F probability exp({log_cumulative:.4g}) fell below {prune:.1e}",
                      UnderflowWarning, stacklevel=2)
    n = sqrt(pf_scaled)
    return KCoefficients(amps[0, 0, 0] / n, amps[0, 0, 1] / n, amps[0, 1, 0] / n, amps[0, 1, 1] / n,
                         tuple(amps[(1,) + bc] / n for bc in r_vals), max(cumulative, 5e-324))


def success_probability_formulas(kr: KCoefficients, epsilon: float) -> tuple[float, float]:
    """Next-round probabilities of all-F and of Alice alone flagging.

    The Alice-``|1>`` block enters the all-F probability only; with it zero the
    all-F expression reduces to the Alice-block formula.
    """
    c = 1.0 - epsilon**2
    bracket = c * c * abs(kr.k00) ** 2 + c * (abs(kr.k01) ** 2 + abs(kr.k10) ** 2) + abs(kr.k11) ** 2
    r00, r01, r10, r11 = (abs(x) ** 2 for x in kr.rest)
    p_f = c * bracket + c * c * r00 + c * (r01 + r10) + r11
    p_g = epsilon**2 * bracket
    return p_f, p_g


def alice_flag_series(determinant: complex, epsilon: float, rounds: int | None = None) -> float:
    """``2|det| sum_{R<rounds} eps^2 (1-eps^2)^(2R+1)``; infinite sum when ``rounds`` is None."""
    c = 1.0 - epsilon**2
    if rounds is None:
        s = epsilon**2 * c / (1.0 - c * c)
    else:
        s = epsilon**2 * c * (1.0 - c ** (2 * rounds)) / (1.0 - c * c)
    return 2.0 * abs(determinant) * s


def richardson_limit(epsilons: Sequence[float], values: Sequence[float]) -> float:
    """Extrapolate ``values(eps)`` to ``eps -> 0`` with a polynomial in ``eps^2``."""
    x = np.asarray(epsilons, dtype=float) ** 2
    y = np.asarray(values, dtype=float)
    coeffs = np.polyfit(x, y, len(x) - 1)
    return float(coeffs[-1])


# ---------------------------------------------------------------------------
# Monte Carlo trajectories

class SampleEstimate(NamedTuple):
    per_pair_mean_q: dict[str, float]
    per_pair_stderr: dict[str, float]
    trials: int
    seed: int


def sample_w_protocol(state: PureState, cfg: WProtocolConfig, trials: int, seed: int) -> SampleEstimate:
    """Sample protocol trajectories; trial ``i`` draws from ``SeedSequence(seed, spawn_key=(i,))``.

    Results depend only on ``(seed, trials)``, never on evaluation order.
    """
    state = _as_qubits(state).normalized()
    if state.n_parties != 3:
        raise ShapeError("sampling runs on exactly three parties")
    pairs = [(a, b) for i, a in enumerate(state.parties) for b in state.parties[i + 1:]]
    samples = {_pair_key(p): np.zeros(trials) for p in pairs}
    for trial in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))
        t = state.tensor
        for _ in range(cfg.max_rounds):
            results = flag_round(t, cfg.epsilon)
            probs = np.array([r.probability for r in results])
            r = results[rng.choice(len(results), p=probs / probs.sum())]
            n_flags = sum(r.flags)
            if n_flags == 0:
                t = r.block / sqrt(r.probability)
                continue
            if n_flags == 1:
                rest = tuple(q for q, g in zip(state.parties, r.flags) if not g)
                terminal = PureState.from_tensor(rest, r.block / sqrt(r.probability))
                samples[_pair_key(rest)][trial] = concurrence(terminal)
            break
    mean = {k: float(v.mean()) for k, v in samples.items()}
    err = {k: float(v.std(ddof=1) / sqrt(trials)) if trials > 1 else float("nan")
           for k, v in samples.items()}
    return SampleEstimate(mean, err, trials, seed)


# ---------------------------------------------------------------------------
# W-class symmetrization

def _single_party_filter(state: PureState, party: str, ratio: float, prune: float):
    s = apply_local_isometry(state, filter_isometry(party, ratio))
    f_out, g_out = measure_party(s, flag_projectors(party, 3), prune)
    return f_out, g_out


def symmetrize_w_class(params: WClassParams, prune: float = DEFAULT.prune) -> list[BranchTrace]:
    """Alice then Bob filter the ``|0>`` level to equalize the three amplitudes.

    Returns up to three branches: Alice flagged (B-C state), Bob flagged
    (A-C state), and both unflagged, which carries the symmetric state handed
    to the W protocol (status ``exhausted``).
    """
    a, b, g = params.alpha, params.beta, params.gamma
    state = params.state()
    leaves = []
    f_a, g_a = _single_party_filter(state, "A", min(a / g, 1.0), prune)
    step_a_g = (("A", G),)
    step_a_f = (("A", F),)
    if g_a.state is not None:
        bc = g_a.state.remove_party("A", 2)
        leaves.append(BranchTrace(History(suffix=(step_a_g,)), g_a.probability, bc,
                                  Status.SUCCESS, bc.parties))
    if f_a.state is None:
        return leaves
    s = f_a.state.restrict("A", 2)
    f_b, g_b = _single_party_filter(s, "B", min(b / g, 1.0), prune)
    if g_b.state is not None:
        ac = g_b.state.remove_party("B", 2)
        leaves.append(BranchTrace(History(suffix=(step_a_f, (("B", G),))),
                                  f_a.probability * g_b.probability, ac, Status.SUCCESS, ac.parties))
    if f_b.state is not None:
        sym = f_b.state.restrict("B", 2)
        leaves.append(BranchTrace(History(suffix=(step_a_f, (("B", F),))),
                                  f_a.probability * f_b.probability, sym, Status.EXHAUSTED))
    return leaves


def symmetric_expected_concurrence(state: PureState) -> float:
    """Small-epsilon W-protocol yield ``3|k01^2 - k00 k11|`` of a permutation-symmetric state."""
    k = KCoefficients.from_state(state)
    return 3.0 * abs(k.k01 * k.k10 - k.k00 * k.k11)


def random_distill_w_class(params: WClassParams, cfg: WProtocolConfig
                           ) -> tuple[list[BranchTrace], DistillReport]:
    """Symmetrize, then run the W protocol tree on the symmetric branch."""
    first = symmetrize_w_class(params, cfg.prune_threshold)
    leaves: list[BranchTrace] = []
    truncated = 0.0
    for leaf in first:
        if leaf.status is not Status.EXHAUSTED:
            leaves.append(leaf)
            continue
        sub, trunc = _run_tree(leaf.terminal_state, [cfg.epsilon] * cfg.max_rounds,
                               cfg.prune_threshold, weight=leaf.probability,
                               prefix=tuple(leaf.outcomes))
        leaves.extend(sub)
        truncated += trunc
    first_mass = fsum(leaf.probability for leaf in first)
    truncated += max(0.0, 1.0 - first_mass) if first_mass < 1.0 - 1e-12 else 0.0
    return leaves, build_report(leaves, truncated, [("A", "B"), ("A", "C"), ("B", "C")])


# ---------------------------------------------------------------------------
# finite-round schedule

class FiniteRoundSchedule(NamedTuple):
    epsilons: tuple[float, ...]
    success_probability: float
    dp_value: float


def optimal_flag_schedule(rounds: int) -> tuple[list[float], float]:
    """Backward induction for the per-round flag weight ``x = eps^2`` on a W state.

    With ``n`` rounds left, a round succeeds with ``2x(1-x)``, resets with
    ``(1-x)^2`` and aborts otherwise, so
    ``V(n) = max_x 2x(1-x) + (1-x)^2 V(n-1)``; the objective is a concave
    quadratic in ``x`` with maximizer ``(1-V)/(2-V)``.
    """
    if rounds < 1:
        raise ParameterError("need at least one round")
    value, xs = 0.0, []
    for _ in range(rounds):
        x = (1.0 - value) / (2.0 - value)
        value = 2 * x * (1 - x) + (1 - x) ** 2 * value
        xs.append(x)
    return xs[::-1], value


def finite_round_schedule(rounds: int) -> FiniteRoundSchedule:
    xs, value = optimal_flag_schedule(rounds)
    eps = tuple(sqrt(x) for x in xs)
    leaves, _ = run_w_protocol_tree(w_state(3), WProtocolConfig(0.5, rounds, 0.0), schedule=eps)
    success = fsum(leaf.probability for leaf in leaves
                   if leaf.status is Status.SUCCESS and concurrence(leaf.terminal_state) > 1 - 1e-9)
    return FiniteRoundSchedule(eps, success, value)


# ---------------------------------------------------------------------------
# Dicke states

def dicke_round(state: PureState, drop: int, epsilon: float,
                prune: float = DEFAULT.prune) -> list[BranchTrace]:
    """One W-protocol round that drops a ``|0>`` (``drop=0``) or a ``|1>`` (``drop=1``)."""
    if drop not in (0, 1):
        raise ParameterError("drop must be 0 or 1")
    if state.n_parties < 3 or any(d != 2 for d in state.dims):
        raise ShapeError("dicke_round needs at least three qubits")
    return w_protocol_round(state, epsilon, source=drop, prune=prune)


class Reachability(NamedTuple):
    reachable: bool
    moves: tuple[str, ...]
    printed_condition: bool


def printed_dicke_condition(m: int, n: int, m2: int, n2: int) -> bool:
    """``M' <= M`` and ``N' >= (M'-M)+N`` for the target or its bit-flip."""
    return m2 <= m and (n2 >= (m2 - m) + n or (m2 - n2) >= (m2 - m) + n)


def _dicke_moves(m: int, n: int):
    if m >= 3:
        if n < m - 1:
            yield "drop0", (m - 1, n)
        if n > 1:
            yield "drop1", (m - 1, n - 1)
    yield "flip", (m, m - n)


def dicke_reachable(m: int, n: int, m2: int, n2: int) -> Reachability:
    """Breadth-first search over drop-0, drop-1 and bit-flip moves between Dicke states."""
    for mm, nn in ((m, n), (m2, n2)):
        if not 0 < nn < mm:
            raise ParameterError(f"need 0 < N < M, got ({mm}, {nn})")
    start, goal = (m, n), (m2, n2)
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for move, nxt in _dicke_moves(*node):
            if nxt not in parent:
                parent[nxt] = (node, move)
                queue.append(nxt)
    printed = printed_dicke_condition(m, n, m2, n2)
    if goal not in parent:
        return Reachability(False, (), printed)
    moves = []
    node = goal
    while parent[node] is not None:
        node, move = parent[node]
        moves.append(move)
    return Reachability(True, tuple(reversed(moves)), printed)


def execute_dicke_moves(m: int, n: int, moves: Sequence[str], epsilon: float = 0.05) -> PureState:
    """Run a move sequence on the engine, following a single-flag branch at each drop."""
    state = dicke_state(m, n)
    for move in moves:
        if move == "flip":
            state = bit_flip_all(state)
            continue
        drop = {"drop0": 0, "drop1": 1}[move]
        singles = [leaf for leaf in dicke_round(state, drop, epsilon)
                   if leaf.status is Status.SUCCESS]
        if not singles:
            raise ArithmeticError(f"move {move} has no single-flag branch")
        state = singles[0].terminal_state
    return state


# ---------------------------------------------------------------------------
# two copies of W

class TwoCopyQuantities(NamedTuple):
    zeta: float
    e_rnd_bound: float
    e_sp_asym: float
    printed_form: float

    @property
    def advantage(self) -> float:
        return self.e_rnd_bound - self.e_sp_asym


def two_copy_quantities() -> TwoCopyQuantities:
    """Two-copy W bound: entropy of the spectrum ``{z, z, 1/2-z, 1/2-z}``.

    ``printed_form`` evaluates the displayed expression with a minus sign
    between the two logarithmic terms, kept for comparison.
    """
    zeta = (1.0 - sqrt(1.0 - (8.0 / 9.0) ** 2)) / 4.0
    half = 0.5 - zeta
    bound = entropy_of_spectrum([zeta, zeta, half, half])
    printed = -2.0 * (zeta * np.log2(zeta) - half * np.log2(half))
    return TwoCopyQuantities(zeta, bound, 2.0 * binary_entropy(1.0 / 3.0), float(printed))


def two_copy_w_state() -> PureState:
    """``W (x) W`` with each party's two qubits merged into one 4-level system."""
    w = w_state(3)
    return tensor_copies(w, w)


def two_copy_round(state: PureState, epsilon: float,
                   prune: float = DEFAULT.prune) -> list[BranchTrace]:
    """Each party leaks ``|00>`` into a flag level (dim 4 -> 5) and measures flag/no-flag."""
    if state.n_parties != 3 or state.dims != (4, 4, 4):
        raise ShapeError(f"two-copy round needs three 4-level parties, got dims {state.dims}")
    return w_protocol_round(state, epsilon, source=0, prune=prune)

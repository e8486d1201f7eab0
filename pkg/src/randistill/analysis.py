"""Closed-form quantities for W-class and GHZ-example states, the three-term gap
decomposition, and the min-cut assisted entropy."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb, sqrt
from typing import NamedTuple

import numpy as np

from .errors import ParameterError
from .measures import binary_entropy, entanglement_entropy, f_inverse
from .state import BipartiteCut, PureState, w_class_state


@dataclass(frozen=True)
class WClassParams:
    """Canonical ``alpha|100> + beta|010> + gamma|001> + delta|000>`` with
    ``gamma >= beta >= alpha > 0`` and ``delta >= 0``."""

    alpha: float
    beta: float
    gamma: float
    delta: float = 0.0

    def __post_init__(self):
        a, b, g, d = self.alpha, self.beta, self.gamma, self.delta
        if not a > 0 or d < 0:
            raise ParameterError("need alpha > 0 and delta >= 0")
        if not (g >= b - 1e-12 and b >= a - 1e-12):
            raise ParameterError(f"need gamma >= beta >= alpha, got {a}, {b}, {g}")
        if abs(a * a + b * b + g * g + d * d - 1.0) > 1e-12:
            raise ParameterError("W-class amplitudes must be normalized")

    @classmethod
    def with_auto_gamma(cls, alpha: float, beta: float, delta: float = 0.0) -> "WClassParams":
        rest = 1.0 - alpha**2 - beta**2 - delta**2
        if rest <= 0:
            raise ParameterError("alpha, beta, delta leave no weight for gamma")
        return cls(alpha, beta, sqrt(rest), delta)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "WClassParams":
        a, b, g, d = sample_w_class_params(rng, 1)
        return cls(float(a[0]), float(b[0]), float(g[0]), float(d[0]))

    def state(self, parties=None) -> PureState:
        return w_class_state(self.alpha, self.beta, self.gamma, self.delta, parties)


def sample_w_class_params(rng: np.random.Generator, size: int):
    """Vectorized draw of ordered W-class parameters.

    Squared amplitudes are uniform on the 3-simplex; the first three are sorted
    ascending and draws with ``alpha < 1e-9`` are redrawn.
    """
    out = np.empty((0, 4))
    while len(out) < size:
        w = rng.dirichlet(np.ones(4), size=size)
        w[:, :3].sort(axis=1)
        amps = np.sqrt(w)
        out = np.vstack([out, amps[amps[:, 0] >= 1e-9]])
    out = out[:size]
    # renormalize away rounding so WClassParams accepts every row
    out /= np.linalg.norm(out, axis=1, keepdims=True)
    return out[:, 0], out[:, 1], out[:, 2], out[:, 3]


def w_class_entropy_lambda(p: WClassParams) -> tuple[float, float]:
    """Smaller root of ``l^2 - l + alpha^2(beta^2+gamma^2) = 0`` and ``H2`` of it."""
    c = p.alpha**2 * (p.beta**2 + p.gamma**2)
    disc = 1.0 - 4.0 * c
    if disc < -1e-15:
        raise ArithmeticError(f"negative discriminant {disc}")
    lam = 2.0 * c / (1.0 + sqrt(max(disc, 0.0)))
    return lam, binary_entropy(min(lam, 1.0))


def w_class_concurrences(p: WClassParams) -> tuple[float, float, float]:
    a, b, g = p.alpha, p.beta, p.gamma
    return (2 * a * sqrt(b * b + g * g),
            2 * b * sqrt(a * a + g * g),
            2 * g * sqrt(a * a + b * b))


def q_rnd_lower_bound(p: WClassParams) -> float:
    return _q_rnd(p.alpha, p.beta, p.gamma)


def _q_rnd(a, b, g):
    return 2 * (1 - a**2 / g**2) * b * g + 2 * a**2 + a**2 * b**2 / g**2


class Lemma2Decomposition(NamedTuple):
    term1: float
    term2: float
    term3: float
    gap: float

    @property
    def total(self) -> float:
        return self.term1 + self.term2 + self.term3


def lemma2_terms(a, b, g):
    """The three nonnegative summands of ``q_rnd^2 - q_B^2`` (array-friendly)."""
    r = b / g
    term1 = a**2 * 4 * b**2 * (g / b - 1) * (2 - r)
    term2 = a**4 * (r**2 - 2 * r) ** 2
    term3 = a**4 * 4 * (1 - r) ** 2
    return term1, term2, term3


def lemma2_check(p: WClassParams, tol: float = 1e-10) -> Lemma2Decomposition:
    t1, t2, t3 = lemma2_terms(p.alpha, p.beta, p.gamma)
    q_b = w_class_concurrences(p)[1]
    gap = q_rnd_lower_bound(p) ** 2 - q_b**2
    if abs(gap - (t1 + t2 + t3)) > tol:
        raise ArithmeticError(f"decomposition mismatch: {gap} vs {t1 + t2 + t3}")
    if not gap > 0:
        raise ArithmeticError(f"non-positive gap {gap}")
    return Lemma2Decomposition(t1, t2, t3, gap)


class GHZExampleResult(NamedTuple):
    alpha2: float
    epsilon: float
    q_rnd: float
    q_threshold: float
    e_sp: float
    advantage: bool


def ghz_example_analysis(alpha: float) -> GHZExampleResult:
    """Random-distillation advantage test for ``alpha(|100>+|010>+|001>) + eps|111>``."""
    a2 = alpha * alpha
    if not 0.0 < a2 <= 1.0 / 3.0 + 1e-15:
        raise ParameterError(f"need 0 < alpha^2 <= 1/3, got {a2}")
    a2 = min(a2, 1.0 / 3.0)
    eps2 = 1.0 - 3.0 * a2
    e_sp = binary_entropy(a2 + eps2)
    q_thr = sqrt(8.0 * a2 * (1.0 - 2.0 * a2))
    q_rnd = 3.0 * a2
    return GHZExampleResult(a2, sqrt(eps2), q_rnd, q_thr, e_sp, q_rnd > q_thr)


def ghz_threshold_numeric(alpha: float) -> float:
    """Same threshold through the bisection inverse of ``f`` instead of the closed form."""
    return f_inverse(ghz_example_analysis(alpha).e_sp)


def ghz_advantage_boundary(lo: float = 0.25, hi: float = 1.0 / 3.0, tol: float = 1e-14) -> float:
    """Bisect on ``alpha^2`` for the sign change of ``q_rnd - q_threshold``."""
    def gap(a2):
        r = ghz_example_analysis(sqrt(a2))
        return r.q_rnd - r.q_threshold

    if not gap(lo) < 0 < gap(hi):
        raise ArithmeticError("bracket does not straddle the advantage boundary")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def assisted_entropy_mincut(state: PureState, i: str, j: str) -> float:
    """``min_T min{S(I T), S(J T-bar)}`` over all splits of the other parties."""
    state.axis(i), state.axis(j)
    if i == j:
        raise ParameterError("need two distinct parties")
    others = [p for p in state.parties if p not in (i, j)]
    best = np.inf
    for r in range(len(others) + 1):
        for t in combinations(others, r):
            side_i = {i, *t}
            side_j = set(state.parties) - side_i
            s_i = entanglement_entropy(state, BipartiteCut.of(state, side_i))
            s_j = entanglement_entropy(state, BipartiteCut.of(state, side_j))
            best = min(best, s_i, s_j)
    return float(best)


def e_sp_asymptotic(state: PureState) -> tuple[tuple[str, str], float]:
    """Best pair for predetermined-party distillation and its min-cut rate."""
    if state.n_parties < 2:
        raise ParameterError("need at least two parties")
    best_pair, best = None, -np.inf
    for pair in combinations(state.parties, 2):
        rate = assisted_entropy_mincut(state, *pair)
        if rate > best + 1e-12:
            best_pair, best = pair, rate
    return best_pair, float(best)


def dicke_printed_single_party_entropy(m: int, n: int) -> float:
    """``H2(1 / C(M, N))`` as printed for a single party of a Dicke state."""
    return binary_entropy(1.0 / comb(m, n))


def dicke_single_party_entropy(m: int, n: int) -> float:
    """Exact single-party entropy of a Dicke state: ``H2(N/M)``."""
    return binary_entropy(n / m)


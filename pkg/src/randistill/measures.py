"""Entanglement quantities: entropies, concurrence, the entropy/concurrence
bridge ``f`` and its inverse, and the three-tangle."""
from __future__ import annotations

from dataclasses import dataclass
from math import log2

import numpy as np
from scipy.optimize import bisect

from .config import DEFAULT
from .errors import ParameterError, ShapeError
from .state import BipartiteCut, DensityMatrix, PureState, schmidt_coefficients


@dataclass(frozen=True)
class MeasureConfig:
    entropy_log_base: int = 2
    root_find_tolerance: float = DEFAULT.root_find

    def __post_init__(self):
        if self.entropy_log_base != 2:
            raise ParameterError("entropies are always in bits")
        if self.root_find_tolerance <= 0:
            raise ParameterError("root_find_tolerance must be positive")


def _check_unit(x: float, name: str) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1], got {x}")
    return x


def binary_entropy(x: float) -> float:
    x = _check_unit(x, "probability")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * log2(x) - (1.0 - x) * log2(1.0 - x)


def entropy_of_spectrum(values, floor: float = DEFAULT.eigen_floor) -> float:
    """Shannon entropy in bits of a probability vector; entries below ``floor`` count as zero."""
    p = np.asarray(values, dtype=float)
    p = p[p > floor]
    return float(-np.sum(p * np.log2(p)))


def von_neumann_entropy(rho: DensityMatrix | np.ndarray) -> float:
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return entropy_of_spectrum(np.linalg.eigvalsh(m))


def entanglement_entropy(state: PureState, cut: BipartiteCut) -> float:
    lam = schmidt_coefficients(state, cut)
    return entropy_of_spectrum(lam**2)


def single_party_entropy(state: PureState, party: str) -> float:
    return entanglement_entropy(state, BipartiteCut.of(state, [party]))


def concurrence(state: PureState) -> float:
    """``2|c01 c10 - c00 c11|`` for a two-qubit pure state."""
    if state.n_parties != 2 or state.dims != (2, 2):
        raise ShapeError(f"concurrence needs two qubits, got dims {state.dims}")
    c = state.tensor
    return float(2.0 * abs(c[0, 1] * c[1, 0] - c[0, 0] * c[1, 1]))


def _f_arg(q):
    # (1 - sqrt(1 - q^2))/2 without cancellation at small q
    return q * q / (2.0 * (1.0 + np.sqrt(np.clip(1.0 - q * q, 0.0, None))))


def f_of_q(q: float) -> float:
    """Entanglement entropy of a two-qubit pure state with concurrence ``q``."""
    q = _check_unit(q, "concurrence")
    return binary_entropy(float(_f_arg(q)))


def f_of_q_array(q) -> np.ndarray:
    """Vectorized :func:`f_of_q` (no domain checks)."""
    x = _f_arg(np.asarray(q, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -x * np.log2(x) - (1 - x) * np.log2(1 - x)
    return np.where((x <= 0) | (x >= 1), 0.0, h)


def f_inverse(s: float, cfg: MeasureConfig = MeasureConfig()) -> float:
    s = _check_unit(s, "entropy")
    if s == 0.0:
        return 0.0
    if s == 1.0:
        return 1.0
    return float(bisect(lambda q: f_of_q(q) - s, 0.0, 1.0,
                        xtol=cfg.root_find_tolerance, rtol=4 * np.finfo(float).eps, maxiter=200))


def three_tangle(state: PureState) -> float:
    """Coffman-Kundu-Wootters three-tangle ``4|d1 - 2 d2 + 4 d3|``."""
    if state.dims != (2, 2, 2):
        raise ShapeError(f"three-tangle needs three qubits, got dims {state.dims}")
    a = state.tensor
    a000, a001, a010, a011 = a[0, 0, 0], a[0, 0, 1], a[0, 1, 0], a[0, 1, 1]
    a100, a101, a110, a111 = a[1, 0, 0], a[1, 0, 1], a[1, 1, 0], a[1, 1, 1]
    d1 = (a000**2 * a111**2 + a001**2 * a110**2
          + a010**2 * a101**2 + a100**2 * a011**2)
    d2 = (a000 * a111 * a011 * a100 + a000 * a111 * a101 * a010
          + a000 * a111 * a110 * a001 + a011 * a100 * a101 * a010
          + a011 * a100 * a110 * a001 + a101 * a010 * a110 * a001)
    d3 = a000 * a110 * a101 * a011 + a111 * a001 * a010 * a100
    return float(4.0 * abs(d1 - 2.0 * d2 + 4.0 * d3))


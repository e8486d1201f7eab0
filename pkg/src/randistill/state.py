"""Exact pure-state engine for a handful of parties.

Amplitudes are stored as a flat complex vector in mixed-radix order with the
first party most significant, i.e. ``amps.reshape(dims)`` is C-ordered and
axis ``k`` belongs to ``parties[k]``.
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field
from itertools import combinations
from math import comb, prod, sqrt
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .config import DEFAULT
from .errors import ContractError, ParameterError, ShapeError

MAX_DIM = 5


def default_labels(m: int) -> tuple[str, ...]:
    return tuple(string.ascii_uppercase[:m])


@dataclass(frozen=True, eq=False)
class PureState:
    parties: tuple[str, ...]
    dims: tuple[int, ...]
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        parties = tuple(self.parties)
        dims = tuple(int(d) for d in self.dims)
        if len(parties) != len(dims):
            raise ShapeError("one dimension per party required")
        if len(set(parties)) != len(parties):
            raise ParameterError(f"duplicate party labels {parties}")
        if any(d < 2 or d > MAX_DIM for d in dims):
            raise ShapeError(f"local dimensions must lie in [2, {MAX_DIM}], got {dims}")
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if amps.size != prod(dims):
            raise ShapeError(f"{amps.size} amplitudes for dims {dims}")
        amps.setflags(write=False)
        object.__setattr__(self, "parties", parties)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_tensor(cls, parties: Sequence[str], tensor: np.ndarray) -> "PureState":
        return cls(tuple(parties), tensor.shape, tensor.reshape(-1))

    @classmethod
    def _trusted(cls, parties: tuple[str, ...], tensor: np.ndarray) -> "PureState":
        # skips validation; callers guarantee labels/dims already checked
        obj = object.__new__(cls)
        amps = np.array(tensor, dtype=complex).reshape(-1)
        amps.setflags(write=False)
        object.__setattr__(obj, "parties", parties)
        object.__setattr__(obj, "dims", tensor.shape)
        object.__setattr__(obj, "amps", amps)
        return obj

    @property
    def tensor(self) -> np.ndarray:
        return self.amps.reshape(self.dims)

    @property
    def n_parties(self) -> int:
        return len(self.parties)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def axis(self, party: str) -> int:
        try:
            return self.parties.index(party)
        except ValueError:
            raise ParameterError(f"party {party!r} not in {self.parties}") from None

    def normalized(self) -> "PureState":
        n = self.norm
        if n == 0.0 or not np.isfinite(n):
            raise ParameterError("state cannot be normalized")
        return PureState(self.parties, self.dims, self.amps / n)

    def amplitude(self, levels: Sequence[int]) -> complex:
        return complex(self.tensor[tuple(levels)])

    def restrict(self, party: str, keep: int, tol: float = DEFAULT.normalization) -> "PureState":
        """Drop the levels ``>= keep`` of one party; they must carry no amplitude."""
        k = self.axis(party)
        t = self.tensor
        tail = np.take(t, range(keep, self.dims[k]), axis=k)
        if tail.size and np.linalg.norm(tail) > tol:
            raise ContractError(f"party {party} has amplitude above level {keep - 1}")
        return PureState.from_tensor(self.parties, np.take(t, range(keep), axis=k))

    def restrict_all(self, keep: int, tol: float = DEFAULT.normalization) -> "PureState":
        s = self
        for p, d in zip(self.parties, self.dims):
            if d > keep:
                s = s.restrict(p, keep, tol)
        return s

    def remove_party(self, party: str, level: int, tol: float = DEFAULT.normalization) -> "PureState":
        """Split off a party known to sit in ``|level>``; the rest is renormalized."""
        k = self.axis(party)
        t = self.tensor
        rest = np.delete(t, level, axis=k)
        if rest.size and np.linalg.norm(rest) > tol:
            raise ContractError(f"party {party} is not in the product state |{level}>")
        parties = self.parties[:k] + self.parties[k + 1:]
        if not parties:
            raise ShapeError("cannot remove the last party")
        return PureState.from_tensor(parties, np.take(t, level, axis=k)).normalized()

    def __repr__(self):
        return f"PureState(parties={self.parties}, dims={self.dims})"


@dataclass(frozen=True, eq=False)
class LocalIsometry:
    party: str
    entries: np.ndarray = field(repr=False)
    tol: float = field(default=DEFAULT.isometry, repr=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] < m.shape[1]:
            raise ShapeError(f"isometry must be out_dim x in_dim with out >= in, got {m.shape}")
        if np.abs(m.conj().T @ m - np.eye(m.shape[1])).max() > self.tol:
            raise ContractError("isometry columns are not orthonormal")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def in_dim(self) -> int:
        return self.entries.shape[1]

    @property
    def out_dim(self) -> int:
        return self.entries.shape[0]


def epsilon_isometry(party: str, epsilon: float, flipped: bool = False, in_dim: int = 2) -> LocalIsometry:
    """Leak a fraction of ``|0>`` (or ``|1>`` when flipped) into a fresh flag level.

    ``|0> -> sqrt(1-eps^2)|0> + eps|flag>`` with all other levels fixed; the flag
    is level ``in_dim``.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ParameterError(f"epsilon must lie in [0, 1], got {epsilon}")
    src = 1 if flipped else 0
    m = np.zeros((in_dim + 1, in_dim))
    m[:in_dim, :in_dim] = np.eye(in_dim)
    m[src, src] = sqrt(1.0 - epsilon**2)
    m[in_dim, src] = epsilon
    return LocalIsometry(party, m)


def filter_isometry(party: str, ratio: float) -> LocalIsometry:
    """``|0> -> r|0> + sqrt(1-r^2)|2>``: damps the ``|0>`` branch by ``r``."""
    if not 0.0 <= ratio <= 1.0:
        raise ParameterError(f"filter ratio must lie in [0, 1], got {ratio}")
    return epsilon_isometry(party, sqrt(max(0.0, 1.0 - ratio**2)))


def identity_isometry(party: str, dim: int) -> LocalIsometry:
    return LocalIsometry(party, np.eye(dim))


@dataclass(frozen=True, eq=False)
class ProjectorSet:
    party: str
    projectors: tuple[np.ndarray, ...] = field(repr=False)
    labels: tuple[str, ...] = ()
    tol: float = field(default=DEFAULT.projector, repr=False)

    def __post_init__(self):
        ps = tuple(np.array(p, dtype=complex) for p in self.projectors)
        if not ps:
            raise ContractError("empty projector set")
        d = ps[0].shape[0]
        for p in ps:
            if p.shape != (d, d):
                raise ShapeError("projectors must share one square shape")
            if np.abs(p @ p - p).max() > self.tol or np.abs(p - p.conj().T).max() > self.tol:
                raise ContractError("not an orthogonal projector")
        if np.abs(sum(ps) - np.eye(d)).max() > self.tol:
            raise ContractError("projectors do not sum to the identity")
        labels = tuple(self.labels) or tuple(str(i) for i in range(len(ps)))
        if len(labels) != len(ps):
            raise ParameterError("one label per projector required")
        for p in ps:
            p.setflags(write=False)
        object.__setattr__(self, "projectors", ps)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]


def flag_projectors(party: str, dim: int = 3) -> ProjectorSet:
    """Two-outcome measurement: F onto levels ``0..dim-2``, G onto the top level."""
    f = np.diag([1.0] * (dim - 1) + [0.0])
    g = np.diag([0.0] * (dim - 1) + [1.0])
    return ProjectorSet(party, (f, g), ("F", "G"))


def computational_projectors(party: str, dim: int = 2) -> ProjectorSet:
    return ProjectorSet(party, tuple(np.diag(np.eye(dim)[i]) for i in range(dim)),
                        tuple(str(i) for i in range(dim)))


@dataclass(frozen=True)
class BipartiteCut:
    side_a: frozenset
    side_b: frozenset

    def __post_init__(self):
        a, b = frozenset(self.side_a), frozenset(self.side_b)
        if not a or not b:
            raise ParameterError("both sides of a cut must be nonempty")
        if a & b:
            raise ParameterError("cut sides overlap")
        object.__setattr__(self, "side_a", a)
        object.__setattr__(self, "side_b", b)

    @classmethod
    def of(cls, state: PureState, side_a: Iterable[str]) -> "BipartiteCut":
        a = frozenset(side_a)
        for p in a:
            state.axis(p)
        return cls(a, frozenset(state.parties) - a)

    def check(self, state: PureState) -> None:
        if self.side_a | self.side_b != frozenset(state.parties):
            raise ParameterError("cut does not cover the state's parties")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    parties: tuple[str, ...]
    dims: tuple[int, ...]
    entries: np.ndarray = field(repr=False)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


class Outcome(NamedTuple):
    index: int
    label: str
    probability: float
    state: PureState | None


# ---------------------------------------------------------------------------
# state families

def basis_state(bits: str | Sequence[int], parties: Sequence[str] | None = None) -> PureState:
    levels = [int(b) for b in bits]
    if any(b not in (0, 1) for b in levels) or not levels:
        raise ParameterError(f"bitstring must be a nonempty string of 0/1, got {bits!r}")
    t = np.zeros((2,) * len(levels), dtype=complex)
    t[tuple(levels)] = 1.0
    return PureState.from_tensor(parties or default_labels(len(levels)), t)


def _from_weights(m: int, weights: dict[int, complex], parties) -> PureState:
    amps = np.zeros(2**m, dtype=complex)
    for idx, w in weights.items():
        amps[idx] = w
    return PureState(tuple(parties or default_labels(m)), (2,) * m, amps).normalized()


def epr_state(parties: Sequence[str] = ("A", "B")) -> PureState:
    """``(|00> + |11>)/sqrt(2)`` on a pair."""
    if len(parties) != 2:
        raise ParameterError("EPR state lives on exactly two parties")
    return _from_weights(2, {0: 1.0, 3: 1.0}, parties)


def dicke_state(m: int, n: int, parties: Sequence[str] | None = None) -> PureState:
    """Equal superposition of all ``m``-bit strings of Hamming weight ``n``."""
    if not 0 < n < m:
        raise ParameterError(f"Dicke state needs 0 < N < M, got M={m}, N={n}")
    amps = np.zeros(2**m, dtype=complex)
    for ones in combinations(range(m), n):
        amps[sum(1 << (m - 1 - k) for k in ones)] = 1.0
    amps /= sqrt(comb(m, n))
    return PureState(tuple(parties or default_labels(m)), (2,) * m, amps)


def w_state(m: int = 3, parties: Sequence[str] | None = None) -> PureState:
    if m < 2:
        raise ParameterError("W state needs at least two parties")
    return dicke_state(m, 1, parties)


def ghz_state(m: int = 3, parties: Sequence[str] | None = None) -> PureState:
    if m < 2:
        raise ParameterError("GHZ state needs at least two parties")
    return _from_weights(m, {0: 1.0, 2**m - 1: 1.0}, parties)


def w_class_state(alpha: float, beta: float, gamma: float, delta: float = 0.0,
                  parties: Sequence[str] | None = None) -> PureState:
    """``alpha|100> + beta|010> + gamma|001> + delta|000>`` (normalized)."""
    if min(alpha, beta, gamma) <= 0 or delta < 0:
        raise ParameterError("W-class needs alpha, beta, gamma > 0 and delta >= 0")
    return _from_weights(3, {4: alpha, 2: beta, 1: gamma, 0: delta}, parties)


def ghz_example_state(alpha: float, parties: Sequence[str] | None = None) -> PureState:
    """``alpha(|100>+|010>+|001>) + eps|111>`` with ``eps = sqrt(1 - 3 alpha^2)``."""
    a2 = alpha * alpha
    if alpha <= 0 or a2 > 1.0 / 3.0 + 1e-15:
        raise ParameterError(f"need 0 < alpha^2 <= 1/3, got alpha^2={a2}")
    eps = sqrt(max(0.0, 1.0 - 3.0 * a2))
    return _from_weights(3, {4: alpha, 2: alpha, 1: alpha, 7: eps}, parties)


_FAMILIES = {
    "basis": basis_state,
    "epr": epr_state,
    "w": w_state,
    "ghz": ghz_state,
    "dicke": dicke_state,
    "w_class": w_class_state,
    "ghz_example": ghz_example_state,
}


def make_state(family: str, *args, **kwargs) -> PureState:
    """Build a named family, e.g. ``make_state("dicke", 4, 2)``."""
    try:
        builder = _FAMILIES[family.lower().replace("-", "_")]
    except KeyError:
        raise ParameterError(f"unknown state family {family!r}") from None
    try:
        return builder(*args, **kwargs)
    except TypeError as exc:
        raise ParameterError(str(exc)) from exc


def random_state(dims: Sequence[int], rng: np.random.Generator,
                 parties: Sequence[str] | None = None) -> PureState:
    """Haar-random pure state: i.i.d. complex Gaussian amplitudes, normalized."""
    n = prod(dims)
    amps = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return PureState(tuple(parties or default_labels(len(dims))), tuple(dims), amps).normalized()


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def tensor_copies(s1: PureState, s2: PureState) -> PureState:
    """Two copies held party-wise: party P's local index is ``2*i1 + i2``-style mixed radix."""
    if s1.parties != s2.parties:
        raise ShapeError("copies must share party labels")
    m = s1.n_parties
    t = np.multiply.outer(s1.tensor, s2.tensor)
    order = [ax for k in range(m) for ax in (k, m + k)]
    t = t.transpose(order).reshape([d1 * d2 for d1, d2 in zip(s1.dims, s2.dims)])
    return PureState.from_tensor(s1.parties, t)


# ---------------------------------------------------------------------------
# operations

def _apply_matrix(tensor: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(matrix, tensor, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def apply_local_isometry(state: PureState, iso: LocalIsometry) -> PureState:
    k = state.axis(iso.party)
    if state.dims[k] != iso.in_dim:
        raise ShapeError(f"party {iso.party} has dim {state.dims[k]}, isometry expects {iso.in_dim}")
    return PureState.from_tensor(state.parties, _apply_matrix(state.tensor, iso.entries, k))


def measure_party(state: PureState, ps: ProjectorSet,
                  prune: float = DEFAULT.prune) -> list[Outcome]:
    """Projective measurement on one party.

    Every outcome is listed; those with probability below ``prune`` carry
    ``state=None``. Post-measurement states keep the party's dimension.
    """
    k = state.axis(ps.party)
    if state.dims[k] != ps.dim:
        raise ShapeError(f"party {ps.party} has dim {state.dims[k]}, projectors act on {ps.dim}")
    out = []
    for i, (label, proj) in enumerate(zip(ps.labels, ps.projectors)):
        t = _apply_matrix(state.tensor, proj, k)
        p = float(np.vdot(t, t).real)
        post = PureState.from_tensor(state.parties, t / sqrt(p)) if p >= prune else None
        out.append(Outcome(i, label, p, post))
    return out


def _split(state: PureState, keep: Iterable[str]) -> tuple[np.ndarray, list[int], list[int]]:
    keep = set(keep)
    ka = [k for k, p in enumerate(state.parties) if p in keep]
    if len(ka) != len(keep):
        missing = keep - set(state.parties)
        raise ParameterError(f"unknown parties {sorted(missing)}")
    if not ka or len(ka) == state.n_parties:
        raise ParameterError("keep must be a nonempty proper subset of the parties")
    rest = [k for k in range(state.n_parties) if k not in ka]
    dk = prod(state.dims[k] for k in ka)
    mat = state.tensor.transpose(ka + rest).reshape(dk, -1)
    return mat, ka, rest


def reduced_density(state: PureState, keep: Iterable[str]) -> DensityMatrix:
    """Partial trace over every party not in ``keep`` (kept in state order)."""
    mat, ka, _ = _split(state, keep)
    rho = mat @ mat.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(tuple(state.parties[k] for k in ka), tuple(state.dims[k] for k in ka), rho)


def schmidt_coefficients(state: PureState, cut: BipartiteCut) -> np.ndarray:
    cut.check(state)
    mat, _, _ = _split(state, cut.side_a)
    return np.linalg.svd(mat, compute_uv=False)


def bit_flip_all(state: PureState) -> PureState:
    """Apply X on every qubit: amplitude of ``s`` moves to its complement."""
    if any(d != 2 for d in state.dims):
        raise ShapeError("bit flip needs all parties to be qubits")
    return PureState.from_tensor(state.parties, np.flip(state.tensor))


def overlap(s1: PureState, s2: PureState) -> complex:
    if s1.parties != s2.parties or s1.dims != s2.dims:
        raise ShapeError("overlap needs identical parties and dims")
    return complex(np.vdot(s1.amps, s2.amps))


def permute_parties(state: PureState, order: Sequence[int]) -> PureState:
    """Move the subsystem held at position ``order[k]`` to position ``k``; labels stay put."""
    t = state.tensor.transpose(order)
    return PureState.from_tensor(state.parties, np.ascontiguousarray(t))


def apply_local_unitary(state: PureState, party: str, u: np.ndarray) -> PureState:
    return apply_local_isometry(state, LocalIsometry(party, u, tol=1e-10))

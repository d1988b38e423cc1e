"""Fock-space bookkeeping for n photons in nD modes.

Convention: an input creation operator evolves as ``a_p^dag -> sum_s U[s, p] c_s^dag``,
so column ``p`` of ``U`` lists where input mode ``p`` goes. Equivalently the
output annihilators expand as ``c_s = sum_p U[s, p] a_p``.

Bosonic amplitudes are permanents of ``U[out, in]`` (rows and columns repeated
by occupation), fermionic amplitudes are determinants with both mode lists in
strictly increasing order.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    ArityError,
    DimensionError,
    ShapeError,
    StatisticsError,
    UnitarityError,
)

UNITARITY_TOL = 1e-10
AMPLITUDE_REL_ZERO = 1e-9
PROBABILITY_ZERO = 1e-18
NORM_TOL = 1e-9

Pattern = tuple[int, ...]


class Statistics(str, Enum):
    BOSON = "boson"
    FERMION = "fermion"


def as_statistics(value: Statistics | str) -> Statistics:
    try:
        return Statistics(value)
    except ValueError:
        raise StatisticsError(f"unknown statistics {value!r}") from None


@dataclass(frozen=True, eq=False)
class Unitary:
    """A validated mode transformation; construction checks unitarity once."""

    matrix: np.ndarray
    tol: float = UNITARITY_TOL

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"unitary must be square, got shape {m.shape}")
        dev = float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])), initial=0.0))
        if dev > self.tol:
            raise UnitarityError(f"||U^dag U - I||_max = {dev:.3e} exceeds {self.tol:.0e}", dev)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, dim: int) -> Unitary:
        return cls(np.eye(dim))

    def adjoint(self) -> Unitary:
        return Unitary(self.matrix.conj().T)

    def __matmul__(self, other: Unitary) -> Unitary:
        return Unitary(self.matrix @ as_unitary(other).matrix)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def as_unitary(u) -> Unitary:
    return u if isinstance(u, Unitary) else Unitary(u)


@dataclass(frozen=True)
class FockState:
    """Occupied modes of an n-photon basis state, kept in canonical sorted order."""

    modes: tuple[int, ...]
    statistics: Statistics = Statistics.BOSON

    def __post_init__(self):
        stats = as_statistics(self.statistics)
        modes = tuple(sorted(int(m) for m in self.modes))
        if any(m < 0 for m in modes):
            raise DimensionError(f"negative mode index in {modes}")
        if stats is Statistics.FERMION and len(set(modes)) != len(modes):
            raise StatisticsError(f"fermionic state repeats a mode: {modes}")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "statistics", stats)

    @property
    def n(self) -> int:
        return len(self.modes)


def multiplicities(pattern: Iterable[int]) -> Counter:
    return Counter(pattern)


def canonical_pattern(modes: Iterable[int], statistics=Statistics.BOSON) -> Pattern:
    """Sort a click pattern and check it is allowed for the given statistics."""
    pattern = tuple(sorted(int(m) for m in modes))
    if as_statistics(statistics) is Statistics.FERMION and len(set(pattern)) != len(pattern):
        raise StatisticsError(f"fermionic pattern repeats a detector: {pattern}")
    return pattern


def _occupation_factorial(pattern: Pattern) -> int:
    return math.prod(math.factorial(k) for k in Counter(pattern).values())


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized superposition of n-photon Fock states.

    ``amplitudes`` maps canonical (sorted) mode tuples to complex amplitudes.
    Fermionic amplitudes refer to strictly increasing mode order.
    """

    amplitudes: Mapping[Pattern, complex]
    mode_count: int
    statistics: Statistics = Statistics.BOSON
    photon_number: int = field(init=False)

    def __post_init__(self):
        stats = as_statistics(self.statistics)
        object.__setattr__(self, "statistics", stats)
        amps: dict[Pattern, complex] = {}
        for key, amp in self.amplitudes.items():
            modes = FockState(tuple(key), stats).modes
            if modes and modes[-1] >= self.mode_count:
                raise DimensionError(f"mode {modes[-1]} outside {self.mode_count} modes")
            amps[modes] = amps.get(modes, 0j) + complex(amp)
        if not amps:
            raise ValueError("state has no amplitudes")
        sizes = {len(k) for k in amps}
        if len(sizes) != 1:
            raise ArityError(f"mixed photon numbers {sorted(sizes)}")
        peak = max(abs(a) for a in amps.values())
        amps = {k: a for k, a in sorted(amps.items()) if abs(a) > AMPLITUDE_REL_ZERO * peak}
        norm = math.sqrt(sum(abs(a) ** 2 for a in amps.values()))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm:.12f} differs from 1")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "photon_number", sizes.pop())

    @classmethod
    def from_amplitudes(cls, amplitudes, mode_count, statistics=Statistics.BOSON, normalize=True):
        amps = dict(amplitudes)
        if normalize:
            norm = math.sqrt(sum(abs(a) ** 2 for a in amps.values()))
            amps = {k: a / norm for k, a in amps.items()}
        return cls(amps, mode_count, statistics)

    @classmethod
    def basis(cls, state: FockState | Sequence[int], mode_count: int, statistics=None) -> StateVector:
        if not isinstance(state, FockState):
            state = FockState(tuple(state), statistics or Statistics.BOSON)
        return cls({state.modes: 1.0}, mode_count, state.statistics)

    def fock_states(self) -> list[FockState]:
        return [FockState(k, self.statistics) for k in self.amplitudes]

    def inner(self, other: StateVector) -> complex:
        """<self|other>."""
        return sum(
            (np.conj(a) * other.amplitudes.get(k, 0.0) for k, a in self.amplitudes.items()),
            0j,
        )

    def __len__(self):
        return len(self.amplitudes)


def apply_unitary_to_creation(u, p: int) -> np.ndarray:
    """Output-mode coefficients of the evolved creation operator a_p^dag."""
    u = as_unitary(u)
    if not 0 <= p < u.dim:
        raise DimensionError(f"mode {p} outside a {u.dim}-mode unitary")
    return u.matrix[:, p].copy()


def _permanent_brute(m: np.ndarray) -> complex:
    k = m.shape[0]
    if k == 0:
        return 1.0 + 0j
    if k == 1:
        return complex(m[0, 0])
    if k == 2:
        return complex(m[0, 0] * m[1, 1] + m[0, 1] * m[1, 0])
    return complex(
        sum(math.prod(m[i, s[i]] for i in range(k)) for s in itertools.permutations(range(k)))
    )


def permanent(m) -> complex:
    """Permanent of a square matrix.

    Brute force up to 3x3, otherwise Ryser's inclusion-exclusion formula walked
    in Gray-code order so each subset update costs one column add.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"permanent needs a square matrix, got shape {m.shape}")
    k = m.shape[0]
    if k <= 3:
        return _permanent_brute(m)
    row_sums = np.zeros(k, dtype=complex)
    total = 0j
    in_subset = np.zeros(k, dtype=bool)
    size = 0
    gray = 0
    for i in range(1, 2**k):
        new_gray = i ^ (i >> 1)
        j = (new_gray ^ gray).bit_length() - 1
        gray = new_gray
        if in_subset[j]:
            row_sums -= m[:, j]
            size -= 1
        else:
            row_sums += m[:, j]
            size += 1
        in_subset[j] = not in_subset[j]
        total += (-1) ** size * np.prod(row_sums)
    return complex((-1) ** k * total)


_SUBSET_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _subsets(k: int) -> tuple[np.ndarray, np.ndarray]:
    if k not in _SUBSET_CACHE:
        masks = ((np.arange(1, 2**k)[:, None] >> np.arange(k)) & 1).astype(float)
        signs = (-1.0) ** (k - masks.sum(axis=1))
        _SUBSET_CACHE[k] = (masks, signs)
    return _SUBSET_CACHE[k]


def permanents(mats: np.ndarray, chunk: int = 1 << 15) -> np.ndarray:
    """Vectorized Ryser permanents of a stack of k x k matrices, shape (..., k, k)."""
    mats = np.asarray(mats, dtype=complex)
    k = mats.shape[-1]
    lead = mats.shape[:-2]
    flat = mats.reshape(-1, k, k)
    if k == 0:
        return np.ones(lead, dtype=complex)
    if k == 1:
        return flat[:, 0, 0].reshape(lead)
    if k == 2:
        return (flat[:, 0, 0] * flat[:, 1, 1] + flat[:, 0, 1] * flat[:, 1, 0]).reshape(lead)
    masks, signs = _subsets(k)
    out = np.empty(flat.shape[0], dtype=complex)
    for start in range(0, flat.shape[0], chunk):
        block = flat[start : start + chunk]
        row_sums = block @ masks.T  # (b, k, 2^k - 1)
        out[start : start + chunk] = np.prod(row_sums, axis=1) @ signs
    return out.reshape(lead)


def _check_pattern(pattern: Pattern, stats: Statistics, dim: int, what: str) -> Pattern:
    pattern = tuple(sorted(int(m) for m in pattern))
    if pattern and (pattern[0] < 0 or pattern[-1] >= dim):
        raise DimensionError(f"{what} {pattern} references a mode outside {dim} modes")
    if stats is Statistics.FERMION and len(set(pattern)) != len(pattern):
        raise StatisticsError(f"fermionic {what} repeats a mode: {pattern}")
    return pattern


def outcome_amplitude(u, input_modes, output_modes, statistics=Statistics.BOSON) -> complex:
    """Amplitude <output| U |input> between two n-photon Fock states."""
    u = as_unitary(u)
    stats = as_statistics(statistics)
    if isinstance(input_modes, FockState):
        input_modes = input_modes.modes
    inp = _check_pattern(input_modes, stats, u.dim, "input")
    out = _check_pattern(output_modes, stats, u.dim, "output")
    if len(inp) != len(out):
        raise ArityError(f"input has {len(inp)} photons, output pattern has {len(out)}")
    sub = u.matrix[np.ix_(out, inp)]
    if stats is Statistics.FERMION:
        return complex(np.linalg.det(sub)) if sub.size else 1.0 + 0j
    norm = math.sqrt(_occupation_factorial(out) * _occupation_factorial(inp))
    return permanent(sub) / norm


def output_patterns(mode_count: int, n: int, statistics=Statistics.BOSON) -> list[Pattern]:
    """All size-n click patterns in lexicographic order."""
    if as_statistics(statistics) is Statistics.FERMION:
        return list(itertools.combinations(range(mode_count), n))
    return list(itertools.combinations_with_replacement(range(mode_count), n))


def transfer_matrix(u, inputs: Sequence[Pattern], outputs: Sequence[Pattern], statistics=Statistics.BOSON):
    """Matrix of outcome amplitudes, rows = outputs, columns = inputs."""
    return transfer_array(as_unitary(u).matrix, inputs, outputs, statistics)


def transfer_array(matrix: np.ndarray, inputs: Sequence[Pattern], outputs: Sequence[Pattern], statistics=Statistics.BOSON):
    """``transfer_matrix`` on a raw array; the caller vouches for unitarity."""
    stats = as_statistics(statistics)
    if not inputs or not outputs:
        return np.zeros((len(outputs), len(inputs)), dtype=complex)
    out_idx = np.asarray(outputs, dtype=int)
    in_idx = np.asarray(inputs, dtype=int)
    if out_idx.shape[1] != in_idx.shape[1]:
        raise ArityError("input and output photon numbers differ")
    result = np.empty((len(outputs), len(inputs)), dtype=complex)
    rows_per_chunk = max(1, (1 << 18) // max(1, len(inputs)))
    for start in range(0, len(outputs), rows_per_chunk):
        o = out_idx[start : start + rows_per_chunk]
        sub = matrix[o[:, None, :, None], in_idx[None, :, None, :]]
        if stats is Statistics.FERMION:
            result[start : start + len(o)] = np.linalg.det(sub)
        else:
            result[start : start + len(o)] = permanents(sub)
    if stats is Statistics.BOSON:
        out_norm = np.array([_occupation_factorial(p) for p in outputs], dtype=float)
        in_norm = np.array([_occupation_factorial(p) for p in inputs], dtype=float)
        result /= np.sqrt(np.outer(out_norm, in_norm))
    return result


def output_amplitudes(u, states: Sequence[StateVector], patterns: Sequence[Pattern] | None = None):
    """Evolve several states at once.

    Returns ``(patterns, amplitudes)`` with ``amplitudes[k, x]`` the amplitude of
    state ``k`` on pattern ``patterns[x]``.
    """
    u = as_unitary(u)
    if not states:
        raise ValueError("no states given")
    first = states[0]
    for psi in states:
        if psi.mode_count != u.dim:
            raise DimensionError(f"state has {psi.mode_count} modes, unitary acts on {u.dim}")
        if psi.photon_number != first.photon_number or psi.statistics != first.statistics:
            raise ArityError("states differ in photon number or statistics")
    if patterns is None:
        patterns = output_patterns(u.dim, first.photon_number, first.statistics)
    basis, coeffs = dense_vectors(states)
    t = transfer_matrix(u, basis, patterns, first.statistics)
    return list(patterns), (t @ coeffs).T


def evolve(u, psi: StateVector) -> dict[Pattern, float]:
    """Click-pattern distribution of ``psi`` after the circuit ``u``."""
    patterns, amps = output_amplitudes(u, [psi])
    probs = np.abs(amps[0]) ** 2
    return {p: float(q) for p, q in zip(patterns, probs) if q > PROBABILITY_ZERO}


def annihilate(amplitudes: Mapping[Pattern, complex], coefficients, statistics=Statistics.BOSON):
    """Apply ``sum_p coefficients[p] a_p`` to an unnormalized Fock-basis state."""
    stats = as_statistics(statistics)
    coefficients = np.asarray(coefficients, dtype=complex)
    out: dict[Pattern, complex] = {}
    for key, amp in amplitudes.items():
        seen = set()
        for pos, p in enumerate(key):
            if p in seen:
                continue
            seen.add(p)
            c = coefficients[p]
            if c == 0:
                continue
            rest = key[:pos] + key[pos + 1 :]
            if stats is Statistics.FERMION:
                factor = -1.0 if pos % 2 else 1.0
            else:
                factor = math.sqrt(key.count(p))
            out[rest] = out.get(rest, 0j) + c * factor * amp
    return out


def apply_output_annihilators(u, psi: StateVector, clicks: Sequence[int]) -> dict[Pattern, complex]:
    """``c_{s_k} ... c_{s_1} |psi>`` expanded back onto input modes."""
    u = as_unitary(u)
    state: dict[Pattern, complex] = dict(psi.amplitudes)
    for s in clicks:
        state = annihilate(state, u.matrix[s, :], psi.statistics)
    return state


def marginal_prefix_probability(u, psi: StateVector, prefix: Sequence[int]) -> float:
    """Norm of the post-click state after n-1 clicks.

    Evaluates ``<psi| c_1^dag ... c_{n-1}^dag c_{n-1} ... c_1 |psi>`` by expanding the
    output annihilators onto input modes.
    """
    u = as_unitary(u)
    if psi.mode_count != u.dim:
        raise DimensionError(f"state has {psi.mode_count} modes, unitary acts on {u.dim}")
    prefix = _check_pattern(prefix, psi.statistics, u.dim, "prefix")
    if len(prefix) != psi.photon_number - 1:
        raise ArityError(f"prefix needs {psi.photon_number - 1} clicks, got {len(prefix)}")
    state = apply_output_annihilators(u, psi, prefix)
    return float(sum(abs(a) ** 2 for a in state.values()))


def falling_weight(pattern: Pattern, sub: Pattern) -> float:
    """prod_s x_s! / (x_s - y_s)! if ``sub`` is a sub-multiset of ``pattern`` else 0."""
    full = Counter(pattern)
    w = 1.0
    for s, k in Counter(sub).items():
        if full[s] < k:
            return 0.0
        w *= math.perm(full[s], k)
    return w


def prefix_weight_matrix(patterns: Sequence[Pattern], subs: Sequence[Pattern]) -> np.ndarray:
    """W[x, y] = falling_weight(patterns[x], subs[y])."""
    w = np.zeros((len(patterns), len(subs)))
    position = {y: j for j, y in enumerate(subs)}
    size = len(subs[0]) if subs else 0
    for i, x in enumerate(patterns):
        for y in set(itertools.combinations(x, size)):
            j = position.get(y)
            if j is not None:
                w[i, j] = falling_weight(x, y)
    return w


def transform(u, psi: StateVector) -> StateVector:
    """Amplitude-level evolution: the output state ``U|psi>`` as a StateVector."""
    patterns, amps = output_amplitudes(u, [psi])
    return StateVector(dict(zip(patterns, amps[0])), psi.mode_count, psi.statistics)


def dense_vectors(states: Sequence[StateVector]) -> tuple[list[Pattern], np.ndarray]:
    """Stack states as columns over the union of their Fock supports."""
    basis = sorted({k for psi in states for k in psi.amplitudes})
    index = {k: i for i, k in enumerate(basis)}
    vecs = np.zeros((len(basis), len(states)), dtype=complex)
    for col, psi in enumerate(states):
        for k, a in psi.amplitudes.items():
            vecs[index[k], col] = a
    return basis, vecs

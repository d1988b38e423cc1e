"""Qudit Bell bases and the two-photon spin/path/OAM hyperentangled basis.

Photon ``k`` of an n-photon, D-level system lives in the mode block
``k*D .. k*D + D - 1``; level ``l`` of photon ``k`` is global mode ``k*D + l``.
"""

from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import DimensionError, LabelError, ResourceError
from .fock import StateVector, Statistics, Unitary, dense_vectors, transform

MAX_MODES = 20
MAX_GRAM = 4096


@dataclass(frozen=True, order=True)
class BellLabel:
    n: int
    D: int
    P: int
    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if self.n < 2 or self.D < 2:
            raise LabelError(f"need n >= 2 and D >= 2, got n={self.n}, D={self.D}")
        if len(self.indices) != self.n - 1:
            raise LabelError(f"expected {self.n - 1} shift indices, got {self.indices}")
        if not all(0 <= v < self.D for v in (self.P, *self.indices)):
            raise LabelError(f"label components must lie in [0, {self.D}): {self}")

    def __str__(self):
        return f"phi^{self.P}_{','.join(map(str, self.indices))}"


def bell_labels(n: int, D: int) -> list[BellLabel]:
    """All D^n labels, ordered by phase index then shifts."""
    return [
        BellLabel(n, D, P, idx)
        for P in range(D)
        for idx in itertools.product(range(D), repeat=n - 1)
    ]


def bell_state(label: BellLabel, statistics=Statistics.BOSON) -> StateVector:
    n, D = label.n, label.D
    if n * D > MAX_MODES:
        raise ResourceError(f"n*D = {n * D} exceeds the {MAX_MODES}-mode cap")
    shifts = (0, *label.indices)
    amps = {}
    for j in range(D):
        modes = tuple(k * D + (j + shifts[k]) % D for k in range(n))
        amps[modes] = cmath.exp(2j * math.pi * j * label.P / D) / math.sqrt(D)
    return StateVector(amps, n * D, statistics)


def bell_basis(n: int, D: int, statistics=Statistics.BOSON) -> list[StateVector]:
    return [bell_state(lab, statistics) for lab in bell_labels(n, D)]


def gram(states) -> np.ndarray:
    _, vecs = dense_vectors(states)
    return vecs.conj().T @ vecs


def bell_gram(n: int, D: int) -> np.ndarray:
    if D**n > MAX_GRAM:
        raise ResourceError(f"D^n = {D**n} exceeds the {MAX_GRAM}-state cap")
    return gram(bell_basis(n, D))


def shift_operator(D: int) -> np.ndarray:
    """|l> -> |l+1 mod D>."""
    return np.roll(np.eye(D), 1, axis=0)


def clock_operator(D: int) -> np.ndarray:
    """|l> -> exp(2 pi i l / D) |l>."""
    return np.diag(np.exp(2j * np.pi * np.arange(D) / D))


def local_unitary(psi: StateVector, photon: int, u, D: int | None = None) -> StateVector:
    """Apply a single-photon D x D unitary to one photon's mode block."""
    u = np.asarray(u, dtype=complex)
    if D is None:
        D = u.shape[0]
    if u.shape != (D, D):
        raise DimensionError(f"local unitary must be {D}x{D}, got {u.shape}")
    if psi.mode_count % D:
        raise DimensionError(f"{psi.mode_count} modes do not split into blocks of {D}")
    n_blocks = psi.mode_count // D
    if not 0 <= photon < n_blocks:
        raise DimensionError(f"photon {photon} outside {n_blocks} photon blocks")
    full = np.eye(psi.mode_count, dtype=complex)
    block = slice(photon * D, (photon + 1) * D)
    full[block, block] = u
    return transform(Unitary(full), psi)


def overlap(a: StateVector, b: StateVector) -> float:
    """|<a|b>|, the phase-insensitive state comparison."""
    return abs(a.inner(b))


# --- two-photon, eight-level hyperentanglement -------------------------------

DOFS = ("spin", "path", "oam")
# kind -> whether the two photons carry equal (correlated) or opposite levels
_CORRELATED = {
    "spin": {"Phi": True, "Theta": False},
    "path": {"Theta": True, "Psi": False},
    "oam": {"Psi": True, "Phi": False},
}
HYPER_D = 8
HYPER_MODES = 16


@dataclass(frozen=True)
class DofLabel:
    dof: str
    kind: str
    sign: str

    def __post_init__(self):
        if self.dof not in _CORRELATED or self.kind not in _CORRELATED[self.dof]:
            raise LabelError(f"no {self.kind} Bell state defined for the {self.dof} DOF")
        if self.sign not in "+-" or len(self.sign) != 1:
            raise LabelError(f"sign must be '+' or '-', got {self.sign!r}")

    @property
    def correlated(self) -> bool:
        return _CORRELATED[self.dof][self.kind]

    def matrix(self) -> np.ndarray:
        """Two-level coefficient matrix, rows = photon A level, columns = photon B."""
        s = 1.0 if self.sign == "+" else -1.0
        if self.correlated:
            m = np.array([[1.0, 0.0], [0.0, s]])
        else:
            m = np.array([[0.0, 1.0], [s, 0.0]])
        return m / math.sqrt(2)

    def __str__(self):
        return f"{self.kind}{self.sign}_{self.dof}"


@dataclass(frozen=True)
class HyperLabel:
    spin: DofLabel
    path: DofLabel
    oam: DofLabel
    sequence_number: int | None = None

    def __post_init__(self):
        for dof in DOFS:
            if getattr(self, dof).dof != dof:
                raise LabelError(f"{dof} slot holds a {getattr(self, dof).dof} label")

    @property
    def key(self) -> tuple[str, ...]:
        return tuple(f"{getattr(self, d).kind}{getattr(self, d).sign}" for d in DOFS)

    def __str__(self):
        if self.sequence_number is not None:
            return f"Phi{self.sequence_number}"
        return "|".join(str(getattr(self, d)) for d in DOFS)


def level(path: int, spin: int, oam: int) -> int:
    """Level of an eight-dimensional photon; spin H=0/V=1, OAM +1=0/-1=1."""
    return 4 * path + 2 * spin + oam


@lru_cache(maxsize=1)
def _anchor_table() -> dict:
    text = resources.files("bellscope.data").joinpath("hyper_labels.json").read_text()
    return json.loads(text)


@lru_cache(maxsize=1)
def hyper_labels() -> tuple[HyperLabel, ...]:
    """The 64 hyperentangled labels ordered by sequence number."""
    table = _anchor_table()
    labels = []
    for row in table["labels"]:
        parts = {d: DofLabel(d, row[d][:-1], row[d][-1]) for d in DOFS}
        labels.append(HyperLabel(**parts, sequence_number=row["seq"]))
    labels.sort(key=lambda h: h.sequence_number)
    if [h.sequence_number for h in labels] != list(range(1, 65)):
        raise LabelError("anchoring table must number the labels 1..64")
    if len({h.key for h in labels}) != 64:
        raise LabelError("anchoring table repeats a DOF triple")
    return tuple(labels)


def hyper_label(seq: int) -> HyperLabel:
    if not 1 <= seq <= 64:
        raise LabelError(f"sequence number {seq} outside 1..64")
    return hyper_labels()[seq - 1]


def named_hyper_labels() -> tuple[HyperLabel, ...]:
    """The fifteen states singled out in the two-photon eight-level experiment."""
    return tuple(hyper_label(s) for s in _anchor_table()["named"])


def hyper_coefficients(h: HyperLabel) -> np.ndarray:
    """8 x 8 coefficient matrix ``M[level_A, level_B]``."""
    return np.kron(np.kron(h.path.matrix(), h.spin.matrix()), h.oam.matrix())


def hyper_bell_state(h: HyperLabel, statistics=Statistics.BOSON) -> StateVector:
    m = hyper_coefficients(h)
    amps = {
        (a, HYPER_D + b): m[a, b]
        for a in range(HYPER_D)
        for b in range(HYPER_D)
        if m[a, b] != 0
    }
    return StateVector(amps, HYPER_MODES, statistics)


_PAULI = {
    (True, "+"): np.eye(2),
    (True, "-"): np.diag([1.0, -1.0]),
    (False, "+"): np.array([[0.0, 1.0], [1.0, 0.0]]),
    (False, "-"): np.array([[0.0, 1.0], [-1.0, 0.0]]),
}


def preparation_unitaries(h: HyperLabel) -> dict[str, np.ndarray]:
    """Per-DOF operations on photon A that turn Phi_1 into ``h``.

    Phi_1 is correlated-plus in every DOF, so each factor is the Pauli operator
    (identity, phase flip, level flip or both) carrying that DOF's target form.
    """
    return {d: _PAULI[(getattr(h, d).correlated, getattr(h, d).sign)] for d in DOFS}


def preparation_unitary(h: HyperLabel) -> np.ndarray:
    """8 x 8 product U^path x U^spin x U^OAM in level order."""
    ops = preparation_unitaries(h)
    return np.kron(np.kron(ops["path"], ops["spin"]), ops["oam"])

"""Declarative linear-optics circuits, Haar sampling and the G1/G2 split.

Device conventions (all acting on the listed port groups, identity elsewhere):

==============  =====  ==========================================================
kind            group  block matrix
==============  =====  ==========================================================
BS              2      [[1, 1], [1, -1]] / sqrt 2
PBS             4      (in1_H, in1_V, in2_H, in2_V): H passes, V swaps beams
BeamDisplacer   4      same permutation as PBS (V is displaced to the other beam)
HWP(theta)      2      [[cos 2t, sin 2t], [sin 2t, -cos 2t]] on (H, V)
QWP(theta)      2      R(-t) diag(1, i) R(t) on (H, V)
LC(phase)       2      diag(1, e^{i phase}) on (fast, slow)
DovePrism(t)    2      [[0, e^{-2it}], [e^{2it}, 0]] on (OAM +1, OAM -1)
OAM-BS(theta)   4      (p1 +1, p1 -1, p2 +1, p2 -1): BS, Dove prisms at 0 and
                       theta with a compensating e^{-2i theta} arm phase, BS
QPlate          2      identity: projects each OAM level onto its own detector
PhaseShift(phi) 1      e^{i phi}
Swap            2      [[0, 1], [1, 0]]
CustomUnitary   k      params["matrix"]
==============  =====  ==========================================================
"""

from __future__ import annotations

import itertools
import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .bell import HYPER_MODES, bell_basis, bell_labels, BellLabel
from .errors import CircuitParseError, DimensionError, WiringError
from .fock import (
    Pattern,
    Statistics,
    Unitary,
    as_statistics,
    as_unitary,
    output_amplitudes,
    prefix_weight_matrix,
)

SCHEMA_VERSION = 1
G1_TOL = 1e-12

DEVICE_KINDS = (
    "BS",
    "PBS",
    "HWP",
    "QWP",
    "DovePrism",
    "BeamDisplacer",
    "LC",
    "OAM-BS",
    "QPlate",
    "PhaseShift",
    "Swap",
    "CustomUnitary",
)


@dataclass(frozen=True)
class DeviceSpec:
    kind: str
    ports: tuple[tuple[int, ...], ...]
    params: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if self.kind not in DEVICE_KINDS:
            raise WiringError(f"unknown device kind {self.kind!r}")
        ports = tuple(tuple(int(m) for m in group) for group in self.ports)
        object.__setattr__(self, "ports", ports)
        flat = [m for group in ports for m in group]
        if len(set(flat)) != len(flat):
            raise WiringError(f"{self.kind} port groups overlap: {ports}")


@dataclass(frozen=True)
class CircuitSpec:
    mode_count: int
    photon_count: int
    statistics: Statistics = Statistics.BOSON
    devices: tuple[DeviceSpec, ...] = ()
    name: str = ""
    notes: str = ""

    def __post_init__(self):
        object.__setattr__(self, "statistics", as_statistics(self.statistics))
        object.__setattr__(self, "devices", tuple(self.devices))


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def _dove(theta: float) -> np.ndarray:
    return np.array([[0, np.exp(-2j * theta)], [np.exp(2j * theta), 0]])


def _beam_splitter() -> np.ndarray:
    return np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def _pbs() -> np.ndarray:
    # (in1_H, in1_V, in2_H, in2_V) -> H stays in its beam, V crosses
    return np.eye(4)[[0, 3, 2, 1]]


def device_block(kind: str, params: dict | None = None) -> np.ndarray:
    """Matrix of one device on a single port group."""
    params = params or {}
    try:
        if kind == "BS":
            return _beam_splitter().astype(complex)
        if kind in ("PBS", "BeamDisplacer"):
            return _pbs().astype(complex)
        if kind == "HWP":
            t = 2 * float(params["theta"])
            return np.array([[math.cos(t), math.sin(t)], [math.sin(t), -math.cos(t)]], dtype=complex)
        if kind == "QWP":
            t = float(params["theta"])
            return _rotation(-t) @ np.diag([1, 1j]) @ _rotation(t)
        if kind == "LC":
            return np.diag([1, np.exp(1j * float(params["phase"]))])
        if kind == "DovePrism":
            return _dove(float(params.get("theta", 0.0)))
        if kind == "OAM-BS":
            theta = float(params.get("theta", math.pi / 4))
            bs = np.kron(_beam_splitter(), np.eye(2))
            arms = np.zeros((4, 4), dtype=complex)
            arms[:2, :2] = _dove(0.0)
            arms[2:, 2:] = np.exp(-2j * theta) * _dove(theta)
            return bs @ arms @ bs
        if kind == "QPlate":
            return np.eye(2, dtype=complex)
        if kind == "PhaseShift":
            return np.array([[np.exp(1j * float(params["phi"]))]])
        if kind == "Swap":
            return np.array([[0, 1], [1, 0]], dtype=complex)
        if kind == "CustomUnitary":
            return _matrix_from_json(params["matrix"])
    except KeyError as exc:
        raise CircuitParseError(f"{kind} is missing parameter {exc.args[0]!r}") from None
    raise WiringError(f"unknown device kind {kind!r}")


def device_unitary(d: DeviceSpec, mode_count: int) -> Unitary:
    block = device_block(d.kind, d.params)
    k = block.shape[0]
    full = np.eye(mode_count, dtype=complex)
    for group in d.ports:
        if len(group) != k:
            raise WiringError(f"{d.kind} acts on {k} modes, port group {group} has {len(group)}")
        if any(not 0 <= m < mode_count for m in group):
            raise WiringError(f"{d.kind} port group {group} outside {mode_count} modes")
        full[np.ix_(group, group)] = block
    return Unitary(full)


def compose_circuit(c: CircuitSpec) -> Unitary:
    """Ordered product U_k ... U_2 U_1 of the embedded device unitaries."""
    u = np.eye(c.mode_count, dtype=complex)
    for d in c.devices:
        u = device_unitary(d, c.mode_count).matrix @ u
    return Unitary(u)


def haar_random_unitary(dim: int, seed=None) -> Unitary:
    """Haar-distributed unitary from the QR decomposition of a complex Ginibre matrix."""
    if dim < 1:
        raise DimensionError("dimension must be positive")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return Unitary(q * (d / np.abs(d)))


# --- reference circuits -------------------------------------------------------


def build_fig1_circuit(n: int, D: int) -> CircuitSpec:
    """Each photon routed by its own identity transformation onto D detectors."""
    eye = _matrix_to_json(np.eye(D))
    devices = tuple(
        DeviceSpec("CustomUnitary", (tuple(range(k * D, (k + 1) * D)),), {"matrix": eye})
        for k in range(n)
    )
    return CircuitSpec(
        n * D,
        n,
        Statistics.BOSON,
        devices,
        name=f"identity_{n}x{D}",
        notes="per-photon identity blocks; every photon reaches its own D detectors",
    )


def hyper_mode(photon: int, path: int, spin: int, oam: int) -> int:
    """Global mode of the 16-mode two-photon system; photon 0 = A, 1 = B."""
    return 8 * photon + 4 * path + 2 * spin + oam


def build_fig3_circuit() -> CircuitSpec:
    """Two-photon, eight-level Bell analyzer on 16 modes.

    Stage order: path interference on each photon, OAM flip on photon B, a PBS
    that mixes the two photons' beams, HWPs at 22.5 degrees on both PBS outputs,
    four OAM-BS sorters and the q-plate detection stage.
    """
    m = hyper_mode
    devices = []
    path_pairs = tuple(
        (m(ph, 0, s, o), m(ph, 1, s, o)) for ph in (0, 1) for s in (0, 1) for o in (0, 1)
    )
    devices.append(DeviceSpec("BS", path_pairs))
    devices.append(
        DeviceSpec("DovePrism", tuple((m(1, p, s, 0), m(1, p, s, 1)) for p in (0, 1) for s in (0, 1)), {"theta": 0.0})
    )
    devices.append(
        DeviceSpec(
            "PBS",
            tuple((m(0, p, 0, o), m(0, p, 1, o), m(1, p, 0, o), m(1, p, 1, o)) for p in (0, 1) for o in (0, 1)),
        )
    )
    devices.append(
        DeviceSpec(
            "HWP",
            tuple((m(ph, p, 0, o), m(ph, p, 1, o)) for ph in (0, 1) for p in (0, 1) for o in (0, 1)),
            {"theta": math.pi / 8},
        )
    )
    devices.append(
        DeviceSpec(
            "OAM-BS",
            tuple((m(ph, 0, s, 0), m(ph, 0, s, 1), m(ph, 1, s, 0), m(ph, 1, s, 1)) for ph in (0, 1) for s in (0, 1)),
            {"theta": math.pi / 4},
        )
    )
    devices.append(DeviceSpec("QPlate", tuple((k, k + 1) for k in range(0, HYPER_MODES, 2))))
    return CircuitSpec(
        HYPER_MODES,
        2,
        Statistics.BOSON,
        tuple(devices),
        name="hyper_2x8",
        notes=(
            "mode = 8*photon + 4*path + 2*spin + oam; spin H=0 V=1, OAM +1=0 -1=1. "
            "Port wiring is this package's choice; detector numbering in fig4_detectors.json."
        ),
    )


# --- G1 / G2 classification ---------------------------------------------------


@dataclass(frozen=True)
class GroupTag:
    group: str
    witness: tuple[BellLabel, Pattern] | None = None
    min_norm: float = 0.0

    def __post_init__(self):
        if (self.group == "G2") != (self.witness is not None):
            raise ValueError("a G2 tag needs a witness and a G1 tag must not carry one")


def click_prefixes(mode_count: int, size: int, statistics=Statistics.BOSON) -> list[Pattern]:
    if as_statistics(statistics) is Statistics.FERMION:
        return list(itertools.combinations(range(mode_count), size))
    return list(itertools.combinations_with_replacement(range(mode_count), size))


def prefix_marginals(u, states, prefixes: Sequence[Pattern]) -> np.ndarray:
    """Post-click norms for every (state, prefix) pair, from output amplitudes."""
    patterns, amps = output_amplitudes(u, states)
    weights = prefix_weight_matrix(patterns, list(prefixes))
    return (np.abs(amps) ** 2) @ weights


def classify_group(u, n: int, D: int, statistics=Statistics.BOSON, tol: float = G1_TOL) -> GroupTag:
    """G1 when every Bell state yields every (n-1)-click prefix with nonzero norm."""
    u = as_unitary(u)
    stats = as_statistics(statistics)
    if u.dim != n * D:
        raise DimensionError(f"unitary acts on {u.dim} modes, system has {n * D}")
    labels = bell_labels(n, D)
    prefixes = click_prefixes(n * D, n - 1, stats)
    norms = prefix_marginals(u, bell_basis(n, D, stats), prefixes)
    zero = np.argwhere(norms <= tol)
    if zero.size:
        i, j = zero[0]  # argwhere is row-major: first label, then first prefix
        return GroupTag("G2", (labels[i], prefixes[j]), float(norms.min()))
    return GroupTag("G1", None, float(norms.min()))


# --- circuit file format --------------------------------------------------------


def _matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _matrix_from_json(rows) -> np.ndarray:
    try:
        return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise CircuitParseError(f"matrix entries must be [re, im] pairs: {exc}") from None


def circuit_to_dict(c: CircuitSpec, provenance: dict | None = None) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": c.name,
        "mode_count": c.mode_count,
        "photon_count": c.photon_count,
        "statistics": c.statistics.value,
        "devices": [
            {"kind": d.kind, "ports": [list(g) for g in d.ports], "params": dict(d.params)}
            for d in c.devices
        ],
    }
    if c.notes:
        doc["notes"] = c.notes
    if provenance:
        doc["provenance"] = provenance
    return doc


def _schema(name: str) -> dict:
    return json.loads(resources.files("bellscope.schemas").joinpath(name).read_text())


def validate_document(doc, schema_name: str, error=CircuitParseError):
    import jsonschema

    try:
        jsonschema.validate(doc, _schema(schema_name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise error(f"{where}: {exc.message}") from None


def circuit_from_dict(doc: dict) -> CircuitSpec:
    validate_document(doc, "circuit.schema.json")
    devices = []
    for i, d in enumerate(doc["devices"]):
        try:
            devices.append(DeviceSpec(d["kind"], d["ports"], d.get("params", {})))
        except WiringError as exc:
            raise CircuitParseError(f"devices/{i}: {exc}") from None
    c = CircuitSpec(
        doc["mode_count"],
        doc["photon_count"],
        doc.get("statistics", "boson"),
        tuple(devices),
        doc.get("name", ""),
        doc.get("notes", ""),
    )
    for i, d in enumerate(c.devices):
        try:
            device_unitary(d, c.mode_count)
        except (WiringError, CircuitParseError) as exc:
            raise CircuitParseError(f"devices/{i}: {exc}") from None
    return c


def load_circuit(path) -> CircuitSpec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CircuitParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return circuit_from_dict(doc)


def save_circuit(c: CircuitSpec, path, provenance: dict | None = None) -> None:
    Path(path).write_text(json.dumps(circuit_to_dict(c, provenance), indent=2) + "\n")


def packaged_circuit(name: str) -> CircuitSpec:
    """Load one of the circuit files shipped in ``bellscope/data``."""
    text = resources.files("bellscope.data").joinpath(name).read_text()
    return circuit_from_dict(json.loads(text))

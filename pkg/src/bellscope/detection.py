"""Click-pattern supports and the partition of a state set into distinguishable classes.

Two states can be told apart by a single shot exactly when no click pattern is
possible for both.  Classes are therefore the connected components of the
bipartite graph linking states to the patterns they can produce.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.sparse import bmat, csr_matrix
from scipy.sparse.csgraph import connected_components

from ._parallel import chunks, parallel_map
from .errors import ContractError, DimensionError
from .fock import (
    NORM_TOL,
    Pattern,
    StateVector,
    as_unitary,
    output_amplitudes,
    output_patterns,
)

SCHEMA_VERSION = 1
SUPPORT_TOL = 1e-12


class DetectorModel(str, Enum):
    NUMBER_RESOLVING = "number-resolving"
    THRESHOLD = "threshold"


def as_model(value) -> DetectorModel:
    if isinstance(value, DetectorModel):
        return value
    aliases = {"nr": "number-resolving", "number_resolving": "number-resolving"}
    return DetectorModel(aliases.get(str(value).lower(), str(value).lower()))


def threshold_pattern(pattern: Pattern) -> Pattern:
    """Erase multiplicities: a threshold detector only reports that it fired."""
    return tuple(sorted(set(pattern)))


def has_repeat(pattern: Pattern) -> bool:
    return len(set(pattern)) != len(pattern)


@dataclass(frozen=True)
class OutcomeSupport:
    state: object
    probabilities: dict[Pattern, float]

    @property
    def patterns(self) -> tuple[Pattern, ...]:
        return tuple(sorted(self.probabilities))


def _check_states(u, states: Sequence[StateVector]):
    if not states:
        raise ValueError("need at least one state")
    first = states[0]
    for psi in states:
        if (psi.mode_count, psi.photon_number, psi.statistics) != (
            first.mode_count,
            first.photon_number,
            first.statistics,
        ):
            raise DimensionError("all states must share mode count, photon number and statistics")
    if u.dim != first.mode_count:
        raise DimensionError(f"states live on {first.mode_count} modes, unitary acts on {u.dim}")


def probability_table(u, states: Sequence[StateVector], model=DetectorModel.NUMBER_RESOLVING):
    """Rows = states, columns = observable patterns under ``model``.

    Returns ``(patterns, probs, raw_patterns, raw_probs)``; the raw pair is the
    number-resolving table that the threshold one is collapsed from.
    """
    u = as_unitary(u)
    _check_states(u, states)
    model = as_model(model)
    first = states[0]
    raw = output_patterns(first.mode_count, first.photon_number, first.statistics)
    parts = parallel_map(lambda group: output_amplitudes(u, group, raw)[1], chunks(states, 16))
    raw_probs = np.abs(np.vstack(parts)) ** 2
    if model is DetectorModel.NUMBER_RESOLVING:
        return raw, raw_probs, raw, raw_probs
    collapsed = sorted({threshold_pattern(p) for p in raw})
    index = {p: i for i, p in enumerate(collapsed)}
    fold = np.zeros((len(raw), len(collapsed)))
    for i, p in enumerate(raw):
        fold[i, index[threshold_pattern(p)]] = 1.0
    return collapsed, raw_probs @ fold, raw, raw_probs


def outcome_support(u, state: StateVector, model=DetectorModel.NUMBER_RESOLVING, tol: float = SUPPORT_TOL, label=None):
    patterns, probs, _, _ = probability_table(u, [state], model)
    row = probs[0]
    return OutcomeSupport(
        label,
        {p: float(q) for p, q in zip(patterns, row) if q > tol},
    )


def collapse_support(probabilities: dict[Pattern, float]) -> dict[Pattern, float]:
    """Threshold view of a number-resolving distribution."""
    out: dict[Pattern, float] = {}
    for p, q in probabilities.items():
        key = threshold_pattern(p)
        out[key] = out.get(key, 0.0) + q
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class PartitionReport:
    labels: tuple[str, ...]
    classes: tuple[tuple[int, ...], ...]
    class_supports: tuple[tuple[Pattern, ...], ...]
    detector_model: DetectorModel
    flagged: tuple[int, ...] = ()
    notes: tuple[str, ...] = ()
    schema_version: int = SCHEMA_VERSION
    probabilities: np.ndarray | None = field(default=None, compare=False, repr=False)
    patterns: tuple[Pattern, ...] = field(default=(), compare=False, repr=False)

    @property
    def class_count(self) -> int:
        return len(self.classes)

    @property
    def class_sizes(self) -> list[int]:
        return [len(c) for c in self.classes]

    @property
    def fully_distinguished(self) -> tuple[str, ...]:
        """States that form a class on their own and are identified outright."""
        return tuple(self.labels[c[0]] for c in self.classes if len(c) == 1)

    @property
    def singleton_count(self) -> int:
        return len(self.fully_distinguished)

    @property
    def resolvable_class_count(self) -> int:
        """Classes that are still certified once flagged classes are set aside."""
        return self.class_count - len(self.flagged)

    @property
    def channel_capacity_bits(self) -> float:
        return math.log2(self.class_count)

    def class_label(self, k: int) -> str:
        return self.labels[self.classes[k][0]]

    def class_of(self, label: str) -> int:
        i = self.labels.index(label)
        return next(k for k, c in enumerate(self.classes) if i in c)

    def size_multiset(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for s in self.class_sizes:
            out[s] = out.get(s, 0) + 1
        return dict(sorted(out.items()))

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "detector_model": self.detector_model.value,
            "states": list(self.labels),
            "class_count": self.class_count,
            "singleton_count": self.singleton_count,
            "resolvable_class_count": self.resolvable_class_count,
            "channel_capacity_bits": self.channel_capacity_bits,
            "classes": [
                {
                    "label": self.class_label(k),
                    "members": [self.labels[i] for i in members],
                    "support": [list(p) for p in self.class_supports[k]],
                    "flagged": k in self.flagged,
                }
                for k, members in enumerate(self.classes)
            ],
            "fully_distinguished": list(self.fully_distinguished),
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _components(adj: np.ndarray) -> list[tuple[int, ...]]:
    n_states = adj.shape[0]
    graph = bmat([[None, csr_matrix(adj)], [csr_matrix(adj.T), None]])
    _, comp = connected_components(graph, directed=False)
    groups: dict[int, list[int]] = {}
    for i in range(n_states):
        groups.setdefault(comp[i], []).append(i)
    return sorted((tuple(g) for g in groups.values()), key=lambda g: g[0])


def distinguishability_partition(
    u,
    states: Sequence[StateVector],
    model=DetectorModel.NUMBER_RESOLVING,
    tol: float = SUPPORT_TOL,
    labels: Sequence[str] | None = None,
) -> PartitionReport:
    """Connected components of the state/pattern support graph.

    Classes are ordered by their first member in input order.  Under the
    threshold model a class is flagged when it absorbs more than one
    number-resolving class or when its evidence includes a bunched pattern,
    which a threshold detector reports as fewer clicks than photons.
    """
    model = as_model(model)
    labels = tuple(str(x) for x in (labels if labels is not None else range(len(states))))
    if len(labels) != len(states):
        raise ValueError("one label per state required")
    patterns, probs, raw, raw_probs = probability_table(u, states, model)
    sums = raw_probs.sum(axis=1)
    if np.any(np.abs(sums - 1) > NORM_TOL):
        raise ContractError(f"outcome probabilities sum to {sums.min()}..{sums.max()}, not 1")
    classes = _components(probs > tol)
    supports = tuple(
        tuple(patterns[j] for j in np.nonzero((probs[list(c)] > tol).any(axis=0))[0]) for c in classes
    )
    flagged: list[int] = []
    notes: list[str] = []
    if model is DetectorModel.THRESHOLD:
        fine = _components(raw_probs > tol)
        bunched = np.array([has_repeat(p) for p in raw])
        for k, c in enumerate(classes):
            merged = sum(1 for f in fine if f[0] in c) > 1
            lossy = bool((raw_probs[list(c)][:, bunched] > tol).any()) if bunched.any() else False
            if merged or lossy:
                flagged.append(k)
                reason = "merges number-resolving classes" if merged else "has bunched outcomes"
                notes.append(f"requires number resolving: class {labels[c[0]]} {reason}")
    return PartitionReport(
        labels,
        tuple(classes),
        supports,
        model,
        tuple(flagged),
        tuple(notes),
        probabilities=probs,
        patterns=tuple(patterns),
    )


def requires_number_resolving(report_nr: PartitionReport, report_th: PartitionReport) -> list[str]:
    """Class labels of the number-resolving partition that threshold detectors lose."""
    if report_nr.labels != report_th.labels:
        raise ValueError("reports cover different state sets")
    if report_nr.detector_model is not DetectorModel.NUMBER_RESOLVING:
        raise ValueError("first report must use number-resolving detectors")
    if report_th.detector_model is not DetectorModel.THRESHOLD:
        raise ValueError("second report must use threshold detectors")
    coarse = set(report_th.classes)
    lost = []
    for k, members in enumerate(report_nr.classes):
        bunched = any(has_repeat(p) for p in report_nr.class_supports[k])
        if members not in coarse or bunched:
            lost.append(report_nr.class_label(k))
    return lost


# --- coincidence tables -----------------------------------------------------------


@dataclass(frozen=True)
class CoincidenceTable:
    row_labels: tuple[str, ...]
    patterns: tuple[Pattern, ...]
    probabilities: np.ndarray

    def pattern_names(self, mode_to_detector: Sequence[int] | None = None) -> list[str]:
        return [pattern_name(p, mode_to_detector) for p in self.patterns]

    def to_csv(self, mode_to_detector: Sequence[int] | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["state", *self.pattern_names(mode_to_detector)])
        for label, row in zip(self.row_labels, self.probabilities):
            writer.writerow([label, *(f"{q:.12g}" for q in row)])
        return buf.getvalue()

    def to_text(self, mode_to_detector: Sequence[int] | None = None) -> str:
        """Filled/empty grid: one row per state, one column per pattern."""
        names = self.pattern_names(mode_to_detector)
        width = max(len(s) for s in self.row_labels)
        lines = [f"{'':{width}}  " + " ".join(f"{k:>3}" for k in range(1, len(names) + 1))]
        for label, row in zip(self.row_labels, self.probabilities):
            cells = " ".join("  #" if q > SUPPORT_TOL else "  ." for q in row)
            lines.append(f"{label:{width}}  {cells}")
        lines.append("")
        lines.extend(f"{k:>3}: {name}" for k, name in enumerate(names, 1))
        return "\n".join(lines) + "\n"


def pattern_name(pattern: Pattern, mode_to_detector: Sequence[int] | None = None) -> str:
    if mode_to_detector is None:
        numbers = [m + 1 for m in pattern]
    else:
        numbers = sorted(mode_to_detector[m] for m in pattern)
    return "D_{" + ",".join(map(str, numbers)) + "}"


def coincidence_matrix(report: PartitionReport, states: Sequence[StateVector] | None = None, u=None) -> CoincidenceTable:
    """States x observed patterns table for the report's detector model.

    Columns are the union of class supports, so every row sums to one.  When
    ``states`` and ``u`` are given the table is recomputed from them instead of
    reusing the probabilities cached in the report.
    """
    if states is not None and u is not None:
        patterns, probs, _, _ = probability_table(u, states, report.detector_model)
        if len(states) != len(report.labels):
            raise ValueError("state list does not match the report")
    else:
        if report.probabilities is None:
            raise ValueError("report carries no probabilities; pass states and u")
        patterns, probs = list(report.patterns), report.probabilities
    used = sorted({p for sup in report.class_supports for p in sup})
    index = {p: i for i, p in enumerate(patterns)}
    cols = [index[p] for p in used]
    return CoincidenceTable(report.labels, tuple(used), probs[:, cols])

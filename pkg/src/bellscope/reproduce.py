"""Reproduction scenarios checked against committed golden files."""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .bell import bell_basis, bell_labels, hyper_bell_state, hyper_labels, named_hyper_labels
from .circuits import build_fig1_circuit, compose_circuit, device_unitary, DeviceSpec, packaged_circuit
from .criteria import limits
from .detection import DetectorModel, distinguishability_partition, has_repeat, pattern_name, requires_number_resolving
from .errors import BellscopeError, ReproductionMismatch
from .fock import FockState, StateVector, evolve

SCENARIOS = ("table1", "fig1", "fig4", "hom")
FLOAT_TOL = 1e-12


def detector_map() -> list[int]:
    text = resources.files("bellscope.data").joinpath("fig4_detectors.json").read_text()
    return json.loads(text)["mode_to_detector"]


def _sizes(report) -> dict[str, int]:
    return {str(k): v for k, v in report.size_multiset().items()}


def compute_table1() -> dict:
    rows = [(3, 2), (3, 3), (3, 4), (4, 2), (4, 3), (4, 4)]
    return {
        "schema_version": 1,
        "scenario": "table1",
        "rows": [{"n": n, "D": D, "n1": limits(n, D).n1} for n, D in rows],
    }


def compute_fig1() -> dict:
    cases = []
    for n, D in [(2, 2), (3, 2), (4, 2), (2, 8)]:
        if (n, D) == (4, 2):
            circuit = packaged_circuit("fig1_4x2.circuit.json")
        else:
            circuit = build_fig1_circuit(n, D)
        u = compose_circuit(circuit)
        labels = [str(x) for x in bell_labels(n, D)]
        report = distinguishability_partition(u, bell_basis(n, D), labels=labels)
        cases.append({"n": n, "D": D, "class_count": report.class_count, "class_sizes": _sizes(report)})
    return {"schema_version": 1, "scenario": "fig1", "cases": cases}


def fig4_reports():
    u = compose_circuit(packaged_circuit("fig3_2x8.circuit.json"))
    hs = hyper_labels()
    states = [hyper_bell_state(h) for h in hs]
    labels = [str(h) for h in hs]
    nr = distinguishability_partition(u, states, labels=labels)
    th = distinguishability_partition(u, states, DetectorModel.THRESHOLD, labels=labels)
    return u, states, nr, th


def compute_fig4() -> dict:
    u, states, nr, th = fig4_reports()
    names = detector_map()
    phi1 = evolve(u, states[0])
    phi49 = evolve(u, states[48])
    named = [str(h) for h in named_hyper_labels()]
    return {
        "schema_version": 1,
        "scenario": "fig4",
        "class_count": nr.class_count,
        "class_sizes": _sizes(nr),
        "phi1_coincidences": {pattern_name(p, names): q for p, q in sorted(phi1.items())},
        "phi49_bunched_patterns": sum(1 for p in phi49 if has_repeat(p)),
        "named_states_in_distinct_classes": len({nr.class_of(x) for x in named}),
        "threshold_resolvable_classes": th.resolvable_class_count,
        "threshold_flagged": requires_number_resolving(nr, th),
    }


def compute_hom() -> dict:
    u = device_unitary(DeviceSpec("BS", ((0, 1),)), 2)
    psi = StateVector.basis(FockState((0, 1)), 2)
    probs = evolve(u, psi)
    return {
        "schema_version": 1,
        "scenario": "hom",
        "coincidence": probs.get((0, 1), 0.0),
        "bunched": {pattern_name(p): probs.get(p, 0.0) for p in [(0, 0), (1, 1)]},
        "total": sum(probs.values()),
    }


COMPUTE = {"table1": compute_table1, "fig1": compute_fig1, "fig4": compute_fig4, "hom": compute_hom}


def golden_path(scenario: str) -> Path:
    return Path(str(resources.files("bellscope.data.golden").joinpath(f"{scenario}.json")))


def load_golden(scenario: str) -> dict:
    return json.loads(golden_path(scenario).read_text())


def diff(expected, actual, path: str = "") -> list[str]:
    """Human-readable differences; floats compare within FLOAT_TOL."""
    where = path or "<root>"
    if isinstance(expected, dict) and isinstance(actual, dict):
        out = []
        for key in sorted(set(expected) | set(actual)):
            if key not in actual:
                out.append(f"{path}/{key}: missing from computed result")
            elif key not in expected:
                out.append(f"{path}/{key}: not in golden file")
            else:
                out.extend(diff(expected[key], actual[key], f"{path}/{key}"))
        return out
    if isinstance(expected, list) and isinstance(actual, list):
        if len(expected) != len(actual):
            return [f"{where}: length {len(actual)} != golden {len(expected)}"]
        out = []
        for i, (e, a) in enumerate(zip(expected, actual)):
            out.extend(diff(e, a, f"{path}/{i}"))
        return out
    if isinstance(expected, bool) or isinstance(actual, bool) or isinstance(expected, str):
        return [] if expected == actual else [f"{where}: {actual!r} != golden {expected!r}"]
    if isinstance(expected, (int, float)) and isinstance(actual, (int, float)):
        if isinstance(expected, int) and isinstance(actual, int):
            return [] if expected == actual else [f"{where}: {actual} != golden {expected}"]
        return [] if abs(expected - actual) <= FLOAT_TOL else [f"{where}: {actual!r} != golden {expected!r}"]
    return [] if expected == actual else [f"{where}: {actual!r} != golden {expected!r}"]


@dataclass(frozen=True)
class ReproductionResult:
    scenario: str
    computed: dict
    differences: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.differences


def reproduce(scenario: str) -> ReproductionResult:
    if scenario not in COMPUTE:
        raise BellscopeError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    computed = COMPUTE[scenario]()
    # round-trip through JSON so tuples and numpy scalars compare like the file
    computed = json.loads(json.dumps(computed, default=float))
    return ReproductionResult(scenario, computed, tuple(diff(load_golden(scenario), computed)))


def check(scenario: str) -> ReproductionResult:
    result = reproduce(scenario)
    if not result.ok:
        raise ReproductionMismatch(f"{scenario}: " + "; ".join(result.differences))
    return result


def working_tree_dirty(root: Path | None = None) -> bool:
    root = root or Path(__file__).resolve().parents[2]
    try:
        out = subprocess.run(
            ["git", "status", "--porcelain"], cwd=root, capture_output=True, text=True, check=True
        ).stdout
    except (OSError, subprocess.CalledProcessError):
        return True
    return bool(out.strip())


def regenerate(scenario: str, root: Path | None = None) -> Path:
    """Rewrite a golden file from the current code; refuses on a dirty tree."""
    if working_tree_dirty(root):
        raise BellscopeError("refusing to regenerate golden files: the working tree has uncommitted changes")
    computed = json.loads(json.dumps(COMPUTE[scenario](), default=float))
    path = golden_path(scenario)
    path.write_text(json.dumps(computed, indent=2) + "\n")
    return path

import json

import numpy as np
import pytest

from bellscope.bell import bell_basis
from bellscope.circuits import circuit_from_dict, circuit_to_dict, compose_circuit
from bellscope.detection import distinguishability_partition
from bellscope.errors import DimensionError
from bellscope.search import BellModel, SearchConfig, bound_audit, channel_capacity, maximize_classes


def test_two_qubits_reach_three_classes():
    res = maximize_classes(SearchConfig(2, 2, budget=500, seed=0, target=3))
    assert res.best_classes == 3
    assert res.converged
    assert res.evaluations <= 500
    assert res.group.group == "G1"


def test_result_matches_independent_partition():
    res = maximize_classes(SearchConfig(2, 2, budget=200, restarts=2, seed=3))
    report = distinguishability_partition(res.best_unitary, bell_basis(2, 2))
    assert report.class_count == res.best_classes
    assert report.singleton_count == res.best_singletons


def test_determinism():
    cfg = SearchConfig(2, 2, budget=120, restarts=3, seed=11, polish=False)
    a, b = maximize_classes(cfg), maximize_classes(cfg)
    assert a.trace == b.trace
    assert np.array_equal(a.best_unitary.matrix, b.best_unitary.matrix)
    assert json.dumps(a.to_circuit()[1]) == json.dumps(b.to_circuit()[1])


def test_trace_is_monotone():
    res = maximize_classes(SearchConfig(2, 3, budget=150, restarts=3, seed=2))
    best = [c for _, c in res.trace]
    evals = [e for e, _ in res.trace]
    assert best == sorted(best)
    assert evals == sorted(evals)
    assert res.evaluations <= 150


def test_identity_start_with_zero_budget():
    res = maximize_classes(SearchConfig(4, 2, budget=0, restarts=1, identity_start=True))
    assert res.best_classes == 8
    assert res.evaluations == 0
    assert np.allclose(res.best_unitary.matrix, np.eye(8))


def test_export_round_trip():
    res = maximize_classes(SearchConfig(2, 2, budget=60, restarts=2, seed=1))
    spec, provenance = res.to_circuit()
    doc = json.loads(json.dumps(circuit_to_dict(spec, provenance)))
    back = circuit_from_dict(doc)
    assert np.allclose(compose_circuit(back).matrix, res.best_unitary.matrix, atol=1e-12)
    assert doc["provenance"]["seed"] == 1
    assert doc["provenance"]["best_classes"] == res.best_classes


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n": 2, "D": 2, "budget": 5, "restarts": 10},
        {"n": 2, "D": 2, "restarts": 0},
        {"n": 2, "D": 2, "step_scale": 0.0},
        {"n": 2, "D": 2, "step_scale": 1.5},
        {"n": 2, "D": 2, "budget": 0},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SearchConfig(**kwargs)


def test_config_size_cap():
    with pytest.raises(DimensionError):
        SearchConfig(3, 6)
    with pytest.raises(DimensionError):
        SearchConfig(5, 2)


def test_generator_jacobian_matches_finite_differences():
    from scipy.linalg import expm

    for stats in ("boson", "fermion"):
        model = BellModel(2, 3, stats)
        rng = np.random.default_rng(0)
        u = np.linalg.qr(rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))[0]
        amps = model.amplitudes(u)
        rows, cols = np.arange(amps.shape[0]), np.zeros(amps.shape[0], dtype=int)
        jac = model.generator_jacobian(amps, rows, cols)
        h = 1e-6
        for k in range(jac.shape[1]):
            dh = np.zeros(jac.shape[1])
            dh[k] = h
            from bellscope.search import _hermitian

            plus = model.amplitudes(expm(1j * _hermitian(dh, 6)) @ u)[rows, cols]
            minus = model.amplitudes(expm(-1j * _hermitian(dh, 6)) @ u)[rows, cols]
            assert np.allclose((plus - minus) / (2 * h), jac[:, k], atol=1e-7)


def test_audit_small():
    rep = bound_audit(2, 2, samples=30, seed=0)
    assert rep.violations == 0
    assert rep.max_g1_classes <= 3
    assert rep.g1_count == 30
    assert sum(rep.histogram.values()) == 30


def test_fermion_audit_has_no_repeats():
    rep = bound_audit(3, 2, "fermion", samples=10, seed=0)
    assert rep.repeated_detector_patterns == 0
    assert rep.max_g1_classes <= 4


def test_channel_capacity():
    assert channel_capacity(15) == pytest.approx(3.9069, abs=1e-4)
    assert channel_capacity(0) == 0.0

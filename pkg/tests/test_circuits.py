import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellscope.bell import BellLabel, bell_basis, hyper_bell_state, hyper_label
from bellscope.circuits import (
    CircuitSpec,
    DeviceSpec,
    build_fig1_circuit,
    build_fig3_circuit,
    circuit_from_dict,
    circuit_to_dict,
    classify_group,
    compose_circuit,
    device_block,
    device_unitary,
    haar_random_unitary,
    load_circuit,
    packaged_circuit,
    prefix_marginals,
    save_circuit,
)
from bellscope.errors import CircuitParseError, DimensionError, UnitarityError, WiringError
from bellscope.fock import evolve

from oracles import haar_moment_samples

HADAMARD = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def test_zero_phase_shift_is_identity():
    u = device_unitary(DeviceSpec("PhaseShift", ((2,),), {"phi": 0.0}), 4)
    assert np.allclose(u.matrix, np.eye(4))


def test_half_wave_plate_at_22_5_degrees():
    assert np.allclose(device_block("HWP", {"theta": math.pi / 8}), HADAMARD)


def test_single_dove_prism_swaps_oam():
    block = device_block("DovePrism", {"theta": math.pi / 8})
    assert np.allclose(np.diag(block), 0)
    assert np.allclose(np.abs(block[0, 1]), 1)


def test_dove_prism_pair_at_45_degrees_is_a_relative_phase_flip():
    # two reflections compose to a rotation: diagonal, opposite phases on +1 and -1
    pair = device_block("DovePrism", {"theta": math.pi / 4}) @ device_block("DovePrism", {"theta": 0.0})
    assert np.allclose(pair, np.diag([-1j, 1j]))


@pytest.mark.parametrize(
    "kind,params",
    [
        ("BS", {}),
        ("PBS", {}),
        ("BeamDisplacer", {}),
        ("HWP", {"theta": 0.3}),
        ("QWP", {"theta": 0.7}),
        ("LC", {"phase": 1.1}),
        ("DovePrism", {"theta": 0.2}),
        ("OAM-BS", {"theta": math.pi / 4}),
        ("QPlate", {}),
        ("PhaseShift", {"phi": 2.0}),
        ("Swap", {}),
    ],
)
def test_every_device_block_is_unitary(kind, params):
    b = device_block(kind, params)
    assert np.allclose(b @ b.conj().T, np.eye(b.shape[0]), atol=1e-12)


def test_oam_beam_splitter_sorts_by_path():
    # +1 and -1 entering the same port leave through different ports
    b = device_block("OAM-BS", {"theta": math.pi / 4})
    assert np.count_nonzero(np.abs(b) > 1e-12) == 4


def test_empty_circuit_is_identity():
    assert np.allclose(compose_circuit(CircuitSpec(5, 1)).matrix, np.eye(5))


def test_two_beam_splitters_compose_by_matrix_product():
    bs = DeviceSpec("BS", ((0, 1),))
    u = compose_circuit(CircuitSpec(2, 1, devices=(bs, bs))).matrix
    assert np.allclose(u, HADAMARD @ HADAMARD)


def test_composition_order():
    a = DeviceSpec("HWP", ((0, 1),), {"theta": 0.1})
    b = DeviceSpec("QWP", ((0, 1),), {"theta": 0.4})
    u = compose_circuit(CircuitSpec(2, 1, devices=(a, b))).matrix
    assert np.allclose(u, device_block("QWP", {"theta": 0.4}) @ device_block("HWP", {"theta": 0.1}))


def test_device_followed_by_adjoint_is_identity():
    h = haar_random_unitary(3, 1).matrix
    fwd = DeviceSpec("CustomUnitary", ((1, 2, 3),), {"matrix": [[[z.real, z.imag] for z in r] for r in h]})
    back = DeviceSpec("CustomUnitary", ((1, 2, 3),), {"matrix": [[[z.real, z.imag] for z in r] for r in h.conj().T]})
    u = compose_circuit(CircuitSpec(4, 1, devices=(fwd, back))).matrix
    assert np.allclose(u, np.eye(4), atol=1e-10)


def test_wiring_errors():
    with pytest.raises(WiringError):
        DeviceSpec("BS", ((0, 1), (1, 2)))
    with pytest.raises(WiringError):
        device_unitary(DeviceSpec("BS", ((0, 4),)), 4)
    with pytest.raises(WiringError):
        device_unitary(DeviceSpec("BS", ((0, 1, 2),)), 4)
    with pytest.raises(WiringError):
        DeviceSpec("Mirror", ((0,),))


def test_missing_parameter():
    with pytest.raises(CircuitParseError):
        device_unitary(DeviceSpec("HWP", ((0, 1),)), 2)


def test_non_unitary_custom_device():
    bad = DeviceSpec("CustomUnitary", ((0, 1),), {"matrix": [[[1, 0], [1, 0]], [[0, 0], [1, 0]]]})
    with pytest.raises(UnitarityError):
        device_unitary(bad, 2)


@pytest.mark.parametrize("n,D", [(4, 2), (2, 8), (3, 3)])
def test_identity_scheme_circuit(n, D):
    c = build_fig1_circuit(n, D)
    assert c.mode_count == n * D
    assert np.allclose(compose_circuit(c).matrix, np.eye(n * D))


def test_hyper_analyzer_is_unitary():
    u = compose_circuit(build_fig3_circuit()).matrix
    assert np.allclose(u @ u.conj().T, np.eye(16), atol=1e-10)


def test_hyper_analyzer_phi1_gives_eight_cross_photon_coincidences():
    u = compose_circuit(build_fig3_circuit())
    dist = evolve(u, hyper_bell_state(hyper_label(1)))
    assert len(dist) == 8
    assert all(p == pytest.approx(1 / 8, abs=1e-12) for p in dist.values())
    assert sorted(dist) == [(0, 13), (1, 12), (2, 15), (3, 14), (4, 9), (5, 8), (6, 11), (7, 10)]


def test_packaged_hyper_analyzer_matches_builder():
    a = compose_circuit(packaged_circuit("fig3_2x8.circuit.json")).matrix
    b = compose_circuit(build_fig3_circuit()).matrix
    assert np.allclose(a, b, atol=1e-15)


# --- Haar sampling ---


def test_haar_dim_one():
    z = haar_random_unitary(1, 3).matrix
    assert z.shape == (1, 1)
    assert abs(z[0, 0]) == pytest.approx(1.0)


def test_haar_seed_is_bit_reproducible():
    a = haar_random_unitary(8, 42).matrix
    b = haar_random_unitary(8, 42).matrix
    assert np.array_equal(a, b)
    assert np.allclose(a @ a.conj().T, np.eye(8), atol=1e-10)


def test_haar_first_moment():
    dim, count = 8, 10_000
    x = haar_moment_samples(dim, count, seed=7)
    # |U00|^2 ~ Beta(1, dim-1): mean 1/dim, variance (dim-1)/(dim^2 (dim+1))
    sigma = math.sqrt((dim - 1) / (dim**2 * (dim + 1)) / count)
    assert abs(x.mean() - 1 / dim) < 5 * sigma


def test_haar_rejects_zero_dimension():
    with pytest.raises(DimensionError):
        haar_random_unitary(0)


# --- G1 / G2 ---


def test_identity_two_photons_is_g1():
    assert classify_group(np.eye(4), 2, 2).group == "G1"


def test_identity_three_photons_is_g2_with_in_block_witness():
    tag = classify_group(np.eye(6), 3, 2)
    assert tag.group == "G2"
    label, prefix = tag.witness
    assert len(prefix) == 2
    assert len({m // 2 for m in prefix}) == 1


def test_haar_three_photons_is_generically_g1():
    groups = [classify_group(haar_random_unitary(6, s), 3, 2).group for s in range(20)]
    assert groups.count("G1") == 20


def test_g2_witness_really_vanishes():
    u = np.eye(8)
    tag = classify_group(u, 4, 2)
    label, prefix = tag.witness
    states = bell_basis(4, 2)
    from bellscope.bell import bell_labels

    idx = bell_labels(4, 2).index(label)
    assert prefix_marginals(u, [states[idx]], [prefix])[0, 0] <= 1e-12


def test_classify_dimension_mismatch():
    with pytest.raises(DimensionError):
        classify_group(np.eye(5), 2, 2)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), nd=st.sampled_from([(2, 2), (2, 3), (3, 2)]))
def test_g1_means_every_prefix_has_weight(seed, nd):
    n, D = nd
    u = haar_random_unitary(n * D, seed)
    tag = classify_group(u, n, D)
    assert (tag.group == "G1") == (tag.min_norm > 1e-12)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_two_photon_circuits_are_always_g1(seed):
    # a single click always leaves the partner photon somewhere
    assert classify_group(haar_random_unitary(6, seed), 2, 3).group == "G1"


# --- circuit files ---


def test_json_round_trip(tmp_path):
    c = build_fig3_circuit()
    path = tmp_path / "c.json"
    save_circuit(c, path, {"origin": "test"})
    back = load_circuit(path)
    assert back == c
    assert json.loads(path.read_text())["provenance"] == {"origin": "test"}


def test_custom_unitary_round_trip():
    u = haar_random_unitary(4, 9).matrix
    c = CircuitSpec(4, 2, devices=(DeviceSpec("CustomUnitary", ((0, 1, 2, 3),), {"matrix": [[[z.real, z.imag] for z in r] for r in u]}),))
    back = circuit_from_dict(json.loads(json.dumps(circuit_to_dict(c))))
    assert np.array_equal(compose_circuit(back).matrix, u)


def test_schema_violation_names_the_field():
    doc = circuit_to_dict(build_fig1_circuit(2, 2))
    doc["devices"][0]["kind"] = "Laser"
    with pytest.raises(CircuitParseError, match="devices/0/kind"):
        circuit_from_dict(doc)


def test_missing_required_field():
    doc = circuit_to_dict(build_fig1_circuit(2, 2))
    del doc["mode_count"]
    with pytest.raises(CircuitParseError, match="mode_count"):
        circuit_from_dict(doc)


def test_out_of_range_port_in_file():
    doc = circuit_to_dict(build_fig1_circuit(2, 2))
    doc["devices"].append({"kind": "BS", "ports": [[3, 9]]})
    with pytest.raises(CircuitParseError, match="devices/2"):
        circuit_from_dict(doc)


def test_malformed_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "mode_count": 4,\n  oops\n}')
    with pytest.raises(CircuitParseError, match=r"bad\.json:3:"):
        load_circuit(path)

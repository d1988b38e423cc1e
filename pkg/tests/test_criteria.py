import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellscope.bell import BellLabel, bell_basis, bell_state
from bellscope.circuits import CircuitSpec, DeviceSpec, classify_group, compose_circuit, haar_random_unitary
from bellscope.criteria import (
    detection_signature,
    detector_mode,
    limits,
    ll_matrix_element,
    ll_pairwise_distinguishable,
    min_signature_rank,
    numerical_rank,
    signature_rank,
    simplified_g1_distinguishable,
)
from bellscope.detection import outcome_support
from bellscope.errors import ArityError, ContractError, DimensionError
from bellscope.fock import falling_weight, output_amplitudes, output_patterns


def polarization_bsm():
    devices = (
        DeviceSpec("PBS", ((0, 1, 2, 3),)),
        DeviceSpec("HWP", ((0, 1), (2, 3)), {"theta": math.pi / 8}),
    )
    return compose_circuit(CircuitSpec(4, 2, devices=devices))


def b22(P, i):
    return bell_state(BellLabel(2, 2, P, (i,)))


# --- LL matrix elements ---


def test_diagonal_element_is_a_norm():
    u = haar_random_unitary(4, 1)
    v = ll_matrix_element(u, b22(0, 1), b22(0, 1), (2,))
    assert abs(v.imag) < 1e-14 and v.real >= 0


def test_identity_disjoint_pairs_vanish():
    assert ll_matrix_element(np.eye(4), b22(0, 0), b22(0, 1), (0,)) == 0


def test_identity_phase_partners_overlap():
    v = ll_matrix_element(np.eye(4), b22(0, 0), b22(1, 0), (0,))
    assert v == pytest.approx(0.5)


def test_pattern_order_range():
    with pytest.raises(ArityError):
        ll_matrix_element(np.eye(4), b22(0, 0), b22(1, 0), ())
    with pytest.raises(ArityError):
        ll_matrix_element(np.eye(4), b22(0, 0), b22(1, 0), (0, 1, 2))
    with pytest.raises(DimensionError):
        ll_matrix_element(np.eye(4), b22(0, 0), b22(1, 0), (7,))


def test_polarization_bsm_pairs():
    u = polarization_bsm()
    # P=1,i=1 and P=0,i=1 are the antisymmetric and symmetric anticorrelated states
    assert ll_pairwise_distinguishable(u, b22(0, 0), b22(1, 0))
    assert ll_pairwise_distinguishable(u, b22(1, 1), b22(0, 0))
    assert not ll_pairwise_distinguishable(u, b22(0, 1), b22(1, 1))


def test_state_against_itself_is_rejected():
    with pytest.raises(ValueError):
        ll_pairwise_distinguishable(np.eye(4), b22(0, 0), b22(0, 0))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), data=st.data())
def test_hermiticity(seed, data):
    u = haar_random_unitary(6, seed)
    a = bell_state(BellLabel(3, 2, data.draw(st.integers(0, 1)), (1, 0)))
    b = bell_state(BellLabel(3, 2, data.draw(st.integers(0, 1)), (0, 1)))
    m = data.draw(st.integers(1, 3))
    pattern = tuple(data.draw(st.integers(0, 5)) for _ in range(m))
    assert ll_matrix_element(u, a, b, pattern) == pytest.approx(np.conj(ll_matrix_element(u, b, a, pattern)), abs=1e-12)


@pytest.mark.parametrize("stats", ["boson", "fermion"])
def test_matrix_element_matches_output_route(stats):
    # <i| c^dag..c |j> = sum_x conj(A_i(x)) A_j(x) * (falling weight of the clicks in x)
    u = haar_random_unitary(6, 21)
    states = [bell_state(BellLabel(3, 2, P, (1, 0)), stats) for P in (0, 1)]
    patterns, amps = output_amplitudes(u, states)
    clicks = [(0,), (3,), (1, 4), (2, 5)] + ([(2, 2), (0, 0, 1)] if stats == "boson" else [(0, 1, 5)])
    for c in clicks:
        ref = sum(np.conj(amps[0, x]) * amps[1, x] * falling_weight(p, tuple(sorted(c))) for x, p in enumerate(patterns))
        assert ll_matrix_element(u, states[0], states[1], c) == pytest.approx(ref, abs=1e-12)


def _disjoint(u, a, b):
    return not set(outcome_support(u, a).probabilities) & set(outcome_support(u, b).probabilities)


@pytest.mark.parametrize("n,D", [(2, 2), (2, 3), (3, 2)])
def test_ll_agrees_with_disjoint_supports(n, D):
    states = bell_basis(n, D)
    for seed in range(3):
        u = haar_random_unitary(n * D, seed)
        for i in range(len(states)):
            for j in range(i + 1, len(states)):
                assert ll_pairwise_distinguishable(u, states[i], states[j]) == _disjoint(u, states[i], states[j])


def test_ll_agrees_with_supports_on_structured_circuits():
    for u, states in [(polarization_bsm(), bell_basis(2, 2)), (np.eye(6), bell_basis(3, 2)), (np.eye(6), bell_basis(2, 3))]:
        for i in range(len(states)):
            for j in range(i + 1, len(states)):
                assert ll_pairwise_distinguishable(u, states[i], states[j]) == _disjoint(u, states[i], states[j])


# --- simplified criterion ---


def test_simplified_refuses_g2():
    with pytest.raises(ContractError):
        simplified_g1_distinguishable(np.eye(6), *bell_basis(3, 2)[:2])


def test_simplified_matches_ll_on_structured_g1():
    u = polarization_bsm()
    states = bell_basis(2, 2)
    for i in range(4):
        for j in range(i + 1, 4):
            assert simplified_g1_distinguishable(u, states[i], states[j]) == ll_pairwise_distinguishable(u, states[i], states[j])


@pytest.mark.parametrize("n,D", [(2, 2), (3, 2)])
def test_simplified_matches_ll_on_haar(n, D):
    states = bell_basis(n, D)
    for seed in range(3):
        u = haar_random_unitary(n * D, 100 + seed)
        tag = classify_group(u, n, D)
        assert tag.group == "G1"
        for i in range(len(states)):
            for j in range(i + 1, len(states)):
                assert simplified_g1_distinguishable(u, states[i], states[j], group=tag) == ll_pairwise_distinguishable(
                    u, states[i], states[j]
                )


# --- signatures and ranks ---


def test_detector_mode_is_the_row():
    u = haar_random_unitary(6, 2)
    dm = detector_mode(u, 4, 3)
    assert np.allclose(np.concatenate(dm.per_photon_coefficients), u.matrix[4])
    assert np.linalg.norm(np.concatenate(dm.per_photon_coefficients)) == pytest.approx(1)


def test_identity_signature_is_a_basis_vector():
    sig = detection_signature(np.eye(4), (0,), 2)
    assert np.count_nonzero(sig.vector) == 1
    assert sig.vector[0] != 0  # levels (0, 0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), s=st.integers(0, 5), t=st.integers(0, 5))
def test_boson_signature_symmetric_in_clicks(seed, s, t):
    u = haar_random_unitary(6, seed)
    assert np.allclose(detection_signature(u, (s,), t).vector, detection_signature(u, (t,), s).vector)


def test_fermion_signature_vanishes_on_repeat():
    u = haar_random_unitary(6, 5)
    assert np.allclose(detection_signature(u, (1, 4), 4, "fermion").vector, 0)


def test_signature_arity():
    with pytest.raises(ArityError):
        detection_signature(np.eye(6), (0,), 1, n=3)


@pytest.mark.parametrize("n,D,expected", [(2, 2, 3), (2, 4, 7), (3, 2, 4), (3, 3, 7)])
def test_bunched_prefix_rank_hits_the_limit(n, D, expected):
    u = haar_random_unitary(n * D, 3)
    assert signature_rank(u, (0,) * (n - 1)) == expected == limits(n, D).n1


@pytest.mark.parametrize("s", range(8))
def test_two_photon_rank_any_prefix(s):
    assert signature_rank(haar_random_unitary(8, 4), (s,)) == 7


def test_min_rank_over_prefixes_is_the_limit():
    for n, D in [(2, 3), (3, 2)]:
        rank, prefix = min_signature_rank(haar_random_unitary(n * D, 8), n)
        assert rank == limits(n, D).n1
        assert len(prefix) == n - 1


def test_numerical_rank():
    assert numerical_rank(np.zeros((3, 3))) == 0
    assert numerical_rank(np.diag([1.0, 1e-3, 1e-12])) == 2


# --- limits ---


@pytest.mark.parametrize("n,D,n1", [(3, 2, 4), (3, 3, 7), (3, 4, 10), (4, 2, 5), (4, 3, 9), (4, 4, 13)])
def test_limit_table(n, D, n1):
    assert limits(n, D).n1 == n1


def test_two_photon_eight_levels():
    lv = limits(2, 8)
    assert lv.n1 == 15
    assert lv.cc_bits == pytest.approx(3.9069, abs=1e-4)
    assert lv.me == pytest.approx(15 / 64)


def test_two_qubit_efficiency():
    lv = limits(2, 2)
    assert (lv.n1, lv.n2_lower, lv.me) == (3, 2, 0.75)
    assert not lv.me_is_lower_bound


@settings(max_examples=50)
@given(n=st.integers(2, 8), D=st.integers(2, 16))
def test_limit_invariants(n, D):
    lv = limits(n, D)
    assert lv.n1 == n * D - (n - 1)
    assert lv.n2_lower == D ** (n - 1)
    assert lv.cc_bits == pytest.approx(math.log2(lv.n1))
    if n == 2:
        assert lv.me == pytest.approx((2 * D - 1) / D**2)


def test_limit_domain():
    with pytest.raises(DimensionError):
        limits(1, 3)

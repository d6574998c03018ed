import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qubovqa import statevector as sv
from qubovqa.data import LabeledDataset

angle = st.floats(-10, 10, allow_nan=False)


def closed_form_example(t0, t1):
    """Hand-derived unitary of RX(t0) on qubit 0 then CRX(t1) on 0 -> 1."""
    c0, s0 = np.cos(t0 / 2), np.sin(t0 / 2)
    c1, s1 = np.cos(t1 / 2), np.sin(t1 / 2)
    # basis order |q1 q0>: 00, 01, 10, 11
    return np.array([
        [c0, -1j * s0, 0, 0],
        [-1j * s0 * c1, c0 * c1, -s0 * s1, -1j * c0 * s1],
        [0, 0, c0, -1j * s0],
        [-s0 * s1, -1j * c0 * s1, -1j * s0 * c1, c0 * c1],
    ])


def test_twolocal_shapes():
    c = sv.build_twolocal(2, 1)
    kinds = [g.kind for g in c.gates]
    assert kinds.count("RY") == 4 and kinds.count("CX") == 1 and c.a == 4
    assert sv.build_twolocal(3, 1).a == 6
    c = sv.build_twolocal(4, 0)
    assert c.a == 4 and all(g.kind == "RY" for g in c.gates)


def test_example_circuit_structure(example_circuit):
    c = example_circuit
    assert (c.q, c.a) == (2, 2)
    assert c.gates == (sv.Gate("RX", 0, angle_index=0), sv.Gate("CRX", 1, control=0, angle_index=1))


def test_example_unitary_entries(example_circuit):
    assert np.allclose(sv.circuit_unitary(example_circuit, [0, 0]), np.eye(4))
    assert abs(sv.circuit_unitary(example_circuit, [np.pi, 0.3])[0, 0]) < 1e-15
    t0, t1 = 0.7, -1.9
    u = sv.circuit_unitary(example_circuit, [t0, t1])
    assert abs(u[1, 0] - (-1j * np.sin(t0 / 2) * np.cos(t1 / 2))) < 1e-15


def test_example_matches_closed_form(example_circuit, rng):
    for t in rng.uniform(-2 * np.pi, 2 * np.pi, (100, 2)):
        assert np.max(np.abs(sv.circuit_unitary(example_circuit, t) - closed_form_example(*t))) < 1e-12


def test_unitarity_many_draws(example_circuit, twolocal, rng):
    for c in (example_circuit, twolocal):
        for t in rng.uniform(-7, 7, (1000, c.a)):
            u = sv.circuit_unitary(c, t)
            assert np.max(np.abs(u.conj().T @ u - np.eye(c.dim))) < 1e-10


def test_rejects_bad_angles(example_circuit):
    with pytest.raises(ValueError):
        sv.circuit_unitary(example_circuit, [0.1])
    with pytest.raises(ValueError):
        sv.circuit_unitary(example_circuit, [0.1, np.nan])


@pytest.mark.parametrize("kwargs", [
    dict(kind="RX", target=0),
    dict(kind="CX", target=0),
    dict(kind="CRX", target=1, control=1, angle_index=0),
    dict(kind="H", target=0),
])
def test_gate_validation(kwargs):
    with pytest.raises(ValueError):
        sv.Gate(**kwargs)


def test_circuit_validation():
    with pytest.raises(ValueError):
        sv.ParamCircuit(1, (sv.Gate("RX", 1, angle_index=0),), 1)
    with pytest.raises(ValueError):  # angle 1 unused
        sv.ParamCircuit(1, (sv.Gate("RX", 0, angle_index=0),), 2)
    with pytest.raises(ValueError):
        sv.ParamCircuit(7, (), 0)


def test_gate_order_matters():
    ab = sv.ParamCircuit(1, (sv.Gate("RX", 0, angle_index=0), sv.Gate("RY", 0, angle_index=1)), 2)
    ba = sv.ParamCircuit(1, (sv.Gate("RY", 0, angle_index=1), sv.Gate("RX", 0, angle_index=0)), 2)
    t = [0.9, 1.3]
    assert not np.allclose(sv.circuit_unitary(ab, t), sv.circuit_unitary(ba, t))


def test_apply_examples(example_circuit, twolocal, rng):
    zero = sv.StateVector.basis(0, 2)
    assert np.allclose(sv.apply(example_circuit, [0, 0], zero).amplitudes, zero.amplitudes)
    one_qubit = sv.ParamCircuit(1, (sv.Gate("RX", 0, angle_index=0),), 1)
    out = sv.apply(one_qubit, [np.pi], sv.StateVector.basis(0, 1))
    assert abs(abs(out.amplitudes[1]) - 1) < 1e-12
    for _ in range(20):
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        state = sv.StateVector(psi / np.linalg.norm(psi))
        t = rng.uniform(-4, 4, 4)
        got = sv.apply(twolocal, t, state).amplitudes
        assert np.max(np.abs(got - sv.circuit_unitary(twolocal, t) @ state.amplitudes)) < 1e-10
    with pytest.raises(ValueError):
        sv.apply(twolocal, np.zeros(4), sv.StateVector.basis(0, 1))


@settings(max_examples=60, deadline=None)
@given(st.lists(angle, min_size=6, max_size=6), st.lists(st.floats(-1, 1), min_size=8, max_size=8))
def test_norm_preserved(angles, amps):
    v = np.array(amps)
    if np.linalg.norm(v) < 1e-3:
        v = np.ones(8)
    c = sv.build_twolocal(3, 1)
    out = sv.apply(c, angles, sv.StateVector(v / np.linalg.norm(v)))
    assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-9


def test_statevector_validation():
    with pytest.raises(ValueError):
        sv.StateVector([1, 1])
    with pytest.raises(ValueError):
        sv.StateVector([1, 0, 0], q=2)


def test_encode_features():
    assert np.allclose(sv.encode_features([1, 0, 0, 0], 2).amplitudes, [1, 0, 0, 0])
    assert np.allclose(sv.encode_features([3, 4], 1).amplitudes, [0.6, 0.8])
    assert np.allclose(sv.encode_features([1, 1, 1, 1], 2).amplitudes, 0.5)
    assert np.allclose(sv.encode_features([2.0], 2).amplitudes, [1, 0, 0, 0])
    with pytest.raises(ValueError):
        sv.encode_features([0, 0], 1)
    with pytest.raises(ValueError):
        sv.encode_features([1, 2, 3], 1)


def test_predict_examples(example_circuit, twolocal):
    zero = sv.StateVector.basis(0, 2)
    assert sv.predict(example_circuit, [0, 0], zero, sv.ReadoutSpec("single_qubit", 0)) == 0
    # RY(pi) on qubit 0 gives |01>, the CX then sets qubit 1: |11>
    eleven = sv.apply(twolocal, [np.pi, 0, 0, 0], zero)
    assert abs(abs(eleven.amplitudes[3]) - 1) < 1e-12
    assert sv.predict(twolocal, [np.pi, 0, 0, 0], zero, sv.ReadoutSpec("single_qubit", 1)) == 1
    uniform = sv.encode_features([1, 1, 1, 1], 2)
    assert sv.predict(twolocal, np.zeros(4), uniform, sv.ReadoutSpec("single_qubit", 0)) == 0
    assert sv.predict(twolocal, np.zeros(4), uniform, sv.ReadoutSpec("all_qubits")) == 0


def test_readout_masks():
    assert sv.ReadoutSpec("single_qubit", 1).class_one_mask(2).tolist() == [False, False, True, True]
    assert sv.ReadoutSpec("all_qubits").class_one_mask(2).tolist() == [False, True, True, False]
    with pytest.raises(ValueError):
        sv.ReadoutSpec("single_qubit", 2).class_one_mask(2)
    with pytest.raises(ValueError):
        sv.ReadoutSpec("majority")


def test_accuracy_examples(twolocal, rng):
    ro = sv.ReadoutSpec("single_qubit", 0)
    one = LabeledDataset(np.array([[1.0, 0, 0, 0]]), np.array([0]))
    assert sv.accuracy(twolocal, np.zeros(4), one, ro) == 1.0
    zeros = LabeledDataset(rng.uniform(0, 1, (5, 4)) * [1, 0, 1, 0] + [0.1, 0, 0, 0], np.zeros(5))
    assert sv.accuracy(twolocal, np.zeros(4), zeros, ro) == 1.0
    ds = LabeledDataset(rng.uniform(0.01, 1, (16, 4)), rng.integers(0, 2, 16))
    t = rng.uniform(0, 2 * np.pi, 4)
    hits = sum(
        sv.predict(twolocal, t, sv.encode_features(x, 2), ro) == y for x, y in zip(ds.features, ds.labels)
    )
    assert sv.accuracy(twolocal, t, ds, ro) == hits / 16
    with pytest.raises(ValueError):
        sv.accuracy(twolocal, t, LabeledDataset(np.zeros((0, 4)), np.zeros(0)), ro)

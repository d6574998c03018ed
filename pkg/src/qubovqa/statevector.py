"""Dense state-vector simulation of small parameterized circuits.

Qubit 0 is the least significant bit of a basis-state index, so on two qubits
the basis order is |q1 q0> = 00, 01, 10, 11.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

PARAMETERIZED = frozenset({"RX", "RY", "RZ", "CRX", "CRY"})
CONTROLLED = frozenset({"CRX", "CRY", "CX"})
GATE_KINDS = PARAMETERIZED | CONTROLLED

MAX_QUBITS = 6


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    control: Optional[int] = None
    angle_index: Optional[int] = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if (self.kind in CONTROLLED) != (self.control is not None):
            raise ValueError(f"{self.kind} control qubit mismatch")
        if self.control is not None and self.control == self.target:
            raise ValueError("control and target must differ")
        if (self.kind in PARAMETERIZED) != (self.angle_index is not None):
            raise ValueError(f"{self.kind} angle index mismatch")


@dataclass(frozen=True)
class ParamCircuit:
    q: int
    gates: tuple[Gate, ...]
    a: int

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if not 1 <= self.q <= MAX_QUBITS:
            raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {self.q}")
        used = set()
        for g in self.gates:
            if g.target >= self.q or (g.control is not None and g.control >= self.q):
                raise ValueError(f"gate {g} out of range for {self.q} qubits")
            if g.angle_index is not None:
                if not 0 <= g.angle_index < self.a:
                    raise ValueError(f"angle index {g.angle_index} outside [0, {self.a})")
                used.add(g.angle_index)
        if used != set(range(self.a)):
            raise ValueError("every angle index in [0, a) must be used")

    @property
    def dim(self) -> int:
        return 2**self.q


@dataclass(frozen=True)
class ReadoutSpec:
    """Binary readout rule.

    ``mode`` is ``"single_qubit"`` (class 1 is the qubit ``index`` measured as
    |1>) or ``"all_qubits"`` (class 1 is odd parity over every qubit).
    """

    mode: str = "single_qubit"
    index: int = 0
    threshold: float = 0.5

    def __post_init__(self):
        if self.mode not in ("single_qubit", "all_qubits"):
            raise ValueError(f"unknown readout mode {self.mode!r}")

    def class_one_mask(self, q: int) -> np.ndarray:
        idx = np.arange(2**q)
        if self.mode == "single_qubit":
            if self.index >= q:
                raise ValueError(f"readout qubit {self.index} outside {q} qubits")
            return ((idx >> self.index) & 1).astype(bool)
        parity = np.zeros(2**q, dtype=int)
        for b in range(q):
            parity ^= (idx >> b) & 1
        return parity.astype(bool)

    def label_index(self, label: int, q: int) -> int:
        """Basis state used as the expected output for ``label``."""
        if not label:
            return 0
        return 1 << self.index if self.mode == "single_qubit" else 1


def build_twolocal(q: int, reps: int) -> ParamCircuit:
    """RY rotation layers interleaved with linear-chain CX entanglers."""
    if q < 1 or reps < 0:
        raise ValueError("need q >= 1 and reps >= 0")
    gates = []
    angle = 0
    for layer in range(reps + 1):
        for t in range(q):
            gates.append(Gate("RY", t, angle_index=angle))
            angle += 1
        if layer < reps:
            for t in range(q - 1):
                gates.append(Gate("CX", t + 1, control=t))
    return ParamCircuit(q, tuple(gates), angle)


def build_example_circuit() -> ParamCircuit:
    """Two-qubit example: RX on qubit 0, then CRX on qubit 1 controlled by qubit 0."""
    return ParamCircuit(
        2,
        (Gate("RX", 0, angle_index=0), Gate("CRX", 1, control=0, angle_index=1)),
        2,
    )


def gate_matrix_2x2(kind: str, theta: float = 0.0) -> np.ndarray:
    """The 2x2 block acting on the target qubit."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    if kind in ("RX", "CRX"):
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind in ("RY", "CRY"):
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RZ":
        return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]])
    if kind == "CX":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    raise ValueError(f"unknown gate kind {kind!r}")


def _full_gate(gate: Gate, q: int, theta: float) -> np.ndarray:
    # kron order puts qubit q-1 leftmost, matching the little-endian index
    block = gate_matrix_2x2(gate.kind, theta)
    eye = np.eye(2, dtype=complex)
    if gate.control is None:
        ops = [block if b == gate.target else eye for b in reversed(range(q))]
        full = ops[0]
        for op in ops[1:]:
            full = np.kron(full, op)
        return full
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    off = [p0 if b == gate.control else eye for b in reversed(range(q))]
    on = [p1 if b == gate.control else block if b == gate.target else eye for b in reversed(range(q))]
    m_off, m_on = off[0], on[0]
    for a, b in zip(off[1:], on[1:]):
        m_off = np.kron(m_off, a)
        m_on = np.kron(m_on, b)
    return m_off + m_on


def _check_angles(circuit: ParamCircuit, angles) -> np.ndarray:
    angles = np.asarray(angles, dtype=float).reshape(-1)
    if angles.shape != (circuit.a,):
        raise ValueError(f"expected {circuit.a} angles, got {angles.size}")
    if not np.all(np.isfinite(angles)):
        raise ValueError("angles must be finite")
    return angles


def _theta(gate: Gate, angles: np.ndarray) -> float:
    return 0.0 if gate.angle_index is None else float(angles[gate.angle_index])


def circuit_unitary(circuit: ParamCircuit, angles: Sequence[float]) -> np.ndarray:
    angles = _check_angles(circuit, angles)
    u = np.eye(circuit.dim, dtype=complex)
    for g in circuit.gates:
        u = _full_gate(g, circuit.q, _theta(g, angles)) @ u
    return u


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    q: int = field(default=-1)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        q = self.q if self.q >= 0 else int(round(np.log2(max(amps.size, 1))))
        if amps.size != 2**q:
            raise ValueError(f"state of length {amps.size} is not 2**{q}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state is not normalized (norm {norm})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "q", q)

    @classmethod
    def basis(cls, index: int, q: int) -> "StateVector":
        amps = np.zeros(2**q, dtype=complex)
        amps[index] = 1.0
        return cls(amps, q)


def apply_gates(circuit: ParamCircuit, angles: np.ndarray, amps: np.ndarray) -> np.ndarray:
    """Gate-by-gate update of one or many states (rows of ``amps``)."""
    out = np.array(amps, dtype=complex)
    idx = np.arange(circuit.dim)
    for g in circuit.gates:
        block = gate_matrix_2x2(g.kind, _theta(g, angles))
        bit = 1 << g.target
        lo = idx[(idx & bit) == 0]
        if g.control is not None:
            lo = lo[(lo >> g.control) & 1 == 1]
        hi = lo | bit
        a0, a1 = out[..., lo].copy(), out[..., hi].copy()
        out[..., lo] = block[0, 0] * a0 + block[0, 1] * a1
        out[..., hi] = block[1, 0] * a0 + block[1, 1] * a1
    return out


def apply(circuit: ParamCircuit, angles: Sequence[float], state: StateVector) -> StateVector:
    angles = _check_angles(circuit, angles)
    if state.q != circuit.q:
        raise ValueError(f"state has {state.q} qubits, circuit has {circuit.q}")
    return StateVector(apply_gates(circuit, angles, state.amplitudes), circuit.q)


def encode_features(features: Sequence[float], q: int) -> StateVector:
    """Amplitude encoding: zero-pad to 2**q and L2-normalize."""
    return StateVector(encode_matrix(np.atleast_2d(features), q)[0], q)


def encode_matrix(features: np.ndarray, q: int) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[1] > 2**q:
        raise ValueError(f"need at most {2**q} features per record for {q} qubits")
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0):
        raise ValueError("cannot encode an all-zero feature vector")
    amps = np.zeros((x.shape[0], 2**q))
    amps[:, : x.shape[1]] = x / norms[:, None]
    return amps


def class_one_probability(circuit, angles, states: np.ndarray, readout: ReadoutSpec) -> np.ndarray:
    """Probability of reading class 1 for each row of ``states``."""
    angles = _check_angles(circuit, angles)
    out = np.atleast_2d(states) @ circuit_unitary(circuit, angles).T
    probs = np.abs(out) ** 2
    return probs[:, readout.class_one_mask(circuit.q)].sum(axis=1)


def predict(circuit: ParamCircuit, angles, input: StateVector, readout: ReadoutSpec) -> int:
    # ties at the threshold go to class 0
    p = class_one_probability(circuit, angles, input.amplitudes, readout)[0]
    return int(p > readout.threshold)


def predict_many(circuit, angles, states: np.ndarray, readout: ReadoutSpec) -> np.ndarray:
    return (class_one_probability(circuit, angles, states, readout) > readout.threshold).astype(int)


def accuracy(circuit: ParamCircuit, angles, dataset, readout: ReadoutSpec) -> float:
    """Fraction of records of ``dataset`` whose prediction matches the label."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    pred = predict_many(circuit, angles, dataset.states(circuit.q), readout)
    return float(np.mean(pred == dataset.labels))

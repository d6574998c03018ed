"""From circuit to angles on the two-angle RX/CRX circuit.

Run: python3 demos/01_two_angle_walkthrough.py
"""
import numpy as np

from qubovqa import statevector as sv
from qubovqa.qubo import assemble, build_record_batch, feasible_assignments, make_grid, surrogate_loss
from qubovqa.sampler import brute_force, decode
from qubovqa.symbolic import dump_operator, surrogate_operator, symbolic_unitary

circuit = sv.build_example_circuit()

# Exact symbolic unitary, then the real-valued surrogate the QUBO encodes.
print(dump_operator(symbolic_unitary(circuit)))
op = surrogate_operator(circuit)
print(dump_operator(op))

# Four amplitude-encoded records and their one-hot targets.
rng = np.random.default_rng(0)
x = rng.uniform(0.1, 1.0, (4, 4))
x /= np.linalg.norm(x, axis=1)[:, None]
targets = np.eye(4)[[0, 1, 0, 1]]

# Two partitions per angle over [0, 2pi), one candidate point each.
grid = make_grid([[0, 2 * np.pi]] * 2, d=2, w=1)
point = (0, 0)
model = assemble(build_record_batch(op, x, targets, grid, point), a=2, d=2)
print(f"\nQUBO: {model.n_vars} variables, {len(model.quadratic)} couplings, lambda={model.penalty_weight:.3f}")

# Every feasible assignment, with the loss it encodes.
cand = grid.candidates(point)
for combo, bits in feasible_assignments(2, 2):
    angles = cand[[0, 1], list(combo)]
    print(f"  bits {bits.tolist()} angles {np.round(angles, 3)} energy {model.energy(model.complete(bits)):.6f}"
          f" loss {surrogate_loss(op, angles, x, targets):.6f}")

best = brute_force(model)
print(f"\nminimum {best.energy:.6f} at {best.assignment.tolist()} -> angles {decode(best, grid, point).angles}")

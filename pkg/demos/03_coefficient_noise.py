"""How multiplicative noise on the QUBO coefficients moves training accuracy.

Run: python3 demos/03_coefficient_noise.py
"""
from qubovqa import harness as h
from qubovqa.search import SearchConfig

cfg = h.ExperimentConfig(repeats=8, search=SearchConfig(L=1, d=2, w=1))
print("noise   min    q1     median q3     max")
for s in h.noise_sweep(cfg, [0.0, 0.05, 0.1, 0.2]):
    print(f"{s.level:<6}  " + "  ".join(f"{v:.3f}" for v in s.summary))

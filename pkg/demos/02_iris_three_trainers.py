"""Hierarchical QUBO search against SPSA and the memetic baseline on Iris.

Run: python3 demos/02_iris_three_trainers.py
Writes demo_output/iris_rows.csv and prints the accuracy/time front.
"""
from dataclasses import replace

from qubovqa import harness as h
from qubovqa.search import SearchConfig

base = h.ExperimentConfig(repeats=5, circuit=h.CircuitSpec(q=2, ansatz="twolocal"))

configs = [
    replace(base, search=SearchConfig(L=1, d=2, w=1)),
    replace(base, search=SearchConfig(L=1, d=2, w=2)),
    replace(base, search=SearchConfig(L=2, d=2, w=1, tau=0.05)),
    replace(base, method="spsa"),
    replace(base, method="memetic"),
]

means = []
for cfg in configs:
    res = h.run_experiment(cfg)
    means.append(res.mean)
    m = res.mean
    print(f"{m.label:32s} train {m.taccuracy:.3f}  validation {m.vaccuracy:.3f}  "
          f"time {m.time:7.3f}s  iterations {m.iterations:g}")

h.write_rows(means, "demo_output/iris_rows.csv")
print("\nnon-dominated (accuracy up, time down):")
for r in h.pareto_front(means):
    print(f"  {r.label:32s} {r.taccuracy:.3f} {r.time:.3f}s")

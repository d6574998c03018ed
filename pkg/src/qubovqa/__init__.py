"""Gradient-free training of variational quantum circuits through QUBO sampling."""
from .statevector import ParamCircuit, ReadoutSpec, StateVector, build_twolocal, circuit_unitary
from .symbolic import surrogate_operator, symbolic_unitary
from .qubo import AngleGrid, QuboModel, assemble, make_grid
from .sampler import AnnealSchedule, Sample, brute_force, simulated_anneal
from .search import SearchConfig, run_search

__all__ = [
    "AngleGrid", "AnnealSchedule", "ParamCircuit", "QuboModel", "ReadoutSpec", "Sample", "SearchConfig",
    "StateVector", "assemble", "brute_force", "build_twolocal", "circuit_unitary", "make_grid", "run_search",
    "simulated_anneal", "surrogate_operator", "symbolic_unitary",
]

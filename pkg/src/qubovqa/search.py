"""Hierarchical recursive search over discretized circuit angles.

Each level splits every angle's window into ``d`` partitions holding ``w``
candidate points.  One QUBO is built and sampled per point group (the same
relative point index chosen for each angle, ``w**a`` groups), the decoded
angles are scored by training accuracy, and the next level shrinks the window
around the best point found so far.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np

from . import statevector as sv
from .qubo import (
    QuboModel, assemble, build_record_batch, draw_offsets, linearize, make_grid, point_groups, term_table,
)
from .sampler import AnnealSchedule, best_feasible, brute_force, decode, inject_noise, simulated_anneal
from .symbolic import surrogate_operator

SOLVERS = ("anneal", "exact")


@dataclass(frozen=True)
class SearchConfig:
    L: int = 1
    d: int = 2
    w: int = 1
    tau: float = 0.0
    rescale: float = 0.5
    angle_range: tuple[float, float] = (0.0, 2 * np.pi)
    lam: Optional[float] = None  # None: twice the loss coefficient mass
    schedule: AnnealSchedule = field(default_factory=AnnealSchedule)
    seed: int = 0
    solver: str = "anneal"
    noise: float = 0.0
    point_offsets: Optional[tuple[float, ...]] = None  # None: stratum midpoints
    random_offsets: bool = False  # draw fresh stratified offsets every level

    def __post_init__(self):
        if self.L < 1 or self.d < 1 or self.w < 1:
            raise ValueError("need L, d, w >= 1")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if not 0 < self.rescale <= 1:
            raise ValueError("rescale must lie in (0, 1]")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if not 0 <= self.noise < 1:
            raise ValueError("noise must lie in [0, 1)")
        lo, hi = self.angle_range
        if not hi > lo:
            raise ValueError("angle_range must be increasing")

    def max_executions(self, a: int) -> int:
        return self.L * self.w**a


@dataclass(frozen=True)
class ExecutionRecord:
    level: int
    point_index: int
    point: tuple[int, ...]
    angles: Optional[tuple[float, ...]]
    energy: float
    accuracy: float
    wall_time: float
    n_vars: int
    n_primary: int
    n_candidates: int
    feasible: bool

    def as_dict(self) -> dict:
        return {
            "level": self.level, "point_index": self.point_index, "point": list(self.point),
            "angles": None if self.angles is None else list(self.angles),
            "energy": self.energy, "accuracy": self.accuracy, "wall_time": self.wall_time,
            "n_vars": self.n_vars, "n_primary": self.n_primary,
            "n_candidates": self.n_candidates, "feasible": self.feasible,
        }


@dataclass(frozen=True)
class SearchState:
    level: int
    centroid: np.ndarray
    ranges: np.ndarray  # (a, 2)
    best_accuracy: float = -np.inf
    param_accuracy_map: dict = field(default_factory=dict)
    best: Optional[ExecutionRecord] = None

    @classmethod
    def initial(cls, a: int, cfg: SearchConfig) -> "SearchState":
        ranges = np.tile(np.asarray(cfg.angle_range, dtype=float), (a, 1))
        return cls(1, ranges.mean(axis=1), ranges)

    @property
    def width(self) -> np.ndarray:
        return self.ranges[:, 1] - self.ranges[:, 0]


@lru_cache(maxsize=32)
def _terms(circuit: sv.ParamCircuit):
    return term_table(surrogate_operator(circuit))


def _ranks(rec: ExecutionRecord, order: int):
    return (-rec.accuracy, rec.energy, order)


def _seed(cfg: SearchConfig, level: int, k: int, stream: int) -> int:
    ss = np.random.SeedSequence([cfg.seed, level, k, stream])
    return int(ss.generate_state(1)[0])


def level_offsets(cfg: SearchConfig, level: int):
    if cfg.point_offsets is not None or not cfg.random_offsets:
        return cfg.point_offsets
    return draw_offsets(cfg.w, np.random.default_rng(_seed(cfg, level, 0, 2)))


def build_model(circuit, cfg: SearchConfig, grid, point, inputs, targets) -> QuboModel:
    lin = linearize(_terms(circuit), grid, point)
    records = build_record_batch(None, inputs, targets, grid, point, linearized=lin)
    return assemble(records, circuit.a, cfg.d, cfg.lam)


def training_targets(labels, q: int, readout: sv.ReadoutSpec) -> np.ndarray:
    targets = np.zeros((len(labels), 2**q))
    targets[np.arange(len(labels)), [readout.label_index(int(y), q) for y in labels]] = 1.0
    return targets


def solve(model: QuboModel, cfg: SearchConfig, seed: int):
    if cfg.solver == "exact":
        return [brute_force(model)]
    return simulated_anneal(model, replace(cfg.schedule, seed=seed))


def run_level(state: SearchState, cfg: SearchConfig, dataset, circuit: sv.ParamCircuit, readout: sv.ReadoutSpec):
    """One sampler execution per point group; returns the records and the best one.

    Executions without a feasible sample are kept with ``feasible=False`` and
    never win.  The best record is ``None`` when no execution was feasible.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    a = circuit.a
    if state.ranges.shape != (a, 2):
        raise ValueError("search state does not match the circuit")
    grid = make_grid(state.ranges, cfg.d, cfg.w, level_offsets(cfg, state.level), state.level)
    inputs = dataset.states(circuit.q)
    targets = training_targets(dataset.labels, circuit.q, readout)
    records = []
    for k, point in enumerate(point_groups(a, cfg.w)):
        t0 = time.perf_counter()
        model = build_model(circuit, cfg, grid, point, inputs, targets)
        if cfg.noise > 0:
            model = inject_noise(model, cfg.noise, _seed(cfg, state.level, k, 1))
        chosen = best_feasible(solve(model, cfg, _seed(cfg, state.level, k, 0)))
        if chosen is None:
            rec = ExecutionRecord(state.level, k, point, None, np.nan, np.nan,
                                  time.perf_counter() - t0, model.n_vars, model.n_primary, a * cfg.d, False)
        else:
            angles = decode(chosen, grid, point).angles
            acc = sv.accuracy(circuit, angles, dataset, readout)
            rec = ExecutionRecord(state.level, k, point, tuple(float(t) for t in angles), chosen.energy, acc,
                                  time.perf_counter() - t0, model.n_vars, model.n_primary, a * cfg.d, True)
        records.append(rec)
    feasible = [(r, i) for i, r in enumerate(records) if r.feasible]
    best = min(feasible, key=lambda ri: _ranks(*ri))[0] if feasible else None
    return records, best


def absorb(state: SearchState, records) -> SearchState:
    """Fold a level's executions into the parameters-accuracy map."""
    amap = dict(state.param_accuracy_map)
    best = state.best
    for r in records:
        if not r.feasible:
            continue
        amap.setdefault(r.angles, r.accuracy)
        if best is None or _ranks(r, 0)[:2] < _ranks(best, 0)[:2]:
            best = r
    best_acc = best.accuracy if best is not None else state.best_accuracy
    return replace(state, param_accuracy_map=amap, best=best, best_accuracy=max(state.best_accuracy, best_acc))


def recenter(state: SearchState, best_point, cfg: SearchConfig) -> SearchState:
    """Window of ``rescale`` times the old width centred on ``best_point``."""
    c = np.asarray(best_point, dtype=float)
    half = cfg.rescale * state.width / 2
    return replace(state, level=state.level + 1, centroid=c, ranges=np.stack([c - half, c + half], axis=1))


@dataclass(frozen=True)
class SearchResult:
    angles: Optional[np.ndarray]
    accuracy: float
    records: list
    levels_run: int
    stopped_early: bool
    infeasible_levels: tuple[int, ...]
    windows: tuple  # per level (a, 2) ranges


def run_search(cfg: SearchConfig, dataset, circuit: sv.ParamCircuit, readout: sv.ReadoutSpec) -> SearchResult:
    """Level loop with early stop once the accuracy drop exceeds ``tau``.

    The drop of a level is the running best accuracy minus that level's best;
    a level with no feasible execution counts as a full drop.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    state = SearchState.initial(circuit.a, cfg)
    records, windows, infeasible = [], [], []
    stopped = False
    while True:
        windows.append(state.ranges.copy())
        level_records, level_best = run_level(state, cfg, dataset, circuit, readout)
        records.extend(level_records)
        state = absorb(state, level_records)
        if level_best is None:
            infeasible.append(state.level)
            stopped = state.level < cfg.L
            break
        drop = state.best_accuracy - level_best.accuracy
        if state.level >= cfg.L:
            break
        if drop > cfg.tau:
            stopped = True
            break
        state = recenter(state, state.best.angles, cfg)
    best = state.best
    return SearchResult(
        None if best is None else np.array(best.angles),
        float("nan") if best is None else best.accuracy,
        records, state.level, stopped, tuple(infeasible), tuple(windows),
    )

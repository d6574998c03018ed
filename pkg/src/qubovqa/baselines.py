"""Classical reference trainers: SPSA and a memetic algorithm.

Both are written against plain callables (``spsa_minimize``,
``memetic_optimize``) and wrapped for circuits by ``spsa_train`` and
``memetic_train``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import statevector as sv

TWO_PI = 2 * np.pi


def mse_loss(circuit: sv.ParamCircuit, angles, dataset, readout: sv.ReadoutSpec) -> float:
    """Mean of ``(y - p)**2`` with ``p`` the class-1 readout probability."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    p = sv.class_one_probability(circuit, angles, dataset.states(circuit.q), readout)
    return float(np.mean((dataset.labels - p) ** 2))


@dataclass(frozen=True)
class TrainResult:
    method: str
    angles: np.ndarray
    accuracy: float
    trace: tuple
    evaluations: int


# ------------------------------------------------------------------- SPSA


@dataclass(frozen=True)
class SpsaConfig:
    iterations: int = 100
    a_gain: Optional[float] = None  # None: calibrate
    c_perturb: float = 0.2
    calibration_samples: int = 25
    stability: Optional[float] = None  # A; None: 10% of iterations
    target_step: float = TWO_PI / 10
    alpha: float = 0.602
    gamma: float = 0.101
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.c_perturb <= 0 or (self.a_gain is not None and self.a_gain <= 0):
            raise ValueError("gains must be positive")
        if self.a_gain is None and self.calibration_samples < 1:
            raise ValueError("calibration needs at least one sample")

    @property
    def A(self) -> float:
        return 0.1 * self.iterations if self.stability is None else self.stability

    def budget(self) -> int:
        """Loss evaluations performed by :func:`spsa_minimize`."""
        calib = 0 if self.a_gain is not None else 2 * self.calibration_samples
        return 2 * self.iterations + calib


def calibrate(f: Callable, x: np.ndarray, cfg: SpsaConfig, rng) -> tuple[float, int]:
    """Pick ``a`` so the first step has magnitude ``target_step``.

    The gradient magnitude is estimated from the mean absolute response to
    ``c``-sized Rademacher probes at ``x``.
    """
    resp = []
    for _ in range(cfg.calibration_samples):
        delta = rng.choice((-1.0, 1.0), size=x.size)
        resp.append(abs(f(x + cfg.c_perturb * delta) - f(x - cfg.c_perturb * delta)) / (2 * cfg.c_perturb))
    mag = float(np.mean(resp))
    if mag == 0:
        mag = 1.0
    return cfg.target_step * (cfg.A + 1) ** cfg.alpha / mag, 2 * cfg.calibration_samples


def spsa_minimize(f: Callable, x0, cfg: SpsaConfig):
    """Returns ``(x, trace, evaluations)``; the trace holds the mean of each iteration's two probes."""
    rng = np.random.default_rng(cfg.seed)
    x = np.array(x0, dtype=float).reshape(-1)
    evals = 0
    a = cfg.a_gain
    if a is None:
        a, evals = calibrate(f, x, cfg, rng)
    trace = []
    for k in range(cfg.iterations):
        ak = a / (k + 1 + cfg.A) ** cfg.alpha
        ck = cfg.c_perturb / (k + 1) ** cfg.gamma
        delta = rng.choice((-1.0, 1.0), size=x.size)
        fp, fm = f(x + ck * delta), f(x - ck * delta)
        evals += 2
        x = x - ak * (fp - fm) / (2 * ck) * delta
        trace.append(0.5 * (fp + fm))
    return x, tuple(trace), evals


def spsa_train(circuit, dataset, readout, cfg: SpsaConfig = SpsaConfig(), angle_range=(0.0, TWO_PI)) -> TrainResult:
    start = np.random.default_rng([cfg.seed, 1]).uniform(*angle_range, circuit.a)
    x, trace, evals = spsa_minimize(lambda t: mse_loss(circuit, t, dataset, readout), start, cfg)
    return TrainResult("spsa", x, sv.accuracy(circuit, x, dataset, readout), trace, evals)


# ---------------------------------------------------------------- memetic


@dataclass(frozen=True)
class MemeticConfig:
    generations: int = 10
    population: int = 20
    tournament: int = 3
    mutation_sigma: float = 0.2
    mutation_prob: float = 0.15
    local_steps: int = 3
    local_step: float = 0.01  # fraction of each gene's range
    seed: int = 0

    def __post_init__(self):
        if self.generations < 1 or self.population < 2 or self.tournament < 1:
            raise ValueError("need generations >= 1, population >= 2, tournament >= 1")
        if not 0 <= self.mutation_prob <= 1:
            raise ValueError("mutation_prob must lie in [0, 1]")
        if self.mutation_sigma < 0 or self.local_steps < 0 or self.local_step <= 0:
            raise ValueError("mutation and local-search sizes must be nonnegative")


def _local_search(fit, x, f_x, step, lo, hi, passes):
    """Coordinate descent: walk each gene by ``step`` while fitness improves."""
    evals = 0
    for _ in range(passes):
        moved = False
        for i in range(x.size):
            for sign in (1.0, -1.0):
                while True:
                    y = x.copy()
                    y[i] = np.clip(y[i] + sign * step[i], lo[i], hi[i])
                    if y[i] == x[i]:
                        break
                    f_y = fit(y)
                    evals += 1
                    if not f_y > f_x:
                        break
                    x, f_x, moved = y, f_y, True
        if not moved:
            break
    return x, f_x, evals


def memetic_optimize(fit: Callable, bounds, cfg: MemeticConfig = MemeticConfig(), init: Optional[Sequence] = None):
    """Maximize ``fit`` (any totally ordered value) inside box ``bounds``.

    Returns ``(best x, best fitness, trace of best fitness per generation, evaluations)``.
    """
    bounds = np.asarray(bounds, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    span = hi - lo
    rng = np.random.default_rng(cfg.seed)
    pop = (np.array(init, dtype=float) if init is not None
           else lo + rng.random((cfg.population, lo.size)) * span)
    fits = [fit(x) for x in pop]
    evals = len(pop)
    trace = []

    def pick():
        entrants = rng.integers(0, len(pop), cfg.tournament)
        return pop[max(entrants, key=lambda e: (fits[e], -e))]

    for _ in range(cfg.generations):
        e = max(range(len(pop)), key=lambda i: (fits[i], -i))
        elite, f_elite, n = _local_search(fit, pop[e].copy(), fits[e], cfg.local_step * span, lo, hi, cfg.local_steps)
        evals += n
        children, child_fits = [elite], [f_elite]
        while len(children) < len(pop):
            p1, p2 = pick(), pick()
            child = np.where(rng.random(lo.size) < 0.5, p1, p2)
            mutate = rng.random(lo.size) < cfg.mutation_prob
            child = np.clip(child + mutate * rng.normal(0, cfg.mutation_sigma, lo.size) * span, lo, hi)
            children.append(child)
            child_fits.append(fit(child))
            evals += 1
        pop, fits = np.array(children), child_fits
        trace.append(f_elite)
    best = max(range(len(pop)), key=lambda i: (fits[i], -i))
    if fits[best] > trace[-1]:
        trace[-1] = fits[best]
    return pop[best], fits[best], tuple(trace), evals


def memetic_train(circuit, dataset, readout, cfg: MemeticConfig = MemeticConfig(), angle_range=(0.0, TWO_PI)) -> TrainResult:
    """Fitness is training accuracy, ties broken by lower MSE."""
    states = dataset.states(circuit.q)
    labels = dataset.labels

    def fit(t):
        p = sv.class_one_probability(circuit, t, states, readout)
        return float(np.mean((p > readout.threshold) == labels)), -float(np.mean((labels - p) ** 2))

    bounds = np.tile(np.asarray(angle_range, dtype=float), (circuit.a, 1))
    x, _, trace, evals = memetic_optimize(fit, bounds, cfg)
    return TrainResult("memetic", x, sv.accuracy(circuit, x, dataset, readout), trace, evals)

"""Classical solvers for :class:`~qubovqa.qubo.QuboModel`.

``brute_force`` is the exact reference; ``simulated_anneal`` is the everyday
sampler.  ``inject_noise`` perturbs coefficients to mimic analog error.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numba
import numpy as np

from .qubo import AngleGrid, QuboModel

MAX_ENUMERATED = 24
_CHUNK = 1 << 16


@dataclass(frozen=True)
class Sample:
    assignment: np.ndarray
    energy: float
    feasible: bool

    def __post_init__(self):
        x = np.asarray(self.assignment, dtype=np.int8).copy()
        x.setflags(write=False)
        object.__setattr__(self, "assignment", x)


@dataclass(frozen=True)
class AnnealSchedule:
    sweeps: int = 2000
    beta_start: float = 0.1
    beta_end: float = 10.0
    reads: int = 64
    seed: int = 0

    def __post_init__(self):
        if not self.beta_end > self.beta_start > 0:
            raise ValueError("need beta_end > beta_start > 0")
        if self.sweeps < 1 or self.reads < 1:
            raise ValueError("sweeps and reads must be at least 1")

    def betas(self) -> np.ndarray:
        return np.geomspace(self.beta_start, self.beta_end, self.sweeps)


def one_hot_violations(bits, a: int, d: int) -> tuple[int, ...]:
    """Angles whose ``d`` partition bits are not exactly one-hot."""
    if a == 0:
        return ()
    block = np.asarray(bits)[: a * d].reshape(a, d)
    return tuple(int(i) for i in np.flatnonzero(block.sum(axis=1) != 1))


def make_sample(model: QuboModel, x) -> Sample:
    x = np.asarray(x, dtype=np.int8)
    return Sample(x, model.energy(x), not one_hot_violations(x, model.a, model.d))


# ------------------------------------------------------------- exact search


def _independent_set(upper: np.ndarray) -> np.ndarray:
    """Greedy minimum-degree independent set of the interaction graph."""
    adj = (upper != 0) | (upper.T != 0)
    alive = np.ones(len(adj), dtype=bool)
    chosen = []
    while alive.any():
        deg = np.where(alive, (adj & alive).sum(axis=1), np.iinfo(int).max)
        v = int(np.argmin(deg))
        chosen.append(v)
        alive[v] = False
        alive[adj[v]] = False
    return np.array(sorted(chosen), dtype=int)


def brute_force(model: QuboModel, max_enumerated: int = MAX_ENUMERATED) -> Sample:
    """Exact global minimum; ties go to the smallest ``sum_i x_i 2**i``.

    Variables of a greedy independent set are eliminated analytically (each is
    set to 1 exactly when its local field is negative), so only the remaining
    variables are enumerated.  Models whose remainder exceeds
    ``max_enumerated`` are rejected.
    """
    n = model.n_vars
    if n > 62:
        raise ValueError(f"too many variables for exhaustive search ({n})")
    sym = model.upper + model.upper.T
    free = _independent_set(model.upper)
    enum = np.setdiff1d(np.arange(n), free)
    if enum.size > max_enumerated:
        raise ValueError(f"too many variables for exhaustive search ({enum.size} after elimination)")
    lin = model.linear
    q_ee = model.upper[np.ix_(enum, enum)]
    q_ef = sym[np.ix_(enum, free)]
    weights_e = np.left_shift(1, enum, dtype=np.int64)
    weights_f = np.left_shift(1, free, dtype=np.int64)
    shifts = np.arange(enum.size, dtype=np.int64)

    best_e, cands = np.inf, []
    total = 1 << enum.size
    for start in range(0, total, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        xe = ((codes[:, None] >> shifts) & 1).astype(float)
        e = model.offset + xe @ lin[enum] + np.einsum("ni,ij,nj->n", xe, q_ee, xe)
        field = lin[free] + xe @ q_ef
        e = e + np.minimum(field, 0.0).sum(axis=1)
        lo = e.min()
        tol = 1e-9 * max(1.0, abs(lo), abs(best_e) if np.isfinite(best_e) else 0.0)
        if lo > best_e + tol:
            continue
        best_e = min(best_e, lo)
        for r in np.flatnonzero(e <= best_e + tol):
            xf = (field[r] < 0).astype(float)
            cands.append((int(xe[r] @ weights_e + xf @ weights_f), e[r]))
        cands = [c for c in cands if c[1] <= best_e + tol]

    def decode(code):
        return (code >> np.arange(n, dtype=np.int64)) & 1

    exact = [(model.energy(decode(c)), c) for c, _ in cands]
    e_min = min(e for e, _ in exact)
    tie = 1e-12 * max(1.0, abs(e_min))
    code = min(c for e, c in exact if e <= e_min + tie)
    return make_sample(model, decode(code))


def enumerate_energies(model: QuboModel) -> np.ndarray:
    """Energy of every assignment, indexed by ``sum_i x_i 2**i``."""
    n = model.n_vars
    if n > MAX_ENUMERATED:
        raise ValueError(f"too many variables for full enumeration ({n})")
    codes = np.arange(1 << n, dtype=np.int64)
    xs = (codes[:, None] >> np.arange(n)) & 1
    return model.energies(xs)


# --------------------------------------------------------- simulated anneal


@numba.njit(cache=True)
def _anneal_read(lin, indptr, nbr, wts, betas, x, uniforms):
    n = lin.size
    field = lin.copy()
    for i in range(n):
        if x[i]:
            for p in range(indptr[i], indptr[i + 1]):
                field[nbr[p]] += wts[p]
    energy = 0.0
    for i in range(n):
        if x[i]:
            energy += lin[i] + 0.5 * (field[i] - lin[i])
    best = x.copy()
    best_e = energy
    k = 0
    for s in range(betas.size):
        beta = betas[s]
        for i in range(n):
            delta = field[i] if x[i] == 0 else -field[i]
            if delta <= 0.0 or uniforms[k] < np.exp(-beta * delta):
                step = 1.0 if x[i] == 0 else -1.0
                x[i] = 1 - x[i]
                energy += delta
                for p in range(indptr[i], indptr[i + 1]):
                    field[nbr[p]] += step * wts[p]
                if energy < best_e:
                    best_e = energy
                    best[:] = x
            k += 1
    return best


def _csr(model: QuboModel, scale: float):
    n = model.n_vars
    rows = [[] for _ in range(n)]
    for (i, j), c in model.quadratic.items():
        if c != 0:
            rows[i].append((j, c / scale))
            rows[j].append((i, c / scale))
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    nbr = np.array([j for r in rows for j, _ in r], dtype=np.int64)
    wts = np.array([c for r in rows for _, c in r], dtype=float)
    return indptr, nbr, wts


def simulated_anneal(model: QuboModel, schedule: Optional[AnnealSchedule] = None) -> list[Sample]:
    """Single-flip Metropolis annealing; one best-seen state per read.

    Coefficients are divided by their largest magnitude so the inverse
    temperatures are scale free.  Read ``r`` draws from
    ``default_rng([seed, r])``.
    """
    schedule = schedule or AnnealSchedule()
    n = model.n_vars
    scale = max(
        np.abs(model.linear).max(initial=0.0),
        max((abs(c) for c in model.quadratic.values()), default=0.0),
    )
    scale = scale if scale > 0 else 1.0
    lin = model.linear / scale
    indptr, nbr, wts = _csr(model, scale)
    betas = schedule.betas()
    out = []
    for r in range(schedule.reads):
        rng = np.random.default_rng([schedule.seed, r])
        x0 = rng.integers(0, 2, n).astype(np.int64)
        u = rng.random(schedule.sweeps * n)
        out.append(make_sample(model, _anneal_read(lin, indptr, nbr, wts, betas, x0, u)))
    order = sorted(range(len(out)), key=lambda k: (out[k].energy, k))
    return [out[k] for k in order]


# ------------------------------------------------------------------- noise


def inject_noise(model: QuboModel, level: float, seed) -> QuboModel:
    """Multiply each nonzero coefficient by ``1 + u``, ``u ~ U[-level, level]``.

    The offset is untouched, and the returned model carries no exact parts, so
    its energy is the perturbed quadratic form.
    """
    if not 0 <= level < 1:
        raise ValueError("noise level must lie in [0, 1)")
    if level == 0:
        return model
    rng = np.random.default_rng(seed)
    lin = model.linear * (1 + rng.uniform(-level, level, model.n_vars))
    keys = sorted(model.quadratic)
    u = rng.uniform(-level, level, len(keys))
    quad = {k: model.quadratic[k] * (1 + uk) for k, uk in zip(keys, u)}
    return replace(model, linear=lin, quadratic=quad, parts=())


# ------------------------------------------------------------------ decode


@dataclass(frozen=True)
class Decoded:
    angles: Optional[np.ndarray]
    violations: tuple[int, ...]

    @property
    def feasible(self) -> bool:
        return not self.violations


def decode(sample: Sample, grid: AngleGrid, point: Sequence[int]) -> Decoded:
    """Candidate angles selected by a one-hot sample, or the violating angles."""
    a, d = grid.a, grid.d
    x = np.asarray(sample.assignment)
    if x.size < a * d:
        raise ValueError(f"sample has {x.size} bits, grid needs {a * d}")
    bad = one_hot_violations(x, a, d)
    if bad:
        return Decoded(None, bad)
    j = np.argmax(x[: a * d].reshape(a, d), axis=1)
    return Decoded(grid.candidates(point)[np.arange(a), j], ())


def best_feasible(samples: Sequence[Sample]) -> Optional[Sample]:
    """Lowest-energy feasible sample, or ``None``."""
    feas = [s for s in samples if s.feasible]
    return min(feas, key=lambda s: s.energy) if feas else None

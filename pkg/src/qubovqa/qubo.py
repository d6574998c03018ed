"""QUBO construction for the surrogate state-vector MSE.

Every angle ``i`` gets ``d`` binary variables ``C[i, j]`` (variable index
``i * d + j``), one per partition of its current range.  With one-hot
variables, ``exp(s * theta_i / 2) = sum_j C[i, j] * exp(s * v[i, j] / 2)``, so
each entry of the expanded surrogate operator becomes a multilinear
polynomial in the ``C``.  Squared residuals are averaged over records,
reduced to quadratic form with substitution auxiliaries, and the one-hot
rule is added as a quadratic penalty.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .symbolic import PRUNE, SymbolicOperator

Monomial = tuple  # sorted variable indices; () is the constant


# ---------------------------------------------------------------- angle grid


@dataclass(frozen=True)
class AngleGrid:
    lower: np.ndarray  # (a,)
    upper: np.ndarray  # (a,)
    d: int
    w: int
    level: int
    values: np.ndarray  # (a, d, w) candidate angles
    offsets: np.ndarray  # (a, w) relative positions inside a partition

    @property
    def a(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return (self.upper - self.lower) / self.d

    def bounds(self) -> np.ndarray:
        """Partition boundaries, shape (a, d + 1)."""
        return self.lower[:, None] + np.arange(self.d + 1)[None, :] * self.width[:, None]

    def candidates(self, point: Sequence[int]) -> np.ndarray:
        """Candidate value per (angle, partition) for one point group, shape (a, d)."""
        point = np.asarray(point, dtype=int)
        return self.values[np.arange(self.a), :, point]


def default_offsets(w: int) -> np.ndarray:
    """Stratum midpoints ``(k + 0.5) / w``."""
    return (np.arange(w) + 0.5) / w


def draw_offsets(w: int, rng) -> np.ndarray:
    """One seeded point per stratum ``[k/w, (k+1)/w)``, kept strictly inside (0, 1)."""
    u = rng.uniform(0.05, 0.95, w)
    return (np.arange(w) + u) / w


def make_grid(ranges, d: int, w: int, point_offsets=None, level: int = 1) -> AngleGrid:
    """Split each angle range into ``d`` equal partitions with ``w`` points each.

    ``point_offsets`` are relative positions in (0, 1), shape ``(w,)`` or
    ``(a, w)``; every partition of an angle uses the same offsets.
    """
    ranges = np.atleast_2d(np.asarray(ranges, dtype=float))
    if ranges.shape[1] != 2 or ranges.shape[0] == 0:
        raise ValueError("ranges must be a nonempty (a, 2) array")
    if d < 1 or w < 1:
        raise ValueError("need d >= 1 and w >= 1")
    lower, upper = ranges[:, 0].copy(), ranges[:, 1].copy()
    if np.any(upper <= lower):
        raise ValueError("degenerate angle range (upper <= lower)")
    a = lower.size
    offs = default_offsets(w) if point_offsets is None else np.asarray(point_offsets, dtype=float)
    offs = np.broadcast_to(offs, (a, w)).copy()
    if np.any(offs <= 0) or np.any(offs >= 1):
        raise ValueError("point offsets must lie in (0, 1)")
    width = (upper - lower) / d
    j = np.arange(d)[None, :, None]
    values = lower[:, None, None] + (j + offs[:, None, :]) * width[:, None, None]
    return AngleGrid(lower, upper, d, w, level, values, offs)


def point_groups(a: int, w: int) -> list[tuple[int, ...]]:
    """All per-angle relative point indices, row-major (angle 0 slowest)."""
    return list(itertools.product(range(w), repeat=a))


def var_index(angle: int, partition: int, d: int) -> int:
    return angle * d + partition


# ------------------------------------------------------------- linearization


@dataclass(frozen=True)
class LinearizedOperator:
    """Operator entries as linear combinations of one-hot monomials.

    ``coeffs[j, k, m]`` multiplies ``monomials[m]`` in entry ``(j, k)``.
    """

    monomials: tuple[Monomial, ...]
    coeffs: np.ndarray
    a: int
    d: int


@dataclass(frozen=True)
class TermTable:
    """Flat list of the operator's exponential terms, grouped by support."""

    dim: int
    a: int
    groups: tuple  # (support, rows, cols, coeffs, signs) with arrays over terms


def term_table(op: SymbolicOperator) -> TermTable:
    by_support: dict = defaultdict(list)
    for j, row in enumerate(op.entries):
        for k, entry in enumerate(row):
            if not entry.is_expanded:
                raise ValueError("operator must be fully expanded")
            if entry.oscillatory:
                raise ValueError("operator must be in real-exponent form")
            for t in entry.terms:
                by_support[t.support].append((j, k, t.coeff.real, [t.scale * t.signs[i] for i in t.support]))
    groups = []
    for support in sorted(by_support, key=lambda s: (len(s), s)):
        rows = by_support[support]
        groups.append((
            support,
            np.array([r[0] for r in rows]),
            np.array([r[1] for r in rows]),
            np.array([r[2] for r in rows]),
            np.array([r[3] for r in rows], dtype=float).reshape(len(rows), len(support)),
        ))
    return TermTable(op.dim, op.a, tuple(groups))


def linearize(op, grid: AngleGrid, point: Sequence[int]) -> LinearizedOperator:
    """Substitute one-hot sums for every angle at the candidates of ``point``.

    ``op`` is an expanded real-exponent operator or its :func:`term_table`.
    """
    table = op if isinstance(op, TermTable) else term_table(op)
    if table.a != grid.a:
        raise ValueError(f"operator has {table.a} angles, grid has {grid.a}")
    v = grid.candidates(point)  # (a, d)
    d = grid.d
    monomials: list = []
    blocks = []
    for support, rows, cols, coeffs, scaled in table.groups:
        n = len(support)
        combos = list(itertools.product(range(d), repeat=n))
        start = len(monomials)
        monomials.extend(tuple(var_index(i, p, d) for i, p in zip(support, c)) for c in combos)
        # values[t, c] = coeff_t * prod_i exp(scaled[t, i] * v[support_i, c_i])
        vals = coeffs[:, None].astype(float).repeat(len(combos), axis=1)
        combo_arr = np.array(combos, dtype=int).reshape(len(combos), n)
        for pos, i in enumerate(support):
            vals = vals * np.exp(scaled[:, pos][:, None] * v[i][combo_arr[:, pos]][None, :])
        blocks.append((rows, cols, start, vals))
    out = np.zeros((table.dim, table.dim, len(monomials)))
    for rows, cols, start, vals in blocks:
        idx = start + np.arange(vals.shape[1])
        np.add.at(out, (rows[:, None], cols[:, None], idx[None, :]), vals)
    return LinearizedOperator(tuple(monomials), out, table.a, d)


# ------------------------------------------------------------ record terms


def _mono_product(m1: Monomial, m2: Monomial, d: int, collapse: bool):
    merged = tuple(sorted(set(m1) | set(m2)))
    if collapse:
        angles = [v // d for v in merged]
        if len(set(angles)) != len(angles):
            return None
    return merged


@dataclass(frozen=True)
class RecordTerm:
    """Residual polynomials of one record.

    Basis state ``j`` contributes ``(target[j] - sum_m coeffs[j, m] * M_m)^2``
    with ``M_m`` the monomials of the shared linearization.
    """

    index: int
    target: np.ndarray
    input: np.ndarray
    coeffs: np.ndarray  # (dim, n_monomials)
    monomials: tuple[Monomial, ...]
    a: int
    d: int

    def residual_polynomials(self) -> list[dict]:
        polys = []
        for j in range(self.target.size):
            p: dict = defaultdict(float)
            p[()] += self.target[j]
            for m, c in zip(self.monomials, self.coeffs[j]):
                if abs(c) > PRUNE:
                    p[m] -= c
            polys.append({m: c for m, c in p.items() if abs(c) > PRUNE})
        return polys

    def polynomial(self, collapse: bool = True) -> dict:
        """Sum over basis states of the squared residuals, multilinear."""
        out: dict = defaultdict(float)
        for p in self.residual_polynomials():
            for (m1, c1), (m2, c2) in itertools.product(p.items(), repeat=2):
                m = _mono_product(m1, m2, self.d, collapse)
                if m is not None:
                    out[m] += c1 * c2
        return {m: c for m, c in out.items() if abs(c) > PRUNE}

    def n_terms(self, collapse: bool = True) -> int:
        return len(self.polynomial(collapse))

    def evaluate(self, bits) -> float:
        x = np.asarray(bits)
        mono = np.array([np.prod(x[list(m)]) if m else 1.0 for m in self.monomials])
        return float(np.sum((self.target - self.coeffs @ mono) ** 2))


def real_projection(state) -> np.ndarray:
    amps = getattr(state, "amplitudes", state)
    return np.real(np.asarray(amps)).astype(float)


def build_record_terms(
    op: SymbolicOperator,
    input,
    target,
    grid: AngleGrid,
    point_index: Sequence[int],
    index: int = 0,
    linearized: Optional[LinearizedOperator] = None,
) -> RecordTerm:
    lin = linearized if linearized is not None else linearize(op, grid, point_index)
    x_in, x_out = real_projection(input), real_projection(target)
    if x_in.size != op.dim or x_out.size != op.dim:
        raise ValueError(f"state dimension does not match operator dimension {op.dim}")
    coeffs = np.einsum("jkm,k->jm", lin.coeffs, x_in)
    return RecordTerm(index, x_out, x_in, coeffs, lin.monomials, lin.a, lin.d)


def build_record_batch(op, inputs, targets, grid, point_index, linearized=None) -> list[RecordTerm]:
    lin = linearized if linearized is not None else linearize(op, grid, point_index)
    inputs, targets = real_projection(inputs), real_projection(targets)
    coeffs = np.einsum("jkm,rk->rjm", lin.coeffs, inputs)
    return [
        RecordTerm(i, targets[i], inputs[i], coeffs[i], lin.monomials, lin.a, lin.d)
        for i in range(inputs.shape[0])
    ]


# ----------------------------------------------------------------- QUBO model


@dataclass(frozen=True)
class AuxVar:
    index: int
    left: int
    right: int
    penalty: float


def _norm_quad(quadratic: dict, n_vars: int) -> dict:
    quad: dict = {}
    for (i, j), c in quadratic.items():
        if i == j or not (0 <= i < n_vars and 0 <= j < n_vars):
            raise ValueError(f"bad quadratic index pair {(i, j)}")
        key = (min(i, j), max(i, j))
        quad[key] = quad.get(key, 0.0) + float(c)
    return quad


@dataclass(frozen=True)
class Part:
    """One additive component of a model (loss, auxiliary or one-hot penalty).

    ``offsets`` is kept as separate constants so that exactly cancelling
    penalties sum to exactly zero.
    """

    name: str
    linear: dict
    quadratic: dict
    offsets: tuple[float, ...] = ()

    def contributions(self, x: np.ndarray) -> list[float]:
        vals = list(self.offsets)
        vals.extend(c for i, c in self.linear.items() if x[i])
        vals.extend(c for (i, j), c in self.quadratic.items() if x[i] and x[j])
        return vals


@dataclass(frozen=True)
class QuboModel:
    """``energy(x) = offset + sum_i linear[i] x_i + sum_{i<j} quadratic[(i, j)] x_i x_j``.

    Samplers read the combined ``linear``/``quadratic``/``offset``.  When the
    model was assembled from parts, :meth:`energy` sums the parts with
    :func:`math.fsum` instead, so large penalties that cancel on a feasible
    assignment do not swamp the loss.
    """

    n_vars: int
    linear: np.ndarray
    quadratic: dict
    offset: float = 0.0
    penalty_weight: float = 0.0
    n_primary: int = -1
    a: int = 0
    d: int = 0
    aux: tuple[AuxVar, ...] = ()
    parts: tuple[Part, ...] = ()
    stats: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=float).copy()
        if lin.shape != (self.n_vars,):
            raise ValueError("linear coefficients must have length n_vars")
        lin.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", _norm_quad(self.quadratic, self.n_vars))
        object.__setattr__(self, "offset", float(self.offset))
        if self.n_primary < 0:
            object.__setattr__(self, "n_primary", self.n_vars)

    @classmethod
    def from_parts(cls, n_vars: int, parts: Sequence[Part], **kw) -> "QuboModel":
        linear = np.zeros(n_vars)
        quad: dict = {}
        offset = []
        for part in parts:
            for i, c in part.linear.items():
                linear[i] += c
            for key, c in part.quadratic.items():
                quad[key] = quad.get(key, 0.0) + c
            offset.extend(part.offsets)
        return cls(n_vars, linear, quad, math.fsum(offset), parts=tuple(parts), **kw)

    @cached_property
    def upper(self) -> np.ndarray:
        m = np.zeros((self.n_vars, self.n_vars))
        for (i, j), c in self.quadratic.items():
            m[i, j] = c
        return m

    def energy(self, x) -> float:
        x = np.asarray(x).astype(bool)
        if x.shape != (self.n_vars,):
            raise ValueError(f"assignment must have {self.n_vars} entries")
        if self.parts:
            return math.fsum(v for p in self.parts for v in p.contributions(x))
        vals = [self.offset, *self.linear[x]]
        vals.extend(c for (i, j), c in self.quadratic.items() if x[i] and x[j])
        return math.fsum(vals)

    def energies(self, xs) -> np.ndarray:
        """Vectorized energies from the combined coefficients."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return self.offset + xs @ self.linear + np.einsum("ni,ij,nj->n", xs, self.upper, xs)

    def complete(self, primary) -> np.ndarray:
        """Extend a primary assignment with the auxiliaries it implies."""
        x = np.zeros(self.n_vars, dtype=int)
        x[: self.n_primary] = np.asarray(primary, dtype=int)[: self.n_primary]
        for aux in self.aux:
            x[aux.index] = x[aux.left] & x[aux.right]
        return x

    def to_text(self) -> str:
        """Coordinate format: ``n_vars offset`` then ``i j coeff`` lines (``i == j`` is linear)."""
        lines = [f"{self.n_vars} {float(self.offset)!r}"]
        for i, c in enumerate(self.linear):
            if c != 0:
                lines.append(f"{i} {i} {float(c)!r}")
        for (i, j), c in sorted(self.quadratic.items()):
            if c != 0:
                lines.append(f"{i} {j} {float(c)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "QuboModel":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows:
            raise ValueError("empty QUBO file")
        n, offset = int(rows[0][0]), float(rows[0][1])
        linear = np.zeros(n)
        quad: dict = {}
        for r in rows[1:]:
            i, j, c = int(r[0]), int(r[1]), float(r[2])
            if i == j:
                linear[i] += c
            else:
                key = (min(i, j), max(i, j))
                quad[key] = quad.get(key, 0.0) + c
        return cls(n, linear, quad, offset)


def write_qubo(model: QuboModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model.to_text())


def read_qubo(path) -> QuboModel:
    with open(path, encoding="utf-8") as fh:
        return QuboModel.from_text(fh.read())


# ------------------------------------------------------------ quadratization


def quadratize(poly: dict, n_vars: int, split: bool = False):
    """Reduce a multilinear polynomial to degree two.

    Repeatedly takes the leading variable pair ``(u, v)`` of the smallest
    monomial of degree > 2, replaces ``u*v`` by a fresh auxiliary ``y`` in every
    such monomial containing both, and adds
    ``P * (u*v - 2*u*y - 2*v*y + 3*y)`` with ``P`` twice the absolute
    coefficient mass of the rewritten monomials.

    Returns ``(poly, aux_vars, total_vars)``; with ``split=True`` the
    auxiliary penalties come back as a separate polynomial,
    ``(poly, penalty_poly, aux_vars, total_vars)``.
    """
    poly = {tuple(sorted(m)): c for m, c in poly.items()}
    pen: dict = {}
    aux: list[AuxVar] = []
    nxt = n_vars
    while True:
        high = sorted(m for m in poly if len(m) > 2)
        if not high:
            break
        u, v = high[0][0], high[0][1]
        hit = [m for m in high if u in m and v in m]
        penalty = 2.0 * sum(abs(poly[m]) for m in hit) or 1.0
        y = nxt
        nxt += 1
        for m in hit:
            c = poly.pop(m)
            rest = tuple(sorted((set(m) - {u, v}) | {y}))
            poly[rest] = poly.get(rest, 0.0) + c
        for m, c in (((u, v), penalty), ((u, y), -2 * penalty), ((v, y), -2 * penalty), ((y,), 3 * penalty)):
            pen[m] = pen.get(m, 0.0) + c
        aux.append(AuxVar(y, u, v, penalty))
    if split:
        return poly, pen, tuple(aux), nxt
    for m, c in pen.items():
        poly[m] = poly.get(m, 0.0) + c
    return poly, tuple(aux), nxt


def poly_part(name: str, poly: dict) -> Part:
    linear: dict = {}
    quad: dict = {}
    offsets = []
    for m, c in poly.items():
        if len(m) == 0:
            offsets.append(c)
        elif len(m) == 1:
            linear[m[0]] = linear.get(m[0], 0.0) + c
        elif len(m) == 2:
            quad[m] = quad.get(m, 0.0) + c
        else:
            raise ValueError("polynomial has degree > 2; quadratize it first")
    return Part(name, linear, quad, tuple(offsets))


def poly_to_model(poly: dict, n_vars: int, **kw) -> QuboModel:
    return QuboModel.from_parts(n_vars, [poly_part("poly", poly)], **kw)


def uniqueness_part(a: int, d: int, lam: float) -> Part:
    linear: dict = {}
    quad: dict = {}
    for i in range(a):
        vs = [var_index(i, j, d) for j in range(d)]
        for v in vs:
            linear[v] = -lam
        for u, v in itertools.combinations(vs, 2):
            quad[(u, v)] = 2 * lam
    return Part("one_hot", linear, quad, (lam,) * a)


def add_uniqueness_constraints(model: QuboModel, a: int, d: int, lam: float) -> QuboModel:
    """Add ``lam * (sum_j C[i, j] - 1)^2`` for every angle ``i``."""
    if lam <= 0:
        raise ValueError("penalty weight must be positive")
    if a * d > model.n_vars:
        raise ValueError("model has fewer variables than a * d")
    base = model.parts or (
        Part("base", dict(enumerate(model.linear)), dict(model.quadratic), (model.offset,)),
    )
    return QuboModel.from_parts(
        model.n_vars, [*base, uniqueness_part(a, d, lam)],
        penalty_weight=model.penalty_weight + lam, n_primary=model.n_primary,
        a=a, d=d, aux=model.aux, stats=dict(model.stats),
    )


def default_penalty(poly: dict) -> float:
    """Twice the absolute coefficient mass of the non-constant loss terms."""
    mass = sum(abs(c) for m, c in poly.items() if m)
    return 2.0 * mass if mass > 0 else 1.0


def loss_polynomial(records: Sequence[RecordTerm], collapse: bool = True):
    """Mean squared-residual polynomial over records, and the summed per-record term count."""
    if not records:
        raise ValueError("no records")
    first = records[0]
    monos, d = first.monomials, first.d
    n_mono = len(monos)
    result: dict = {(): 0}
    table = np.full((n_mono, n_mono), -1, dtype=int)
    for p, m1 in enumerate(monos):
        for q_, m2 in enumerate(monos):
            m = _mono_product(m1, m2, d, collapse)
            if m is not None:
                table[p, q_] = result.setdefault(m, len(result))
    lin_idx = np.array([result.setdefault(tuple(m), len(result)) for m in monos], dtype=int)
    n_res = len(result)
    coeffs = np.stack([r.coeffs for r in records])  # (r, dim, M)
    targets = np.stack([r.target for r in records])  # (r, dim)
    gram = np.einsum("rjm,rjn->rmn", coeffs, coeffs)
    cross = np.einsum("rj,rjm->rm", targets, coeffs)
    per = np.zeros((n_res, len(records)))
    per[0] = np.sum(targets**2, axis=1)
    np.add.at(per, lin_idx, -2.0 * cross.T)
    mask = table >= 0
    np.add.at(per, table[mask], gram[:, mask].T)
    n_terms = int(np.sum(np.abs(per) > PRUNE))
    total = per.mean(axis=1)
    monos_out = sorted(result, key=result.get)
    poly = {m: float(total[i]) for i, m in enumerate(monos_out) if abs(total[i]) > PRUNE}
    return poly, n_terms


def assemble(
    records: Sequence[RecordTerm],
    a: int,
    d: int,
    lam: Optional[float] = None,
    collapse: bool = True,
) -> QuboModel:
    """Mean loss over records, quadratized, plus one-hot penalties.

    ``collapse`` drops products of two partitions of the same angle, which
    vanish on every one-hot assignment.
    """
    if not records:
        raise ValueError("empty record list")
    poly, n_terms = loss_polynomial(records, collapse)
    n_primary = a * d
    if lam is None:
        lam = default_penalty(poly)
    if lam <= 0:
        raise ValueError("penalty weight must be positive")
    qpoly, pen, aux, n_vars = quadratize(poly, n_primary, split=True)
    parts = [poly_part("loss", qpoly), poly_part("aux", pen), uniqueness_part(a, d, lam)]
    stats = dict(record_terms=n_terms, loss_terms=len(poly), n_aux=len(aux), records=len(records))
    return QuboModel.from_parts(
        n_vars, parts, penalty_weight=lam, n_primary=n_primary, a=a, d=d, aux=aux, stats=stats,
    )


# ------------------------------------------------------------- direct oracle


def surrogate_loss(op: SymbolicOperator, angles, inputs, targets) -> float:
    """Mean squared residual of the surrogate operator evaluated at ``angles``."""
    mat = np.real(op.evaluate(angles))
    inputs, targets = real_projection(inputs), real_projection(targets)
    resid = np.atleast_2d(targets) - np.atleast_2d(inputs) @ mat.T
    return float(np.mean(np.sum(resid**2, axis=1)))


def feasible_assignments(a: int, d: int) -> Iterable[tuple[tuple[int, ...], np.ndarray]]:
    """Every one-hot assignment as (partition per angle, bit vector)."""
    for combo in itertools.product(range(d), repeat=a):
        bits = np.zeros(a * d, dtype=int)
        for i, p in enumerate(combo):
            bits[var_index(i, p, d)] = 1
        yield combo, bits

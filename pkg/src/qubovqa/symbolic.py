"""Symbolic ansatz operators as sums of exponentials in the half-angles.

An entry of a :class:`SymbolicOperator` is a sum of flat exponential terms
plus products of single-gate factors (each factor itself a short sum of
exponentials, e.g. ``cos(t/2) = (e^{it/2} + e^{-it/2}) / 2``).  The pipeline is

    symbolic_unitary -> hyperbolic_substitution -> expand_products

which moves from the exact unitary, to the real-exponent surrogate where every
``i*theta`` has become ``theta``, to a flat sum of exponentials of signed
linear combinations of angles.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .statevector import ParamCircuit

PRUNE = 1e-12


@dataclass(frozen=True)
class ExpTerm:
    """``coeff * exp(unit * scale * sum_i signs[i] * theta[i])``.

    ``unit`` is ``1j`` for oscillatory entries and ``1`` after substitution;
    it lives on the owning :class:`SymbolicEntry`.
    """

    coeff: complex
    signs: tuple[int, ...]
    scale: float = 0.5

    def exponent(self, angles: np.ndarray) -> float:
        return self.scale * float(np.dot(self.signs, angles))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.signs) if s)


@dataclass(frozen=True)
class Product:
    coeff: complex
    factors: tuple["SymbolicEntry", ...]


@dataclass(frozen=True)
class SymbolicEntry:
    terms: tuple[ExpTerm, ...] = ()
    products: tuple[Product, ...] = ()
    oscillatory: bool = True

    @property
    def is_zero(self) -> bool:
        return not self.terms and not self.products

    @property
    def is_expanded(self) -> bool:
        return not self.products

    def evaluate(self, angles) -> complex:
        angles = np.asarray(angles, dtype=float)
        unit = 1j if self.oscillatory else 1.0
        total = 0j
        for t in self.terms:
            total += t.coeff * np.exp(unit * t.exponent(angles))
        for p in self.products:
            val = p.coeff
            for f in p.factors:
                val *= f.evaluate(angles)
            total += val
        return total


@dataclass(frozen=True)
class SymbolicOperator:
    q: int
    a: int
    entries: tuple[tuple[SymbolicEntry, ...], ...]

    @property
    def dim(self) -> int:
        return 2**self.q

    def evaluate(self, angles) -> np.ndarray:
        return np.array([[e.evaluate(angles) for e in row] for row in self.entries])

    def map(self, fn) -> "SymbolicOperator":
        return SymbolicOperator(self.q, self.a, tuple(tuple(fn(e) for e in row) for row in self.entries))


# single-gate factor templates, as (coeff for +angle, coeff for -angle)
_COS = (0.5, 0.5)
_MINUS_I_SIN = (-0.5, 0.5)  # -i sin(t/2) = -(e^{it/2} - e^{-it/2}) / 2
_SIN = (-0.5j, 0.5j)  # sin(t/2) = (e^{it/2} - e^{-it/2}) / 2i
_MINUS_SIN = (0.5j, -0.5j)


def _factor(pair, angle: int, a: int) -> SymbolicEntry:
    plus = tuple(1 if i == angle else 0 for i in range(a))
    minus = tuple(-s for s in plus)
    terms = tuple(ExpTerm(complex(c), s) for c, s in zip(pair, (plus, minus)) if c != 0)
    return SymbolicEntry(terms=terms)


def _gate_block(gate, a: int):
    """2x2 block as nested lists of monomials ``(coeff, factors)``."""
    if gate.kind == "CX":
        return [[[], [(1.0, ())]], [[(1.0, ())], []]]
    k = gate.angle_index
    if gate.kind in ("RX", "CRX"):
        c, s = _factor(_COS, k, a), _factor(_MINUS_I_SIN, k, a)
        return [[[(1.0, (c,))], [(1.0, (s,))]], [[(1.0, (s,))], [(1.0, (c,))]]]
    if gate.kind in ("RY", "CRY"):
        c = _factor(_COS, k, a)
        return [[[(1.0, (c,))], [(1.0, (_factor(_MINUS_SIN, k, a),))]],
                [[(1.0, (_factor(_SIN, k, a),))], [(1.0, (c,))]]]
    if gate.kind == "RZ":
        return [[[(1.0, (_factor((0, 1.0), k, a),))], []],
                [[], [(1.0, (_factor((1.0, 0), k, a),))]]]
    raise ValueError(f"no symbolic template for gate kind {gate.kind!r}")


def _full_symbolic(gate, q: int, a: int):
    dim = 2**q
    block = _gate_block(gate, a)
    bit = 1 << gate.target
    mat = [[[] for _ in range(dim)] for _ in range(dim)]
    for col in range(dim):
        if gate.control is not None and not (col >> gate.control) & 1:
            mat[col][col] = [(1.0, ())]
            continue
        cb = (col >> gate.target) & 1
        for rb in (0, 1):
            row = (col & ~bit) | (rb << gate.target)
            mat[row][col] = list(block[rb][cb])
    return mat


def _matmul(left, right):
    dim = len(left)
    out = [[None] * dim for _ in range(dim)]
    for i in range(dim):
        for j in range(dim):
            acc: dict = defaultdict(complex)
            for k in range(dim):
                if not left[i][k] or not right[k][j]:
                    continue
                for cl, fl in left[i][k]:
                    for cr, fr in right[k][j]:
                        acc[fr + fl] += cl * cr
            out[i][j] = [(c, f) for f, c in acc.items() if abs(c) > PRUNE]
    return out


def symbolic_unitary(circuit: ParamCircuit) -> SymbolicOperator:
    """Exact symbolic unitary, entries as products of per-gate exponential factors."""
    q, a = circuit.q, circuit.a
    dim = 2**q
    mat = [[[(1.0, ())] if i == j else [] for j in range(dim)] for i in range(dim)]
    for g in circuit.gates:
        mat = _matmul(_full_symbolic(g, q, a), mat)
    zero = (0,) * a
    rows = []
    for i in range(dim):
        row = []
        for j in range(dim):
            terms = tuple(ExpTerm(complex(c), zero) for c, f in mat[i][j] if not f)
            prods = tuple(Product(complex(c), f) for c, f in mat[i][j] if f)
            row.append(SymbolicEntry(terms=terms, products=prods))
        rows.append(tuple(row))
    return SymbolicOperator(q, a, tuple(rows))


def signed_magnitude(c: complex) -> float:
    """Drop the imaginary unit: ``+-x`` and ``+-i*x`` both map to ``+-x``."""
    c = complex(c)
    mag = abs(c)
    if mag == 0:
        return 0.0
    lead = c.real if abs(c.real) >= abs(c.imag) else c.imag
    return float(np.copysign(mag, lead))


def _split_phase(f: SymbolicEntry):
    """Write a flat factor as ``phase * real_factor`` when its coefficients allow."""
    if not f.terms or f.products:
        return 1.0, None
    c0 = f.terms[0].coeff
    phase = c0 / abs(c0)
    scaled = [t.coeff / phase for t in f.terms]
    if any(abs(c.imag) > PRUNE * max(1.0, abs(c)) for c in scaled):
        return 1.0, None
    real = tuple(ExpTerm(complex(c.real), t.signs, t.scale) for c, t in zip(scaled, f.terms))
    return phase, SymbolicEntry(terms=real, oscillatory=False)


def _substitute_entry(e: SymbolicEntry) -> SymbolicEntry:
    terms = tuple(ExpTerm(complex(signed_magnitude(t.coeff)), t.signs, t.scale) for t in e.terms)
    prods = []
    for p in e.products:
        coeff = complex(p.coeff)
        factors = []
        for f in p.factors:
            phase, real = _split_phase(f)
            if real is None:
                real = _substitute_entry(f)
            coeff *= phase
            factors.append(real)
        prods.append(Product(complex(signed_magnitude(coeff)), tuple(factors)))
    return SymbolicEntry(terms=terms, products=tuple(prods), oscillatory=False)


def hyperbolic_substitution(op: SymbolicOperator) -> SymbolicOperator:
    """Replace ``i*theta`` by ``theta`` in every exponent and make coefficients real.

    Each product keeps its exact phase (the ``i`` factors of sine terms
    multiply through) and only the accumulated phase is collapsed with
    :func:`signed_magnitude`.  The result is no longer unitary.
    """
    return op.map(_substitute_entry)


def _merge(terms: Iterable[ExpTerm], oscillatory: bool) -> SymbolicEntry:
    acc: dict = defaultdict(complex)
    scale = {}
    for t in terms:
        key = (t.signs, t.scale)
        acc[key] += t.coeff
        scale[key] = t.scale
    merged = [ExpTerm(c, k[0], k[1]) for k, c in acc.items() if abs(c) > PRUNE]
    merged.sort(key=lambda t: (t.signs, t.scale))
    return SymbolicEntry(terms=tuple(merged), oscillatory=oscillatory)


def _expand_product(p: Product) -> list[ExpTerm]:
    out = [ExpTerm(p.coeff, None)]  # signs filled on first factor
    for f in p.factors:
        fterms = expand_products(f).terms
        nxt = []
        for t in out:
            for u in fterms:
                signs = u.signs if t.signs is None else tuple(x + y for x, y in zip(t.signs, u.signs))
                nxt.append(ExpTerm(t.coeff * u.coeff, signs, u.scale))
        out = nxt
    return [t for t in out if t.signs is not None]


def expand_products(entry: SymbolicEntry) -> SymbolicEntry:
    """Multiply out every product into single exponentials and merge equal signs.

    For a product of n cosh-type factors this yields the 2**n terms with
    coefficient ``1 / 2**n`` each.
    """
    if entry.is_expanded:
        return _merge(entry.terms, entry.oscillatory)
    terms = list(entry.terms)
    for p in entry.products:
        terms.extend(_expand_product(p))
    return _merge(terms, entry.oscillatory)


def expand_operator(op: SymbolicOperator) -> SymbolicOperator:
    return op.map(expand_products)


def surrogate_operator(circuit: ParamCircuit) -> SymbolicOperator:
    """Fully expanded real-exponent surrogate of the circuit unitary."""
    return expand_operator(hyperbolic_substitution(symbolic_unitary(circuit)))


@dataclass(frozen=True)
class BinarizedTerm:
    term: ExpTerm
    angles: tuple[int, ...]
    bits: tuple[int, ...]


@dataclass(frozen=True)
class BinarizedEntry:
    terms: tuple[BinarizedTerm, ...] = field(default=())

    @property
    def angles(self) -> tuple[int, ...]:
        return tuple(sorted({i for t in self.terms for i in t.angles}))


def binarize_signs(entry: SymbolicEntry) -> BinarizedEntry:
    """Tag every term with ``b`` such that ``s = 2b - 1`` on its participating angles."""
    if not entry.is_expanded:
        raise ValueError("entry must be fully expanded")
    tagged = []
    for t in entry.terms:
        support = t.support
        if any(abs(t.signs[i]) != 1 for i in support):
            raise ValueError(f"sign vector {t.signs} is not in {{-1, 0, 1}}")
        bits = tuple((t.signs[i] + 1) // 2 for i in support)
        tagged.append(BinarizedTerm(t, support, bits))
    return BinarizedEntry(tuple(tagged))


def cosh_product_expansion(x: Sequence[float]) -> float:
    """Right-hand side of the binarized cosh product identity, summed explicitly."""
    x = np.asarray(x, dtype=float)
    n = x.size
    total = 0.0
    for code in range(2**n):
        b = np.array([(code >> i) & 1 for i in range(n)])
        total += np.exp(np.dot(2 * b - 1, x))
    return total / 2**n


def _fmt_term(t: ExpTerm, oscillatory: bool) -> str:
    parts = []
    for i, s in enumerate(t.signs):
        if s:
            mag = "" if abs(s) == 1 else f"{abs(s)}"
            parts.append(f"{'+' if s > 0 else '-'}{mag}θ{i}")
    c = t.coeff
    cs = f"{c.real:.6g}" if abs(c.imag) <= PRUNE else f"({c.real:.6g}{c.imag:+.6g}j)"
    if not parts:
        return cs
    inner = " ".join(parts)
    unit = "i" if oscillatory else ""
    return f"{cs} * exp({unit}({inner})/{int(round(1 / t.scale))})"


def dump_operator(op: SymbolicOperator) -> str:
    """Readable text form, one expanded entry per line."""
    lines = [f"# q={op.q} a={op.a}"]
    for i, row in enumerate(op.entries):
        for j, e in enumerate(row):
            ex = expand_products(e)
            body = " + ".join(_fmt_term(t, ex.oscillatory) for t in ex.terms) or "0"
            lines.append(f"[{i}][{j}] {body}")
    return "\n".join(lines) + "\n"

"""Semilinear cylindrical cell decompositions.

A :class:`Cell` is a stack of coordinate constraints: coordinate ``i`` is
either ``Graph(f)`` (``x_i = f``) or ``Band(lo, hi)`` (``lo < x_i < hi``)
where ``f``, ``lo``, ``hi`` are affine in the earlier coordinates.  Cells may
sit above ``offset`` base (parameter) variables; their coordinates are then
variables ``offset+1, offset+2, ...``.

Decompositions are built by the linear projection operator: roots of the
atoms at each level, plus pairwise differences of roots pushed one level
down.  The result is cylindrical, so prefix projections of cells coincide
or are disjoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .params import ParamContext
from .qe import conj_satisfiable, dnf, equivalent, is_satisfiable, qe
from .terms import (
    TRUE,
    And,
    Atom,
    Const,
    Not,
    Or,
    atom,
    Formula,
    LinearTerm,
    X,
    between,
    conj,
    disj,
    eq,
    evaluate,
    exists,
    neg,
    substitute,
)

NEG_INF = -math.inf


class EmptyCellError(ValueError):
    pass


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    term: LinearTerm


@dataclass(frozen=True)
class Band:
    lo: LinearTerm | None = None
    hi: LinearTerm | None = None


@dataclass(frozen=True)
class Cell:
    specs: tuple
    offset: int = 0

    @property
    def ambient(self) -> int:
        return len(self.specs)

    @property
    def dim(self) -> int:
        return sum(isinstance(s, Band) for s in self.specs)

    @property
    def band_coords(self) -> list:
        return [i + 1 for i, s in enumerate(self.specs) if isinstance(s, Band)]

    def var(self, i: int) -> int:
        return self.offset + i

    def prefix(self, i: int) -> "Cell":
        return Cell(self.specs[:i], self.offset)

    def formula(self) -> Formula:
        parts = []
        for i, s in enumerate(self.specs, start=1):
            x = X(self.var(i))
            if isinstance(s, Graph):
                parts.append(eq(x, s.term))
            else:
                parts.append(between(s.lo, x, s.hi))
        return conj(parts)


def band_choice(lo, hi):
    """Canonical point of an open interval; endpoints may be ``None``."""
    if lo is not None and hi is not None:
        return (lo + hi) * Fraction(1, 2)
    if lo is not None:
        return lo + 1
    if hi is not None:
        return hi - 1
    return Fraction(0)


def cell_sample(c: Cell) -> tuple:
    """Canonical point of a cell as affine terms in the base variables."""
    vals: list = []
    bind: dict = {}
    for i, s in enumerate(c.specs, start=1):
        if isinstance(s, Graph):
            v = s.term.substitute(bind)
        else:
            lo = s.lo.substitute(bind) if s.lo is not None else None
            hi = s.hi.substitute(bind) if s.hi is not None else None
            v = band_choice(lo, hi)
            if not isinstance(v, LinearTerm):
                v = LinearTerm.constant(v)
        vals.append(v)
        bind[c.var(i)] = v
    return tuple(vals)


def cell_point(c: Cell) -> tuple:
    """Canonical rational point of a cell without base variables."""
    if c.offset:
        raise ValueError("cell_point needs a cell without base variables")
    pts = tuple(t.const for t in cell_sample(c))
    if not evaluate(c.formula(), pts):
        raise EmptyCellError(f"cell is empty: {c}")
    return pts


# -- projection and lifting ------------------------------------------------------


def _root(t: LinearTerm) -> tuple:
    v = t.max_var
    return v, t.solve_for(v)


def project(terms: Iterable[LinearTerm], k: int, m: int) -> dict:
    """Roots per level ``k+1..k+m`` closed under pairwise differences."""
    roots: dict = {lvl: [] for lvl in range(k + 1, k + m + 1)}
    seen: dict = {lvl: set() for lvl in roots}

    def add(t: LinearTerm) -> None:
        if t.is_constant() or t.max_var <= k:
            return
        lvl, r = _root(t)
        if lvl > k + m:
            raise ValueError(f"term mentions x{lvl} beyond the decomposed coordinates")
        if r not in seen[lvl]:
            seen[lvl].add(r)
            roots[lvl].append(r)

    for t in terms:
        add(t)
    for lvl in range(k + m, k, -1):
        rs = roots[lvl]
        for i in range(len(rs)):
            for j in range(i + 1, len(rs)):
                add(rs[i] - rs[j])
    return roots


def line_cells(ctx: ParamContext, values: list, lo=None, hi=None) -> list:
    """Sorted 1-d cells between ``lo`` and ``hi`` cut at ``values``.

    Returns ``[(spec, sample)]`` with ``spec`` a :class:`Graph` or
    :class:`Band` over the base and ``sample`` a base term.
    """
    inside = []
    for v in values:
        if lo is not None and not ctx.lt(lo, v):
            continue
        if hi is not None and not ctx.lt(v, hi):
            continue
        inside.append(v)
    pts = ctx.sort_unique(inside)
    out = []
    bounds = [lo] + pts + [hi]
    for i in range(len(bounds) - 1):
        a, b = bounds[i], bounds[i + 1]
        s = band_choice(a, b)
        if not isinstance(s, LinearTerm):
            s = LinearTerm.constant(s)
        out.append((Band(a, b), s))
        if i < len(pts):
            out.append((Graph(pts[i]), pts[i]))
    return out


def _terms_of(formulas: Iterable[Formula]) -> list:
    out = []
    for f in formulas:
        for a in dnf(f).atoms():
            out.append(a.term)
    return out


def cad(ctx: ParamContext, formulas: Sequence[Formula], k: int, m: int) -> list:
    """Cells over the base sample in coordinates ``k+1..k+m``.

    Returns ``[(cell, sample, membership)]``; ``sample`` holds base terms per
    coordinate and ``membership[i]`` says whether the cell lies in
    ``formulas[i]``.
    """
    qfs = [qe(f) for f in formulas]
    roots = project(_terms_of(qfs), k, m)
    level = [(Cell((), k), ())]
    for lvl in range(k + 1, k + m + 1):
        nxt = []
        for cell, sample in level:
            bind = {k + i + 1: sample[i] for i in range(len(sample))}
            vals = {}
            for r in roots[lvl]:
                vals.setdefault(r.substitute(bind), r)
            # representative terms must be symbolic in earlier coordinates
            order = ctx.sort_unique(list(vals))
            syms = [vals[v] for v in order]
            bounds = [None] + list(zip(syms, order)) + [None]
            for i in range(len(bounds) - 1):
                a, b = bounds[i], bounds[i + 1]
                spec = Band(a[0] if a else None, b[0] if b else None)
                s = band_choice(a[1] if a else None, b[1] if b else None)
                if not isinstance(s, LinearTerm):
                    s = LinearTerm.constant(s)
                nxt.append((Cell(cell.specs + (spec,), k), sample + (s,)))
                if i < len(order):
                    nxt.append((Cell(cell.specs + (Graph(syms[i]),), k), sample + (order[i],)))
        level = nxt
    out = []
    for cell, sample in level:
        bind = {k + i + 1: sample[i] for i in range(m)}
        member = tuple(ctx.decide(substitute(f, bind)) for f in qfs)
        out.append((cell, sample, member))
    return out


@dataclass(frozen=True)
class CellDecomposition:
    cells: tuple
    m: int
    sets: tuple = ()
    membership: tuple = ()

    @property
    def target(self) -> Formula:
        return disj(self.sets) if self.sets else TRUE

    def cells_in(self, i: int = 0) -> list:
        return [c for c, mem in zip(self.cells, self.membership) if mem[i]]

    def __len__(self) -> int:
        return len(self.cells)


def decompose(sets: Sequence[Formula], m: int) -> CellDecomposition:
    """Cylindrical decomposition of ``M^m`` compatible with every set."""
    ctx = ParamContext(0, ())
    rows = cad(ctx, list(sets), 0, m)
    return CellDecomposition(
        tuple(c for c, _, _ in rows), m, tuple(sets), tuple(mem for _, _, mem in rows)
    )


# -- certificates ----------------------------------------------------------------


def partition_violations(dec: CellDecomposition) -> list:
    """Violation formulas that must all be unsatisfiable.

    Pairwise cell intersections, the uncovered part of ``M^m``, and for each
    set and cell the failure of compatibility.
    """
    forms = [c.formula() for c in dec.cells]
    out = []
    for i in range(len(forms)):
        for j in range(i + 1, len(forms)):
            out.append(conj([forms[i], forms[j]]))
    out.append(neg(disj(forms)))
    for si, s in enumerate(dec.sets):
        for c, mem in zip(forms, dec.membership):
            out.append(conj([c, neg(s)]) if mem[si] else conj([c, s]))
    return out


def _cell_atoms(c: Cell) -> list:
    f = c.formula()
    return list(f.args) if isinstance(f, And) else [] if f == TRUE else [f]


def _negations(a: Atom) -> list:
    t = a.term
    if a.rel == "<":
        return [Atom(-t, "<"), Atom(t, "=")]
    return [Atom(t, "<"), Atom(-t, "<")]


def _truth_on(cell: list, point: tuple, f: Formula):
    """Truth value of a quantifier-free ``f`` on the cell, or None if it varies.

    ``point`` lies in the cell, so only the other outcome needs refuting.
    """
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        if evaluate(f, point):
            varies = any(conj_satisfiable(cell + [b]) for b in _negations(f))
            return None if varies else True
        return None if conj_satisfiable(cell + [f]) else False
    if isinstance(f, Not):
        v = _truth_on(cell, point, f.arg)
        return None if v is None else not v
    if isinstance(f, (And, Or)):
        vals = [_truth_on(cell, point, g) for g in f.args]
        if None in vals:
            return None
        return all(vals) if isinstance(f, And) else any(vals)
    return None


def _sat_with(base: list, t: LinearTerm, rel: str) -> bool:
    a = atom(t, rel)
    if isinstance(a, Const):
        return a.value and conj_satisfiable(base)
    return conj_satisfiable(base + [a])


def _stack_covers(base: list, point: tuple, specs: set) -> bool:
    """Do the specs over one base cell tile the whole line, band, graph, band, ...?"""
    graphs = [sp.term for sp in specs if isinstance(sp, Graph)]
    graphs.sort(key=lambda t: t.evaluate(point))
    for lo, hi in zip(graphs, graphs[1:]):
        # lo < hi must hold on the whole base cell
        if _sat_with(base, hi - lo, "<") or _sat_with(base, hi - lo, "="):
            return False
    ends = [None] + graphs + [None]
    bands = {Band(a, b) for a, b in zip(ends, ends[1:])}
    return specs == bands | set(Graph(t) for t in graphs)


def _tiles(cells, m: int) -> bool:
    """Sufficient check that the cells partition ``M^m``, level by level.

    Over each prefix cell the next coordinates must form a strictly ordered
    chain band, graph, band, ..., band; by induction the prefix cells of
    every level are then pairwise disjoint and cover.
    """
    if not cells or any(c.offset for c in cells) or len(set(cells)) != len(cells):
        return False
    for i in range(1, m + 1):
        stacks: dict = {}
        for c in cells:
            stacks.setdefault(c.prefix(i - 1), set()).add(c.specs[i - 1])
        for base, specs in stacks.items():
            point = tuple(t.const for t in cell_sample(base))
            if not _stack_covers(_cell_atoms(base), point, specs):
                return False
    return True


def is_partition(dec: CellDecomposition) -> bool:
    atoms = [_cell_atoms(c) for c in dec.cells]
    if not _tiles(dec.cells, dec.m):
        # cell formulas are conjunctions of atoms, so pairwise overlap skips DNF
        for i in range(len(atoms)):
            for j in range(i + 1, len(atoms)):
                if conj_satisfiable(atoms[i] + atoms[j]):
                    return False
        if is_satisfiable(neg(disj(c.formula() for c in dec.cells))):
            return False
    # compatibility: decide each set atom by atom on the cell, else fall back to DNF
    for si, s in enumerate(dec.sets):
        for c, cell, mem in zip(dec.cells, atoms, dec.membership):
            v = None
            if c.offset == 0:
                try:
                    v = _truth_on(cell, cell_point(c), s)
                except EmptyCellError:
                    pass
            if v is None:
                f = c.formula()
                if is_satisfiable(conj([f, neg(s)]) if mem[si] else conj([f, s])):
                    return False
            elif v != bool(mem[si]):
                return False
    return True


def has_good_projection(cells: Sequence[Cell]) -> bool:
    """Prefix projections of any two cells are equal or disjoint (symbolic)."""
    if not cells:
        return True
    m = cells[0].ambient
    if _tiles(cells, m):
        return True
    for i in range(1, m):
        prefixes = list(dict.fromkeys(c.prefix(i).formula() for c in cells))
        for a in range(len(prefixes)):
            for b in range(a + 1, len(prefixes)):
                p, q = prefixes[a], prefixes[b]
                if is_satisfiable(conj([p, q])) and not equivalent(p, q):
                    return False
    return True


def good_projection(dec: CellDecomposition, max_rounds: int = 10) -> CellDecomposition:
    """A refinement of ``dec`` with good projection."""
    cur = dec
    for _ in range(max_rounds):
        if has_good_projection(cur.cells):
            return cur
        extra = []
        for c in cur.cells:
            extra.append(c.formula())
            extra.extend(c.prefix(i).formula() for i in range(1, cur.m))
        extra = list(dict.fromkeys(extra))
        refined = decompose(list(dec.sets) + extra, dec.m)
        n = len(dec.sets)
        cur = CellDecomposition(
            refined.cells, dec.m, dec.sets, tuple(mem[:n] for mem in refined.membership)
        )
    if has_good_projection(cur.cells):
        return cur
    raise RuntimeError(f"good projection not reached after {max_rounds} rounds")


# -- dimension -------------------------------------------------------------------


def _rank(rows: list) -> int:
    rows = [dict(r) for r in rows if r]
    rank = 0
    while rows:
        pivot_row = rows.pop()
        if not pivot_row:
            continue
        v, c = next(iter(sorted(pivot_row.items())))
        rank += 1
        new = []
        for r in rows:
            f = r.get(v, 0)
            if f:
                r = {w: r.get(w, 0) - f / c * pivot_row.get(w, 0) for w in set(r) | set(pivot_row)}
                r = {w: q for w, q in r.items() if q != 0}
            if r:
                new.append(r)
        rows = new
    return rank


def _conj_fiber_dim(conjunct: tuple, fiber_vars: set) -> int:
    rows = []
    for a in conjunct:
        if a.rel == "=":
            rows.append({v: c for v, c in a.term.coeffs if v in fiber_vars})
    return len(fiber_vars) - _rank(rows)


def dimension(f: Formula, m: int):
    """Dimension of the set defined by ``f`` in ``M^m``; ``-inf`` if empty.

    Each satisfiable conjunct of the pruned DNF is relatively open in the
    affine hull of its equalities, so its dimension is ``m`` minus their rank.
    """
    best = NEG_INF
    for c in dnf(f).disjuncts:
        best = max(best, _conj_fiber_dim(c, set(range(1, m + 1))))
    return best


def decomposition_dimension(f: Formula, m: int):
    """Dimension read off a cell decomposition (max band count)."""
    dec = decompose([f], m)
    dims = [c.dim for c in dec.cells_in(0)]
    return max(dims) if dims else NEG_INF


def parametric_fiber_dimension(family: Formula, b: int, f: int) -> list:
    """Base pieces with constant fiber dimension.

    ``family`` lives over base variables ``1..b`` and fiber variables
    ``b+1..b+f``.  Returns ``[(base_formula, fiber_dim)]`` sorted by
    dimension; the pieces are disjoint and cover the base projection.
    """
    fiber = set(range(b + 1, b + f + 1))
    by_dim: dict = {}
    for c in dnf(family).disjuncts:
        d = _conj_fiber_dim(c, fiber)
        proj = qe(exists(fiber, conj(c)))
        by_dim.setdefault(d, []).append(proj)
    pieces = []
    dims = sorted(by_dim)
    for d in dims:
        higher = [p for e in dims if e > d for p in by_dim[e]]
        g = conj([disj(by_dim[d]), neg(disj(higher))])
        g = qe(g)
        if is_satisfiable(g):
            from .qe import simplify

            pieces.append((simplify(g), d))
    return pieces


# -- 1-d charts ------------------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    """Parametrization of a 1-dimensional cell by one coordinate.

    ``inverse[i]`` gives coordinate ``i+1`` as a term in the chart variable
    (and base variables); the chart variable ranges over ``(lo, hi)``.
    """

    coord: int
    forward: LinearTerm
    inverse: tuple
    lo: LinearTerm | None
    hi: LinearTerm | None
    chart_var: int


def chart_1d(c: Cell, chart_var: int | None = None) -> Chart:
    if c.dim != 1:
        raise DimensionError(f"chart_1d needs a 1-dimensional cell, got dim {c.dim}")
    t = chart_var if chart_var is not None else c.offset + 1
    j = c.band_coords[0]
    inv: list = []
    bind: dict = {}
    lo = hi = None
    for i, s in enumerate(c.specs, start=1):
        if isinstance(s, Graph):
            v = s.term.substitute(bind)
        else:
            lo = s.lo.substitute(bind) if s.lo is not None else None
            hi = s.hi.substitute(bind) if s.hi is not None else None
            v = X(t)
        inv.append(v)
        bind[c.var(i)] = v
    return Chart(j, X(c.var(j)), tuple(inv), lo, hi, t)

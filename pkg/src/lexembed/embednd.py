"""Embedding orders of dimension two by quotienting out low-dimensional classes.

Two points are equivalent when the interval between them has dimension
below ``n``.  Each class gets a canonical representative; the set of
representatives (the quotient) has dimension below ``n`` and so do the
classes, so both are embedded by the one-dimensional machinery.  The
quotient image is then compressed so every cell only uses its first
``2 dim(C) + 1`` coordinates, and the class embeddings are spliced in
behind it.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from .cells import Band, Graph, dimension, line_cells, parametric_fiber_dimension
from .embed1d import (
    Embedder1D,
    UniformPiece,
    embed_1d,
    embed_1d_uniform,
    gap_choice_term,
    in_spec,
    spec_sample,
)
from .order import DefOrder, compute_E, compute_H
from .params import ParamContext, cover
from .piecewise import (
    Affine,
    Constant,
    FlexEmbedding,
    MapPiece,
    PiecewiseMap,
    RankConstant,
    flex,
    pad,
)
from .qe import dnf, is_satisfiable, qe, simplify
from .terms import (
    Formula,
    LinearTerm,
    X,
    conj,
    disj,
    eq,
    evaluate,
    exists,
    rename_vars,
    shift_formula,
    substitute,
)


class UnsupportedDimension(NotImplementedError):
    pass


class LemmaViolation(AssertionError):
    """A dimension fact the construction relies on failed on this input."""


# -- representatives -------------------------------------------------------------


def lowest_component_point(ctx: ParamContext, f: Formula) -> LinearTerm:
    """Canonical point of the lowest connected component of a subset of the line.

    ``f`` mentions base variables ``1..k`` and the line variable ``k+1``.
    """
    v = ctx.k + 1
    roots = [a.term.solve_for(v) for a in dnf(f).atoms() if a.term.coeff(v) != 0]
    cells = line_cells(ctx, roots)
    member = [ctx.decide(substitute(f, {v: s})) for _, s in cells]
    if True not in member:
        raise LemmaViolation("empty equivalence class")
    first = member.index(True)
    last = first
    while last + 1 < len(cells) and member[last + 1]:
        last += 1
    lo_spec, hi_spec = cells[first][0], cells[last][0]
    if first == last and isinstance(lo_spec, Graph):
        return lo_spec.term
    lo = lo_spec.term if isinstance(lo_spec, Graph) else lo_spec.lo
    hi = hi_spec.term if isinstance(hi_spec, Graph) else hi_spec.hi
    return gap_choice_term(lo, hi)


def class_representative(ctx: ParamContext, E: Formula, m: int) -> tuple:
    """Coordinates of the representative of the class of ``x`` (vars ``1..m``).

    Coordinates are fixed one at a time: each is the canonical point of the
    lowest component of the projection of what remains of the class.
    """
    chosen: list = []
    for i in range(1, m + 1):
        f = substitute(E, {m + j + 1: t for j, t in enumerate(chosen)})
        f = qe(exists(range(m + i + 1, 2 * m + 1), f))
        f = rename_vars(f, {m + i: m + 1})
        chosen.append(lowest_component_point(ctx, f))
    return tuple(chosen)


@dataclass(frozen=True)
class QuotientPresentation:
    rep_map: PiecewiseMap
    quotient: DefOrder
    class_of: Formula

    def rep(self, point) -> tuple:
        return self.rep_map(point)

    @property
    def rep_pieces(self) -> list:
        return [(p.guard, tuple(c.term for c in p.maps)) for p in self.rep_map.pieces]


def quotient_by_E(o: DefOrder, E: Formula | None = None, check: bool = True) -> QuotientPresentation:
    m, n = o.m, o.n
    if E is None:
        E = compute_E(o)
    else:
        E = simplify(conj([o.P_at(0), o.P_at(1), E]))
    if check:
        for _, d in parametric_fiber_dimension(E, m, m):
            if d >= n:
                raise LemmaViolation(f"an equivalence class has dimension {d} >= {n}")
    found = cover(o.P, m, lambda ctx: class_representative(ctx, E, m))
    pieces = tuple(MapPiece(g, tuple(Affine(t) for t in rep)) for g, rep in found)
    rep_map = PiecewiseMap(pieces, m, m)
    R = simplify(
        disj(conj([g] + [eq(X(i + 1), t) for i, t in enumerate(rep)]) for g, rep in found)
    )
    q = DefOrder(m, R, o.prec)
    if check and q.n >= n:
        raise LemmaViolation(f"quotient has dimension {q.n} >= {n}")
    return QuotientPresentation(rep_map, q, E)


# -- quotient image cells --------------------------------------------------------


@dataclass(frozen=True)
class ImageCell:
    """A cell of the quotient image: coordinates over one chart domain.

    ``coords`` holds constants or affine terms in the chart variable ``1``.
    ``piece`` indexes the quotient piece the cell comes from.
    """

    piece: int
    domain: object
    coords: tuple

    @property
    def dim(self) -> int:
        return 0 if isinstance(self.domain, Graph) else 1

    def chart_sample(self) -> Fraction:
        return spec_sample(self.domain).const

    def box(self, i: int) -> tuple:
        """Projection to coordinate ``i`` (1-based): ``(lo, hi)``, equal for a point."""
        c = self.coords[i - 1]
        if isinstance(c, Fraction):
            return (c, c)
        if isinstance(self.domain, Graph):
            v = c.evaluate((self.domain.term.const,))
            return (v, v)
        a, b = c.coeff(1), c.const
        if a == 0:
            return (b, b)
        ends = [None if e is None else a * e.const + b for e in (self.domain.lo, self.domain.hi)]
        return tuple(ends) if a > 0 else tuple(reversed(ends))

    def prefix(self, i: int) -> tuple:
        return tuple(self.box(t) for t in range(1, i + 1))

    def is_point_at(self, i: int) -> bool:
        lo, hi = self.box(i)
        return lo is not None and lo == hi

    def split_at(self, i: int, v: Fraction) -> list:
        """Cut the cell where coordinate ``i`` equals ``v`` (inside its range)."""
        c = self.coords[i - 1]
        u = (v - c.const) / c.coeff(1)
        lo, hi = self.domain.lo, self.domain.hi
        ut = LinearTerm.constant(u)

        def at(dom):
            if isinstance(dom, Graph):
                return replace(self, domain=dom, coords=tuple(_pin(t, u) for t in self.coords))
            return replace(self, domain=dom)

        return [at(Band(lo, ut)), at(Graph(ut)), at(Band(ut, hi))]


def _pin(c, u: Fraction):
    return c if isinstance(c, Fraction) else c.evaluate((u,))


def box_key(b: tuple) -> tuple:
    lo, hi = b
    return ((0, 0) if lo is None else (1, lo), 0 if lo == hi else 1)


def image_cells(e: Embedder1D) -> list:
    """Cells of the quotient image with one entry per attached segment."""
    if e.finite_order is not None:
        zero = Graph(LinearTerm.constant(0))
        return [ImageCell(i, zero, (Fraction(t + 1),)) for t, i in enumerate(e.finite_order)]
    out = []
    for sg in e.segments:
        if isinstance(sg.domain, Graph):
            u = sg.domain.term.const
            out.append(ImageCell(sg.piece, sg.domain, (sg.c1, sg.c2.evaluate((u,)), sg.c3)))
        else:
            out.append(ImageCell(sg.piece, sg.domain, (sg.c1, sg.c2, sg.c3)))
    return out


def refine_good_projection(cells: Sequence[ImageCell]) -> list:
    """Split cells until any two prefix projections are equal or disjoint."""
    cells = list(cells)
    width = len(cells[0].coords) if cells else 0
    for i in range(1, width + 1):
        groups = defaultdict(set)
        for c in cells:
            lo, hi = c.box(i)
            groups[c.prefix(i - 1)].update(e for e in (lo, hi) if e is not None)
        out = []
        for c in cells:
            pending = [c]
            for v in sorted(groups[c.prefix(i - 1)]):
                nxt = []
                for d in pending:
                    lo, hi = d.box(i)
                    inside = lo != hi and (lo is None or lo < v) and (hi is None or v < hi)
                    nxt.extend(d.split_at(i, v) if inside else [d])
                pending = nxt
            out.extend(pending)
        cells = out
    return cells


def has_good_boxes(cells: Sequence[ImageCell]) -> bool:
    width = len(cells[0].coords) if cells else 0
    for i in range(1, width + 1):
        for a in cells:
            for b in cells:
                pa, pb = a.prefix(i), b.prefix(i)
                if pa != pb and not _disjoint_prefix(pa, pb):
                    return False
    return True


def _disjoint_prefix(pa: tuple, pb: tuple) -> bool:
    for (alo, ahi), (blo, bhi) in zip(pa, pb):
        if alo == ahi and blo == bhi:
            if alo != blo:
                return True
            continue
        if alo == ahi:
            if (blo is not None and alo <= blo) or (bhi is not None and alo >= bhi):
                return True
            continue
        if blo == bhi:
            if (alo is not None and blo <= alo) or (ahi is not None and blo >= ahi):
                return True
            continue
        if (ahi is not None and blo is not None and ahi <= blo) or (
            bhi is not None and alo is not None and bhi <= alo
        ):
            return True
    return False


# -- compressing the quotient image ----------------------------------------------


@dataclass(frozen=True)
class Level:
    i: int
    members: tuple
    below: int
    constants: tuple

    @property
    def r(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class CompressionPlan:
    j: int
    cell: int
    b: Fraction
    k: int
    bounds: tuple
    levels: tuple

    def nesting_ok(self) -> bool:
        """The three nesting constraints on the chosen constants."""
        lo, hi = self.bounds
        prev = None
        for lvl in self.levels:
            cs = lvl.constants
            if list(cs) != sorted(set(cs)):
                return False
            s = lvl.below
            below_ok = s == 0 or cs[s - 1] < self.b
            above_ok = s == lvl.r or self.b < cs[s]
            if not (below_ok and above_ok):
                return False
            if any((lo is not None and c <= lo) or (hi is not None and c >= hi) for c in cs):
                return False
            if prev is not None and cs:
                ps = prev.below
                if ps >= 1 and not prev.constants[ps - 1] < cs[0]:
                    return False
                if ps < prev.r and not cs[-1] < prev.constants[ps]:
                    return False
            prev = lvl
        return True


@dataclass(frozen=True)
class PhaseTwo:
    cell: int
    k: int
    kept: tuple


def _k_of(c: ImageCell, j: int, width: int) -> int:
    k = j
    while k < width and c.is_point_at(k + 1):
        k += 1
    return k


def _V(cells: Sequence[ImageCell], c: ImageCell, i: int) -> list:
    head, own = c.prefix(i - 1), c.prefix(i)
    found = {d.prefix(i) for d in cells if d.prefix(i - 1) == head and d.prefix(i) != own}
    return sorted(found, key=lambda p: box_key(p[-1]))


def _spread(lo: Fraction, hi: Fraction, count: int) -> list:
    return [lo + (hi - lo) * t / (count + 1) for t in range(1, count + 1)]


def _plan(cells: Sequence[ImageCell], ci: int, j: int, k: int, V: dict) -> CompressionPlan:
    c = cells[ci]
    b = c.box(j)[0]
    head = c.prefix(j - 1)
    others = {d.box(j)[0] for d in cells if d.prefix(j - 1) == head} - {b}
    L = max((v for v in others if v < b), default=None)
    U = min((v for v in others if v > b), default=None)
    lo = (L + b) / 2 if L is not None else b - 1
    hi = (U + b) / 2 if U is not None else b + 1
    levels = []
    own_key = None
    for i in range(j + 1, k + 1):
        members = V[i]
        own_key = box_key(c.box(i))
        s = sum(1 for p in members if box_key(p[-1]) < own_key)
        consts = tuple(_spread(lo, b, s) + _spread(b, hi, len(members) - s))
        levels.append(Level(i, tuple(members), s, consts))
        if s:
            lo = consts[s - 1]
        if s < len(members):
            hi = consts[s]
    return CompressionPlan(j, ci, b, k, (L, U), tuple(levels))


def _apply(cells: list, plan: CompressionPlan) -> list:
    c = cells[plan.cell]
    out = []
    for d in cells:
        new = d
        for lvl in plan.levels:
            if d.prefix(lvl.i - 1) == c.prefix(lvl.i - 1) and d.prefix(lvl.i) != c.prefix(lvl.i):
                value = lvl.constants[lvl.members.index(d.prefix(lvl.i))]
                coords = list(d.coords)
                coords[plan.j - 1] = value
                new = replace(d, coords=tuple(coords))
                break
        out.append(new)
    return out


def _next_branching(cells: Sequence[ImageCell], width: int):
    for j in range(1, width, 2):
        for ci, c in enumerate(cells):
            k = _k_of(c, j, width)
            V = {i: _V(cells, c, i) for i in range(j + 1, k + 1)}
            if any(V.values()):
                return ci, j, k, V
    return None


def compress_pprime(cells: Sequence[ImageCell], cap: int = 200) -> tuple:
    """Shift branches into odd coordinates, then drop coordinates that add no dimension.

    Returns ``(cells, plans, phase_two)``; output cells use exactly their
    first ``2 dim + 1`` coordinates.
    """
    cells = refine_good_projection(cells)
    width = len(cells[0].coords) if cells else 0
    plans = []
    for _ in range(cap):
        nxt = _next_branching(cells, width)
        if nxt is None:
            break
        ci, j, k, V = nxt
        plan = _plan(cells, ci, j, k, V)
        plans.append(plan)
        cells = _apply(cells, plan)
    else:
        raise LemmaViolation("phase one did not terminate")
    out, two = [], []
    for ci, c in enumerate(cells):
        kc = next((k for k in range(1, width - 1, 2) if c.is_point_at(k + 1)), width)
        kept = tuple(j for j in range(kc + 1, width) if not c.is_point_at(j))
        coords = list(c.coords[:kc])
        for j in kept:
            coords += [c.coords[j - 1], Fraction(0)]
        if len(coords) != 2 * c.dim + 1:
            raise LemmaViolation(f"cell of dimension {c.dim} compressed to {len(coords)} coordinates")
        out.append(replace(c, coords=tuple(coords)))
        two.append(PhaseTwo(ci, kc, kept))
    return out, plans, two


# -- compressing the fibers ------------------------------------------------------


@dataclass(frozen=True)
class FiberPiece:
    """A fiber map piece with odd coordinates replaced by ranks."""

    guard: Formula
    first: RankConstant
    tail: tuple


def compress_qx(fibers: Sequence[UniformPiece]) -> tuple:
    """Rank the odd fiber coordinates; returns ``(r, pieces per base piece)``."""
    r = 1
    out = []
    for up in fibers:
        run = up.run
        mps = run.map_pieces()
        lists = [sorted({mp.maps[i].value for mp in mps}) for i in range(0, run.codomain, 2)]
        r = max([r] + [len(v) for v in lists])
        ranked = []
        for mp in mps:
            ranks = [Fraction(lists[t].index(mp.maps[2 * t].value) + 1) for t in range(len(lists))]
            tail = []
            for i in range(1, run.codomain):
                tail.append(mp.maps[i] if i % 2 else RankConstant(((up.guard, ranks[i // 2]),)))
            ranked.append(FiberPiece(mp.guard, RankConstant(((up.guard, ranks[0]),)), tuple(tail)))
        out.append(ranked)
    return r, out


def fiber_dim(up: UniformPiece) -> int:
    return 0 if up.run.codomain == 1 else 1


# -- joining ---------------------------------------------------------------------


def join_constants(b: Fraction, delta: Fraction, r: int) -> list:
    return [b + delta * (2 * t - r - 1) / r for t in range(1, r + 1)]


def _delta(cells: Sequence[ImageCell]) -> Fraction:
    values = sorted({v for c in cells for v in c.coords[0::2]})
    gaps = [b - a for a, b in zip(values, values[1:])]
    return min(gaps + [Fraction(1)]) / 3


@dataclass
class QuotientEmbedding:
    embedding: FlexEmbedding
    presentation: QuotientPresentation
    quotient_run: Embedder1D
    fibers: list
    cells: list
    plans: list
    phase_two: list
    rank_bound: int
    extra: dict = field(default_factory=dict)


def embed_via_quotient(o: DefOrder, E: Formula | None = None, check: bool = True) -> QuotientEmbedding:
    m, n = o.m, o.n
    pres = quotient_by_E(o, E, check)
    E = pres.class_of
    R = pres.quotient.P
    fibers = embed_1d_uniform(R, m, m, E, shift_formula(o.prec, m))
    guards = [up.guard for up in fibers]
    qo = pres.quotient
    if qo.n > 1:
        raise UnsupportedDimension(f"quotient of dimension {qo.n}")
    qrun = Embedder1D(ParamContext(), m, qo.P, qo.prec, guards).embed()
    cells, plans, two = compress_pprime(image_cells(qrun))
    r, ranked = compress_qx(fibers)
    delta = _delta(cells)
    width = 2 * n + 1
    out = []
    for c in cells:
        qp = qrun.pieces[c.piece]
        u0 = c.chart_sample()
        x0 = tuple(t.evaluate((u0,)) for t in qp.inverse)
        hits = [i for i, up in enumerate(fibers) if evaluate(up.guard, x0)]
        if len(hits) != 1:
            raise LemmaViolation("quotient cell is not inside one fiber piece")
        up = fibers[hits[0]]
        q = fiber_dim(up)
        if c.dim + q > n:
            raise LemmaViolation(f"cell needs {2 * (c.dim + q) + 1} coordinates, only {width} allowed")
        ch = qrun.chart_term(qp)
        cguard = conj([qrun.piece_formula(qp), substitute(in_spec(c.domain, 1), {1: ch})])
        head = []
        for v in c.coords[: 2 * c.dim]:
            head.append(v if isinstance(v, Fraction) else v.substitute({1: ch}))
        b = c.coords[2 * c.dim]
        consts = join_constants(b, delta, r)
        for g_guard, rep in pres.rep_pieces:
            to_rep = {i + 1: t for i, t in enumerate(rep)}
            base = conj([g_guard, substitute(cguard, to_rep)])
            if not is_satisfiable(base):
                continue
            both = dict(to_rep)
            both.update({m + i: X(i) for i in range(1, m + 1)})
            for fp in ranked[hits[0]]:
                guard = simplify(conj([base, substitute(fp.guard, both)]))
                if not is_satisfiable(guard):
                    continue
                maps = [Constant(v) if isinstance(v, Fraction) else Affine(v.substitute(to_rep)) for v in head]
                maps.append(Constant(consts[int(fp.first.entries[0][1]) - 1]))
                for t in fp.tail:
                    if isinstance(t, Affine):
                        maps.append(Affine(t.term.substitute(both)))
                    else:
                        maps.append(Constant(t.entries[0][1]))
                out.append(MapPiece(guard, pad(maps, width)))
    g = flex(PiecewiseMap(tuple(out), m, width), o)
    return QuotientEmbedding(g, pres, qrun, fibers, cells, plans, two, r)


def embed(o: DefOrder) -> FlexEmbedding:
    """Flex-embedding of ``(P, prec)`` into ``M^(2n+1)``."""
    n = o.n
    if n == float("-inf"):
        raise ValueError("the order has an empty domain")
    if n <= 1:
        return embed_1d(o)
    if n > 2:
        raise UnsupportedDimension(f"orders of dimension {n} are not supported")
    if dimension(compute_H(o), o.m) == n:
        raise LemmaViolation("the full-dimensional part H has dimension n >= 2")
    return embed_via_quotient(o).embedding


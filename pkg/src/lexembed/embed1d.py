"""Embedding orders of dimension at most one into ``(M^3, lex)``.

The set ``P`` is cut into cells, and each one-dimensional cell into pieces
on which the order agrees with ``<`` or ``>`` along a chart coordinate.
Pieces are then attached one at a time to a growing image in ``M^3`` whose
first and third coordinates take finitely many values.

Everything here runs over a :class:`ParamContext`: formulas may mention base
variables ``1..k`` and the fiber lives in ``k+1..k+m``.  With ``k = 0`` this
is the ordinary, parameter-free pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .cells import Band, Cell, DimensionError, Graph, cad, chart_1d, line_cells, project
from .order import DefOrder
from .params import ParamContext, cover
from .piecewise import Affine, Constant, FlexEmbedding, MapPiece, PiecewiseMap, flex
from .qe import dnf, is_satisfiable, qe
from .terms import (
    TRUE,
    Formula,
    LinearTerm,
    X,
    between,
    conj,
    disj,
    eq,
    exists,
    forall,
    iff,
    implies,
    lt,
    neg,
    substitute,
)

INCREASING = "increasing"
DECREASING = "decreasing"

PI, PII, PIII = "PI", "PII", "PIII"


class AccordError(RuntimeError):
    """No monotone direction on a piece; the relation is not a linear order."""


class ConditionError(RuntimeError):
    """A cell could not be given a successor, predecessor or constant-cut label."""


def gap_choice(lo, hi) -> Fraction:
    """Canonical rational in the open gap ``(lo, hi)``; ``None`` is infinite."""
    if lo is not None and hi is not None:
        return (Fraction(lo) + Fraction(hi)) / 2
    if lo is not None:
        return Fraction(lo) + 1
    if hi is not None:
        return Fraction(hi) - 1
    return Fraction(0)


def in_spec(spec, u: int) -> Formula:
    if isinstance(spec, Graph):
        return eq(X(u), spec.term)
    return between(spec.lo, X(u), spec.hi)


def spec_sample(spec) -> LinearTerm:
    if isinstance(spec, Graph):
        return spec.term
    return gap_choice_term(spec.lo, spec.hi)


def gap_choice_term(lo, hi) -> LinearTerm:
    if lo is not None and hi is not None:
        return (lo + hi) * Fraction(1, 2)
    if lo is not None:
        return lo + 1
    if hi is not None:
        return hi - 1
    return LinearTerm.constant(0)


@dataclass(frozen=True)
class Piece:
    """A point, or an interval on which the order follows the chart.

    ``inverse`` gives the fiber coordinates as terms in the base variables
    and the chart variable; ``domain`` is the chart range.
    """

    index: int
    cell: Cell
    coord: int | None
    sign: int
    domain: object
    inverse: tuple
    direction: str = INCREASING

    @property
    def is_point(self) -> bool:
        return self.coord is None

    @property
    def label(self) -> Fraction:
        return Fraction(self.index + 1)


@dataclass(frozen=True)
class Segment:
    """Part of a piece mapped to ``<c1, c2(u), c3>`` for ``u`` in ``domain``."""

    piece: int
    domain: object
    c1: Fraction
    c2: LinearTerm
    c3: Fraction


@dataclass(frozen=True)
class LabelledCell:
    spec: object
    label: str
    witness: Formula = TRUE


@dataclass(frozen=True)
class NiceSet:
    formula: Formula
    firsts: tuple
    thirds: tuple

    def certified(self) -> bool:
        """Projections to coordinates 1 and 3 are exactly the stored lists."""
        for coord, values in ((1, self.firsts), (3, self.thirds)):
            outside = conj([self.formula] + [neg(eq(X(coord), LinearTerm.constant(v))) for v in values])
            if is_satisfiable(outside):
                return False
            for v in values:
                if not is_satisfiable(conj([self.formula, eq(X(coord), LinearTerm.constant(v))])):
                    return False
        return True


class Embedder1D:
    def __init__(
        self,
        ctx: ParamContext,
        m: int,
        P: Formula,
        prec: Formula,
        refine_by: Sequence[Formula] = (),
    ):
        self.ctx = ctx
        self.k = k = ctx.k
        self.m = m
        self.P = qe(P)
        self.prec = qe(prec)
        self.refine_by = tuple(refine_by)
        self.S, self.T, self.W, self.S2 = k + 1, k + 2, k + 3, k + 4
        self.pieces: list = []
        self.segments: list = []
        self.finite_order: list | None = None
        self.labels: dict = {}
        self._rel: dict = {}

    # -- relations in chart coordinates ---------------------------------------

    def at(self, inverse: tuple, u: int) -> list:
        return [t.substitute({self.S: X(u)}) for t in inverse]

    def rel_inv(self, inv_a: Sequence, inv_b: Sequence) -> Formula:
        k, m = self.k, self.m
        b = {k + i + 1: inv_a[i] for i in range(m)}
        b.update({k + m + i + 1: inv_b[i] for i in range(m)})
        return substitute(self.prec, b)

    def rel(self, p: int, q: int, a: int, b: int) -> Formula:
        key = (p, q, a, b)
        if key not in self._rel:
            pa, pb = self.pieces[p], self.pieces[q]
            self._rel[key] = self.rel_inv(self.at(pa.inverse, a), self.at(pb.inverse, b))
        return self._rel[key]

    def dom(self, p: int, u: int) -> Formula:
        return in_spec(self.pieces[p].domain, u)

    def attached(self, q: int, u: int) -> Formula:
        return disj(in_spec(s.domain, u) for s in self.segments if s.piece == q)

    def attached_pieces(self) -> list:
        return sorted({s.piece for s in self.segments})

    # -- normalisation ---------------------------------------------------------

    def normalize(self) -> list:
        """Cut ``P`` into monotone pieces; returns the pieces in order."""
        k, m = self.k, self.m
        rows = cad(self.ctx, [self.P, *self.refine_by], k, m)
        for c, sample, mem in rows:
            if not mem[0]:
                continue
            if c.dim == 0:
                self._add_point(c, sample)
            elif c.dim == 1:
                for spec, direction in self.classify(c):
                    self._add_sub_piece(c, spec, direction)
            else:
                raise DimensionError(f"cell of dimension {c.dim} in a one-dimensional order")
        return self.pieces

    def _add_point(self, cell: Cell, inverse: tuple) -> None:
        self.pieces.append(
            Piece(len(self.pieces), cell, None, 1, Graph(LinearTerm.constant(0)), tuple(inverse))
        )

    def _add_sub_piece(self, cell: Cell, spec, direction: str) -> None:
        chart = chart_1d(cell, self.S)
        S = self.S
        if isinstance(spec, Graph):
            inv = tuple(t.substitute({S: spec.term}) for t in chart.inverse)
            self._add_point(cell_with(cell, chart.coord, spec, self.k), inv)
            return
        if direction == INCREASING:
            self.pieces.append(
                Piece(len(self.pieces), cell, chart.coord, 1, spec, chart.inverse, direction)
            )
        else:
            flipped = Band(-spec.hi if spec.hi is not None else None, -spec.lo if spec.lo is not None else None)
            inv = tuple(t.substitute({S: -X(S)}) for t in chart.inverse)
            self.pieces.append(
                Piece(len(self.pieces), cell, chart.coord, -1, flipped, inv, direction)
            )

    def classify(self, cell: Cell) -> list:
        """Monotone pieces of a one-dimensional cell in its raw chart."""
        S, T, k = self.S, self.T, self.k
        chart = chart_1d(cell, S)
        inv_s = chart.inverse
        inv_t = self.at(inv_s, T)
        R = self.rel_inv(inv_s, inv_t)
        dom = conj([between(chart.lo, X(S), chart.hi), between(chart.lo, X(T), chart.hi)])
        terms = [a.term for a in dnf(conj([R, dom])).atoms()] + [X(T) - X(S)]
        roots = project(terms, k, 2)[S]
        out = []
        for spec, _ in line_cells(self.ctx, roots, chart.lo, chart.hi):
            if isinstance(spec, Graph):
                out.append((spec, INCREASING))
                continue
            inside = conj([between(spec.lo, X(S), spec.hi), between(spec.lo, X(T), spec.hi), lt(X(S), X(T))])
            up = exists([S, T], conj([inside, neg(R)]))
            if not self.ctx.decide(up):
                out.append((spec, INCREASING))
                continue
            R_back = self.rel_inv(inv_t, inv_s)
            down = exists([S, T], conj([inside, neg(R_back)]))
            if not self.ctx.decide(down):
                out.append((spec, DECREASING))
                continue
            raise AccordError(f"order is neither increasing nor decreasing on {spec}")
        return out

    # -- conditions ------------------------------------------------------------

    def _between(self, universe: list, I: int, a: tuple, b: tuple) -> Formula:
        """Some element of the universe lies strictly between ``a`` and ``b``."""
        W = self.W
        alts = []
        for q in universe:
            member = self.dom(I, W) if q == I else self.attached(q, W)
            alts.append(exists([W], conj([member, self.rel(a[0], q, a[1], W), self.rel(q, b[0], W, b[1])])))
        return disj(alts)

    def condition_formulas(self, I: int) -> dict:
        """C1..C5 as formulas in the base variables and ``S`` (``x`` in ``I``)."""
        S, T = self.S, self.T
        old = self.attached_pieces()
        universe = old + [I]
        succ_imm, pred_imm, succ_gap, pred_gap = [], [], [], []
        above_all, below_all = [], []
        for q in old:
            at = self.attached(q, T)
            up = self.rel(I, q, S, T)
            down = self.rel(q, I, T, S)
            succ_imm.append(exists([T], conj([at, up, neg(self._between(universe, I, (I, S), (q, T)))])))
            pred_imm.append(exists([T], conj([at, down, neg(self._between(universe, I, (q, T), (I, S)))])))
            succ_gap.append(exists([T], conj([at, up, neg(self._between(old, I, (I, S), (q, T)))])))
            pred_gap.append(exists([T], conj([at, down, neg(self._between(old, I, (q, T), (I, S)))])))
            above_all.append(forall([T], implies(at, down)))
            below_all.append(forall([T], implies(at, up)))
        c1 = qe(disj(succ_imm))
        c2 = qe(disj(pred_imm))
        return {
            "C1": c1,
            "C2": c2,
            "C3": qe(conj([disj(succ_gap), neg(c1)])),
            "C4": qe(conj([disj(pred_gap), neg(c2)])),
            "C5": qe(disj([conj(above_all), conj(below_all)])),
        }

    def cut_relations(self, I: int) -> list:
        """``(S, T)``: the element ``T`` of an attached piece lies below ``S``."""
        S, T = self.S, self.T
        return [
            qe(conj([self.attached(q, T), self.rel(q, I, T, S)])) for q in self.attached_pieces()
        ]

    def cut_constant(self, I: int, spec) -> Formula:
        S, S2, T = self.S, self.S2, self.T
        inside = conj([in_spec(spec, S), in_spec(spec, S2)])
        parts = []
        for q in self.attached_pieces():
            same = iff(self.rel(q, I, T, S), self.rel(q, I, T, S2))
            parts.append(forall([S, S2, T], implies(conj([inside, self.attached(q, T)]), same)))
        return conj(parts)

    def condition_decompose(self, I: int) -> list:
        """Cells of piece ``I`` labelled PI, PII or PIII against the image."""
        piece = self.pieces[I]
        if piece.is_point:
            return [LabelledCell(piece.domain, PIII)]
        S = self.S
        conds = self.condition_formulas(I)
        terms = [a.term for f in conds.values() for a in dnf(f).atoms()]
        for r in self.cut_relations(I):
            terms.extend(a.term for a in dnf(r).atoms())
        roots = project(terms, self.k, 2)[S]
        dom = piece.domain
        out = []
        for spec, sample in line_cells(self.ctx, roots, dom.lo, dom.hi):
            holds = {name: self.ctx.decide(substitute(f, {S: sample})) for name, f in conds.items()}
            if isinstance(spec, Band) and holds["C1"]:
                out.append(LabelledCell(spec, PI, conds["C1"]))
            elif isinstance(spec, Band) and holds["C2"]:
                out.append(LabelledCell(spec, PII, conds["C2"]))
            else:
                if isinstance(spec, Band) and not self.ctx.decide(self.cut_constant(I, spec)):
                    raise ConditionError(f"cut is not constant on {spec} of piece {I}")
                out.append(LabelledCell(spec, PIII, conds["C5"]))
        return out

    # -- attaching -------------------------------------------------------------

    def embed(self) -> "Embedder1D":
        if not self.pieces:
            self.normalize()
        if all(p.is_point for p in self.pieces):
            self._embed_finite()
            return self
        for I in range(len(self.pieces)):
            work = self.condition_decompose(I)
            self.labels[I] = list(work)
            rounds = 0
            while work:
                rounds += 1
                if rounds > 200:
                    raise ConditionError("attachment did not stabilise")
                cell = work.pop(0)
                split = self.attach(I, cell)
                if split:
                    work[:0] = split
        return self

    def attach(self, I: int, cell: LabelledCell) -> list:
        """Attach a labelled cell, or return a finer subdivision to attach instead."""
        if cell.label == PIII:
            self._attach_cut(I, cell.spec)
            return []
        return self._attach_neighbour(I, cell)

    def _new_c2(self, spec) -> LinearTerm:
        return spec.term if isinstance(spec, Graph) else X(self.S)

    def _attach_cut(self, I: int, spec) -> None:
        S, T, ctx = self.S, self.T, self.ctx
        s0 = spec_sample(spec)
        below, above = [], []
        for sg in self.segments:
            low = substitute(self.rel(sg.piece, I, T, S), {S: s0})
            dom = in_spec(sg.domain, T)
            if ctx.decide(forall([T], implies(dom, low))):
                below.append(sg)
            elif ctx.decide(forall([T], implies(dom, neg(low)))):
                above.append(sg)
            else:
                lo_part, hi_part = self._split(sg, conj([dom, low]))
                below.extend(lo_part)
                above.extend(hi_part)
        firsts_below = {sg.c1 for sg in below}
        firsts_above = {sg.c1 for sg in above}
        straddle = firsts_below & firsts_above
        if not straddle:
            a = gap_choice(max(firsts_below, default=None), min(firsts_above, default=None))
            self.segments = below + above + [Segment(I, spec, a, self._new_c2(spec), Fraction(0))]
            return
        if len(straddle) > 1:
            raise ConditionError("cut straddles several first-coordinate blocks")
        (a,) = straddle
        larger = [sg.c1 for sg in below + above if sg.c1 > a]
        c = min(larger) if larger else None
        if c is None:
            d, e = a + 1, a + 2
        else:
            d, e = a + (c - a) / 3, a + 2 * (c - a) / 3
        shifted = [Segment(sg.piece, sg.domain, e, sg.c2, sg.c3) if sg.c1 == a else sg for sg in above]
        self.segments = below + shifted + [Segment(I, spec, d, self._new_c2(spec), Fraction(0))]

    def _split(self, sg: Segment, lower: Formula) -> tuple:
        """Split a segment into the part satisfying ``lower`` (an initial part) and the rest."""
        T, ctx = self.T, self.ctx
        if isinstance(sg.domain, Graph):
            raise ConditionError("a point segment cannot straddle a cut")
        lower = qe(lower)
        roots = [a.term.solve_for(T) for a in dnf(lower).atoms() if a.term.coeff(T) != 0]
        cells = line_cells(ctx, roots, sg.domain.lo, sg.domain.hi)
        member = [ctx.decide(substitute(lower, {T: smp})) for _, smp in cells]
        last = max(i for i, v in enumerate(member) if v)
        if not all(member[: last + 1]) or any(member[last + 1 :]):
            raise ConditionError("cut does not split a segment into an initial part")
        spec = cells[last][0]
        lo, hi = sg.domain.lo, sg.domain.hi

        def part(dom):
            c2 = sg.c2.substitute({self.S: dom.term}) if isinstance(dom, Graph) else sg.c2
            return Segment(sg.piece, dom, sg.c1, c2, sg.c3)

        if isinstance(spec, Graph):
            r = spec.term
            return [part(Band(lo, r)), part(Graph(r))], [part(Band(r, hi))]
        r = spec.hi
        return [part(Band(lo, r))], [part(Graph(r)), part(Band(r, hi))]

    def _neighbour_relations(self, I: int, successor: bool) -> list:
        S, T = self.S, self.T
        universe = sorted(set(self.attached_pieces()) | {I})
        out = []
        for idx, sg in enumerate(self.segments):
            q = sg.piece
            if successor:
                near = conj([self.rel(I, q, S, T), neg(self._between(universe, I, (I, S), (q, T)))])
            else:
                near = conj([self.rel(q, I, T, S), neg(self._between(universe, I, (q, T), (I, S)))])
            out.append(qe(conj([in_spec(sg.domain, T), near])))
        return out

    def _attach_neighbour(self, I: int, cell: LabelledCell) -> list:
        S, T, ctx = self.S, self.T, self.ctx
        successor = cell.label == PI
        spec = cell.spec
        rels = self._neighbour_relations(I, successor)
        inside = in_spec(spec, S)
        terms = [a.term for r in rels for a in dnf(conj([r, inside])).atoms()]
        roots = project(terms, self.k, 2)[S]
        pieces = line_cells(ctx, roots, spec.lo, spec.hi)
        if len(pieces) > 1:
            return [LabelledCell(p, cell.label, cell.witness) for p, _ in pieces]
        s0 = spec_sample(spec)
        hits = [i for i, r in enumerate(rels) if ctx.decide(exists([T], substitute(r, {S: s0})))]
        if len(hits) != 1:
            raise ConditionError(f"expected one neighbouring segment, found {len(hits)}")
        sigma = self.segments[hits[0]]
        rel = rels[hits[0]]
        psi = None
        for a in dnf(rel).atoms():
            if a.term.coeff(T) == 0:
                continue
            cand = a.term.solve_for(T)
            if ctx.decide(forall([S], implies(inside, substitute(rel, {T: cand})))):
                psi = cand
                break
        if psi is None:
            raise ConditionError("neighbour is not an affine function on the cell")
        f2 = sigma.c2.substitute({S: psi})
        same_prefix = []
        for tau in self.segments:
            if tau is sigma or tau.c1 != sigma.c1:
                continue
            if (tau.c3 < sigma.c3) if successor else (tau.c3 > sigma.c3):
                hit = qe(exists([T], conj([in_spec(tau.domain, T), eq(tau.c2.substitute({S: X(T)}), f2)])))
                same_prefix.append((tau, hit))
        terms = [a.term for _, h in same_prefix for a in dnf(conj([h, inside])).atoms()]
        roots = [t.solve_for(S) for t in terms if t.coeff(S) != 0 and t.max_var == S]
        pieces = line_cells(ctx, roots, spec.lo, spec.hi)
        if len(pieces) > 1:
            return [LabelledCell(p, cell.label, cell.witness) for p, _ in pieces]
        near = [tau.c3 for tau, h in same_prefix if ctx.decide(substitute(h, {S: s0}))]
        if successor:
            h = (max(near) + sigma.c3) / 2 if near else sigma.c3 - 1
        else:
            h = (sigma.c3 + min(near)) / 2 if near else sigma.c3 + 1
        self.segments.append(Segment(I, spec, sigma.c1, f2, h))
        return []

    # -- finite orders ---------------------------------------------------------

    def _embed_finite(self) -> None:
        import functools

        S, T = self.S, self.T

        def cmp(p, q):
            if p.index == q.index:
                return 0
            return -1 if self.ctx.decide(substitute(self.rel(p.index, q.index, S, T), {S: LinearTerm.constant(0), T: LinearTerm.constant(0)})) else 1

        self.finite_order = [p.index for p in sorted(self.pieces, key=functools.cmp_to_key(cmp))]

    # -- output ----------------------------------------------------------------

    @property
    def codomain(self) -> int:
        return 1 if self.finite_order is not None else 3

    def chart_term(self, p: Piece) -> LinearTerm:
        if p.is_point:
            return LinearTerm.constant(0)
        return X(self.k + p.coord) * p.sign

    def piece_formula(self, p: Piece) -> Formula:
        k = self.k
        if p.is_point:
            return conj(eq(X(k + i + 1), t) for i, t in enumerate(p.inverse))
        return conj([p.cell.formula(), substitute(in_spec(p.domain, self.S), {self.S: self.chart_term(p)})])

    def map_pieces(self) -> list:
        """Pieces of the embedding over base and fiber variables."""
        if self.finite_order is not None:
            return [
                MapPiece(self.piece_formula(self.pieces[i]), (Constant(Fraction(t + 1)),))
                for t, i in enumerate(self.finite_order)
            ]
        out = []
        for sg in self.segments:
            p = self.pieces[sg.piece]
            ch = self.chart_term(p)
            guard = conj([self.piece_formula(p), substitute(in_spec(sg.domain, self.S), {self.S: ch})])
            out.append(MapPiece(guard, (Constant(sg.c1), Affine(sg.c2.substitute({self.S: ch})), Constant(sg.c3))))
        return out

    def nice_set(self) -> NiceSet:
        if self.k:
            raise ValueError("nice_set is only available without base variables")
        u = 4
        parts = []
        for sg in self.segments:
            parts.append(
                conj(
                    [
                        eq(X(1), LinearTerm.constant(sg.c1)),
                        eq(X(3), LinearTerm.constant(sg.c3)),
                        exists([u], conj([in_spec(sg.domain, u), eq(X(2), sg.c2.substitute({self.S: X(u)}))])),
                    ]
                )
            )
        return NiceSet(
            qe(disj(parts)),
            tuple(sorted({sg.c1 for sg in self.segments})),
            tuple(sorted({sg.c3 for sg in self.segments})),
        )


def cell_with(cell: Cell, coord: int, spec: Graph, k: int) -> Cell:
    """``cell`` with the band at ``coord`` pinned by ``spec`` (a chart value)."""
    specs = list(cell.specs)
    specs[coord - 1] = Graph(spec.term)
    return Cell(tuple(specs), k)


# -- public entry points ---------------------------------------------------------


def _check_dim(o: DefOrder) -> None:
    if o.n == float("-inf"):
        raise ValueError("the order has an empty domain")
    if o.n > 1:
        raise DimensionError(f"one-dimensional embedding needs dim(P) <= 1, got {o.n}")


def normalize_1d(o: DefOrder) -> tuple:
    """Pieces of ``P`` with the order following ``<``, and the map onto them in ``M^2``."""
    _check_dim(o)
    e = Embedder1D(ParamContext(), o.m, o.P, o.prec)
    e.normalize()
    maps = []
    for p in e.pieces:
        second = Affine(e.chart_term(p)) if not p.is_point else Constant(Fraction(0))
        maps.append(MapPiece(e.piece_formula(p), (Constant(p.label), second)))
    return PiecewiseMap(tuple(maps), o.m, 2), e.pieces


def classify_monotone(o: DefOrder, cell: Cell) -> list:
    e = Embedder1D(ParamContext(), o.m, o.P, o.prec)
    return e.classify(cell)


def run_1d(o: DefOrder, refine_by: Sequence[Formula] = ()) -> Embedder1D:
    _check_dim(o)
    return Embedder1D(ParamContext(), o.m, o.P, o.prec, refine_by).embed()


def embed_1d(o: DefOrder, refine_by: Sequence[Formula] = ()) -> FlexEmbedding:
    e = run_1d(o, refine_by)
    return flex(PiecewiseMap(tuple(e.map_pieces()), o.m, e.codomain), o)


@dataclass(frozen=True)
class UniformPiece:
    guard: Formula
    run: Embedder1D


def embed_1d_uniform(
    region: Formula,
    k: int,
    m: int,
    P: Formula,
    prec: Formula,
    refine_by: Sequence[Formula] = (),
) -> list:
    """Fiberwise embeddings over the base ``region`` (variables ``1..k``).

    ``P`` and ``prec`` describe the fiber over variables ``k+1..k+m`` (and
    ``k+m+1..k+2m`` for the right argument of ``prec``).
    """
    P, prec = qe(P), qe(prec)

    def run(ctx):
        return Embedder1D(ctx, m, P, prec, refine_by).embed()

    return [UniformPiece(g, r) for g, r in cover(region, k, run)]


def uniform_map(pieces: Sequence[UniformPiece], k: int, m: int) -> PiecewiseMap:
    width = max(p.run.codomain for p in pieces)
    out = []
    for up in pieces:
        for mp in up.run.map_pieces():
            maps = mp.maps + tuple(Constant(Fraction(0)) for _ in range(width - len(mp.maps)))
            out.append(MapPiece(conj([up.guard, mp.guard]), maps))
    return PiecewiseMap(tuple(out), k + m, width)

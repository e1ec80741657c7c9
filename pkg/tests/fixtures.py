"""Orders used across the tests, and a plain pairwise order check."""

import itertools
import random
from fractions import Fraction

from lexembed.cells import Graph
from lexembed.embed1d import PIII, Embedder1D, LabelledCell
from lexembed.harness import SUITE_DIR, load_instance, sample_points
from lexembed.order import DefOrder
from lexembed.params import ParamContext
from lexembed.terms import evaluate, parse_formula

BLOCKS = "(or (and (< 0 x1) (< x1 1)) (and (< 2 x1) (< x1 3)))"

# z in (2,3) sits immediately below z-2, so every such z has a successor
S2_SUCC = (
    "(or (and (< 0 x1) (< x1 1) (< 0 y1) (< y1 1) (< x1 y1))"
    " (and (< 2 x1) (< x1 3) (< 2 y1) (< y1 3) (< x1 y1))"
    " (and (< 0 x1) (< x1 1) (< 2 y1) (< y1 3) (< x1 (- y1 2)))"
    " (and (< 2 x1) (< x1 3) (< 0 y1) (< y1 1) (<= (- x1 2) y1)))"
)

# block (-2,-1) on top; (0,3) below it; the point 5 cuts (0,3) at 1
STRADDLE_P = "(or (and (< -2 x1) (< x1 -1)) (and (< 0 x1) (< x1 3)) (= x1 5))"
STRADDLE = (
    "(or (and (< x1 -1) (< y1 -1) (< x1 y1))"
    " (and (< 0 x1) (< x1 3) (< -2 y1) (< y1 -1))"
    " (and (= x1 5) (< -2 y1) (< y1 -1))"
    " (and (< 0 x1) (< x1 3) (< 0 y1) (< y1 3) (< x1 y1))"
    " (and (< 0 x1) (< x1 3) (= y1 5) (<= x1 1))"
    " (and (= x1 5) (< 0 y1) (< y1 3) (< 1 y1)))"
)


def order(m, P, prec) -> DefOrder:
    return DefOrder(m, parse_formula(P, m), parse_formula(prec, m))


def suite(name) -> DefOrder:
    return load_instance(SUITE_DIR / f"{name}.ord").order()


def points_of(o: DefOrder, count=60, seed=0) -> list:
    return sample_points(o.P, o.m, count, seed)


def order_violations(o: DefOrder, g, pts, pairs=None, seed=0) -> list:
    """Pairs where the order and the lex order of ``g`` disagree, or ``g`` collides."""
    pts = list(dict.fromkeys(pts))
    combos = list(itertools.permutations(pts, 2))
    if pairs is not None and pairs < len(combos):
        combos = random.Random(seed).sample(combos, pairs)
    bad = []
    for a, b in combos:
        ga, gb = tuple(g(a)), tuple(g(b))
        if ga == gb or o.less(a, b) != (ga < gb):
            bad.append((a, b))
    return bad


def attached(o, first):
    """Embedder with piece ``first`` attached alone."""
    e = Embedder1D(ParamContext(), o.m, o.P, o.prec)
    e.normalize()
    e.attach(first, LabelledCell(e.pieces[first].domain, PIII))
    return e


def _inside(rng, lo, hi, count=6) -> list:
    return [lo + (hi - lo) * Fraction(rng.randint(1, 99), 100) for _ in range(count)]


def cut_violations(e, I, cell, rng) -> list:
    """Placed points ``y`` whose side of ``h_I(x)`` changes as ``x`` moves in the cell."""
    chart = e.pieces[I].inverse

    def at(inverse, u):
        return tuple(t.evaluate((u,)) for t in inverse)

    xs = [at(chart, u) for u in _inside(rng, cell.spec.lo.const, cell.spec.hi.const)]
    bad = []
    for sg in e.segments:
        inverse = e.pieces[sg.piece].inverse
        if isinstance(sg.domain, Graph):
            us = [sg.domain.term.const]
        else:
            us = _inside(rng, sg.domain.lo.const, sg.domain.hi.const)
        for y in (at(inverse, u) for u in us):
            sides = {evaluate(e.prec, y + x) for x in xs}
            if len(sides) > 1:
                bad.append(y)
    return bad

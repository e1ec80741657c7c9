from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from lexembed.cells import Band, Graph
from lexembed.embednd import (
    ImageCell,
    LemmaViolation,
    UnsupportedDimension,
    compress_pprime,
    compress_qx,
    embed,
    embed_via_quotient,
    has_good_boxes,
    join_constants,
    quotient_by_E,
    refine_good_projection,
)
from lexembed.terms import LinearTerm, X, evaluate, parse_formula

from fixtures import order, order_violations, points_of, suite

F = Fraction
C = LinearTerm.constant
LEX2 = "(or (< x1 y1) (and (= x1 y1) (< x2 y2)))"
LEX3 = (
    "(or (< x1 y1) (and (= x1 y1) (< x2 y2)) (and (= x1 y1) (= x2 y2) (< x3 y3)))"
)


def values(g, p):
    return tuple(F(v) for v in g(p))


def test_plane_lex_maps_to_five_coordinates():
    o = suite("s3")
    g = embed(o)
    assert g.codomain == 5
    assert values(g, (F(3), F(-7))) == (0, 3, 0, -7, 1)
    assert not order_violations(o, g, points_of(o, 50), pairs=1000)


def test_reversed_fibers_on_left_half_plane():
    o = suite("s4")
    g = embed(o)
    assert g.codomain == 5
    assert values(g, (F(-2), F(4))) == (0, -2, 0, -4, 1)
    assert values(g, (F(0), F(4))) == (1, 4, 1, 0, 0)
    assert values(g, (F(2), F(4))) == (2, 2, 0, 4, 1)
    assert not order_violations(o, g, points_of(o, 60), pairs=1500)


def test_plane_classes_are_vertical_lines():
    pres = quotient_by_E(suite("s3"))
    E = pres.class_of
    assert evaluate(E, (F(1), F(2), F(1), F(-5)))
    assert not evaluate(E, (F(1), F(2), F(3), F(2)))
    assert pres.quotient.n == 1


@settings(max_examples=40, deadline=None)
@given(st.fractions(-20, 20), st.fractions(-20, 20), st.fractions(-20, 20))
def test_representative_depends_only_on_class(x, y1, y2):
    pres = quotient_by_E(suite("s4"))
    assert pres.rep((x, y1)) == pres.rep((x, y2))
    assert evaluate(pres.class_of, (x, y1) + tuple(pres.rep((x, y1))))


def test_representative_is_an_element_of_the_class():
    pres = quotient_by_E(suite("s3"))
    assert tuple(pres.rep((F(3), F(9)))) == (3, 0)


def test_good_projection_splits_overlapping_boxes():
    cells = [
        ImageCell(0, Band(C(0), C(2)), (F(0), X(1), F(0))),
        ImageCell(1, Band(C(1), C(3)), (F(0), X(1), F(1))),
    ]
    assert not has_good_boxes(cells)
    out = refine_good_projection(cells)
    assert has_good_boxes(out)
    assert len(out) == 6


def test_phase_one_moves_a_branch_into_the_odd_coordinate():
    cells = [
        ImageCell(0, Band(C(0), C(1)), (F(0), X(1), F(0))),
        ImageCell(1, Graph(C(2)), (F(0), F(2), F(0))),
    ]
    out, plans, two = compress_pprime(cells)
    assert len(plans) == 1 and all(p.nesting_ok() for p in plans)
    interval, point = out
    assert interval.coords[0] < point.coords[0]
    assert point.coords == (F(0),)
    assert [len(c.coords) for c in out] == [3, 1]
    assert [t.kept for t in two] == [(), ()]


def test_phase_one_keeps_the_sampled_order():
    cells = [
        ImageCell(0, Band(C(0), C(1)), (F(0), X(1), F(0))),
        ImageCell(1, Graph(C(2)), (F(0), F(2), F(0))),
        ImageCell(2, Band(C(3), None), (F(0), X(1), F(0))),
    ]

    def image(c, u):
        return tuple(v if isinstance(v, Fraction) else v.evaluate((u,)) for v in c.coords)

    def samples(cs):
        pts = []
        for c in cs:
            us = [F(1, 3), F(1, 2)] if c.piece == 0 else [F(2)] if c.piece == 1 else [F(4), F(9)]
            pts += [(c.piece, u, image(c, u)) for u in us if evaluate_dom(c, u)]
        return pts

    def evaluate_dom(c, u):
        d = c.domain
        if isinstance(d, Graph):
            return d.term.const == u
        return (d.lo is None or d.lo.const < u) and (d.hi is None or u < d.hi.const)

    before = sorted(samples(cells), key=lambda t: t[2])
    out, plans, _ = compress_pprime(cells)
    after = sorted(samples(out), key=lambda t: t[2])
    assert [(p, u) for p, u, _ in before] == [(p, u) for p, u, _ in after]
    assert all(p.nesting_ok() for p in plans)


def test_join_constants_are_centred_and_spaced():
    assert join_constants(F(0), F(1, 3), 1) == [0]
    assert join_constants(F(0), F(1, 3), 2) == [F(-1, 6), F(1, 6)]
    cs = join_constants(F(5), F(1, 3), 4)
    assert cs == sorted(cs) and all(abs(c - 5) < F(1, 3) for c in cs)


def test_fiber_with_a_point_and_an_interval():
    o = order(2, "(or (= x2 0) (and (< 1 x2) (< x2 2)))", LEX2)
    q = embed_via_quotient(o)
    assert q.rank_bound == 2
    g = q.embedding
    assert values(g, (F(1), F(0))) == (0, 1, F(-1, 6), 0, 1)
    assert values(g, (F(1), F(3, 2))) == (0, 1, F(1, 6), F(3, 2), 1)
    assert not order_violations(o, g, points_of(o, 50), pairs=1000)


def test_rank_compression_of_lex_fibers():
    q = embed_via_quotient(suite("s3"))
    r, ranked = compress_qx(q.fibers)
    assert r == 1
    assert [len(pieces) for pieces in ranked] == [1]


def test_finite_quotient():
    o = order(2, "(or (= x1 0) (= x1 1))", LEX2)
    q = embed_via_quotient(o, parse_formula("(= x1 y1)", 2), check=False)
    g = q.embedding
    assert values(g, (F(0), F(7))) == (1, 7, 1)
    assert values(g, (F(1), F(-7))) == (2, -7, 1)


def test_trivial_classes_fall_back_to_the_quotient_map():
    o = suite("t1")
    q = embed_via_quotient(o, check=False)
    assert values(q.embedding, (F(4),)) == (0, 4, 0)


def test_finite_plane_set_is_one_coordinate():
    o = order(2, "(or (and (= x1 0) (= x2 0)) (and (= x1 1) (= x2 5)))", "(< x2 y2)")
    g = embed(o)
    assert g.codomain == 1
    assert g((F(0), F(0))) < g((F(1), F(5)))


def test_three_dimensions_unsupported():
    with pytest.raises(UnsupportedDimension):
        embed(order(3, "true", LEX3))


def test_sheared_plane():
    # lex order after the change of variables (x1 + x2, x2); classes are diagonal lines
    o = order(2, "true", "(or (< (+ x1 x2) (+ y1 y2)) (and (= (+ x1 x2) (+ y1 y2)) (< x2 y2)))")
    g = embed(o)
    assert not order_violations(o, g, points_of(o, 40), pairs=600)


def test_lemma_violation_is_an_assertion():
    assert issubclass(LemmaViolation, AssertionError)

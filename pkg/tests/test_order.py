from fractions import Fraction

import pytest

from lexembed.harness import SUITE_DIR, load_instance, sample_points
from lexembed.order import (
    DefOrder,
    check_linear_order,
    compute_E,
    compute_H,
    interval,
    place,
)
from lexembed.qe import equivalent, is_satisfiable, qe
from lexembed.terms import FALSE, TRUE, conj, evaluate, neg, parse_formula, substitute, X

LEX = "(or (< x1 y1) (and (= x1 y1) (< x2 y2)))"


def order(m, P, prec):
    return DefOrder(m, parse_formula(P, m), parse_formula(prec, m))


def suite(name):
    return load_instance(SUITE_DIR / f"{name}.ord").order()


def test_usual_order_is_linear():
    assert check_linear_order(order(1, "true", "(< x1 y1)")).ok


def test_equality_is_not_irreflexive():
    res = check_linear_order(order(1, "true", "(= x1 y1)"))
    assert not res.ok and res.axiom == "irreflexivity"
    (w,) = res.witness
    assert w == (0,)


def test_lex_plane_is_linear():
    assert check_linear_order(order(2, "true", LEX)).ok


def test_cycle_breaks_transitivity():
    P = "(or (= x1 0) (= x1 1) (= x1 2))"
    prec = "(or (and (= x1 0) (= y1 1)) (and (= x1 1) (= y1 2)) (and (= x1 2) (= y1 0)))"
    res = check_linear_order(order(1, P, prec))
    assert not res.ok and res.axiom == "transitivity"
    o = order(1, P, prec)
    a, b, c = res.witness
    assert o.less(a, b) and o.less(b, c) and not o.less(a, c)


def test_partial_order_breaks_totality():
    res = check_linear_order(order(2, "true", "(and (< x1 y1) (< x2 y2))"))
    assert not res.ok and res.axiom == "totality"


def test_interval_of_the_line():
    o = order(1, "true", "(< x1 y1)")
    iv = interval(o)
    assert equivalent(iv, parse_formula("(and (< x1 x3) (< x3 x2))"))
    assert evaluate(iv, (0, 1, Fraction(1, 2)))
    assert not is_satisfiable(substitute(iv, {2: X(1)}))


def test_H_examples():
    line = order(1, "true", "(< x1 y1)")
    assert equivalent(compute_H(line), TRUE)
    assert equivalent(compute_H(order(2, "true", LEX)), FALSE)
    finite = order(1, "(or (= x1 0) (= x1 1))", "(< x1 y1)")
    assert equivalent(compute_H(finite), finite.P)


def test_E_examples():
    assert equivalent(compute_E(order(2, "true", LEX)), parse_formula("(= x1 y1)", 2))
    assert equivalent(compute_E(order(1, "true", "(< x1 y1)")), parse_formula("(= x1 y1)", 1))


@pytest.mark.parametrize("name", ["s3", "s4", "s1", "e1"])
def test_E_is_symmetric_reflexive_convex(name):
    o = suite(name)
    E = compute_E(o)
    m = o.m
    swapped = place(E, m, (1, 0))
    assert not is_satisfiable(conj([E, neg(swapped)]))
    for p in sample_points(o.P, m, 10, 0):
        assert evaluate(E, p + p)
    # x E y, x < z < y, not x E z
    convex = conj([place(E, m, (0, 2)), o.prec_at(0, 1), o.prec_at(1, 2), o.P_at(1), neg(place(E, m, (0, 1)))])
    assert not is_satisfiable(qe(convex))


def test_S4_E_is_vertical_lines():
    assert equivalent(compute_E(suite("s4")), parse_formula("(= x1 y1)", 2))

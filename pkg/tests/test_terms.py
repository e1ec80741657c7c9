from fractions import Fraction

import pytest
from hypothesis import given

from lexembed.terms import (
    TRUE,
    Atom,
    Exists,
    FormulaSyntaxError,
    LinearTerm,
    QuantifierError,
    SubstitutionError,
    X,
    conj,
    evaluate,
    lt,
    neg,
    parse_formula,
    parse_term,
    substitute,
    to_sexpr,
)

from strategies import points, qf_formulas, formulas, terms


def test_parse_atom():
    f = parse_formula("(< (+ x1 (* 2 x2)) 1)")
    assert f == Atom(X(1) + X(2) * 2 - 1, "<")


def test_parse_exists_conjunction():
    f = parse_formula("(exists y1 (and (< x1 y1) (< y1 1)))", 1)
    assert isinstance(f, Exists) and f.var == 2


def test_parse_unbalanced():
    with pytest.raises(FormulaSyntaxError):
        parse_formula("(< x1 x1")


@pytest.mark.parametrize("text", ["(< x1 foo)", "(frob x1)", "(< x1 1/0)", "(* x1 x2)"])
def test_parse_rejects(text):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text)


def test_le_is_sugar_for_lt_or_eq():
    f = parse_formula("(<= x1 0)")
    assert evaluate(f, (0,)) and evaluate(f, (-1,)) and not evaluate(f, (1,))


def test_rationals_are_canonical():
    t = parse_term("(* 4/6 x1)")
    assert t.coeff(1) == Fraction(2, 3)
    assert LinearTerm.make({1: 0, 2: 1}).vars == frozenset({2})


@pytest.mark.parametrize(
    "text, point, expected",
    [("(< (+ x1 (* 2 x2)) 1)", (0, 0), True), ("(= x1 0)", (Fraction(1, 3),), False)],
)
def test_evaluate(text, point, expected):
    assert evaluate(parse_formula(text), point) is expected


def test_contradiction_is_false():
    f = parse_formula("(and (< x1 1) (not (< x1 1)))")
    assert not any(evaluate(f, (Fraction(v, 3),)) for v in range(-9, 10))


def test_evaluate_refuses_quantifiers():
    with pytest.raises(QuantifierError):
        evaluate(parse_formula("(exists x2 (< x1 x2))"), (0, 0))


def test_substitute_examples():
    assert substitute(lt(X(1), X(2)), {2: LinearTerm.constant(1)}) == lt(X(1), 1)
    f = parse_formula("(exists x2 (< x1 x2))")
    g = substitute(f, {1: X(3) + 1})
    assert g == Exists(2, lt(X(3) + 1, X(2)))


def test_substitute_avoids_capture():
    f = parse_formula("(exists x2 (< x1 x2))")
    g = substitute(f, {1: X(2)})
    assert g.var != 2


def test_substitute_rejects_bound_target():
    f = parse_formula("(exists x2 (< x1 x2))")
    with pytest.raises(SubstitutionError):
        substitute(f, {2: X(1)})


def test_identity_substitution():
    f = parse_formula("(or (< x1 x2) (= x2 3))")
    assert substitute(f, {1: X(1)}) == f


@given(formulas(3))
def test_print_parse_round_trip(f):
    # the parser normalizes (flattening, dropping duplicates); after that the
    # text is a fixed point
    g = parse_formula(to_sexpr(f))
    assert parse_formula(to_sexpr(g)) == g
    assert to_sexpr(parse_formula(to_sexpr(g))) == to_sexpr(g)


@given(qf_formulas(2), points(2))
def test_parsing_preserves_meaning(f, p):
    assert evaluate(parse_formula(to_sexpr(f)), p) == evaluate(f, p)


@given(qf_formulas(2), points(2))
def test_negation_semantics(f, p):
    assert evaluate(neg(f), p) == (not evaluate(f, p))


@given(qf_formulas(2), terms(2), points(2))
def test_substitution_lemma(f, t, p):
    moved = list(p)
    moved[0] = t.evaluate(p)
    assert evaluate(substitute(f, {1: t}), p) == evaluate(f, tuple(moved))


@given(qf_formulas(2), points(2))
def test_conj_with_true_is_neutral(f, p):
    assert evaluate(conj([f, TRUE]), p) == evaluate(f, p)

"""Hypothesis strategies for terms, formulas and points."""

from fractions import Fraction

from hypothesis import strategies as st

from lexembed.terms import And, Atom, Exists, Forall, LinearTerm, Not, Or

small = st.fractions(min_value=-5, max_value=5, max_denominator=4)
nonzero = st.sampled_from([Fraction(c) for c in (-3, -2, -1, 1, 2, 3)] + [Fraction(1, 2)])


def terms(nvars: int = 2):
    return st.builds(
        lambda cs, k: LinearTerm.make(cs, k),
        st.dictionaries(st.integers(1, nvars), nonzero, min_size=1, max_size=nvars),
        small,
    )


def atoms(nvars: int = 2):
    return st.builds(Atom, terms(nvars), st.sampled_from(["<", "="]))


def qf_formulas(nvars: int = 2, max_leaves: int = 6):
    return st.recursive(
        atoms(nvars),
        lambda kids: st.one_of(
            st.lists(kids, min_size=2, max_size=3).map(lambda a: And(tuple(a))),
            st.lists(kids, min_size=2, max_size=3).map(lambda a: Or(tuple(a))),
            kids.map(Not),
        ),
        max_leaves=max_leaves,
    )


def formulas(nvars: int = 2, max_leaves: int = 5):
    """Formulas with at most one quantifier on top of a quantifier-free body."""
    body = qf_formulas(nvars, max_leaves)
    return st.one_of(
        body,
        st.builds(lambda v, b: Exists(v, b), st.integers(1, nvars), body),
        st.builds(lambda v, b: Forall(v, b), st.integers(1, nvars), body),
    )


def points(nvars: int = 2):
    return st.tuples(*[small] * nvars)

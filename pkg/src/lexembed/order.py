"""Definable linear orders and the sets derived from them.

A :class:`DefOrder` pairs a set ``P`` over ``x1..xm`` with a relation over
``x1..xm`` (left argument) and ``x_{m+1}..x_{2m}`` (right argument).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .cells import dimension, parametric_fiber_dimension
from .qe import qe, satisfying_point, simplify
from .terms import (
    Formula,
    X,
    conj,
    disj,
    eq,
    evaluate,
    forall,
    implies,
    neg,
    rename_vars,
    substitute,
)


class OrderAxiomError(ValueError):
    """The relation is not a strict linear order on the set."""

    def __init__(self, axiom: str, witness: tuple):
        super().__init__(f"{axiom} fails at {witness}")
        self.axiom = axiom
        self.witness = witness


@dataclass(frozen=True)
class OrderCheck:
    ok: bool
    axiom: str | None = None
    witness: tuple | None = None


def place(f: Formula, m: int, slots: tuple) -> Formula:
    """Rename the argument blocks of ``f`` (blocks of ``m`` variables).

    ``slots[i]`` is the block index that the ``i``-th argument block of ``f``
    should occupy, e.g. ``place(prec, m, (1, 0))`` swaps the two arguments.
    """
    mapping = {}
    for i, s in enumerate(slots):
        for j in range(1, m + 1):
            mapping[i * m + j] = s * m + j
    return rename_vars(f, mapping)


@dataclass(frozen=True)
class DefOrder:
    m: int
    P: Formula
    prec: Formula

    def __post_init__(self):
        object.__setattr__(self, "P", qe(self.P))
        object.__setattr__(self, "prec", qe(self.prec))

    @cached_property
    def n(self):
        return dimension(self.P, self.m)

    def P_at(self, block: int) -> Formula:
        return place(self.P, self.m, (block,))

    def prec_at(self, a: int, b: int) -> Formula:
        return place(self.prec, self.m, (a, b))

    def less(self, a, b) -> bool:
        return evaluate(self.prec, tuple(a) + tuple(b))

    def contains(self, a) -> bool:
        return evaluate(self.P, tuple(a))


def check_linear_order(o: DefOrder) -> OrderCheck:
    """Irreflexivity, transitivity and totality of ``prec`` on ``P``."""
    m = o.m
    diag = {m + i: X(i) for i in range(1, m + 1)}
    irrefl = conj([o.P, substitute(o.prec, diag)])
    w = satisfying_point(irrefl, m)
    if w is not None:
        return OrderCheck(False, "irreflexivity", (w,))
    trans = conj(
        [o.P_at(0), o.P_at(1), o.P_at(2), o.prec_at(0, 1), o.prec_at(1, 2), neg(o.prec_at(0, 2))]
    )
    w = satisfying_point(trans, 3 * m)
    if w is not None:
        return OrderCheck(False, "transitivity", (w[:m], w[m : 2 * m], w[2 * m :]))
    distinct = disj(neg(eq(X(i), X(m + i))) for i in range(1, m + 1))
    total = conj([o.P_at(0), o.P_at(1), distinct, neg(o.prec_at(0, 1)), neg(o.prec_at(1, 0))])
    w = satisfying_point(total, 2 * m)
    if w is not None:
        return OrderCheck(False, "totality", (w[:m], w[m:]))
    return OrderCheck(True)


def interval(o: DefOrder) -> Formula:
    """``{(a, b, z) : z in P, a < z < b}`` over ``3m`` variables."""
    return conj([o.P_at(2), o.prec_at(0, 2), o.prec_at(2, 1)])


@dataclass(frozen=True)
class IntervalDims:
    """Base pieces ``(a, b)`` with the dimension of ``(a, b)`` constant."""

    pieces: tuple

    def at_least(self, d) -> Formula:
        return disj(g for g, e in self.pieces if e >= d)


def interval_dimensions(o: DefOrder) -> IntervalDims:
    return IntervalDims(tuple(parametric_fiber_dimension(interval(o), 2 * o.m, o.m)))


def compute_H(o: DefOrder, dims: IntervalDims | None = None) -> Formula:
    """Points of ``P`` all of whose lower intervals have dimension ``n``."""
    if o.n == 0:
        # lower intervals of a finite set are finite, empty ones included
        return o.P
    dims = dims or interval_dimensions(o)
    m = o.m
    full = dims.at_least(o.n)
    # y occupies block 0, x block 1; quantify y, then move x to block 0
    body = implies(conj([o.P_at(0), o.prec_at(0, 1)]), full)
    h = qe(forall(range(1, m + 1), body))
    h = rename_vars(h, {m + i: i for i in range(1, m + 1)})
    return simplify(conj([o.P, h]))


def compute_E(o: DefOrder, dims: IntervalDims | None = None) -> Formula:
    """``x E y`` iff the interval between ``x`` and ``y`` has dimension ``< n``."""
    dims = dims or interval_dimensions(o)
    full = dims.at_least(o.n)
    swapped = place(full, o.m, (1, 0))
    return simplify(conj([o.P_at(0), o.P_at(1), neg(full), neg(swapped)]))

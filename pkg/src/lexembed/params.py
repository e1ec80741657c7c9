"""Uniform computation over a parameter space.

A :class:`ParamContext` fixes a sample point ``x0`` of the base variables
``1..k``.  Every branch a computation takes on parameter-dependent data goes
through :meth:`ParamContext.decide`, which evaluates the condition at ``x0``
and records it.  The conjunction of recorded outcomes (:meth:`guard`) is a
region on which the same symbolic result is valid.  :func:`cover` repeats
the computation until the regions exhaust a given base set.
"""

from __future__ import annotations

import functools
from fractions import Fraction
from typing import Callable, TypeVar

from .qe import is_satisfiable, qe, satisfying_point, simplify
from .terms import (
    Const,
    Formula,
    LinearTerm,
    conj,
    eq,
    evaluate,
    free_vars,
    is_quantifier_free,
    lt,
    neg,
)

T = TypeVar("T")


class UniformityError(RuntimeError):
    """The parameter space could not be covered within the refinement cap."""


class ParamContext:
    def __init__(self, k: int = 0, sample: tuple = ()):
        if len(sample) != k:
            raise ValueError("sample length must equal the number of base variables")
        self.k = k
        self.sample = tuple(Fraction(v) for v in sample)
        self.decisions: dict = {}

    def decide(self, f: Formula) -> bool:
        if not is_quantifier_free(f):
            f = qe(f)
        if isinstance(f, Const):
            return f.value
        extra = [v for v in free_vars(f) if v > self.k]
        if extra:
            raise ValueError(f"condition mentions non-base variables {sorted(extra)}")
        if f in self.decisions:
            return self.decisions[f]
        value = evaluate(f, self.sample)
        self.decisions[f] = value
        return value

    def lt(self, a, b) -> bool:
        return self.decide(lt(a, b))

    def eq(self, a, b) -> bool:
        return self.decide(eq(a, b))

    def compare(self, a: LinearTerm, b: LinearTerm) -> int:
        if a == b:
            return 0
        if self.lt(a, b):
            return -1
        if self.eq(a, b):
            return 0
        return 1

    def sort_unique(self, values: list) -> list:
        """Sort parameter values, merging equal ones (keeps the first)."""
        ordered = sorted(values, key=functools.cmp_to_key(self.compare))
        out: list = []
        for v in ordered:
            if out and self.compare(out[-1], v) == 0:
                continue
            out.append(v)
        return out

    def value(self, t: LinearTerm) -> Fraction:
        return t.evaluate(self.sample)

    def guard(self) -> Formula:
        return conj(f if v else neg(f) for f, v in self.decisions.items())


def cover(region: Formula, k: int, run: Callable[[ParamContext], T], cap: int = 64) -> list:
    """Run ``run`` on sample points until ``region`` (over vars 1..k) is covered.

    Returns ``[(piece_guard, result), ...]`` with pairwise disjoint guards whose
    union is ``region``.
    """
    if k == 0:
        if not is_satisfiable(region):
            return []
        ctx = ParamContext(0, ())
        return [(region, run(ctx))]
    pieces = []
    remaining = simplify(region)
    for _ in range(cap):
        x0 = satisfying_point(remaining, k)
        if x0 is None:
            return pieces
        ctx = ParamContext(k, x0)
        result = run(ctx)
        g = ctx.guard()
        pieces.append((simplify(conj([remaining, g])), result))
        remaining = simplify(conj([remaining, neg(g)]))
    raise UniformityError(f"parameter region not covered after {cap} pieces")

"""Quantifier elimination for linear rational arithmetic.

Fourier-Motzkin elimination with equality propagation.  Conjunctions are
frozensets of canonical atoms; a :class:`DnfFormula` is a tuple of them.
Since the order is dense and the language only has ``<`` and ``=``, pairing
a strict lower bound with a strict upper bound is exact.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

from .terms import (
    FALSE,
    TRUE,
    And,
    Atom,
    Const,
    Exists,
    Forall,
    Formula,
    LinearTerm,
    Not,
    Or,
    QuantifierError,
    atom,
    conj,
    disj,
    free_vars,
    is_quantifier_free,
    neg,
)

DEFAULT_BUDGET = 50_000
_budget = [DEFAULT_BUDGET]


class ResourceLimitError(RuntimeError):
    """Intermediate atom count exceeded the configured budget."""


@contextlib.contextmanager
def atom_budget(limit: int):
    """Temporarily change the intermediate atom cap."""
    old = _budget[0]
    _budget[0] = limit
    try:
        yield
    finally:
        _budget[0] = old


def _check_budget(n: int) -> None:
    if n > _budget[0]:
        raise ResourceLimitError(f"{n} intermediate atoms exceed budget {_budget[0]}")


# -- atoms and conjunctions ----------------------------------------------------


def canonical(a: Atom) -> Atom:
    """Scale so the leading coefficient is +-1 (``<``) or +1 (``=``)."""
    t = a.term
    lead = t.coeffs[0][1]
    scale = 1 / abs(lead) if a.rel == "<" else 1 / lead
    if scale == 1:
        return a
    return Atom(t * scale, a.rel)


def _atom_key(a: Atom):
    return (a.rel, a.term.coeffs, a.term.const)


def sort_atoms(atoms: Iterable[Atom]) -> tuple:
    return tuple(sorted(atoms, key=_atom_key))


def simplify_conj(atoms: Iterable[Atom]) -> frozenset | None:
    """Drop duplicate and coefficient-implied atoms; ``None`` if contradictory.

    Only compares atoms with parallel coefficient vectors; a ``frozenset``
    result may still be unsatisfiable.
    """
    eqs: dict = {}
    lts: dict = {}
    for a in atoms:
        if isinstance(a, Const):
            if not a.value:
                return None
            continue
        a = canonical(a)
        key = a.term.coeffs
        if a.rel == "=":
            c = eqs.get(key)
            if c is not None and c != a.term.const:
                return None
            eqs[key] = a.term.const
        else:
            c = lts.get(key)
            if c is None or a.term.const > c:
                lts[key] = a.term.const
    out = [Atom(LinearTerm(k, c), "=") for k, c in eqs.items()]
    for key, c in lts.items():
        if key in eqs:
            if not (c - eqs[key] < 0):
                return None
            continue
        negkey = tuple((v, -q) for v, q in key)
        if negkey in eqs:
            if not (c + eqs[negkey] < 0):
                return None
            continue
        if negkey in lts and key[0][1] > 0 and not (c + lts[negkey] < 0):
            return None
        out.append(Atom(LinearTerm(key, c), "<"))
    return frozenset(out)


def _substitute_conj(atoms: Iterable[Atom], v: int, r: LinearTerm) -> frozenset | None:
    out = []
    for a in atoms:
        if v in a.term.vars:
            b = atom(a.term.substitute({v: r}), a.rel)
            if b == FALSE:
                return None
            if b == TRUE:
                continue
            out.append(b)
        else:
            out.append(a)
    return simplify_conj(out)


def fm_eliminate(atoms: frozenset, v: int) -> frozenset | None:
    """Eliminate ``x_v`` from one conjunction (exists-projection)."""
    for a in sort_atoms(atoms):
        if a.rel == "=" and v in a.term.vars:
            rest = [b for b in atoms if b is not a]
            return _substitute_conj(rest, v, a.term.solve_for(v))
    lowers, uppers, rest = [], [], []
    for a in atoms:
        c = a.term.coeff(v)
        if c == 0:
            rest.append(a)
        elif c > 0:
            uppers.append(a.term.solve_for(v))
        else:
            lowers.append(a.term.solve_for(v))
    _check_budget(len(rest) + len(lowers) * len(uppers))
    new = list(rest)
    for lo in lowers:
        for hi in uppers:
            b = atom(lo - hi, "<")
            if b == FALSE:
                return None
            if b != TRUE:
                new.append(b)
    return simplify_conj(new)


def _pick_var(atoms: frozenset, candidates: Iterable[int]) -> int:
    best, best_cost = None, None
    for v in sorted(candidates):
        if any(a.rel == "=" and v in a.term.vars for a in atoms):
            return v
        lo = sum(1 for a in atoms if a.term.coeff(v) < 0)
        hi = sum(1 for a in atoms if a.term.coeff(v) > 0)
        cost = lo * hi - lo - hi
        if best_cost is None or cost < best_cost:
            best, best_cost = v, cost
    return best


def conj_witness(atoms: frozenset) -> dict | None:
    """A satisfying assignment ``{var: value}`` of a conjunction, or ``None``."""
    cur: frozenset | None = simplify_conj(atoms)
    stages = []
    while cur:
        vs = set().union(*(a.term.vars for a in cur))
        v = _pick_var(cur, vs)
        stages.append((v, cur))
        cur = fm_eliminate(cur, v)
        if cur is None:
            return None
    if cur is None:
        return None
    values: dict = {}
    for v, conj_atoms in reversed(stages):
        values[v] = _choose_value(conj_atoms, v, values)
    return values


def _choose_value(atoms: frozenset, v: int, values: dict) -> Fraction:
    lower = upper = None
    for a in atoms:
        c = a.term.coeff(v)
        if c == 0:
            continue
        r = a.term.solve_for(v)
        val = r.evaluate({w: values.get(w, Fraction(0)) for w in r.vars})
        if a.rel == "=":
            return val
        if c > 0:
            upper = val if upper is None else min(upper, val)
        else:
            lower = val if lower is None else max(lower, val)
    if lower is not None and upper is not None:
        return (lower + upper) / 2
    if lower is not None:
        return lower + 1
    if upper is not None:
        return upper - 1
    return Fraction(0)


def conj_satisfiable(atoms: Iterable[Atom]) -> bool:
    s = simplify_conj(atoms)
    if s is None:
        return False
    return _conj_sat_cached(s)


@lru_cache(maxsize=200_000)
def _conj_sat_cached(atoms: frozenset) -> bool:
    return conj_witness(atoms) is not None


# -- normal forms --------------------------------------------------------------


@dataclass(frozen=True)
class DnfFormula:
    disjuncts: tuple  # tuple of tuples of canonical atoms

    def to_formula(self) -> Formula:
        return disj(conj(c) for c in self.disjuncts)

    @property
    def is_false(self) -> bool:
        return not self.disjuncts

    @property
    def is_true(self) -> bool:
        return any(len(c) == 0 for c in self.disjuncts)

    def atoms(self) -> list:
        return [a for c in self.disjuncts for a in c]


def nnf(f: Formula, negate: bool = False) -> Formula:
    """Negation normal form of a quantifier-free formula with atoms only."""
    if isinstance(f, Const):
        return neg(f) if negate else f
    if isinstance(f, Atom):
        if not negate:
            return f
        t = f.term
        if f.rel == "<":
            return disj([atom(-t, "<"), atom(t, "=")])
        return disj([atom(t, "<"), atom(-t, "<")])
    if isinstance(f, Not):
        return nnf(f.arg, not negate)
    if isinstance(f, (And, Or)):
        args = [nnf(a, negate) for a in f.args]
        is_and = isinstance(f, And) != negate
        return conj(args) if is_and else disj(args)
    raise QuantifierError("quantifier in a formula expected to be quantifier-free")


def _absorb(items: list, atoms: frozenset, ors: list):
    """Add atoms and conjunctions to ``atoms``; collect disjunctions in ``ors``.

    Returns the new atom set or ``None`` on a syntactic contradiction.
    """
    stack = list(items)
    while stack:
        g = stack.pop()
        if isinstance(g, Const):
            if not g.value:
                return None
            continue
        if isinstance(g, Atom):
            atoms = simplify_conj(atoms | {canonical(g)})
            if atoms is None:
                return None
            continue
        if isinstance(g, And):
            stack.extend(g.args)
            continue
        ors.append(g)
    return atoms


def _implied(atoms: frozenset, a: Atom) -> bool:
    """``a`` follows from a single atom of ``atoms`` with a parallel term."""
    if a in atoms:
        return True
    key, c = a.term.coeffs, a.term.const
    negkey = tuple((v, -q) for v, q in key)
    for b in atoms:
        bk = b.term.coeffs
        if bk == key:
            if a.rel == "<" and (b.rel == "<" and b.term.const >= c or b.rel == "=" and c < b.term.const):
                return True
        elif bk == negkey and a.rel == "<" and b.rel == "=" and c + b.term.const < 0:
            return True
    return False


def _propagate(items: list, atoms: frozenset):
    """Unit propagation: absorb forced disjuncts until every disjunction branches."""
    ors: list = []
    atoms = _absorb(items, atoms, ors)
    while atoms is not None:
        forced = []
        live = []
        for g in ors:
            args = []
            done = False
            for a in g.args:
                if isinstance(a, Atom):
                    c = canonical(a)
                    if _implied(atoms, c):
                        done = True
                        break
                    if simplify_conj(atoms | {c}) is None:
                        continue
                args.append(a)
            if done:
                continue
            if not args:
                return None, []
            if len(args) == 1:
                forced.append(args[0])
            else:
                live.append(Or(tuple(args)))
        if not forced:
            return atoms, live
        ors = live
        atoms = _absorb(forced, atoms, ors)
    return None, []


def _search(items: list, atoms: frozenset, prune: bool, out: list, first: bool) -> bool:
    atoms, ors = _propagate(items, atoms)
    if atoms is None:
        return False
    if not ors:
        if first:
            w = conj_witness(atoms)
            if w is None:
                return False
            out.append(w)
            return True
        if prune and not conj_satisfiable(atoms):
            return False
        out.append(atoms)
        _check_budget(len(out))
        return False
    if prune and not conj_satisfiable(atoms):
        return False
    pick = min(range(len(ors)), key=lambda i: len(ors[i].args))
    rest = ors[:pick] + ors[pick + 1 :]
    for arg in ors[pick].args:
        if _search(rest + [arg], atoms, prune, out, first) and first:
            return True
    return False


def _enumerate(pending: tuple, atoms: frozenset, prune: bool, out: list) -> None:
    _search(list(pending), atoms, prune, out, False)


def _remove_subsumed(conjs: list) -> list:
    conjs = list(dict.fromkeys(conjs))
    if len(conjs) > 2000:
        return conjs
    conjs.sort(key=len)
    kept = []
    for c in conjs:
        if not any(k <= c for k in kept):
            kept.append(c)
    return kept


def to_dnf(f: Formula, prune: bool = True) -> DnfFormula:
    """Disjunctive normal form of a quantifier-free formula.

    With ``prune`` the unsatisfiable conjuncts are dropped during expansion.
    """
    if not is_quantifier_free(f):
        raise QuantifierError("to_dnf needs a quantifier-free formula")
    out: list = []
    _enumerate((nnf(f),), frozenset(), prune, out)
    out = _remove_subsumed(out)
    return DnfFormula(tuple(sort_atoms(c) for c in _sorted_conjs(out)))


def _sorted_conjs(conjs: list) -> list:
    return sorted(conjs, key=lambda c: [_atom_key(a) for a in sort_atoms(c)])


def eliminate_var(d: DnfFormula, v: int, prune: bool = True) -> DnfFormula:
    """Exists-projection of ``x_v`` out of a DNF."""
    out = []
    for c in d.disjuncts:
        r = fm_eliminate(frozenset(c), v)
        if r is None:
            continue
        if prune and not conj_satisfiable(r):
            continue
        out.append(r)
    out = _remove_subsumed(out)
    return DnfFormula(tuple(sort_atoms(c) for c in _sorted_conjs(out)))


@lru_cache(maxsize=50_000)
def qe(f: Formula) -> Formula:
    """An equivalent quantifier-free formula (innermost quantifier first)."""
    if isinstance(f, (Const, Atom)):
        return f
    if isinstance(f, And):
        return conj(qe(a) for a in f.args)
    if isinstance(f, Or):
        return disj(qe(a) for a in f.args)
    if isinstance(f, Not):
        return neg(qe(f.arg))
    if isinstance(f, Exists):
        body = qe(f.body)
        if f.var not in free_vars(body):
            return simplify(body)
        return eliminate_var(to_dnf(body), f.var).to_formula()
    if isinstance(f, Forall):
        return simplify(neg(qe(Exists(f.var, neg(f.body)))))
    raise TypeError(f)


@lru_cache(maxsize=50_000)
def simplify(f: Formula) -> Formula:
    """Pruned DNF of ``qe(f)`` as a formula."""
    return to_dnf(qe(f)).to_formula()


def dnf(f: Formula) -> DnfFormula:
    return to_dnf(qe(f))


def satisfying_point(f: Formula, nvars: int | None = None) -> tuple | None:
    """A rational point satisfying ``f`` (free variables 1..nvars), or ``None``."""
    g = qe(f)
    n = nvars if nvars is not None else max(free_vars(f), default=0)
    out: list = []
    _enumerate_first((nnf(g),), frozenset(), out)
    if not out:
        return None
    return tuple(out[0].get(v, Fraction(0)) for v in range(1, n + 1))


def _enumerate_first(pending: tuple, atoms: frozenset, out: list) -> bool:
    return _search(list(pending), atoms, True, out, True)


@lru_cache(maxsize=100_000)
def is_satisfiable(f: Formula) -> bool:
    """Decide the existential closure of ``f``."""
    g = qe(f)
    collected: list = []
    return _enumerate_first((nnf(g),), frozenset(), collected)


def is_valid(f: Formula) -> bool:
    return not is_satisfiable(neg(f))


def equivalent(f: Formula, g: Formula) -> bool:
    return not is_satisfiable(disj([conj([f, neg(g)]), conj([g, neg(f)])]))


def implies_formula(f: Formula, g: Formula) -> bool:
    return not is_satisfiable(conj([f, neg(g)]))

"""Exact linear terms and first-order formulas over (Q, <, +, -, 0, 1, q*).

Variables are positional integers ``1, 2, ...``.  A point is a tuple of
``Fraction`` whose ``i-1``-th entry is the value of variable ``i``.

Formulas are immutable trees built from :class:`Atom`, :class:`And`,
:class:`Or`, :class:`Not`, :class:`Exists`, :class:`Forall` and the two
constants :data:`TRUE` and :data:`FALSE`.  An atom ``Atom(t, "<")`` means
``t < 0`` and ``Atom(t, "=")`` means ``t = 0``.

Text syntax (S-expressions)::

    term    := x<k> | y<k> | p | p/q | (+ term...) | (- term term) | (- term)
             | (* q term)
    formula := true | false | (< t t) | (= t t) | (<= t t) | (> t t)
             | (>= t t) | (and f...) | (or f...) | (not f)
             | (exists x<k> f) | (forall x<k> f)

``y<k>`` denotes variable ``m + k`` where ``m`` is the arity of the left
argument of an order formula.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

Rational = Fraction
Point = tuple


class FormulaSyntaxError(ValueError):
    """Raised on malformed formula text; ``pos`` is the character offset."""

    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


class QuantifierError(ValueError):
    pass


class SubstitutionError(ValueError):
    pass


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    raise TypeError(f"not an exact rational: {value!r}")


@dataclass(frozen=True)
class LinearTerm:
    """``sum(c_i * x_i) + const`` with exact rational coefficients."""

    coeffs: tuple = ()
    const: Fraction = Fraction(0)

    @staticmethod
    def make(coeffs: Mapping[int, object] | Iterable = (), const=0) -> "LinearTerm":
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        acc: dict[int, Fraction] = {}
        for v, c in items:
            if v < 1:
                raise ValueError(f"variable index must be >= 1, got {v}")
            acc[v] = acc.get(v, Fraction(0)) + as_fraction(c)
        return LinearTerm(
            tuple(sorted((v, c) for v, c in acc.items() if c != 0)),
            as_fraction(const),
        )

    @staticmethod
    def var(v: int, coeff=1) -> "LinearTerm":
        return LinearTerm.make({v: coeff})

    @staticmethod
    def constant(c) -> "LinearTerm":
        return LinearTerm((), as_fraction(c))

    def coeff(self, v: int) -> Fraction:
        for w, c in self.coeffs:
            if w == v:
                return c
        return Fraction(0)

    @property
    def vars(self) -> frozenset:
        return frozenset(v for v, _ in self.coeffs)

    @property
    def max_var(self) -> int:
        return self.coeffs[-1][0] if self.coeffs else 0

    def is_constant(self) -> bool:
        return not self.coeffs

    def __add__(self, other) -> "LinearTerm":
        if not isinstance(other, LinearTerm):
            other = LinearTerm.constant(other)
        return LinearTerm.make(self.coeffs + other.coeffs, self.const + other.const)

    __radd__ = __add__

    def __neg__(self) -> "LinearTerm":
        return LinearTerm(tuple((v, -c) for v, c in self.coeffs), -self.const)

    def __sub__(self, other) -> "LinearTerm":
        if not isinstance(other, LinearTerm):
            other = LinearTerm.constant(other)
        return self + (-other)

    def __rsub__(self, other) -> "LinearTerm":
        return (-self) + other

    def __mul__(self, q) -> "LinearTerm":
        q = as_fraction(q)
        if q == 0:
            return LinearTerm()
        return LinearTerm(tuple((v, c * q) for v, c in self.coeffs), self.const * q)

    __rmul__ = __mul__

    def __truediv__(self, q) -> "LinearTerm":
        return self * (1 / as_fraction(q))

    def evaluate(self, point: Sequence | Mapping) -> Fraction:
        total = self.const
        for v, c in self.coeffs:
            total += c * (point[v] if isinstance(point, Mapping) else point[v - 1])
        return total

    def substitute(self, bindings: Mapping[int, "LinearTerm"]) -> "LinearTerm":
        out = LinearTerm.constant(self.const)
        for v, c in self.coeffs:
            out = out + (bindings[v] * c if v in bindings else LinearTerm.var(v, c))
        return out

    def shift(self, offset: int, start: int = 1) -> "LinearTerm":
        """Renumber variables ``v >= start`` to ``v + offset``."""
        return LinearTerm(
            tuple((v + offset if v >= start else v, c) for v, c in self.coeffs), self.const
        )

    def solve_for(self, v: int) -> "LinearTerm":
        """The term ``r`` with ``self = 0  <=>  x_v = r``."""
        a = self.coeff(v)
        if a == 0:
            raise ValueError(f"x{v} does not occur")
        rest = LinearTerm(tuple((w, c) for w, c in self.coeffs if w != v), self.const)
        return rest * (-1 / a)

    def __str__(self) -> str:
        return term_to_sexpr(self)


Term = LinearTerm


class Formula:
    """Base class for formulas; supports ``&``, ``|`` and ``~``."""

    __slots__ = ()

    def __and__(self, other: "Formula") -> "Formula":
        return conj([self, other])

    def __or__(self, other: "Formula") -> "Formula":
        return disj([self, other])

    def __invert__(self) -> "Formula":
        return neg(self)

    def __str__(self) -> str:
        return to_sexpr(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Atom(Formula):
    term: LinearTerm
    rel: str  # "<" or "="

    def __post_init__(self):
        if self.rel not in ("<", "="):
            raise ValueError(f"bad relation {self.rel!r}")


@dataclass(frozen=True)
class And(Formula):
    args: tuple


@dataclass(frozen=True)
class Or(Formula):
    args: tuple


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: int
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: int
    body: Formula


# -- smart constructors ------------------------------------------------------


def conj(fs: Iterable[Formula]) -> Formula:
    out = []
    for f in fs:
        if f == TRUE:
            continue
        if f == FALSE:
            return FALSE
        out.extend(f.args if isinstance(f, And) else (f,))
    out = list(dict.fromkeys(out))
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else And(tuple(out))


def disj(fs: Iterable[Formula]) -> Formula:
    out = []
    for f in fs:
        if f == FALSE:
            continue
        if f == TRUE:
            return TRUE
        out.extend(f.args if isinstance(f, Or) else (f,))
    out = list(dict.fromkeys(out))
    if not out:
        return FALSE
    return out[0] if len(out) == 1 else Or(tuple(out))


def neg(f: Formula) -> Formula:
    if isinstance(f, Const):
        return FALSE if f.value else TRUE
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def atom(term: LinearTerm, rel: str) -> Formula:
    """Build an atom, folding constant terms to TRUE/FALSE."""
    if term.is_constant():
        c = term.const
        return TRUE if (c < 0 if rel == "<" else c == 0) else FALSE
    return Atom(term, rel)


def lt(a, b) -> Formula:
    return atom(_term(a) - _term(b), "<")


def eq(a, b) -> Formula:
    return atom(_term(a) - _term(b), "=")


def le(a, b) -> Formula:
    return disj([lt(a, b), eq(a, b)])


def between(lo, x, hi) -> Formula:
    """``lo < x < hi`` where ``None`` bounds are infinite."""
    parts = []
    if lo is not None:
        parts.append(lt(lo, x))
    if hi is not None:
        parts.append(lt(x, hi))
    return conj(parts)


def implies(a: Formula, b: Formula) -> Formula:
    return disj([neg(a), b])


def iff(a: Formula, b: Formula) -> Formula:
    return conj([implies(a, b), implies(b, a)])


def exists(vs: Iterable[int], body: Formula) -> Formula:
    for v in sorted(vs, reverse=True):
        body = Exists(v, body)
    return body


def forall(vs: Iterable[int], body: Formula) -> Formula:
    for v in sorted(vs, reverse=True):
        body = Forall(v, body)
    return body


def _term(x) -> LinearTerm:
    return x if isinstance(x, LinearTerm) else LinearTerm.constant(x)


def X(v: int) -> LinearTerm:
    return LinearTerm.var(v)


# -- structural queries ------------------------------------------------------


def free_vars(f: Formula) -> frozenset:
    if isinstance(f, Const):
        return frozenset()
    if isinstance(f, Atom):
        return f.term.vars
    if isinstance(f, (And, Or)):
        return frozenset().union(*(free_vars(a) for a in f.args))
    if isinstance(f, Not):
        return free_vars(f.arg)
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - {f.var}
    raise TypeError(f)


def all_vars(f: Formula) -> frozenset:
    if isinstance(f, Const):
        return frozenset()
    if isinstance(f, Atom):
        return f.term.vars
    if isinstance(f, (And, Or)):
        return frozenset().union(*(all_vars(a) for a in f.args))
    if isinstance(f, Not):
        return all_vars(f.arg)
    return all_vars(f.body) | {f.var}


def bound_vars(f: Formula) -> frozenset:
    if isinstance(f, (Const, Atom)):
        return frozenset()
    if isinstance(f, (And, Or)):
        return frozenset().union(*(bound_vars(a) for a in f.args))
    if isinstance(f, Not):
        return bound_vars(f.arg)
    return bound_vars(f.body) | {f.var}


def is_quantifier_free(f: Formula) -> bool:
    if isinstance(f, (Const, Atom)):
        return True
    if isinstance(f, (And, Or)):
        return all(is_quantifier_free(a) for a in f.args)
    if isinstance(f, Not):
        return is_quantifier_free(f.arg)
    return False


def atoms_of(f: Formula) -> list:
    if isinstance(f, Const):
        return []
    if isinstance(f, Atom):
        return [f]
    if isinstance(f, (And, Or)):
        return [a for g in f.args for a in atoms_of(g)]
    if isinstance(f, Not):
        return atoms_of(f.arg)
    return atoms_of(f.body)


# -- semantics ---------------------------------------------------------------


def evaluate(f: Formula, point: Sequence | Mapping) -> bool:
    """Truth value of a quantifier-free formula at an exact rational point."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        try:
            v = f.term.evaluate(point)
        except (IndexError, KeyError) as exc:
            raise ValueError(f"point does not bind every variable of {f}") from exc
        return v < 0 if f.rel == "<" else v == 0
    if isinstance(f, And):
        return all(evaluate(a, point) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, point) for a in f.args)
    if isinstance(f, Not):
        return not evaluate(f.arg, point)
    raise QuantifierError("evaluate needs a quantifier-free formula; run qe first")


def substitute(f: Formula, bindings: Mapping[int, LinearTerm]) -> Formula:
    """Simultaneous capture-avoiding substitution of terms for free variables."""
    bindings = {v: _term(t) for v, t in bindings.items()}
    if not bindings:
        return f
    clash = bound_vars(f) & set(bindings)
    if clash:
        raise SubstitutionError(f"cannot bind bound variable(s) {sorted(clash)}")
    return _subst(f, bindings)


def _subst(f: Formula, b: dict) -> Formula:
    if isinstance(f, Const):
        return f
    if isinstance(f, Atom):
        return atom(f.term.substitute(b), f.rel)
    if isinstance(f, And):
        return conj(_subst(a, b) for a in f.args)
    if isinstance(f, Or):
        return disj(_subst(a, b) for a in f.args)
    if isinstance(f, Not):
        return neg(_subst(f.arg, b))
    v, body = f.var, f.body
    if any(v in t.vars for t in b.values()):
        used = set(all_vars(f)) | {w for t in b.values() for w in t.vars} | set(b)
        fresh = max(used) + 1
        body = _subst(body, {v: X(fresh)})
        v = fresh
    return type(f)(v, _subst(body, b))


def rename_vars(f: Formula, mapping: Mapping[int, int]) -> Formula:
    """Rename free variables by index (simultaneous)."""
    return substitute(f, {a: X(b) for a, b in mapping.items() if a != b})


def shift_formula(f: Formula, offset: int, start: int = 1) -> Formula:
    """Renumber every variable ``v >= start`` (free or bound) to ``v + offset``."""
    if isinstance(f, Const):
        return f
    if isinstance(f, Atom):
        return Atom(f.term.shift(offset, start), f.rel)
    if isinstance(f, (And, Or)):
        return type(f)(tuple(shift_formula(a, offset, start) for a in f.args))
    if isinstance(f, Not):
        return Not(shift_formula(f.arg, offset, start))
    v = f.var + offset if f.var >= start else f.var
    return type(f)(v, shift_formula(f.body, offset, start))


def alpha_rename(f: Formula) -> Formula:
    """Rename bound variables so none coincides with a free one or another binder."""
    taken = set(free_vars(f))
    counter = [max(all_vars(f), default=0)]

    def go(g: Formula) -> Formula:
        if isinstance(g, (Const, Atom)):
            return g
        if isinstance(g, (And, Or)):
            return type(g)(tuple(go(a) for a in g.args))
        if isinstance(g, Not):
            return Not(go(g.arg))
        v, body = g.var, g.body
        if v in taken:
            counter[0] += 1
            body = _subst(body, {v: X(counter[0])})
            v = counter[0]
        taken.add(v)
        return type(g)(v, go(body))

    return go(f)


# -- printing ----------------------------------------------------------------


def _q(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _varname(v: int, m: int | None) -> str:
    if m is not None and m < v <= 2 * m:
        return f"y{v - m}"
    return f"x{v}"


def _sum(parts: list) -> str:
    if not parts:
        return "0"
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def _monomial(v: int, c: Fraction, m: int | None) -> str:
    name = _varname(v, m)
    return name if c == 1 else f"(* {_q(c)} {name})"


def term_to_sexpr(t: LinearTerm, m: int | None = None) -> str:
    parts = [_monomial(v, c, m) for v, c in t.coeffs if c > 0]
    negs = [_monomial(v, -c, m) for v, c in t.coeffs if c < 0]
    if not negs:
        if t.const != 0 or not parts:
            parts.append(_q(t.const))
        return _sum(parts)
    if t.const > 0:
        parts.append(_q(t.const))
    elif t.const < 0:
        negs.append(_q(-t.const))
    return f"(- {_sum(parts)} {_sum(negs)})"


def to_sexpr(f: Formula, m: int | None = None) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        t = f.term
        lhs = LinearTerm(tuple((v, c) for v, c in t.coeffs if c > 0), max(t.const, Fraction(0)))
        rhs = LinearTerm(tuple((v, -c) for v, c in t.coeffs if c < 0), max(-t.const, Fraction(0)))
        return f"({f.rel} {term_to_sexpr(lhs, m)} {term_to_sexpr(rhs, m)})"
    if isinstance(f, And):
        return "(and " + " ".join(to_sexpr(a, m) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(to_sexpr(a, m) for a in f.args) + ")"
    if isinstance(f, Not):
        return f"(not {to_sexpr(f.arg, m)})"
    kw = "exists" if isinstance(f, Exists) else "forall"
    return f"({kw} {_varname(f.var, m)} {to_sexpr(f.body, m)})"


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")
_RATIONAL = re.compile(r"^-?\d+(?:/\d+)?$")
_VAR = re.compile(r"^([xy])(\d+)$")


def _tokenize(text: str) -> list:
    toks, pos = [], 0
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if not mt:
            if text[pos:].strip() == "":
                break
            raise FormulaSyntaxError("unexpected character", pos)
        if mt.group(0).strip() == "":
            break
        start = mt.start(mt.lastindex)
        toks.append((mt.group(mt.lastindex), start))
        pos = mt.end()
    return toks


def _read(toks: list, i: int):
    if i >= len(toks):
        raise FormulaSyntaxError("unexpected end of input", toks[-1][1] + 1 if toks else 0)
    tok, pos = toks[i]
    if tok == ")":
        raise FormulaSyntaxError("unexpected ')'", pos)
    if tok != "(":
        return (tok, pos), i + 1
    items, i = [], i + 1
    while True:
        if i >= len(toks):
            raise FormulaSyntaxError("unbalanced '('", pos)
        if toks[i][0] == ")":
            return (items, pos), i + 1
        item, i = _read(toks, i)
        items.append(item)


def _parse_rational(tok: str, pos: int) -> Fraction:
    if not _RATIONAL.match(tok):
        raise FormulaSyntaxError(f"malformed rational {tok!r}", pos)
    try:
        return Fraction(tok)
    except ZeroDivisionError:
        raise FormulaSyntaxError(f"zero denominator in {tok!r}", pos) from None


class _Parser:
    def __init__(self, m: int | None, y_offset: int):
        self.m = m
        self.y_offset = y_offset

    def var(self, tok: str, pos: int) -> int:
        mt = _VAR.match(tok)
        if not mt or int(mt.group(2)) < 1:
            raise FormulaSyntaxError(f"unknown symbol {tok!r}", pos)
        k = int(mt.group(2))
        return k if mt.group(1) == "x" else self.y_offset + k

    def term(self, node) -> LinearTerm:
        body, pos = node
        if isinstance(body, str):
            if _VAR.match(body):
                return X(self.var(body, pos))
            if _RATIONAL.match(body):
                return LinearTerm.constant(_parse_rational(body, pos))
            if re.match(r"^-?[\d/]+$", body):
                raise FormulaSyntaxError(f"malformed rational {body!r}", pos)
            raise FormulaSyntaxError(f"unknown symbol {body!r}", pos)
        if not body:
            raise FormulaSyntaxError("empty term", pos)
        head, hpos = body[0]
        args = body[1:]
        if head == "+":
            out = LinearTerm()
            for a in args:
                out = out + self.term(a)
            return out
        if head == "-":
            if len(args) == 1:
                return -self.term(args[0])
            if len(args) != 2:
                raise FormulaSyntaxError("'-' takes one or two arguments", hpos)
            return self.term(args[0]) - self.term(args[1])
        if head == "*":
            if len(args) != 2:
                raise FormulaSyntaxError("'*' takes a rational and a term", hpos)
            q, qpos = args[0]
            if not isinstance(q, str) or not _RATIONAL.match(q):
                raise FormulaSyntaxError("first argument of '*' must be a rational literal", qpos)
            return self.term(args[1]) * _parse_rational(q, qpos)
        raise FormulaSyntaxError(f"unknown symbol {head!r}", hpos)

    def formula(self, node) -> Formula:
        body, pos = node
        if isinstance(body, str):
            if body == "true":
                return TRUE
            if body == "false":
                return FALSE
            raise FormulaSyntaxError(f"expected a formula, got {body!r}", pos)
        if not body or not isinstance(body[0][0], str):
            raise FormulaSyntaxError("expected an operator", pos)
        head, hpos = body[0]
        args = body[1:]
        if head in ("<", "=", "<=", ">", ">="):
            if len(args) != 2:
                raise FormulaSyntaxError(f"'{head}' takes two terms", hpos)
            a, b = self.term(args[0]), self.term(args[1])
            if head == "<":
                return atom(a - b, "<")
            if head == "=":
                return atom(a - b, "=")
            if head == ">":
                return atom(b - a, "<")
            if head == "<=":
                return disj([atom(a - b, "<"), atom(a - b, "=")])
            return disj([atom(b - a, "<"), atom(a - b, "=")])
        if head == "and":
            return conj(self.formula(a) for a in args)
        if head == "or":
            return disj(self.formula(a) for a in args)
        if head == "not":
            if len(args) != 1:
                raise FormulaSyntaxError("'not' takes one argument", hpos)
            return neg(self.formula(args[0]))
        if head in ("exists", "forall"):
            if len(args) != 2 or not isinstance(args[0][0], str):
                raise FormulaSyntaxError(f"'{head}' takes a variable and a formula", hpos)
            v = self.var(*args[0])
            cls = Exists if head == "exists" else Forall
            return cls(v, self.formula(args[1]))
        raise FormulaSyntaxError(f"unknown symbol {head!r}", hpos)


def parse_formula(text: str, m: int | None = None) -> Formula:
    """Parse S-expression text into a formula.

    ``y<k>`` maps to variable ``m + k``; without ``m`` the offset is the
    largest ``x`` index occurring in the text.
    """
    toks = _tokenize(text)
    if not toks:
        raise FormulaSyntaxError("empty input", 0)
    tree, i = _read(toks, 0)
    if i != len(toks):
        raise FormulaSyntaxError("trailing input", toks[i][1])
    if m is None:
        xs = [int(t[1:]) for t, _ in toks if re.match(r"^x\d+$", t)]
        offset = max(xs, default=0)
    else:
        offset = m
    return alpha_rename(_Parser(m, offset).formula(tree))


def parse_term(text: str, m: int | None = None) -> LinearTerm:
    toks = _tokenize(text)
    if not toks:
        raise FormulaSyntaxError("empty input", 0)
    tree, i = _read(toks, 0)
    if i != len(toks):
        raise FormulaSyntaxError("trailing input", toks[i][1])
    return _Parser(m, m or 0).term(tree)

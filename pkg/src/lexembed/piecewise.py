"""Guarded piecewise maps with affine, constant and rank-constant coordinates."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .qe import is_satisfiable
from .terms import Formula, LinearTerm, conj, disj, evaluate, neg, term_to_sexpr, to_sexpr


class OutsideDomainError(ValueError):
    pass


@dataclass(frozen=True)
class Affine:
    term: LinearTerm

    def __call__(self, point) -> Fraction:
        return self.term.evaluate(point)

    def to_json(self) -> dict:
        return {"kind": "affine", "term": term_to_sexpr(self.term)}


@dataclass(frozen=True)
class Constant:
    value: Fraction

    def __call__(self, point) -> Fraction:
        return self.value

    def to_json(self) -> dict:
        return {"kind": "const", "value": str(self.value)}


@dataclass(frozen=True)
class RankConstant:
    """First entry whose guard holds gives the value."""

    entries: tuple

    def __call__(self, point) -> Fraction:
        for guard, value in self.entries:
            if evaluate(guard, point):
                return value
        raise OutsideDomainError(f"no rank entry applies at {tuple(map(str, point))}")

    @property
    def values(self) -> list:
        return sorted({v for _, v in self.entries})

    def to_json(self) -> dict:
        return {
            "kind": "rank",
            "entries": [{"guard": to_sexpr(g), "value": str(v)} for g, v in self.entries],
        }


def is_finite_valued(c) -> bool:
    return isinstance(c, (Constant, RankConstant))


def finite_values(c) -> list:
    if isinstance(c, Constant):
        return [c.value]
    if isinstance(c, RankConstant):
        return c.values
    raise TypeError(f"{c} is not finite-valued")


@dataclass(frozen=True)
class MapPiece:
    guard: Formula
    maps: tuple

    def __call__(self, point) -> tuple:
        return tuple(c(point) for c in self.maps)

    def to_json(self) -> dict:
        return {"guard": to_sexpr(self.guard), "maps": [c.to_json() for c in self.maps]}


@dataclass(frozen=True)
class PiecewiseMap:
    pieces: tuple
    domain_dim: int
    codomain_dim: int

    def piece_at(self, point) -> MapPiece:
        for p in self.pieces:
            if evaluate(p.guard, point):
                return p
        raise OutsideDomainError(f"no piece contains {tuple(map(str, point))}")

    def __call__(self, point) -> tuple:
        return self.piece_at(tuple(point))(tuple(point))

    def domain(self) -> Formula:
        return disj(p.guard for p in self.pieces)

    def overlaps(self) -> list:
        """Index pairs of pieces whose guards intersect."""
        out = []
        for i in range(len(self.pieces)):
            for j in range(i + 1, len(self.pieces)):
                if is_satisfiable(conj([self.pieces[i].guard, self.pieces[j].guard])):
                    out.append((i, j))
        return out

    def covers(self, domain: Formula) -> bool:
        return not is_satisfiable(conj([domain, neg(self.domain())]))

    def odd_values(self) -> list:
        """Sorted value lists of the odd output coordinates (1-based odd)."""
        out = []
        for i in range(0, self.codomain_dim, 2):
            vals = set()
            for p in self.pieces:
                vals.update(finite_values(p.maps[i]))
            out.append(sorted(vals))
        return out

    def to_json(self) -> list:
        return [p.to_json() for p in self.pieces]


def pad(maps: Sequence, width: int) -> tuple:
    if len(maps) > width:
        raise ValueError(f"cannot pad {len(maps)} coordinates to {width}")
    return tuple(maps) + tuple(Constant(Fraction(0)) for _ in range(width - len(maps)))


def lex_less(a: Sequence, b: Sequence) -> bool:
    return tuple(a) < tuple(b)


@dataclass(frozen=True)
class FlexEmbedding:
    """Order embedding into ``(M^k, lex)`` with finite odd-coordinate images."""

    map: PiecewiseMap
    odd_values: tuple
    order: object = None

    def __call__(self, point) -> tuple:
        return self.map(point)

    @property
    def codomain(self) -> int:
        return self.map.codomain_dim

    def odd_coordinates_certified(self) -> bool:
        for p in self.map.pieces:
            for i in range(0, self.codomain, 2):
                if not is_finite_valued(p.maps[i]):
                    return False
        return [list(v) for v in self.odd_values] == self.map.odd_values()


def flex(pm: PiecewiseMap, order=None) -> FlexEmbedding:
    return FlexEmbedding(pm, tuple(tuple(v) for v in pm.odd_values()), order)

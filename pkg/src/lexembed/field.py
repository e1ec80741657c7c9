"""Dropping finite coordinates with order-preserving squashes.

With multiplication available, every interval of ``M`` is the image of an
order-preserving injection from all of ``M``.  A coordinate with finitely
many values ``a_1 < ... < a_r`` can then be merged with the next one: the
block ``x_j = a_i`` is squashed into ``(a_{i-1}, a_i)``.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction

from .piecewise import FlexEmbedding


class NotInListError(ValueError):
    pass


@dataclass(frozen=True)
class BoundedInjection:
    """Strictly increasing map from ``M`` onto a subset of ``(lo, hi)``."""

    lo: Fraction | None
    hi: Fraction | None

    def __post_init__(self):
        if self.lo is not None and self.hi is not None and not self.lo < self.hi:
            raise ValueError(f"empty interval ({self.lo}, {self.hi})")

    @property
    def kind(self) -> str:
        return {(True, True): "bounded", (False, True): "above", (True, False): "below"}.get(
            (self.lo is not None, self.hi is not None), "identity"
        )

    def __call__(self, t) -> Fraction:
        t = Fraction(t)
        a, b = self.lo, self.hi
        if a is not None and b is not None:
            return a + (b - a) * (t / (1 + abs(t)) + 1) / 2
        if b is not None:
            return b - 1 / (1 + max(t, 0)) - max(-t, 0)
        if a is not None:
            return a + 1 / (1 + max(-t, 0)) + max(t, 0)
        return t

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "lo": None if self.lo is None else str(self.lo),
            "hi": None if self.hi is None else str(self.hi),
        }


def bounded_injection(lo=None, hi=None) -> BoundedInjection:
    return BoundedInjection(
        None if lo is None else Fraction(lo), None if hi is None else Fraction(hi)
    )


@dataclass(frozen=True)
class CoordinateCompression:
    """Merge coordinate ``j`` (1-based, finite values) into coordinate ``j+1``.

    With ``last=True`` the finite coordinate is the final one and is simply
    dropped; this is only order-preserving when it is determined by the
    earlier coordinates, which the caller asserts.
    """

    j: int
    values: tuple
    last: bool = False

    def injection(self, i: int) -> BoundedInjection:
        lo = self.values[i - 1] if i > 0 else None
        return bounded_injection(lo, self.values[i])

    def __call__(self, x: tuple) -> tuple:
        j = self.j
        v = x[j - 1]
        i = bisect_left(self.values, v)
        if i == len(self.values) or self.values[i] != v:
            raise NotInListError(f"coordinate {j} value {v} is not in {list(map(str, self.values))}")
        if self.last:
            return tuple(x[: j - 1])
        return tuple(x[: j - 1]) + (self.injection(i)(x[j]),) + tuple(x[j + 1 :])

    def to_json(self) -> dict:
        return {"position": self.j, "values": [str(v) for v in self.values], "last": self.last}


def compress_finite_coordinate(values, j: int, k: int, determined: bool = False) -> CoordinateCompression:
    values = tuple(sorted({Fraction(v) for v in values}))
    if not values:
        raise ValueError("empty value list")
    if not 1 <= j <= k:
        raise ValueError(f"coordinate {j} outside 1..{k}")
    if j == k and not determined:
        raise ValueError("the last coordinate can only be dropped when it is determined by the others")
    return CoordinateCompression(j, values, last=(j == k))


@dataclass(frozen=True)
class CompressedEmbedding:
    base: FlexEmbedding
    steps: tuple

    @property
    def codomain(self) -> int:
        return self.base.codomain - len(self.steps)

    def __call__(self, point) -> tuple:
        y = tuple(self.base(point))
        for s in self.steps:
            y = s(y)
        return y

    def to_json(self) -> list:
        return [s.to_json() for s in self.steps]


def field_compress(g: FlexEmbedding) -> CompressedEmbedding:
    """Compress the odd coordinates ``1, 3, ..., 2n-1`` of ``g`` into ``M^(n+1)``."""
    n = (g.codomain - 1) // 2
    steps = []
    width = g.codomain
    for t in range(1, n + 1):
        # original coordinate 2t-1 sits at position t after t-1 merges
        steps.append(compress_finite_coordinate(g.odd_values[t - 1], t, width))
        width -= 1
    return CompressedEmbedding(g, tuple(steps))

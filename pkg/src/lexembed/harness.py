"""Instance files, sampling, verification and artifacts."""

from __future__ import annotations

import functools
import json
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .cells import Graph, cell_sample, decompose
from .embednd import embed
from .field import CompressedEmbedding, field_compress
from .order import DefOrder, check_linear_order
from .piecewise import Affine, Constant, FlexEmbedding, MapPiece, PiecewiseMap, flex
from .terms import Formula, evaluate, free_vars, parse_formula

SUITE_DIR = Path(__file__).parent / "instances"


class InstanceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    m: int
    P: str
    prec: str
    expect_dim: int | None = None
    field_compress: bool = False

    def order(self) -> DefOrder:
        return DefOrder(self.m, parse_formula(self.P, self.m), parse_formula(self.prec, self.m))


def parse_instance(text: str, name: str = "instance") -> ProblemInstance:
    fields: dict = {}
    flags = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        if key in ("vars", "P", "ORD", "expect-dim"):
            if not rest:
                raise InstanceFormatError(f"line {lineno}: '{key}' needs a value")
            fields[key] = rest
        elif key == "field-compress" and not rest:
            flags.add(key)
        else:
            raise InstanceFormatError(f"line {lineno}: unknown entry '{key}'")
    for key in ("vars", "P", "ORD"):
        if key not in fields:
            raise InstanceFormatError(f"missing '{key}' line")
    try:
        m = int(fields["vars"])
        dim = int(fields["expect-dim"]) if "expect-dim" in fields else None
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from None
    inst = ProblemInstance(name, m, fields["P"], fields["ORD"], dim, "field-compress" in flags)
    for key, text, arity in (("P", inst.P, m), ("ORD", inst.prec, 2 * m)):
        extra = sorted(v for v in free_vars(parse_formula(text, m)) if v > arity)
        if extra:
            raise InstanceFormatError(f"'{key}' uses variables beyond its arity: {extra}")
    return inst


def load_instance(path) -> ProblemInstance:
    path = Path(path)
    return parse_instance(path.read_text(encoding="utf-8"), path.stem)


def suite_files(directory=SUITE_DIR) -> list:
    return sorted(Path(directory).glob("*.ord"))


# -- sampling --------------------------------------------------------------------


def _random_rational(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(1, 999), rng.randint(1, 97))


def _jitter_in_band(rng: random.Random, lo, hi) -> Fraction:
    if lo is not None and hi is not None:
        u = Fraction(rng.randint(1, 999), 1000)
        return lo + (hi - lo) * u
    if lo is not None:
        return lo + _random_rational(rng)
    if hi is not None:
        return hi - _random_rational(rng)
    return _random_rational(rng) * rng.choice((-1, 1))


def _jittered_point(rng: random.Random, cell) -> tuple:
    vals: list = []
    for s in cell.specs:
        if isinstance(s, Graph):
            vals.append(s.term.evaluate(vals + [0] * (cell.ambient - len(vals))))
            continue
        pad = vals + [0] * (cell.ambient - len(vals))
        lo = None if s.lo is None else s.lo.evaluate(pad)
        hi = None if s.hi is None else s.hi.evaluate(pad)
        vals.append(_jitter_in_band(rng, lo, hi))
    return tuple(vals)


def sample_points(f: Formula, m: int, count: int, seed: int = 0) -> list:
    """Canonical points of the cells of ``f`` followed by seeded jittered points."""
    dec = decompose([f], m)
    cells = dec.cells_in(0)
    if not cells:
        raise ValueError("cannot sample an empty set")
    out: list = []
    seen = set()

    def add(p):
        if p not in seen and evaluate(f, p):
            seen.add(p)
            out.append(p)

    for c in cells:
        add(tuple(t.const for t in cell_sample(c)))
    rng = random.Random(seed)
    wide = [c for c in cells if c.dim > 0]
    attempts = 0
    while wide and len(out) < count and attempts < 20 * count:
        attempts += 1
        add(_jittered_point(rng, rng.choice(wide)))
    return out[: max(count, 1)] if len(out) > count else out


# -- verification ----------------------------------------------------------------


def _show(p) -> list:
    return [str(v) for v in p]


@dataclass
class VerificationReport:
    samples: int
    seed: int
    pairs: int
    order_violations: list
    injectivity_violations: list
    certificates: dict
    codomain: int
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return (
            not self.order_violations
            and not self.injectivity_violations
            and all(self.certificates.values())
        )

    def to_json(self) -> dict:
        # runtime varies between runs, so it stays out of the serialized report
        return {
            "samples": self.samples,
            "seed": self.seed,
            "pairs": self.pairs,
            "orderViolations": self.order_violations[:20],
            "orderViolationCount": len(self.order_violations),
            "injectivityViolations": self.injectivity_violations[:20],
            "injectivityViolationCount": len(self.injectivity_violations),
            "certificates": self.certificates,
            "codomain": self.codomain,
            "passed": self.passed,
        }


def certificates(o: DefOrder, g) -> dict:
    if isinstance(g, CompressedEmbedding):
        g = g.base
    if not isinstance(g, FlexEmbedding):
        return {}
    return {
        "oddFinite": g.odd_coordinates_certified(),
        "disjointPieces": not g.map.overlaps(),
        "coversP": g.map.covers(o.P),
    }


def verify_embedding(o: DefOrder, g, pairs: int = 1000, seed: int = 0, pool: int | None = None) -> VerificationReport:
    """Sampled order preservation and injectivity of ``g`` on ``P``."""
    start = time.perf_counter()
    pool = pool or max(2, min(pairs, 150))
    pts = sample_points(o.P, o.m, pool, seed)
    images = [tuple(g(p)) for p in pts]
    rng = random.Random(seed + 1)
    order_bad, inj_bad = [], []
    used = 0
    if len(pts) > 1:
        for _ in range(pairs):
            i, j = rng.sample(range(len(pts)), 2)
            a, b = pts[i], pts[j]
            used += 1
            ga, gb = images[i], images[j]
            if ga == gb:
                inj_bad.append([_show(a), _show(b)])
            if o.less(a, b) != (ga < gb):
                order_bad.append([_show(a), _show(b)])
    width = len(images[0]) if images else 0
    return VerificationReport(
        len(pts), seed, used, order_bad, inj_bad, certificates(o, g), width,
        time.perf_counter() - start,
    )


@dataclass(frozen=True)
class OracleResult:
    passed: bool
    reason: str = ""
    witnesses: tuple = ()


def finite_oracle_check(o: DefOrder, count: int, seed: int, g) -> OracleResult:
    """Sort a finite sample by the order itself and compare with the lex order of ``g``."""
    pts = sample_points(o.P, o.m, count, seed)
    for p in pts:
        if o.less(p, p):
            return OracleResult(False, "irreflexivity", (_show(p),))

    def cmp(a, b):
        ab, ba = o.less(a, b), o.less(b, a)
        if ab == ba:
            raise _Inconsistent(a, b)
        return -1 if ab else 1

    try:
        ranked = sorted(pts, key=functools.cmp_to_key(cmp))
    except _Inconsistent as exc:
        return OracleResult(False, "totality", (_show(exc.a), _show(exc.b)))
    for a, b in zip(ranked, ranked[1:]):
        if not o.less(a, b):
            return OracleResult(False, "transitivity", (_show(a), _show(b)))
    images = [tuple(g(p)) for p in ranked]
    for (a, ga), (b, gb) in zip(zip(ranked, images), zip(ranked[1:], images[1:])):
        if not ga < gb:
            return OracleResult(False, "rank order differs from lex order", (_show(a), _show(b)))
    return OracleResult(True)


class _Inconsistent(Exception):
    def __init__(self, a, b):
        self.a, self.b = a, b


# -- fault injection -------------------------------------------------------------


def corrupt_swap(g: FlexEmbedding) -> FlexEmbedding:
    """Exchange the maps of the first two pieces that differ."""
    ps = list(g.map.pieces)
    for i in range(len(ps)):
        for j in range(i + 1, len(ps)):
            if ps[i].maps != ps[j].maps:
                ps[i], ps[j] = MapPiece(ps[i].guard, ps[j].maps), MapPiece(ps[j].guard, ps[i].maps)
                return flex(PiecewiseMap(tuple(ps), g.map.domain_dim, g.map.codomain_dim), g.order)
    raise ValueError("need two pieces with different maps to swap")


def _negate(c):
    if isinstance(c, Affine):
        return Affine(-c.term)
    return Constant(-c.value)


def corrupt_reverse(g: FlexEmbedding) -> FlexEmbedding:
    """Negate every coordinate, which reverses the lex order of the image."""
    ps = tuple(MapPiece(p.guard, tuple(_negate(c) for c in p.maps)) for p in g.map.pieces)
    return flex(PiecewiseMap(ps, g.map.domain_dim, g.map.codomain_dim), g.order)


# -- running instances -----------------------------------------------------------


@dataclass
class RunResult:
    instance: ProblemInstance
    n: object
    embedding: FlexEmbedding | None
    compressed: CompressedEmbedding | None
    report: VerificationReport | None
    oracle: OracleResult | None
    error: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def evaluator(self):
        return self.compressed or self.embedding

    @property
    def passed(self) -> bool:
        return (
            not self.error
            and self.report is not None
            and self.report.passed
            and self.oracle is not None
            and self.oracle.passed
        )

    def artifact(self) -> dict:
        g = self.embedding
        out = {
            "name": self.instance.name,
            "m": self.instance.m,
            "n": self.n,
            "codomain": self.compressed.codomain if self.compressed else g.codomain,
            "pieces": g.map.to_json(),
            "oddValues": [[str(v) for v in vals] for vals in g.odd_values],
            "fieldCompressed": self.compressed is not None,
        }
        if self.compressed:
            out["fieldSteps"] = self.compressed.to_json()
        return out

    def report_json(self) -> dict:
        return {
            "name": self.instance.name,
            "passed": self.passed,
            "error": self.error,
            "verification": self.report.to_json() if self.report else None,
            "oracle": {
                "passed": self.oracle.passed,
                "reason": self.oracle.reason,
                "witnesses": [list(w) for w in self.oracle.witnesses],
            }
            if self.oracle
            else None,
        }


def run_instance(
    inst: ProblemInstance,
    verify: int = 1000,
    seed: int = 0,
    compress: bool | None = None,
    oracle_size: int = 200,
) -> RunResult:
    o = inst.order()
    check = check_linear_order(o)
    if not check.ok:
        w = [_show(p) for p in check.witness]
        return RunResult(inst, None, None, None, None, None, f"not a linear order: {check.axiom} fails at {w}")
    n = o.n
    if inst.expect_dim is not None and n != inst.expect_dim:
        return RunResult(inst, n, None, None, None, None, f"dimension {n}, expected {inst.expect_dim}")
    g = embed(o)
    compress = inst.field_compress if compress is None else compress
    cg = field_compress(g) if compress else None
    ev = cg or g
    report = verify_embedding(o, ev, verify, seed)
    report.certificates = certificates(o, g)
    oracle = finite_oracle_check(o, oracle_size, seed, ev)
    return RunResult(inst, n, g, cg, report, oracle)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"

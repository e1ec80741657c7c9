"""Command-line entry point: ``lexembed embed|suite|qe``."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .harness import SUITE_DIR, dumps, load_instance, run_instance, suite_files
from .qe import qe
from .terms import parse_formula, to_sexpr


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lexembed", description="Embed definable linear orders into lexicographic powers.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("embed", help="embed one instance file")
    e.add_argument("file")
    e.add_argument("--verify", type=int, default=1000, metavar="N", help="sampled pairs to check")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--field-compress", action="store_true", help="compress the codomain to M^(n+1)")
    e.add_argument("--out", help="write the embedding artifact (JSON) here")
    e.add_argument("--report", help="write the verification report (JSON) here")

    s = sub.add_parser("suite", help="embed every *.ord file in a directory")
    s.add_argument("dir", nargs="?", default=str(SUITE_DIR))
    s.add_argument("--verify", type=int, default=1000, metavar="N")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", help="write one artifact per instance here")

    q = sub.add_parser("qe", help="eliminate quantifiers from a formula")
    q.add_argument("formula")
    q.add_argument("--vars", type=int, default=None, help="arity m, enables y1..ym")
    return p


def _embed(args) -> int:
    inst = load_instance(args.file)
    start = time.perf_counter()
    res = run_instance(inst, args.verify, args.seed, compress=args.field_compress or None)
    elapsed = time.perf_counter() - start
    if res.error:
        print(f"{inst.name}: FAIL ({res.error})", file=sys.stderr)
        return 1
    if args.out:
        Path(args.out).write_text(dumps(res.artifact()), encoding="utf-8")
    if args.report:
        Path(args.report).write_text(dumps(res.report_json()), encoding="utf-8")
    status = "PASS" if res.passed else "FAIL"
    codomain = res.artifact()["codomain"]
    print(f"{inst.name}: {status} n={res.n} codomain={codomain} pairs={res.report.pairs} "
          f"violations={len(res.report.order_violations)} oracle={'PASS' if res.oracle.passed else 'FAIL'}")
    print(f"{inst.name}: {elapsed:.2f}s", file=sys.stderr)
    return 0 if res.passed else 1


def _suite(args) -> int:
    files = suite_files(args.dir)
    if not files:
        print(f"no .ord files in {args.dir}", file=sys.stderr)
        return 1
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    ok = True
    for f in files:
        inst = load_instance(f)
        try:
            res = run_instance(inst, args.verify, args.seed)
        except Exception as exc:  # report and keep going
            print(f"{inst.name}: ERROR {type(exc).__name__}: {exc}")
            ok = False
            continue
        if res.error:
            print(f"{inst.name}: FAIL ({res.error})")
            ok = False
            continue
        if out_dir:
            (out_dir / f"{inst.name}.json").write_text(dumps(res.artifact()), encoding="utf-8")
        print(f"{inst.name}: {'PASS' if res.passed else 'FAIL'} codomain={res.artifact()['codomain']}")
        ok = ok and res.passed
    return 0 if ok else 1


def _qe(args) -> int:
    print(to_sexpr(qe(parse_formula(args.formula, args.vars)), args.vars))
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"embed": _embed, "suite": _suite, "qe": _qe}[args.command]
    try:
        return handler(args)
    except OSError as exc:
        print(f"lexembed: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"lexembed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

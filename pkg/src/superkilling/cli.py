"""Command line entry point."""
from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from .dsl import DSLError, parse
from .liealg import LieAlgebraData, LieDataError, check_algebraic_killing, check_jacobi, check_unimodular_trace
from .runner import run_checks
from .superalgebra import sampling

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_INTERNAL = 0, 1, 2, 3


def fixture_paths() -> list[Path]:
    root = resources.files("superkilling") / "fixtures"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith((".sk", ".json")))


def _describe(path: Path) -> str:
    if path.suffix == ".json":
        data = json.loads(path.read_text())
        return f"Lie algebra data, dim {data.get('dim')} (JSON, for the liealg command)"
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            return line.lstrip("# ").strip()
    return ""


def cmd_check(args) -> int:
    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    overrides = {k: v for k, v in (("seed", args.seed), ("samples", args.samples), ("tol", args.tol)) if v is not None}
    with sampling(**overrides):
        try:
            doc = parse(text)
        except DSLError as exc:
            print(f"{args.file}:{exc}", file=sys.stderr)
            return EXIT_INVALID
        report = run_checks(doc, parallel=args.parallel)
    report.source = str(args.file)
    print(report.to_json() if args.json else report.to_text())
    return report.exit_code


def cmd_fixtures(args) -> int:
    for p in fixture_paths():
        print(f"{p.name:32s} {_describe(p)}")
        if args.paths:
            print(f"    {p}")
    return EXIT_OK


def cmd_liealg(args) -> int:
    try:
        L = LieAlgebraData.from_json(Path(args.file).read_text(encoding="utf-8"), name=Path(args.file).stem)
    except (OSError, ValueError, LieDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    verdicts = [check_jacobi(L), check_algebraic_killing(L), check_unimodular_trace(L)]
    if args.json:
        print(json.dumps({"dim": L.dim, "verdicts": [
            {"name": v.name, "status": v.status, "witnesses": [list(w) for w in v.witnesses]} for v in verdicts]},
            indent=2))
    else:
        for v in verdicts:
            print(f"[{v.status.upper():>4}] {v.name}")
            for label, val in v.witnesses:
                print(f"    witness {label} = {val}")
    return EXIT_OK if all(v.holds for v in verdicts) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="superkilling", description="Killing, homological and unimodularity checks "
                                "on coordinate charts of supermanifolds.")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("check", help="run the check directives of a definition file")
    c.add_argument("file")
    c.add_argument("--json", action="store_true", help="machine-readable report")
    c.add_argument("--seed", type=int, help="seed for numeric sampling")
    c.add_argument("--samples", type=int, help="sample points per numeric test")
    c.add_argument("--tol", type=float, help="tolerance of numeric zero tests")
    c.add_argument("--parallel", action="store_true", help="run directives concurrently")
    c.set_defaults(func=cmd_check)
    f = sub.add_parser("fixtures", help="list bundled example files")
    f.add_argument("--paths", action="store_true", help="also print file locations")
    f.set_defaults(func=cmd_fixtures)
    lie = sub.add_parser("liealg", help="check a Lie algebra given as JSON {dim, structure, form}")
    lie.add_argument("file")
    lie.add_argument("--json", action="store_true")
    lie.set_defaults(func=cmd_liealg)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

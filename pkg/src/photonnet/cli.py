"""Command-line entry point: ``photonnet run | report | verify | schema``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ContractError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONTRACT = 2


def _load(args):
    from . import netspec

    try:
        text = Path(args.file).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {args.file}: {exc.strerror}") from None
    exp = netspec.parse(text)
    for assignment in args.sweep_override or ():
        exp = netspec.apply_override(exp, assignment)
    return exp


def _cmd_run(args) -> int:
    from . import netspec

    result = netspec.run(_load(args), threads=args.threads)
    text = netspec.to_csv(result) if args.out == "csv" else netspec.to_json(result) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if args.figure:
        from .report import render_figure

        render_figure(result, args.figure)
    return EXIT_OK


def _cmd_report(args) -> int:
    from . import netspec
    from .report import render_figure

    exp = _load(args)
    result = netspec.run(exp, threads=args.threads)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.stem or Path(args.file).stem
    (out / f"{stem}.csv").write_text(netspec.to_csv(result))
    (out / f"{stem}.json").write_text(netspec.to_json(result) + "\n")
    fig = render_figure(result, out / f"{stem}.png")
    print(f"wrote {out / (stem + '.csv')}, {out / (stem + '.json')}, {fig}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .crosscheck import run_crosscheck

    results = run_crosscheck(args.seed, args.cases, args.tol)
    failed = [r for r in results if not r.passed]
    worst = max((r.max_error for r in results), default=0.0)
    for r in failed:
        print(f"FAIL case {r.index}: {r.description}: error {r.max_error:.3e}")
    print(f"{len(results) - len(failed)}/{len(results)} cases within {args.tol:g} (worst {worst:.3e})")
    return EXIT_OK if not failed else EXIT_CONTRACT


def _cmd_schema(args) -> int:
    from .netspec import schema

    print(json.dumps(schema(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photonnet",
                                     description="Detection statistics for frequency-resolved photonic networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file", help="experiment JSON file")
        p.add_argument("--sweep-override", action="append", metavar="PATH=VALUE",
                       help="set a field before running; repeatable")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for sweep points (default: PHOTONNET_THREADS or 1)")

    run = sub.add_parser("run", help="evaluate an experiment")
    common(run)
    run.add_argument("--out", choices=("csv", "json"), default="csv")
    run.add_argument("--output", help="write the table here instead of stdout")
    run.add_argument("--figure", help="also render a PNG/PDF figure to this path")
    run.set_defaults(func=_cmd_run)

    rep = sub.add_parser("report", help="write CSV, JSON and a figure for an experiment")
    common(rep)
    rep.add_argument("--out-dir", required=True)
    rep.add_argument("--stem", help="base file name (default: experiment file stem)")
    rep.set_defaults(func=_cmd_report)

    ver = sub.add_parser("verify", help="randomized engine vs dense-oracle cross-check")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--cases", type=int, default=200)
    ver.add_argument("--tol", type=float, default=1e-8)
    ver.set_defaults(func=_cmd_verify)

    sch = sub.add_parser("schema", help="print the experiment JSON schema")
    sch.set_defaults(func=_cmd_schema)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ContractError as exc:
        print(f"numerical contract violated: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())

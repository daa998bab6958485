"""Batch driver.

    cycleval run <config.json> [--out DIR] [--jobs N]
    cycleval list-catalog
    cycleval dump-cycle "<function spec>" [--n N] [--out FILE]

``run`` executes the suites named in the config, writes ``report.json``
(canonical, timestamp-free: identical config and seed give byte-identical
bytes) and ``summary.txt`` next to it, and exits 0 only if every suite
passed: 1 on suite failures, 2 on config/parse errors, 3 on runtime errors.
The default job count comes from CYCLEVAL_JOBS.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .grammar import CATALOG_TEXT, ParseError, parse_function
from .report import ValuationReport, config_digest
from .suites import SUITES, ExperimentConfig, run_suite

EXIT_OK = 0
EXIT_SUITE_FAILURES = 1
EXIT_PARSE_ERROR = 2
EXIT_RUNTIME_ERROR = 3


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cycleval",
                                description="valuation workbench batch driver")
    sub = p.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run the suites of a config file")
    runp.add_argument("config", help="path to a JSON experiment config, "
                      "or 'default' for the bundled n=1 configuration")
    runp.add_argument("--out", default=".", help="output directory")
    runp.add_argument("--jobs", type=int,
                      default=int(os.environ.get("CYCLEVAL_JOBS", "1")),
                      help="suites to run concurrently")

    sub.add_parser("list-catalog", help="print constructors and the grammar")

    dumpp = sub.add_parser("dump-cycle",
                           help="dump the polyhedral cycle of a max-affine spec")
    dumpp.add_argument("spec", help="function spec, e.g. "
                       "'maxaffine pieces=[[[1],0],[[-1],0]]'")
    dumpp.add_argument("--n", type=int, default=1, help="base dimension")
    dumpp.add_argument("--out", default="-", help="output file, - for stdout")
    return p


def _resolve_config_path(arg: str) -> Path:
    if arg == "default":
        return Path(__file__).parent / "configs" / "default_n1.json"
    return Path(arg)


def cmd_run(args) -> int:
    try:
        raw = json.loads(_resolve_config_path(args.config).read_text())
        config = ExperimentConfig.from_dict(raw)
        # parse declared objects now so malformed specs exit with code 2
        config.parsed_forms(config.n)
        config.parsed_functions(config.n)
        config.parsed_bodies(config.n)
    except (OSError, json.JSONDecodeError, ParseError, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR

    started = time.strftime("%Y-%m-%dT%H:%M:%S")
    try:
        names = list(config.suites)
        if args.jobs > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as ex:
                futures = {name: ex.submit(run_suite, name, config) for name in names}
                results = [futures[name].result() for name in names]
        else:
            results = [run_suite(name, config) for name in names]
    except Exception as exc:  # noqa: BLE001 - the contract is exit code 3
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR

    report = ValuationReport(
        environment={
            "package": "cycleval",
            "version": __version__,
            "n": config.n,
            "seed": config.seed,
        },
        inputs_digest=config_digest(config.to_dict()),
        suites=results,
    )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(report.to_json())
    (outdir / "summary.txt").write_text(
        f"started: {started}\n" + report.summary_text())
    print(report.summary_text(), end="")
    return EXIT_OK if report.passed else EXIT_SUITE_FAILURES


def cmd_list_catalog(_args) -> int:
    print(f"cycleval {__version__}")
    print()
    print(CATALOG_TEXT)
    print("suites:", ", ".join(SUITES))
    return EXIT_OK


def cmd_dump_cycle(args) -> int:
    from .convex import PiecewiseLinear1D
    from .cycles import build_1d
    from .polyhedral import build_polyhedral

    try:
        f = parse_function(args.spec, args.n)
    except (ParseError, ValueError, KeyError) as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    try:
        if isinstance(f, PiecewiseLinear1D):
            cyc = build_1d(f)
            horiz, vert = cyc.segments(-10, 10)
            payload = json.dumps({
                "kind": "polyline",
                "horizontal": [[str(a), str(b), str(s)] for (a, b), s in horiz],
                "vertical": [[str(x), str(sl), str(sr)] for x, sl, sr in vert],
            }, indent=2, sort_keys=True)
        else:
            from .convex import as_max_affine

            ma = as_max_affine(f)
            if ma is None:
                print("dump-cycle expects a max-affine or piecewise-linear spec",
                      file=sys.stderr)
                return EXIT_PARSE_ERROR
            payload = build_polyhedral(ma).dump_json()
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
    if args.out == "-":
        print(payload)
    else:
        Path(args.out).write_text(payload + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "list-catalog":
        return cmd_list_catalog(args)
    return cmd_dump_cycle(args)


if __name__ == "__main__":
    sys.exit(main())

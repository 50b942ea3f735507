"""Command-line entry point: ``lagfill verify | fronts | detpath | report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .cobordism import CutoffFunction, perturbed_immersion
from .figures import csv_text, detpath_rows, detpath_svg, front_rows, front_svg, write_text
from .legendrian import front_project, make_K1, make_K2
from .maslov import det_path, frame_path_at_double_point
from .report import ConfigError, RunConfig, claim_line, cmd_verify, write_report
from .winding import unwrap_samples

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    return out


def cmd_fronts(config: RunConfig) -> list:
    """fronts_K1.svg, fronts_K2.svg and fronts.csv (knot, theta, x, z)."""
    out = _out_dir(config)
    rows, written = [], []
    for knot in (make_K1(), make_K2()):
        front = front_project(knot, config.front_samples)
        written.append(write_text(out / f"fronts_{knot.name}.svg", front_svg(front)))
        rows.extend(front_rows(front))
    written.append(write_text(out / "fronts.csv", csv_text(("knot", "theta", "x", "z"), rows)))
    return written


def cmd_detpath(config: RunConfig, n_samples: int = 10_001) -> list:
    """detpath.csv (s, re, im, unwrapped_arg) and detpath.svg; always the identity cutoff, n = 7."""
    out = _out_dir(config)
    surf = perturbed_immersion(CutoffFunction("identity", 7), validate=False)
    path = det_path(frame_path_at_double_point(surf, n_samples))
    trace = unwrap_samples(path.s, path.direct)
    return [
        write_text(out / "detpath.csv", csv_text(("s", "re", "im", "unwrapped_arg"),
                                                 detpath_rows(path.s, path.direct, trace.unwrapped))),
        write_text(out / "detpath.svg", detpath_svg(path.s, path.direct)),
    ]


def cmd_report(config: RunConfig) -> dict:
    path = Path(config.out) / "report.json"
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=float, default=7, help="length of the cobordism (default 7)")
    common.add_argument("--cutoff", choices=("identity", "smooth-plateau"), default="identity")
    common.add_argument("--grid", type=int, default=500, help="grid for the Lagrangian residual")
    common.add_argument("--tol", type=float, default=1e-10, help="residual tolerance")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--json", action="store_true", help="print JSON instead of text")
    common.add_argument("--no-diagnostics", action="store_true",
                        help="skip the cutoff-length scan in verify")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="lagfill", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="run all claims and write report.json")
    sub.add_parser("fronts", parents=[common], help="write front SVGs and CSV")
    sub.add_parser("detpath", parents=[common], help="write the det path CSV and SVG")
    sub.add_parser("report", parents=[common], help="summarize an existing report.json")
    return p


def config_from_args(args) -> RunConfig:
    return RunConfig(n=args.n, cutoff=args.cutoff, grid=args.grid, tol=args.tol, out=args.out,
                     diagnostics=not args.no_diagnostics).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
        if args.command == "verify":
            echo = None if args.json else (lambda rec: print(claim_line(rec), flush=True))
            report = cmd_verify(config, echo)
            write_report(report, _out_dir(config))
            if args.json:
                sys.stdout.write(report.to_json())
            return EXIT_PASS if report.all_passed else EXIT_FAIL
        if args.command == "fronts":
            files = cmd_fronts(config)
        elif args.command == "detpath":
            files = cmd_detpath(config)
        else:
            data = cmd_report(config)
            if args.json:
                print(json.dumps(data, indent=2, sort_keys=True))
            else:
                for c in data["claims"]:
                    print(f"[{'PASS' if c['passed'] else 'FAIL'}] claim {c['claim_id']:2d}: {c['title']}")
            return EXIT_PASS if data.get("all_passed") else EXIT_FAIL
        if args.json:
            print(json.dumps([str(f) for f in files]))
        else:
            for f in files:
                print(f)
        return EXIT_PASS
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: ``etapt {verify,evolve,scan,spectrum}``.

Exit statuses: 0 when every check passes, 1 when at least one check fails
(or an evolution diverges), 2 for configuration and usage errors.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .config import ConfigError, RunConfig, load_config
from .verify import run_evolve, run_scan, run_spectrum, run_verify, scan_csv, spectrum_csv

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

DEFAULT_OUTPUT = {
    "verify": "verify_report.json",
    "evolve": "evolve.csv",
    "scan": "scan.csv",
    "spectrum": "spectrum.csv",
}


def build_parser() -> argparse.ArgumentParser:
    # argparse itself exits with status 2 on usage errors, matching the contract
    parser = argparse.ArgumentParser(prog="etapt", description="eta-pseudo-PT su(1,1) model laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("verify", "run the verification suite and write a JSON report"),
        ("evolve", "integrate from rho^-1 |n> and write a CSV trajectory"),
        ("scan", "scan a rectangular (omega0, g0) grid and write a CSV table"),
        ("spectrum", "write the lowest eigenvalues of H as CSV"),
    ):
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--dim", type=int, help="number of retained Fock states")
        p.add_argument("--gamma", type=float, help="metric angle (radians)")
        p.add_argument("--omega0", type=float, help="constant driving frequency Omega")
        p.add_argument("--g0", type=float, help="constant coupling G (switches to explicit coupling mode)")
        p.add_argument("--dt", type=float, help="integration step")
        p.add_argument("--t-end", dest="t_end", type=float, help="end of the integration window")
        p.add_argument("--out", help="output path")
        p.add_argument("--threads", type=int, help="worker threads for independent checks and scan points")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Load the configuration file and apply command-line overrides."""
    cfg = load_config(args.config)
    changes = {
        "dim": args.dim,
        "gamma": args.gamma,
        "dt": args.dt,
        "t_end": args.t_end,
        "threads": args.threads,
        "output_path": args.out,
    }
    if args.omega0 is not None:
        changes["omega"] = args.omega0
    if args.g0 is not None:
        changes["coupling_mode"] = "explicit"
        changes["g"] = args.g0
    return cfg.with_overrides(**changes)


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "evolve" and cfg.coupling_mode != "derived":
            raise ConfigError("evolve compares against the closed-form solution and needs derived coupling mode")
    except ConfigError as exc:
        print(f"etapt: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = cfg.output_path or DEFAULT_OUTPUT[args.command]

    try:
        if args.command == "verify":
            report = run_verify(cfg)
            _write(out, report.to_json())
            status = "PASS" if report.passed else "FAIL"
            print(f"verify: {status} ({len(report.checks)} checks, {len(report.skipped)} skipped) -> {out}")
            for name in report.failures:
                print(f"  failed: {name}")
            return EXIT_OK if report.passed else EXIT_FAIL
        if args.command == "evolve":
            result = run_evolve(cfg)
            _write(out, result.to_csv())
            print(f"evolve: {result.summary()} -> {out}")
            return EXIT_FAIL if result.diverged else EXIT_OK
        if args.command == "scan":
            rows = run_scan(cfg)
            _write(out, scan_csv(rows))
            flagged = sum(1 for r in rows if r[-1])
            print(f"scan: {len(rows)} rows ({flagged} flagged) -> {out}")
            return EXIT_OK
        values = run_spectrum(cfg)
        _write(out, spectrum_csv(values))
        print(f"spectrum: {len(values)} eigenvalues -> {out}")
        return EXIT_OK
    except OSError as exc:
        print(f"etapt: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

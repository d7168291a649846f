#!/usr/bin/env python3
"""Command line: ``convint run | audit | compare-profiles | verify-operators``.

Exit codes: 0 when every hard invariant held (soft ledger failures only
print a summary), 2 on a convint error or a failed hard check, 1 on an
unexpected exception.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from ..errors import ConvintError, ParameterError
from ..logger import get_logger, log_exception
from ..spectral.grid import Grid
from ..utils import ConfigLoader, plain_data
from .config import RunConfig
from .runner import audit_run, compare_profiles, run, verify_operators

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_FAILED = 2


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if getattr(args, "qmax", None) is not None:
        overrides.setdefault("run", {})["q_max"] = args.qmax
    if getattr(args, "out", None) is not None:
        overrides.setdefault("run", {})["out"] = str(args.out)
    if getattr(args, "grid", None) is not None:
        overrides["grid"] = {"n": args.grid}
    return overrides


def _load(args: argparse.Namespace) -> RunConfig:
    path: Optional[Path] = args.config
    if path is not None and not path.exists():
        raise ParameterError(f"config file {path} does not exist")
    return RunConfig.from_file(path, _overrides(args))


def _print_summary(summary: Dict[str, Any]) -> None:
    print(yaml.safe_dump(plain_data(summary), sort_keys=False).rstrip())


def cmd_run(args: argparse.Namespace) -> int:
    config = _load(args)
    report = run(config, resume=args.resume)
    _print_summary({"digest": report.digest(), **report.summary()})
    for line in report.failures():
        print(f"  {'HARD' if line['hard'] else 'soft'} {line['identifier']}: "
              f"{line['lhs']} {line['relation']} {line['rhs']}")
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_audit(args: argparse.Namespace) -> int:
    profile = None
    if args.config is not None:
        profile, _ = _load(args).build_profile()
    out = args.out or Path("runs/default")
    report = audit_run(out, args.level, profile)
    _print_summary(report.to_dict())
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    config = _load(args)
    other = ConfigLoader.load_config(args.profile)
    if not other:
        raise ParameterError(f"profile file {args.profile} is empty or unreadable")
    comparison = compare_profiles(config, other.get("profile", other))
    _print_summary({k: v for k, v in comparison.items() if k != "times"})
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    grid = Grid(args.grid or 32)
    results = verify_operators(grid, args.seed, args.suite or None)
    hard = 0
    summary: Dict[str, Any] = {}
    for name, ledger in results.items():
        summary[name] = ledger.summary()
        hard += summary[name]["hard_failures"]
        for line in ledger.failures():
            print(f"  {name}: {'HARD' if line.hard else 'soft'} {line.identifier}: "
                  f"{line.lhs:.4e} {line.relation} {line.rhs:.4e}")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        with open(args.out / "verify.yaml", "w", encoding="utf-8") as f:
            yaml.safe_dump(plain_data({n: l.to_list() for n, l in results.items()}), f, sort_keys=False)
    _print_summary(summary)
    return EXIT_OK if hard == 0 else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convint", description="Convex-integration lab for fractional Navier-Stokes")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None, help="run configuration (YAML or JSON)")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--qmax", type=int, default=None, help="number of steps after the first")
        p.add_argument("--grid", type=int, default=None, help="grid points per axis")

    p_run = sub.add_parser("run", help="iterate the scheme")
    common(p_run)
    p_run.add_argument("--resume", action="store_true", help="continue from the last completed level")
    p_run.set_defaults(handler=cmd_run)

    p_audit = sub.add_parser("audit", help="dissipation audit of a finished run")
    common(p_audit)
    p_audit.add_argument("--level", type=int, default=None, help="stored level (default: last)")
    p_audit.set_defaults(handler=cmd_audit)

    p_compare = sub.add_parser("compare-profiles", help="two runs with profiles sharing e(0)")
    common(p_compare)
    p_compare.add_argument("--profile", type=Path, required=True, help="file holding the second profile")
    p_compare.set_defaults(handler=cmd_compare)

    p_verify = sub.add_parser("verify-operators", help="run the registered property suites")
    common(p_verify)
    p_verify.add_argument("--suite", action="append", default=None, help="suite name (repeatable)")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code: int = args.handler(args)
        return code
    except ConvintError as e:
        log_exception(logger, f"convint {args.command} failed", e)
        return EXIT_FAILED
    except Exception as e:
        log_exception(logger, f"convint {args.command} crashed", e)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())

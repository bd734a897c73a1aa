"""Command-line scenario runner.

Subcommands::

    oplab verify-identities --scenario S.json
    oplab verify-delta      --scenario S.json [--paper-3term]
    oplab check-bounded     --scenario S.json
    oplab essential-norm    --scenario S.json
    oplab compactness       --scenario S.json
    oplab profile           --scenario S.json
    oplab suite             [--out DIR]

Exit status: 0 for a clean verdict, 2 for an inconclusive one, 1 for errors
(including an unbounded operator handed to ``essential-norm`` or
``compactness``).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .criteria import analyze, profile_csv, radial_profile, Analysis
from .errors import OplabError
from .identities import delta_report, verify_identities
from .scenario import Scenario, bundled_suite, load_scenario

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2

_SCENARIO_COMMANDS = (
    "verify-identities",
    "verify-delta",
    "check-bounded",
    "essential-norm",
    "compactness",
    "profile",
)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", choices=("double", "extended"), help="override the scenario's precision")
    common.add_argument("--grid-depth", type=int, metavar="N", help="grid boundary floor 10^-N")
    common.add_argument("--tail-depth", type=int, metavar="N", help="deepest tail annulus 1 - 2^-N")
    common.add_argument("--out", metavar="DIR", help="write <name>.report.json / <name>.profile.csv here")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="stdout format")
    common.add_argument("--paper-3term", action="store_true", help="also report three-term delta combinations")

    parser = argparse.ArgumentParser(prog="oplab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SCENARIO_COMMANDS:
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--scenario", required=True, metavar="PATH", help="scenario JSON file")
    sub.add_parser("suite", parents=[common], help="run the bundled suite")
    return parser


def _resolved(scenario: Scenario, args) -> dict:
    cfg = scenario.config(args.precision, args.grid_depth, args.tail_depth)
    return {"scenario": scenario.to_dict(), "config": cfg.to_dict()}


def _write(out_dir: str | None, filename: str, text: str) -> None:
    if out_dir is None:
        return
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / filename).write_text(text, encoding="utf-8")


def _dump(d: dict) -> str:
    return json.dumps(d, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _exit_for(verdict: str) -> int:
    return EXIT_INCONCLUSIVE if verdict in ("inconclusive", "disagree") else EXIT_OK


def run_verify(scenario: Scenario, args) -> tuple[dict, int]:
    T = scenario.operator()
    precision = args.precision or scenario.precision
    checks = verify_identities(T, precision=precision, paper_3term=args.paper_3term)
    report = {"command": "verify-identities", **_resolved(scenario, args), "identities": checks}
    return report, EXIT_OK if checks["passed"] else EXIT_ERROR


def run_analysis(scenario: Scenario, args, sections, strict=True) -> tuple[dict, int]:
    T = scenario.operator()
    cfg = scenario.config(args.precision, args.grid_depth, args.tail_depth)
    rep = analyze(T, cfg, sections=sections, strict=strict)
    d = rep.to_dict()
    d["scenario"] = scenario.to_dict()
    v = rep.verdicts
    if "essential" in sections or "compactness" in sections:
        verdict = v.get("compact", "inconclusive")
    else:
        verdict = v["bounded"] if v.get("agree", True) else "disagree"
    d["verdict"] = verdict
    return d, _exit_for(verdict)


def run_command(command: str, scenario: Scenario, args) -> tuple[dict, int]:
    if command == "verify-identities":
        report, code = run_verify(scenario, args)
    elif command == "verify-delta":
        checks = delta_report(scenario.operator().m, paper_3term=args.paper_3term)
        report = {**_resolved(scenario, args), "delta": checks}
        code = EXIT_OK if checks["passed"] else EXIT_ERROR
    elif command == "check-bounded":
        report, code = run_analysis(scenario, args, ("bounded",))
    elif command == "essential-norm":
        report, code = run_analysis(scenario, args, ("essential",))
    elif command == "compactness":
        report, code = run_analysis(scenario, args, ("compactness",))
    elif command == "profile":
        cfg = scenario.config(args.precision, args.grid_depth, args.tail_depth)
        rows = radial_profile(Analysis(scenario.operator(), cfg))
        report = {"command": "profile", **_resolved(scenario, args), "rows": [list(r) for r in rows]}
        code = EXIT_OK
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(command)
    report["command"] = command
    report["version"] = __version__
    return report, code


def _emit(report: dict, scenario: Scenario, args, stdout) -> None:
    name = scenario.name
    if report["command"] == "profile":
        csv_text = profile_csv(tuple(r) for r in report["rows"])
        _write(args.out, f"{name}.profile.csv", csv_text)
        stdout.write(csv_text if args.format == "csv" else _dump(report))
        return
    if args.format == "csv":
        raise OplabError("--format csv is only available for the profile subcommand")
    text = _dump(report)
    _write(args.out, f"{name}.report.json", text)
    stdout.write(text)


def run_suite(args, stdout) -> int:
    """Every bundled scenario: boundedness, then essential quantities when bounded."""
    worst = EXIT_OK
    summary = []
    for sc in bundled_suite():
        report, code = run_analysis(sc, args, ("bounded", "essential"), strict=False)
        report["command"] = "suite"
        report["version"] = __version__
        _write(args.out, f"{sc.name}.report.json", _dump(report))
        line = {"name": sc.name, "verdicts": report["verdicts"], "expect": sc.expect}
        summary.append(line)
        worst = max(worst, code)
    payload = {"command": "suite", "version": __version__, "scenarios": summary}
    _write(args.out, "suite.summary.json", _dump(payload))
    stdout.write(_dump(payload))
    return worst


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "suite":
            return run_suite(args, stdout)
        scenario = load_scenario(args.scenario)
        report, code = run_command(args.command, scenario, args)
        _emit(report, scenario, args, stdout)
        return code
    except (OplabError, ValueError, OSError) as exc:
        stderr.write(f"oplab {args.command}: error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

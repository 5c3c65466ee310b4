"""Command-line entry point.

Subcommands: ``compare`` runs the scheme comparison, ``lemma1`` runs the
outage/reuse analysis, ``golden`` checks the packaged worked example, and
``schedule`` prints the slot assignment for a scenario. Exit code is 0 on
success and nonzero on any error or failed golden check.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from dcaim import harness, scenario as scenario_mod
from dcaim.assignment import InfeasibleScheduleError, format_schedule_grid, schedule_csv_rows
from dcaim.macsim import SchemeKind
from dcaim.scenario import ScenarioError
from dcaim.topology import TopologyError, build_topology


def _add_common(parser: argparse.ArgumentParser, default_scenario: str) -> None:
    parser.add_argument(
        "--scenario",
        type=str,
        default=default_scenario,
        help="scenario file path, or a packaged name ('reference', 'golden')",
    )
    parser.add_argument("--seed", type=int, default=42, help="64-bit run seed")
    parser.add_argument("--frames", type=int, default=200, help="frames to simulate")
    parser.add_argument("--trials", type=int, default=100_000, help="Monte Carlo trials")
    parser.add_argument("--out", type=Path, default=Path("dcaim-out"), help="output directory")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a scenario key by dotted path (repeatable)",
    )


def _load(args: argparse.Namespace) -> scenario_mod.Scenario:
    name = args.scenario
    if name in ("reference", "golden"):
        return scenario_mod.load_packaged(name)
    return scenario_mod.load_scenario(name)


def _config(args: argparse.Namespace) -> harness.RunConfig:
    overrides = dict(scenario_mod.parse_override(item) for item in args.overrides)
    return harness.RunConfig(
        scenario=_load(args),
        n_frames=args.frames,
        n_trials=args.trials,
        seed=args.seed,
        out_dir=args.out,
        overrides=overrides,
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dcaim",
        description="relay-assisted WBAN scheduling and interference analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    compare = sub.add_parser("compare", help="run all schemes and write comparison files")
    _add_common(compare, "reference")
    lemma = sub.add_parser("lemma1", help="outage and reuse comparison of both pinning schemes")
    _add_common(lemma, "reference")
    golden = sub.add_parser("golden", help="verify the packaged worked example")
    _add_common(golden, "golden")
    schedule = sub.add_parser("schedule", help="print the slot assignment for a scenario")
    _add_common(schedule, "reference")

    args = parser.parse_args(argv)
    try:
        config = _config(args)
        if args.command == "compare":
            result = harness.run_compare(config)
            print((Path(config.out_dir) / "summary.txt").read_text(encoding="utf-8"), end="")
            print(f"wrote {len(result.files)} files to {config.out_dir}")
            return 0
        if args.command == "lemma1":
            report = harness.run_lemma1(config)
            print((Path(config.out_dir) / "lemma1.txt").read_text(encoding="utf-8"), end="")
            return 0
        if args.command == "golden":
            report = harness.run_golden(config)
            print(report.format(), end="")
            return 0 if report.passed else 2
        if args.command == "schedule":
            scn = config.effective_scenario()
            topology = build_topology(scn)
            streams = harness._streams(config.seed)
            _, _, _, schedules = harness.build_dcaim_schedule(topology, streams["measurement"])
            grid = format_schedule_grid(schedules, topology)
            out = Path(config.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / "schedule.txt").write_text(grid, encoding="utf-8")
            harness._write_csv(
                out / "schedule.csv",
                ["region", "slot", "subchannel", "node", "label", "pinned"],
                schedule_csv_rows(schedules, topology),
            )
            print(grid, end="")
            return 0
        parser.error(f"unknown command {args.command}")
    except (ScenarioError, TopologyError, InfeasibleScheduleError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface: run, compare, validate, print-scenario.

Exit codes: 0 success, 1 scenario error, 2 runtime invariant violation.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .bwreq import OversubscribedUgsError
from .engine import ConservationError, run_scenario
from .metrics import read_summary_csv
from .scenario import Scenario, ScenarioError, load_scenario

VERDICT_METRICS = (
    ("bs", "delay_s", "lower"),
    ("bs", "throughput_bps", "higher"),
    ("bs", "load_bps", "higher"),
)


@dataclass
class ComparisonReport:
    scenario: str
    schedulers: list[str]
    seeds: list[int]
    values: dict = field(default_factory=dict)  # (scheduler, seed, scope, metric) -> value
    verdicts: list[str] = field(default_factory=list)

    def render(self) -> str:
        lines = [f"comparison on {self.scenario} "
                 f"({len(self.seeds)} seed{'s' if len(self.seeds) != 1 else ''})"]
        for scope, metric, _ in VERDICT_METRICS:
            lines.append(f"  {metric}@{scope}:")
            for sched in self.schedulers:
                vals = [self.values[(sched, seed, scope, metric)] for seed in self.seeds]
                mean = sum(vals) / len(vals)
                lines.append(f"    {sched:>5}: mean {mean:.6f}  "
                             f"per-seed {['%.6f' % v for v in vals]}")
        lines.extend(f"  verdict: {v}" for v in self.verdicts)
        return "\n".join(lines)


def build_comparison(scenario_name: str, schedulers: list[str], seeds: list[int],
                     summaries: dict) -> ComparisonReport:
    report = ComparisonReport(scenario_name, schedulers, seeds)
    for (sched, seed), summary in summaries.items():
        for scope, metric, _ in VERDICT_METRICS:
            report.values[(sched, seed, scope, metric)] = summary[(scope, metric)]
    low_confidence = " [low confidence: single seed]" if len(seeds) == 1 else ""
    for scope, metric, better in VERDICT_METRICS:
        for i, a in enumerate(schedulers):
            for b in schedulers[i + 1:]:
                sign = "<" if better == "lower" else ">"
                wins = 0
                for seed in seeds:
                    va = report.values[(a, seed, scope, metric)]
                    vb = report.values[(b, seed, scope, metric)]
                    if (va < vb) == (better == "lower") and va != vb:
                        wins += 1
                report.verdicts.append(
                    f"{metric}@{scope}: {a} {sign} {b} in {wins}/{len(seeds)} seeds"
                    f"{low_confidence}")
    return report


def _load(args) -> Scenario:
    sc = load_scenario(args.scenario)
    if getattr(args, "seed", None) is not None:
        sc.seed = args.seed
    if getattr(args, "duration", None) is not None:
        sc.duration_us = args.duration * 1_000_000
    if getattr(args, "bs_scheduler", None):
        sc.scheduler_bs = args.bs_scheduler
    if getattr(args, "ss_scheduler", None):
        sc.scheduler_ss = args.ss_scheduler
    if getattr(args, "strict_paper", False):
        sc.strict_paper = True
    sc.validate()
    return sc


def cmd_run(args) -> int:
    sc = _load(args)
    result = run_scenario(sc)
    if args.out == "-":
        result.write_csv(sys.stdout)
    else:
        with open(args.out, "w") as fh:
            result.write_csv(fh)
        print(f"wrote {args.out} ({result.dispatched} events dispatched)")
    return 0


def cmd_compare(args) -> int:
    schedulers = [s.strip() for s in args.schedulers.split(",") if s.strip()]
    if len(schedulers) < 2:
        raise ScenarioError("compare needs at least two schedulers")
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    if not seeds:
        raise ScenarioError("compare needs at least one seed")
    base = _load(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    summaries = {}
    for sched in schedulers:
        for seed in seeds:
            sc = base.copy()
            sc.scheduler_bs = sched
            # SS-side scheduler follows the BS unless pinned explicitly
            sc.scheduler_ss = args.ss_scheduler or sched
            sc.seed = seed
            sc.validate()
            result = run_scenario(sc)
            path = out_dir / f"run_{sched}_seed{seed}.csv"
            with open(path, "w") as fh:
                result.write_csv(fh)
            # verdicts come from the public CSV format, not from memory
            summaries[(sched, seed)] = read_summary_csv(str(path))

    report = build_comparison(base.name, schedulers, seeds, summaries)
    grid = out_dir / "comparison.csv"
    with open(grid, "w") as fh:
        fh.write("scheduler,seed,scope,metric,value\n")
        for (sched, seed, scope, metric), value in sorted(report.values.items()):
            fh.write(f"{sched},{seed},{scope},{metric},{value:.6f}\n")
    (out_dir / "report.txt").write_text(report.render() + "\n")
    print(report.render())
    return 0


def cmd_validate(args) -> int:
    sc = load_scenario(args.scenario)
    sc.validate()
    print(f"scenario {sc.name!r} is valid: {sc.station_count} stations, "
          f"{len(sc.flows)} flows, {sc.duration_us / 1e6:.3f} s")
    return 0


def cmd_print_scenario(args) -> int:
    sc = load_scenario(args.scenario)
    text = sc.to_yaml()
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pmpsim",
        description="Discrete-event simulator of an IEEE 802.16 PMP cell "
                    "with pluggable QoS schedulers")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seeded=True):
        sp.add_argument("--scenario", default="paper-pmp",
                        help="scenario file path or built-in name (default: paper-pmp)")
        if seeded:
            sp.add_argument("--seed", type=int, default=None)
            sp.add_argument("--duration", type=int, default=None, metavar="SECONDS")
            sp.add_argument("--ss-scheduler", default=None, choices=("wfq", "dwrr", "wrr", "fifo"))
            sp.add_argument("--strict-paper", action="store_true",
                            help="disable piggyback requests")

    sp = sub.add_parser("run", help="execute one deterministic run, write CSV")
    common(sp)
    sp.add_argument("--bs-scheduler", default=None, choices=("wfq", "dwrr", "wrr", "fifo"))
    sp.add_argument("--out", default="-", help="output CSV path (default: stdout)")
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("compare", help="run a scheduler x seed grid and report orderings")
    common(sp)
    sp.add_argument("--schedulers", default="wfq,dwrr",
                    help="comma-separated scheduler list (default: wfq,dwrr)")
    sp.add_argument("--seeds", default="1,2,3,4,5",
                    help="comma-separated seed list (default: 1,2,3,4,5)")
    sp.add_argument("--out-dir", default="comparison-out")
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("validate", help="check a scenario file and exit")
    common(sp, seeded=False)
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("print-scenario", help="dump a scenario as an editable file")
    common(sp, seeded=False)
    sp.add_argument("--out", default="-")
    sp.set_defaults(fn=cmd_print_scenario)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioError as e:
        print(f"scenario error: {e}", file=sys.stderr)
        return 1
    except (OversubscribedUgsError, ConservationError) as e:
        print(f"runtime invariant violation: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

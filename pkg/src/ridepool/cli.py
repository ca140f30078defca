"""Command-line entry point: learn, simulate, calibrate-lambda, sweep, compare,
export-heatmap, synth-demand."""

from __future__ import annotations

import argparse
import csv
import sys
import zlib
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import ingest
from .engine import run
from .ingest import RunConfig, TripFileError
from .learning import RejectionDuringLearning, StateValueTable, learn
from .myopic import match_myopic
from .network import SpaceTimeGrid, load_network, save_network
from .nonmyopic import CalibrationRecorder, DegenerateDenominator, NonMyopicMatcher, PlannerConfig, calibrate_lambda
from .rebalance import RejectedChaseRebalancer, ValueRebalancer
from .report import MetricsSummary, combine, compare, heatmap_export, summarize, write_comparison, write_summary
from .scenarios import alternating_pulses, two_zone_city, zone_start_nodes
from .schedule import InvariantViolation

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _keys_epilog() -> str:
    lines = ["config keys (flat `key = value` file, or --set key=value):"]
    for name, _, default in ingest.config_keys():
        lines.append(f"  {name:<20} default {default!r}")
    lines.append("")
    lines.append("exit codes: 0 ok, 1 run failed, 2 usage or I/O error, 3 invariant violation")
    return "\n".join(lines)


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--data-dir", default=".", help="root for network, trip and table inputs")
    common.add_argument("--out-dir", default="out", help="where outputs are written")
    common.add_argument("--seed", type=int)
    common.add_argument("--fleet", type=int)
    common.add_argument("--policy", choices=RunConfig.POLICIES)
    common.add_argument("--rebalancer", choices=RunConfig.REBALANCERS)
    common.add_argument("--tau", type=float, help="rebalancing interval in seconds")
    common.add_argument("--value-table", help="state value table CSV")
    common.add_argument("--days", type=_str_list, default=[], help="comma-separated trip files")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key")

    parser = argparse.ArgumentParser(
        prog="ridepool",
        description="Ride-pooling dispatch simulation with learned state values.",
        epilog=_keys_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.RawDescriptionHelpFormatter

    sub.add_parser("learn", parents=[common], formatter_class=fmt, epilog=_keys_epilog(),
                   help="learn state values from demand days with a large myopic fleet")
    sub.add_parser("simulate", parents=[common], formatter_class=fmt, epilog=_keys_epilog(),
                   help="run the selected policy on demand days and write logs and metrics")
    sub.add_parser("calibrate-lambda", parents=[common], formatter_class=fmt, epilog=_keys_epilog(),
                   help="estimate the cost scale factor from a myopic run")
    p = sub.add_parser("sweep", parents=[common], formatter_class=fmt, epilog=_keys_epilog(),
                       help="run every fleet x policy combination and compare")
    p.add_argument("--fleets", type=_int_list, required=True)
    p.add_argument("--policies", type=_str_list, default=["myopic", "nonmyopic"])
    p.add_argument("--baseline", default="myopic")
    p = sub.add_parser("compare", parents=[common], formatter_class=fmt, epilog=_keys_epilog(),
                       help="compare metrics files written by simulate")
    p.add_argument("metrics", nargs="+", help="metrics CSV files")
    p.add_argument("--baseline", default="myopic")
    p = sub.add_parser("export-heatmap", parents=[common], formatter_class=fmt, epilog=_keys_epilog(),
                       help="write value table rows for selected time indices")
    p.add_argument("--indices", type=_int_list, default=[96, 156, 216])
    p = sub.add_parser("synth-demand", parents=[common], formatter_class=fmt, epilog=_keys_epilog(),
                       help="generate a pulsed trip file (and optionally the two-district city)")
    p.add_argument("--pulses", help="start,end,origin_zone,dest_zone,count entries separated by ';'")
    p.add_argument("--alternating", type=int, metavar="PER_HOUR",
                   help="district-alternating demand with this many trips per hour")
    p.add_argument("--local-share", type=float, default=1.0)
    p.add_argument("--hours", type=int, help="hours of alternating demand (default: whole day)")
    p.add_argument("--output", default="trips.csv", help="trip file name under --out-dir")
    p.add_argument("--city", action="store_true", help="also write the two-district network files")
    return parser


# -- helpers --------------------------------------------------------------


def resolve_config(args) -> RunConfig:
    values = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        values = ingest.parse_config(path.read_text(), str(path))
    for item in args.set:
        key, sep, text = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            values[key.strip()] = ingest.coerce(key.strip(), text)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    flags = {"seed": args.seed, "policy": args.policy, "rebalancer": args.rebalancer,
             "tau": args.tau, "value_table": args.value_table}
    values.update({k: v for k, v in flags.items() if v is not None})
    if args.fleet is not None:
        values["learn_fleet_size" if args.command == "learn" else "fleet_size"] = args.fleet
    return RunConfig(**values)


class Context:
    def __init__(self, args, rc: RunConfig):
        self.args, self.rc = args, rc
        self.data = Path(args.data_dir)
        self.out = Path(args.out_dir)
        self._net = None

    def path(self, name: str) -> Path:
        p = Path(name)
        return p if p.is_absolute() else self.data / p

    @property
    def net(self):
        if self._net is None:
            nodes, edges = self.path(self.rc.nodes_file), self.path(self.rc.edges_file)
            for p in (nodes, edges):
                if not p.exists():
                    raise FileNotFoundError(f"network file not found: {p}")
            self._net = load_network(nodes, edges, self.rc.num_zones or None)
        return self._net

    @property
    def grid(self) -> SpaceTimeGrid:
        return SpaceTimeGrid.for_network(self.net, self.rc.period_seconds, self.rc.day_length)

    def days(self) -> list[Path]:
        if not self.args.days:
            raise UsageError("--days lists no trip files")
        out = []
        for d in self.args.days:
            p = self.path(d)
            if not p.is_file():
                raise FileNotFoundError(f"cannot read trip file: {p}")
            out.append(p)
        return out

    def day_seed(self, day: Path) -> int:
        # per-file seed so resuming from a saved table replays the same days
        return (self.rc.seed * 1_000_003 + zlib.crc32(day.name.encode())) % 2**32

    def table(self, required: bool) -> StateValueTable:
        grid = self.grid
        if not self.rc.value_table:
            if required:
                raise FileNotFoundError("a value table is required (--value-table)")
            return StateValueTable.for_grid(grid)
        p = self.path(self.rc.value_table)
        if not p.is_file():
            raise FileNotFoundError(f"value table not found: {p}")
        return StateValueTable.load(p, grid.num_periods, grid.num_zones)

    def requests(self, day: Path):
        rng = np.random.default_rng(self.day_seed(day))
        return ingest.load_trips(day, self.net, rng, day_length=self.rc.day_length)

    def simulate(self, day: Path, policy: str, fleet: int):
        rc = self.rc
        cfg = rc.sim_config(fleet_size=fleet, seed=self.day_seed(day))
        needs_table = policy == "nonmyopic" or rc.rebalancer == "value"
        table = self.table(needs_table)
        pcfg = PlannerConfig(table, rc.gamma, rc.lam)
        matcher = NonMyopicMatcher(pcfg, self.grid, audit=rc.audit) if policy == "nonmyopic" else match_myopic
        rebalancer = None
        if rc.rebalancer == "value":
            rebalancer = ValueRebalancer(pcfg, self.grid, rc.tau)
        elif rc.rebalancer == "rejected-chase":
            rebalancer = RejectedChaseRebalancer(pcfg, self.grid, rc.tau)
        shares = rc.shares()
        start = None
        if shares is not None:
            if len(shares) != self.net.num_zones:
                raise UsageError(f"start_shares has {len(shares)} entries for {self.net.num_zones} zones")
            start = zone_start_nodes(self.net, fleet, cfg.rng_seed, shares)
        outcome = run(self.net, cfg, self.requests(day), matcher, rebalancer, start)
        return outcome, matcher


# -- commands -------------------------------------------------------------


def cmd_learn(ctx: Context) -> int:
    rc = ctx.rc
    days = ctx.days()
    table = ctx.table(required=False)
    ctx.out.mkdir(parents=True, exist_ok=True)
    target = ctx.out / "value_table.csv"
    cfg = rc.sim_config(fleet_size=rc.learn_fleet_size)

    def save(d, tbl, outcome):
        tbl.save(target)
        tbl.save(ctx.out / f"value_table_day{d + 1:02d}.csv")
        print(f"day {d + 1} ({days[d].name}): {len(outcome.requests)} requests, 0 rejected, table saved")

    try:
        learn([str(p) for p in days], ctx.net, cfg, rc.learner_config(), ctx.grid, table,
              seeds=[ctx.day_seed(p) for p in days], on_day=save)
    except RejectionDuringLearning as exc:
        print(f"learning aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_simulate(ctx: Context) -> int:
    rc = ctx.rc
    ctx.out.mkdir(parents=True, exist_ok=True)
    days = ctx.days()
    summaries = []
    for d, day in enumerate(days):
        outcome, matcher = ctx.simulate(day, rc.policy, rc.fleet_size)
        tag = "" if len(days) == 1 else f"_day{d + 1:02d}"
        outcome.write_request_log(ctx.out / f"requests{tag}.csv")
        outcome.write_relocation_log(ctx.out / f"relocations{tag}.csv")
        if rc.write_trajectories:
            outcome.write_trajectory_log(ctx.out / f"trajectories{tag}.csv")
        if isinstance(matcher, NonMyopicMatcher) and matcher.audit is not None:
            matcher.write_audit(ctx.out / f"audit{tag}.csv")
        summaries.append(summarize(outcome))
    summary = summaries[0] if len(summaries) == 1 else combine(summaries)
    write_metrics(summary, ctx.out / "metrics.csv", rc.policy, rc.fleet_size)
    print(f"{rc.policy} fleet {rc.fleet_size}: service {summary.service_rate:.4f}, "
          f"wait {_fmt(summary.mean_wait)} min, in-vehicle {_fmt(summary.mean_in_vehicle)} min, "
          f"VMT/passenger {_fmt(summary.vmt_per_passenger)} min")
    return EXIT_OK


def _fmt(x) -> str:
    return "n/a" if x is None else f"{x:.3f}"


def write_metrics(summary: MetricsSummary, path: Path, policy: str, fleet: int) -> None:
    write_summary(summary, path)
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["policy", policy])
        w.writerow(["fleet", fleet])


def read_metrics(path: Path) -> tuple[str, int, MetricsSummary]:
    with open(path, newline="") as fh:
        rows = dict(tuple(r) for r in csv.reader(fh) if len(r) == 2)
    try:
        num = lambda k: float(rows[k]) if rows[k] else None
        hours = sorted(k for k in rows if k.startswith("hour_") and k.endswith("_submissions"))
        s = MetricsSummary(
            submitted=int(rows["submitted"]), served=int(rows["served"]), rejected=int(rows["rejected"]),
            service_rate=num("service_rate"), mean_wait=num("mean_wait"),
            mean_in_vehicle=num("mean_in_vehicle"), vehicle_minutes=num("vehicle_minutes"),
            vmt_per_passenger=num("vmt_per_passenger"),
            hourly_submissions=np.array([int(rows[h]) for h in hours]),
            hourly_rejections=np.array([int(rows[h.replace("submissions", "rejections")]) for h in hours]),
        )
        return rows["policy"], int(rows["fleet"]), s
    except (KeyError, ValueError) as exc:
        raise TripFileError(f"{path}: not a metrics file ({exc})") from None


def cmd_calibrate(ctx: Context) -> int:
    rc = ctx.rc
    grid = ctx.grid
    recorder = CalibrationRecorder(ctx.table(required=True), grid, rc.gamma)
    for day in ctx.days():
        cfg = rc.sim_config(seed=ctx.day_seed(day))
        run(ctx.net, cfg, ctx.requests(day), recorder)
    try:
        lam = calibrate_lambda(recorder.pairs)
    except DegenerateDenominator as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    ctx.out.mkdir(parents=True, exist_ok=True)
    (ctx.out / "lambda.txt").write_text(f"lam = {lam!r}\n")
    print(f"lam = {lam!r} from {len(recorder.pairs)} candidate pairs")
    return EXIT_OK


def cmd_sweep(ctx: Context) -> int:
    args = ctx.args
    if not args.fleets or not args.policies:
        raise UsageError("sweep needs at least one fleet and one policy")
    for p in args.policies:
        if p not in RunConfig.POLICIES:
            raise UsageError(f"unknown policy {p!r}")
    days = ctx.days()
    runs = {}
    for fleet in args.fleets:
        for policy in args.policies:
            per_day = [summarize(ctx.simulate(day, policy, fleet)[0]) for day in days]
            runs[(policy, fleet)] = per_day[0] if len(per_day) == 1 else combine(per_day)
            print(f"{policy} fleet {fleet}: service {runs[(policy, fleet)].service_rate:.4f}")
    ctx.out.mkdir(parents=True, exist_ok=True)
    write_comparison(compare(runs, args.baseline), ctx.out / "comparison.csv")
    return EXIT_OK


def cmd_compare(ctx: Context) -> int:
    runs = {}
    for name in ctx.args.metrics:
        p = ctx.path(name)
        if not p.is_file():
            raise FileNotFoundError(f"cannot read metrics file: {p}")
        policy, fleet, s = read_metrics(p)
        runs[(policy, fleet)] = s
    ctx.out.mkdir(parents=True, exist_ok=True)
    write_comparison(compare(runs, ctx.args.baseline), ctx.out / "comparison.csv")
    return EXIT_OK


def cmd_heatmap(ctx: Context) -> int:
    table = ctx.table(required=True)
    ctx.out.mkdir(parents=True, exist_ok=True)
    try:
        heatmap_export(table, ctx.args.indices, ctx.out / "heatmap.csv")
    except IndexError as exc:
        raise UsageError(str(exc)) from None
    return EXIT_OK


def cmd_synth(ctx: Context) -> int:
    args, rc = ctx.args, ctx.rc
    if (args.pulses is None) == (args.alternating is None):
        raise UsageError("give exactly one of --pulses or --alternating")
    if args.pulses is not None:
        pulses = ingest.parse_pulses(args.pulses)
    else:
        hours = args.hours or int(round(rc.day_length / 3600))
        pulses = alternating_pulses(hours, args.alternating, args.local_share)
    for p in pulses:
        if p.end > rc.day_length:
            raise UsageError(f"pulse {p} ends after the day ({rc.day_length} s)")
    ctx.out.mkdir(parents=True, exist_ok=True)
    records = ingest.synth_demand(pulses, np.random.default_rng(rc.seed), ctx.out / args.output)
    if args.city:
        save_network(two_zone_city(), ctx.out / "nodes.csv", ctx.out / "edges.csv")
    print(f"wrote {len(records)} trips to {ctx.out / args.output}")
    return EXIT_OK


COMMANDS = {
    "learn": cmd_learn,
    "simulate": cmd_simulate,
    "calibrate-lambda": cmd_calibrate,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "export-heatmap": cmd_heatmap,
    "synth-demand": cmd_synth,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rc = resolve_config(args)
        return COMMANDS[args.command](Context(args, rc))
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (UsageError, OSError, ValueError, KeyError) as exc:
        # TripFileError, NetworkError and config errors are ValueErrors
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

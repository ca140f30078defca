"""Trip files, synthetic demand and run configuration."""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .network import RoadNetwork, snap_to_stop
from .schedule import Request

TRIP_HEADER = ["submission_s", "origin", "dest"]


class TripFileError(ValueError):
    pass


@dataclass(frozen=True)
class TripRecord:
    submission_time: float
    origin: str  # "node:<id>" or "zone:<id>"
    dest: str


def _parse_endpoint(text: str) -> tuple[str, int]:
    kind, sep, value = text.strip().partition(":")
    if not sep or kind not in ("node", "zone"):
        raise ValueError(f"endpoint {text!r} is not node:<id> or zone:<id>")
    return kind, int(value)


def read_trip_records(path, day_length: float = 86400.0) -> list[TripRecord]:
    records, errors = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRIP_HEADER:
            raise TripFileError(f"{path}: line 1: expected header {','.join(TRIP_HEADER)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            try:
                if len(row) != 3:
                    raise ValueError(f"expected 3 fields, got {len(row)}")
                t = float(row[0])
                if not 0 <= t < day_length:
                    raise ValueError(f"submission time {t} outside [0, {day_length})")
                _parse_endpoint(row[1])
                _parse_endpoint(row[2])
                records.append(TripRecord(t, row[1].strip(), row[2].strip()))
            except ValueError as exc:
                errors.append(f"{path}: line {line}: {exc}")
    if errors:
        raise TripFileError("\n".join(errors))
    return records


def _resolve(net: RoadNetwork, endpoint: str, rng: np.random.Generator) -> int:
    kind, value = _parse_endpoint(endpoint)
    if kind == "node":
        if value not in net.index:
            raise KeyError(f"unknown node {value}")
        return snap_to_stop(net, value)
    if not 0 <= value < net.num_zones:
        raise KeyError(f"unknown zone {value}")
    stops = net.stops_in_zone[value]
    if not stops:
        raise KeyError(f"zone {value} has no virtual stops")
    return stops[int(rng.integers(len(stops)))]


def requests_from_records(records: Sequence[TripRecord], net: RoadNetwork, rng: np.random.Generator) -> list[Request]:
    """Snap/expand endpoints to virtual stops and sort by submission time.

    Zone endpoints become a uniformly random stop of that zone; node
    endpoints snap to their nearest stop. Ids follow the sorted order.
    """
    resolved = []
    for n, rec in enumerate(records):
        o = _resolve(net, rec.origin, rng)
        d = _resolve(net, rec.dest, rng)
        resolved.append((rec.submission_time, n, o, d))
    resolved.sort()
    return [Request(i, t, o, d) for i, (t, _, o, d) in enumerate(resolved)]


def load_trips(path, net: RoadNetwork, rng: np.random.Generator, day_length: float = 86400.0) -> list[Request]:
    records = read_trip_records(path, day_length)
    try:
        return requests_from_records(records, net, rng)
    except KeyError as exc:
        raise TripFileError(f"{path}: {exc.args[0]}") from None


def write_trips(path, trips: Iterable[Union[Request, TripRecord]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRIP_HEADER)
        for trip in trips:
            if isinstance(trip, Request):
                w.writerow([repr(float(trip.submission_time)), f"node:{trip.origin_stop}", f"node:{trip.dest_stop}"])
            else:
                w.writerow([repr(float(trip.submission_time)), trip.origin, trip.dest])


@dataclass(frozen=True)
class Pulse:
    start: float
    end: float
    origin_zone: int
    dest_zone: int
    count: int


def parse_pulses(text: str) -> list[Pulse]:
    """`start,end,origin_zone,dest_zone,count` entries separated by `;` or newlines."""
    out = []
    for chunk in text.replace("\n", ";").split(";"):
        chunk = chunk.strip()
        if not chunk or chunk.startswith("#"):
            continue
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 5:
            raise ValueError(f"pulse {chunk!r} needs start,end,origin_zone,dest_zone,count")
        out.append(Pulse(float(parts[0]), float(parts[1]), int(parts[2]), int(parts[3]), int(parts[4])))
    return out


def synth_demand(pulses: Sequence[Pulse], rng: np.random.Generator, path=None) -> list[TripRecord]:
    """Fixed-count pulses with Poisson-process arrival times.

    Given its count, a Poisson process on a window places arrivals as sorted
    uniform draws, so each pulse yields exactly `count` trips in
    [start, end). Output is sorted by time and written to `path` if given.
    """
    records = []
    for p in pulses:
        if p.end <= p.start or p.count < 0:
            raise ValueError(f"bad pulse {p}")
        times = np.sort(rng.uniform(p.start, p.end, size=p.count))
        times = np.minimum(np.round(times, 1), np.nextafter(p.end, p.start))
        records += [TripRecord(float(t), f"zone:{p.origin_zone}", f"zone:{p.dest_zone}") for t in times]
    records.sort(key=lambda r: r.submission_time)
    if path is not None:
        write_trips(path, records)
    return records


# -- run configuration ----------------------------------------------------


@dataclass
class RunConfig:
    """Every tunable of a run. Defaults are the published operating point."""

    tick_seconds: float = 30.0
    w_max: float = 600.0
    capacity: int = 6
    theta: float = 0.5
    alpha: float = 1.4
    dwell_seconds: float = 0.0
    detour_factor: float = 2.0
    fleet_size: int = 1000
    learn_fleet_size: int = 7000
    seed: int = 0
    day_length: float = 86400.0
    period_seconds: float = 300.0
    candidate_cap: int = 30
    n_steps: int = 12
    gamma: float = 0.9
    lam: float = 0.005
    tau: float = 30.0
    policy: str = "myopic"
    rebalancer: str = "none"
    nodes_file: str = "nodes.csv"
    edges_file: str = "edges.csv"
    num_zones: int = 0
    start_shares: str = ""  # comma-separated per-zone fleet shares, empty = uniform over nodes
    value_table: str = ""
    write_trajectories: bool = False
    audit: bool = False

    POLICIES = ("myopic", "nonmyopic")
    REBALANCERS = ("none", "value", "rejected-chase")

    def __post_init__(self):
        if self.policy not in self.POLICIES:
            raise ValueError(f"policy must be one of {self.POLICIES}, got {self.policy!r}")
        if self.rebalancer not in self.REBALANCERS:
            raise ValueError(f"rebalancer must be one of {self.REBALANCERS}, got {self.rebalancer!r}")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        self.shares()

    def shares(self) -> Optional[list[float]]:
        if not self.start_shares.strip():
            return None
        vals = [float(x) for x in self.start_shares.split(",")]
        if any(v < 0 for v in vals) or sum(vals) <= 0:
            raise ValueError(f"start_shares must be non-negative with a positive sum: {self.start_shares!r}")
        return vals

    def sim_config(self, fleet_size: Optional[int] = None, seed: Optional[int] = None):
        from .schedule import SimConfig

        return SimConfig(
            tick_seconds=self.tick_seconds,
            w_max=self.w_max,
            capacity=self.capacity,
            theta=self.theta,
            alpha=self.alpha,
            dwell_seconds=self.dwell_seconds,
            detour_factor=self.detour_factor,
            fleet_size=self.fleet_size if fleet_size is None else fleet_size,
            rng_seed=self.seed if seed is None else seed,
            day_length_seconds=self.day_length,
            candidate_cap=self.candidate_cap,
        )

    def learner_config(self):
        from .learning import LearnerConfig

        return LearnerConfig(n=self.n_steps, gamma=self.gamma)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def config_keys() -> list[tuple[str, type, object]]:
    return [(f.name, f.type, f.default) for f in fields(RunConfig)]


def coerce(key: str, text: str):
    """Parse `text` as the type of RunConfig field `key`."""
    types = {f.name: f.default for f in fields(RunConfig)}
    if key not in types:
        raise KeyError(f"unknown config key {key!r}")
    default = types[key]
    text = text.strip()
    if isinstance(default, bool):
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def parse_config(text: str, source: str = "<config>") -> dict:
    values, errors = {}, []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            errors.append(f"{source}: line {n}: expected key = value")
            continue
        try:
            values[key.strip()] = coerce(key.strip(), value)
        except (KeyError, ValueError) as exc:
            errors.append(f"{source}: line {n}: {exc.args[0]}")
    if errors:
        raise ValueError("\n".join(errors))
    return values


def load_config(path: Optional[Union[str, Path]] = None, **overrides) -> RunConfig:
    values = {}
    if path is not None:
        values = parse_config(Path(path).read_text(), str(path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def write_config(cfg: RunConfig, path) -> None:
    lines = [f"{f.name} = {str(getattr(cfg, f.name)).lower() if isinstance(getattr(cfg, f.name), bool) else getattr(cfg, f.name)}"
             for f in fields(RunConfig)]
    Path(path).write_text("\n".join(lines) + "\n")

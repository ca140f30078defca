"""Discrete-time ride-pooling simulation engine."""

from __future__ import annotations

import csv
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from .network import RoadNetwork
from .schedule import (
    ASSIGNED,
    COMPLETED,
    DROPOFF,
    EPS,
    ONBOARD,
    PENDING,
    PICKUP,
    REJECTED,
    REPOSITION_END,
    InsertionResult,
    InvariantViolation,
    Request,
    SimConfig,
    VehicleSchedule,
    check_schedule,
    latest_dropoff_of,
)

log = logging.getLogger(__name__)

Matcher = Callable[[Request, "Fleet", float], Optional[InsertionResult]]


@dataclass
class Relocation:
    vehicle_id: int
    result: InsertionResult
    from_zone: int
    to_zone: int
    delta_from: Optional[float] = None
    delta_to: Optional[float] = None
    time: float = 0.0


class Rebalancer(Protocol):
    interval: float

    def plan(self, fleet: "Fleet", now: float, rng: np.random.Generator) -> list[Relocation]: ...


class Vehicle:
    __slots__ = ("id", "node", "sched", "route", "free_at")

    def __init__(self, vid: int, node: int):
        self.id = vid
        self.node = node          # last node reached
        self.sched = VehicleSchedule(vid, node, 0.0)
        self.route: deque = deque()  # future (node, time, hop seconds)
        self.free_at = 0.0

    def is_idle(self, now: float) -> bool:
        return not self.sched.stops and self.free_at <= now

    def __repr__(self):
        return f"Vehicle({self.id} @ {self.node}, {len(self.sched.stops)} stops)"


class Fleet:
    """Vehicle states plus numpy mirrors of position and route anchor."""

    def __init__(self, net: RoadNetwork, cfg: SimConfig, start_nodes: Sequence[int]):
        self.net = net
        self.cfg = cfg
        self.vehicles = [Vehicle(v, int(n)) for v, n in enumerate(start_nodes)]
        idx = np.array([net.index[int(n)] for n in start_nodes], dtype=np.int64)
        self.node_idx = idx.copy()
        self.anchor_idx = idx.copy()
        self.anchor_time = np.zeros(len(self.vehicles))
        self._next_relocation_id = -1

    def __len__(self):
        return len(self.vehicles)

    def schedule(self, vid: int) -> VehicleSchedule:
        return self.vehicles[vid].sched

    def idle_vehicles(self, now: float) -> list[int]:
        return [v.id for v in self.vehicles if v.is_idle(now)]

    def zone_counts(self) -> np.ndarray:
        return np.bincount(self.net.zone_arr[self.node_idx], minlength=self.net.num_zones)

    def candidate_vehicles(self, req: Request, now: float) -> list[int]:
        return candidate_vehicles(req, self, self.net, self.cfg, now)

    def relocation_request(self, origin: int, dest: int, now: float) -> Request:
        """Internal request driving a vehicle from `origin` to `dest`; ids are negative."""
        req = Request(self._next_relocation_id, now, origin, dest, is_rebalancing=True)
        self._next_relocation_id -= 1
        return req


def candidate_vehicles(req: Request, fleet: Fleet, net: RoadNetwork, cfg: SimConfig, now: float) -> list[int]:
    """Vehicles able to reach the pickup within the remaining wait budget,
    nearest first (ties by vehicle id), capped at `cfg.candidate_cap`."""
    if len(fleet) == 0:
        return []
    row = net.dist_to[net.stop_pos[req.origin_stop]]
    reach = np.maximum(fleet.anchor_time, now) + row[fleet.anchor_idx]
    ok = np.flatnonzero(reach <= req.submission_time + cfg.w_max + EPS)
    if ok.size == 0:
        return []
    order = np.lexsort((ok, reach[ok]))[: cfg.candidate_cap]
    return ok[order].tolist()


@dataclass
class SimOutcome:
    requests: list[Request]
    node_ids: np.ndarray            # (ticks, fleet) node id of each vehicle at each tick
    assignment_events: list[tuple[int, int]]  # (tick, vehicle) per passenger assignment
    vmt_seconds: float
    tick_seconds: float
    day_length: float
    relocations: list[Relocation] = field(default_factory=list)
    drain_ticks: int = 0

    @property
    def num_ticks(self) -> int:
        return self.node_ids.shape[0]

    @property
    def fleet_size(self) -> int:
        return self.node_ids.shape[1]

    @property
    def vehicle_minutes(self) -> float:
        return self.vmt_seconds / 60.0

    def assignment_counts(self) -> np.ndarray:
        counts = np.zeros(self.node_ids.shape, dtype=np.int64)
        for tick, vid in self.assignment_events:
            if tick < counts.shape[0]:
                counts[tick, vid] += 1
        return counts

    def status_counts(self) -> dict[str, int]:
        out = {s: 0 for s in (PENDING, ASSIGNED, ONBOARD, COMPLETED, REJECTED)}
        for r in self.requests:
            out[r.status] += 1
        return out

    def write_trajectory_log(self, path) -> None:
        counts = self.assignment_counts()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tick", "vehicle_id", "node_id", "new_assignments"])
            for k in range(self.num_ticks):
                for v in range(self.fleet_size):
                    w.writerow([k, v, int(self.node_ids[k, v]), int(counts[k, v])])

    def write_request_log(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["request_id", "submission", "pickup", "dropoff", "status", "vehicle_id"])
            for r in self.requests:
                w.writerow([
                    r.id,
                    _fmt(r.submission_time),
                    _fmt(r.pickup_time),
                    _fmt(r.dropoff_time),
                    r.status,
                    "" if r.vehicle_id is None else r.vehicle_id,
                ])

    def write_relocation_log(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "vehicle_id", "from_zone", "to_zone", "delta_from", "delta_to"])
            for rel in self.relocations:
                w.writerow([
                    _fmt(rel.time), rel.vehicle_id, rel.from_zone, rel.to_zone,
                    _fmt(rel.delta_from), _fmt(rel.delta_to),
                ])


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


class Simulation:
    """One simulated day. Use `run()` unless you need the tick hooks."""

    def __init__(
        self,
        net: RoadNetwork,
        cfg: SimConfig,
        demand: Sequence[Request],
        matcher: Matcher,
        rebalancer: Optional[Rebalancer] = None,
        start_nodes: Optional[Sequence[int]] = None,
        observer: Optional[Callable[["Simulation", int, float], None]] = None,
    ):
        times = [r.submission_time for r in demand]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("demand must be sorted by submission_time")
        self.net, self.cfg = net, cfg
        self.demand = list(demand)
        self.matcher = matcher
        self.rebalancer = rebalancer
        self.observer = observer
        self.rng = np.random.default_rng(cfg.rng_seed)
        if start_nodes is None:
            picks = self.rng.integers(0, len(net.nodes), size=cfg.fleet_size)
            start_nodes = [net.nodes[i] for i in picks]
        self.fleet = Fleet(net, cfg, start_nodes)
        self.rebalance_rng = np.random.default_rng([cfg.rng_seed, 1])

        self.pending: list[Request] = []
        self.active: set[int] = set()
        self.counts = {s: 0 for s in (PENDING, ASSIGNED, ONBOARD, COMPLETED, REJECTED)}
        self.submitted = 0
        self.vmt = 0.0
        self.events: list[tuple[int, int]] = []
        self.relocations: list[Relocation] = []
        self._next_demand = 0
        self.tick = 0

    # -- bookkeeping -----------------------------------------------------

    def _move(self, req: Request, new: str) -> None:
        self.counts[req.status] -= 1
        req.set_status(new)
        self.counts[new] += 1

    def _check_conservation(self) -> None:
        total = sum(self.counts.values())
        if total != self.submitted or self.counts[PENDING] != len(self.pending):
            raise InvariantViolation(f"tick {self.tick}: request conservation broken {self.counts}")

    # -- vehicle movement ------------------------------------------------

    def _advance(self, v: Vehicle, now: float) -> None:
        route = v.route
        while route and route[0][1] <= now:
            node, _, hop = route.popleft()
            v.node = node
            self.vmt += hop
        stops = v.sched.stops
        done = 0
        while done < len(stops) and stops[done].planned_arrival <= now:
            self._serve(v, stops[done])
            done += 1
        if done:
            del stops[:done]
        i = v.id
        self.fleet.node_idx[i] = self.net.index[v.node]
        if route:
            node, t, _ = route[0]
        else:
            node, t = v.node, v.free_at
        v.sched.current_node = node
        v.sched.current_time = t
        self.fleet.anchor_idx[i] = self.net.index[node]
        self.fleet.anchor_time[i] = t
        if not route and not stops and v.free_at <= now:
            self.active.discard(i)

    def _serve(self, v: Vehicle, stop) -> None:
        cfg, req, t = self.cfg, stop.request, stop.planned_arrival
        v.free_at = max(v.free_at, t + cfg.dwell_seconds)
        if stop.kind == PICKUP:
            if t - req.submission_time > cfg.w_max + EPS:
                raise InvariantViolation(f"{req!r} picked up after {t - req.submission_time:.1f}s wait")
            self._move(req, ONBOARD)
            req.pickup_time = t
            v.sched.onboard_count += 1
            if v.sched.onboard_count > cfg.capacity:
                raise InvariantViolation(f"vehicle {v.id} over capacity")
        elif stop.kind == DROPOFF:
            if t > req.latest_dropoff + EPS:
                raise InvariantViolation(f"{req!r} dropped off after its latest dropoff")
            self._move(req, COMPLETED)
            req.dropoff_time = t
            req.resolved_time = t
            v.sched.onboard_count -= 1
            if v.sched.onboard_count < 0:
                raise InvariantViolation(f"vehicle {v.id} negative load")
        elif stop.kind == REPOSITION_END:
            req.status = COMPLETED

    def _commit(self, res: InsertionResult, now: float) -> None:
        v = self.fleet.vehicles[res.vehicle_id]
        sched = res.schedule
        problems = check_schedule(sched, self.cfg)
        if problems:
            raise InvariantViolation(f"vehicle {v.id}: " + "; ".join(problems))
        route = deque()
        if v.route:
            route.append(v.route[0])
        depart = sched.current_time
        here = sched.current_node
        for s in sched.stops:
            hops = self.net.route_nodes(here, s.node)
            prev = 0.0
            for node, cum in hops[:-1]:
                route.append((node, depart + cum, cum - prev))
                prev = cum
            total = hops[-1][1] if hops else 0.0
            route.append((s.node, s.planned_arrival, total - prev))
            depart = s.planned_arrival + self.cfg.dwell_seconds
            here = s.node
        v.route = route
        v.sched = VehicleSchedule(v.id, sched.current_node, sched.current_time, list(sched.stops), sched.onboard_count)
        self.active.add(v.id)

    # -- tick phases -----------------------------------------------------

    def _submit(self, now: float) -> None:
        while self._next_demand < len(self.demand) and self.demand[self._next_demand].submission_time <= now:
            req = self.demand[self._next_demand]
            self._next_demand += 1
            if req.status != PENDING:
                raise ValueError(f"{req!r} was already processed; pass fresh requests")
            if req.latest_dropoff is None:
                req.latest_dropoff = latest_dropoff_of(req, self.net, self.cfg)
            self.pending.append(req)
            self.submitted += 1
            self.counts[PENDING] += 1

    def _expire(self, now: float) -> None:
        keep = []
        for req in self.pending:
            if now - req.submission_time > self.cfg.w_max:
                self._move(req, REJECTED)
                req.resolved_time = req.submission_time + self.cfg.w_max
                hook = getattr(self.rebalancer, "on_reject", None)
                if hook is not None:
                    hook(req, now)
            else:
                keep.append(req)
        self.pending = keep

    def _match(self, now: float) -> None:
        keep = []
        for req in self.pending:
            res = self.matcher(req, self.fleet, now)
            if res is None:
                keep.append(req)
                continue
            self._commit(res, now)
            self._move(req, ASSIGNED)
            req.vehicle_id = res.vehicle_id
            self.events.append((self.tick, res.vehicle_id))
        self.pending = keep

    def _rebalance(self, now: float) -> None:
        for rel in self.rebalancer.plan(self.fleet, now, self.rebalance_rng):
            v = self.fleet.vehicles[rel.vehicle_id]
            if v.sched.has_passenger_stops():
                raise InvariantViolation(f"relocating busy vehicle {v.id}")
            req = rel.result.request
            req.status = ASSIGNED
            req.vehicle_id = v.id
            rel.time = now
            self._commit(rel.result, now)
            self.relocations.append(rel)

    def step(self, now: float, rebalance: bool) -> None:
        for vid in sorted(self.active):
            self._advance(self.fleet.vehicles[vid], now)
        self._submit(now)
        self._expire(now)
        self._match(now)
        if rebalance:
            self._rebalance(now)
        self._check_conservation()

    def run(self) -> SimOutcome:
        cfg = self.cfg
        n_ticks = int(math.ceil(cfg.day_length_seconds / cfg.tick_seconds - 1e-9))
        traj = np.empty((n_ticks, len(self.fleet)), dtype=np.int64)
        interval = getattr(self.rebalancer, "interval", None)
        next_rebalance = 0.0
        for k in range(n_ticks):
            self.tick = k
            now = k * cfg.tick_seconds
            due = self.rebalancer is not None and now + EPS >= next_rebalance
            if due:
                next_rebalance += interval
            self.step(now, due)
            traj[k] = self.fleet.node_idx
            if self.observer is not None:
                self.observer(self, k, now)
        # finish trips already accepted; no new relocations
        k = n_ticks
        while self.pending or self.active or self._next_demand < len(self.demand):
            self.tick = k
            now = k * cfg.tick_seconds
            self.step(now, False)
            if self.observer is not None:
                self.observer(self, k, now)
            k += 1
        node_ids = np.asarray(self.net.nodes, dtype=np.int64)[traj]
        return SimOutcome(
            requests=self.demand,
            node_ids=node_ids,
            assignment_events=self.events,
            vmt_seconds=self.vmt,
            tick_seconds=cfg.tick_seconds,
            day_length=cfg.day_length_seconds,
            relocations=self.relocations,
            drain_ticks=k - n_ticks,
        )


def run(
    net: RoadNetwork,
    cfg: SimConfig,
    demand: Sequence[Request],
    matcher: Matcher,
    rebalancer: Optional[Rebalancer] = None,
    start_nodes: Optional[Sequence[int]] = None,
    observer=None,
) -> SimOutcome:
    """Simulate one day of `demand` and return the outcome.

    `matcher(req, fleet, now)` returns an InsertionResult to commit or None
    to leave the request pending. `rebalancer.plan(fleet, now, rng)` runs
    every `rebalancer.interval` seconds after matching.
    """
    return Simulation(net, cfg, demand, matcher, rebalancer, start_nodes, observer).run()

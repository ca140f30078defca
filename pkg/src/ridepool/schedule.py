"""Requests, vehicle schedules, route cost and the insertion heuristic."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

from .network import RoadNetwork, shortest_time

PENDING = "pending"
ASSIGNED = "assigned"
ONBOARD = "onboard"
COMPLETED = "completed"
REJECTED = "rejected"

_TRANSITIONS = {
    PENDING: (ASSIGNED, REJECTED),
    ASSIGNED: (ONBOARD,),
    ONBOARD: (COMPLETED,),
    COMPLETED: (),
    REJECTED: (),
}

PICKUP = "pickup"
DROPOFF = "dropoff"
REPOSITION = "reposition"          # relocation origin
REPOSITION_END = "reposition-end"  # relocation target
RELOCATION_KINDS = (REPOSITION, REPOSITION_END)

EPS = 1e-6


class Infeasible(Exception):
    """No insertion position satisfies wait, deadline and capacity limits."""


class InvariantViolation(AssertionError):
    """A committed schedule broke a feasibility invariant."""


@dataclass(eq=False)
class Request:
    id: int
    submission_time: float
    origin_stop: int
    dest_stop: int
    status: str = PENDING
    pickup_time: Optional[float] = None
    dropoff_time: Optional[float] = None
    latest_dropoff: Optional[float] = None
    is_rebalancing: bool = False
    vehicle_id: Optional[int] = None
    resolved_time: Optional[float] = None

    def set_status(self, new: str) -> None:
        if new not in _TRANSITIONS[self.status]:
            raise InvariantViolation(f"request {self.id}: illegal transition {self.status} -> {new}")
        self.status = new

    def __repr__(self):
        tag = " rebalancing" if self.is_rebalancing else ""
        return (
            f"Request({self.id}{tag}, t={self.submission_time:g}, "
            f"{self.origin_stop}->{self.dest_stop}, {self.status})"
        )


@dataclass(frozen=True)
class Stop:
    node: int
    kind: str
    request: Optional[Request]
    planned_arrival: float

    @property
    def request_id(self):
        return None if self.request is None else self.request.id

    @property
    def load_delta(self) -> int:
        if self.kind == PICKUP:
            return 1
        if self.kind == DROPOFF:
            return -1
        return 0


@dataclass
class SimConfig:
    tick_seconds: float = 30.0
    w_max: float = 600.0
    capacity: int = 6
    theta: float = 0.5
    alpha: float = 1.4
    dwell_seconds: float = 0.0
    detour_factor: float = 2.0
    fleet_size: int = 1000
    rng_seed: int = 0
    day_length_seconds: float = 86400.0
    candidate_cap: int = 30

    def __post_init__(self):
        for name in ("tick_seconds", "w_max", "day_length_seconds"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.dwell_seconds < 0:
            raise ValueError("dwell_seconds must be non-negative")
        if not 0 <= self.theta <= 1:
            raise ValueError("theta must lie in [0, 1]")
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if self.detour_factor < 1:
            raise ValueError("detour_factor must be >= 1")
        if self.capacity < 1 or self.fleet_size < 0 or self.candidate_cap < 1:
            raise ValueError("capacity and candidate_cap must be >= 1, fleet_size >= 0")


@dataclass
class VehicleSchedule:
    """Planned route of one vehicle.

    `current_node`/`current_time` is where and when the vehicle can start the
    planned route: the node it is heading to (or standing at) and the time it
    gets there. `onboard_count` is the load at that point.
    """

    vehicle_id: int
    current_node: int
    current_time: float
    stops: list[Stop] = field(default_factory=list)
    onboard_count: int = 0

    def final_stop(self) -> Optional[Stop]:
        return self.stops[-1] if self.stops else None

    def loads(self) -> list[int]:
        """Running load after each stop."""
        out, load = [], self.onboard_count
        for s in self.stops:
            load += s.load_delta
            out.append(load)
        return out

    def is_relocating(self) -> bool:
        return any(s.kind in RELOCATION_KINDS for s in self.stops)

    def has_passenger_stops(self) -> bool:
        return any(s.kind not in RELOCATION_KINDS for s in self.stops)


def latest_dropoff_of(req: Request, net: RoadNetwork, cfg: SimConfig) -> float:
    direct = shortest_time(net, req.origin_stop, req.dest_stop)
    return req.submission_time + cfg.w_max + cfg.detour_factor * direct


@dataclass(frozen=True)
class RouteCost:
    """Weighted operator/user cost of a route, all in minutes."""

    operator_time: float
    in_vehicle_sum: float
    wait_sum: float
    total: float


def route_cost(sched: VehicleSchedule, cfg: SimConfig) -> RouteCost:
    drive = in_vehicle = wait = 0.0
    planned_pickup: dict[int, float] = {}
    depart = sched.current_time
    for s in sched.stops:
        drive += s.planned_arrival - depart
        depart = s.planned_arrival + cfg.dwell_seconds
        r = s.request
        if r is None or r.is_rebalancing:
            continue
        if s.kind == PICKUP:
            planned_pickup[r.id] = s.planned_arrival
            wait += s.planned_arrival - r.submission_time
        elif s.kind == DROPOFF:
            picked = planned_pickup.get(r.id, r.pickup_time)
            in_vehicle += s.planned_arrival - picked
    drive, in_vehicle, wait = drive / 60.0, in_vehicle / 60.0, wait / 60.0
    total = cfg.theta * drive + (1 - cfg.theta) * (in_vehicle + cfg.alpha * wait)
    return RouteCost(drive, in_vehicle, wait, total)


@dataclass
class InsertionResult:
    vehicle_id: int
    request: Request
    base: VehicleSchedule       # schedule the request was inserted into
    schedule: VehicleSchedule   # augmented schedule
    pickup_pos: int
    dropoff_pos: int
    old_cost: float
    new_cost: float

    @property
    def final_node(self) -> int:
        return self.schedule.stops[-1].node

    @property
    def final_time(self) -> float:
        return self.schedule.stops[-1].planned_arrival


def _deadline(s: Stop, w_max: float) -> float:
    r = s.request
    if r is None or r.is_rebalancing:
        return math.inf
    if s.kind == PICKUP:
        return r.submission_time + w_max
    if s.kind == DROPOFF:
        return r.latest_dropoff if r.latest_dropoff is not None else math.inf
    return math.inf


def try_insert(
    sched: VehicleSchedule,
    req: Request,
    net: RoadNetwork,
    cfg: SimConfig,
    now: Optional[float] = None,
) -> InsertionResult:
    """Cheapest feasible insertion of `req`'s pickup and dropoff into `sched`.

    Existing stops keep their relative order. Every pair of positions
    (i <= j) is scanned; delays are checked against per-stop slack so each
    pair costs O(1). Raises Infeasible when no pair works.

    Relocation requests go to the end of the route with no constraints and an
    operator-time-only cost. A passenger request first truncates any pending
    relocation: the vehicle is re-planned from where it currently is.
    """
    if req.status != PENDING:
        raise ValueError(f"{req!r} is not pending")
    start = sched.current_time if now is None else max(sched.current_time, now)
    stops = list(sched.stops)
    if not req.is_rebalancing and any(s.kind in RELOCATION_KINDS for s in stops):
        stops = [s for s in stops if s.kind not in RELOCATION_KINDS]
    base = VehicleSchedule(sched.vehicle_id, sched.current_node, start, stops, sched.onboard_count)
    old = route_cost(base, cfg).total

    if req.is_rebalancing:
        return _append_relocation(base, req, net, cfg, old)

    theta, alpha, dwell, cap = cfg.theta, cfg.alpha, cfg.dwell_seconds, cfg.capacity
    k = len(stops)
    tsub = req.submission_time
    latest_pickup = tsub + cfg.w_max
    latest_drop = req.latest_dropoff
    if latest_drop is None:
        latest_drop = latest_dropoff_of(req, net, cfg)

    idx = net.index
    prev_nodes = [idx[sched.current_node]] + [idx[s.node] for s in stops]
    rows = [net.stop_pos[s.node] for s in stops]
    row_p = net.dist_to[net.stop_pos[req.origin_stop]]
    row_d = net.dist_to[net.stop_pos[req.dest_stop]]
    ip, id_ = idx[req.origin_stop], idx[req.dest_stop]
    to_p = row_p[prev_nodes].tolist()        # position m-1 -> pickup
    to_d = row_d[prev_nodes].tolist()        # position m-1 -> dropoff
    from_p = net.dist_to[rows, ip].tolist()  # pickup -> stop m
    from_d = net.dist_to[rows, id_].tolist()
    p_to_d = float(row_d[ip])

    arr = [s.planned_arrival for s in stops]
    dep = [start] + [a + dwell for a in arr]
    leg = [arr[m] - dep[m] for m in range(k)]
    room = [_deadline(s, cfg.w_max) - a for s, a in zip(stops, arr)]
    slack = [math.inf] * (k + 1)
    for m in range(k - 1, -1, -1):
        slack[m] = min(room[m], slack[m + 1])
    load = [sched.onboard_count]
    weight = [0.0]  # prefix sums of cost weight per unit delay
    for s in stops:
        load.append(load[-1] + s.load_delta)
        r = s.request
        w = 0.0
        if r is not None and not r.is_rebalancing:
            w = alpha - 1.0 if s.kind == PICKUP else 1.0
        weight.append(weight[-1] + w)

    best = None
    for i in range(k + 1):
        a_p = dep[i] + to_p[i]
        if a_p > latest_pickup + EPS:
            break  # later positions only reach the pickup later
        if load[i] + 1 > cap:
            continue
        leave_p = a_p + dwell
        own = alpha * (a_p - tsub)

        # dropoff right after pickup
        a_d = leave_p + p_to_d
        if a_d <= latest_drop + EPS:
            if i < k:
                delay = a_d + dwell + from_d[i] - arr[i]
                ok = delay <= slack[i] + EPS
                d_drive = to_p[i] + p_to_d + from_d[i] - leg[i]
            else:
                delay, ok = 0.0, True
                d_drive = to_p[i] + p_to_d
            if ok:
                d_pax = (a_d - a_p) + own + delay * (weight[k] - weight[i])
                delta = theta * d_drive + (1 - theta) * d_pax
                if best is None or delta < best[0]:
                    best = (delta, i, i, a_p, a_d, delay, delay)

        if i == k:
            continue
        delay1 = leave_p + from_p[i] - arr[i]
        cover = math.inf
        peak = load[i]
        for j in range(i + 1, k + 1):
            m = j - 1
            cover = min(cover, room[m])
            if delay1 > cover + EPS:
                break
            peak = max(peak, load[j])
            if peak + 1 > cap:
                break
            a_d = arr[m] + delay1 + dwell + to_d[j]
            if a_d > latest_drop + EPS:
                break
            if j < k:
                delay2 = a_d + dwell + from_d[j] - arr[j]
                if delay2 > slack[j] + EPS:
                    continue
                d_drive = to_p[i] + from_p[i] - leg[i] + to_d[j] + from_d[j] - leg[j]
            else:
                delay2 = 0.0
                d_drive = to_p[i] + from_p[i] - leg[i] + to_d[j]
            d_pax = (
                (a_d - a_p)
                + own
                + delay1 * (weight[j] - weight[i])
                + delay2 * (weight[k] - weight[j])
            )
            delta = theta * d_drive + (1 - theta) * d_pax
            if best is None or delta < best[0]:
                best = (delta, i, j, a_p, a_d, delay1, delay2)

    if best is None:
        raise Infeasible(f"{req!r} cannot be inserted into vehicle {sched.vehicle_id}")
    delta, i, j, a_p, a_d, delay1, delay2 = best
    new_stops = stops[:i]
    new_stops.append(Stop(req.origin_stop, PICKUP, req, a_p))
    new_stops += [replace(s, planned_arrival=s.planned_arrival + delay1) for s in stops[i:j]]
    new_stops.append(Stop(req.dest_stop, DROPOFF, req, a_d))
    new_stops += [replace(s, planned_arrival=s.planned_arrival + delay2) for s in stops[j:]]
    new = VehicleSchedule(base.vehicle_id, base.current_node, start, new_stops, base.onboard_count)
    return InsertionResult(base.vehicle_id, req, base, new, i, j, old, old + delta / 60.0)


def _append_relocation(base, req, net, cfg, old):
    tail = base.stops[-1] if base.stops else None
    t0 = base.current_time if tail is None else tail.planned_arrival + cfg.dwell_seconds
    here = base.current_node if tail is None else tail.node
    to_o = shortest_time(net, here, req.origin_stop)
    a_o = t0 + to_o
    o_to_d = shortest_time(net, req.origin_stop, req.dest_stop)
    a_d = a_o + cfg.dwell_seconds + o_to_d
    stops = base.stops + [
        Stop(req.origin_stop, REPOSITION, req, a_o),
        Stop(req.dest_stop, REPOSITION_END, req, a_d),
    ]
    new = VehicleSchedule(base.vehicle_id, base.current_node, base.current_time, stops, base.onboard_count)
    k = len(base.stops)
    new_cost = old + cfg.theta * (to_o + o_to_d) / 60.0
    return InsertionResult(base.vehicle_id, req, base, new, k, k, old, new_cost)


def check_schedule(sched: VehicleSchedule, cfg: SimConfig) -> list[str]:
    """Invariant violations of a schedule; empty when it is sound."""
    problems = []
    last = sched.current_time
    load = sched.onboard_count
    seen_pickup = set()
    for n, s in enumerate(sched.stops):
        if s.planned_arrival < last - EPS:
            problems.append(f"stop {n}: arrival {s.planned_arrival} before {last}")
        last = s.planned_arrival
        load += s.load_delta
        if not 0 <= load <= cfg.capacity:
            problems.append(f"stop {n}: load {load} outside [0, {cfg.capacity}]")
        if s.planned_arrival > _deadline(s, cfg.w_max) + EPS:
            problems.append(f"stop {n}: {s.kind} of {s.request_id} at {s.planned_arrival} misses deadline")
        if s.kind == PICKUP:
            seen_pickup.add(s.request_id)
        elif s.kind == DROPOFF and s.request.status != ONBOARD and s.request_id not in seen_pickup:
            problems.append(f"stop {n}: dropoff of {s.request_id} precedes its pickup")
    return problems

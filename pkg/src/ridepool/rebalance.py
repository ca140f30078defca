"""Idle-vehicle repositioning driven by learned state values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Fleet, Relocation
from .learning import StateValueTable
from .network import SpaceTimeGrid
from .nonmyopic import PlannerConfig
from .schedule import Request, try_insert


class ZeroValueRow(ValueError):
    """All zone values are zero at this time index; relative demand is undefined."""


@dataclass(frozen=True)
class ZoneBalance:
    zone: int
    demand: float
    supply: float
    imbalance: float


def zone_balances(table: StateValueTable, grid: SpaceTimeGrid, fleet: Fleet, now: float) -> list[ZoneBalance]:
    """Relative demand (zone value share), relative supply (vehicle share)
    and their difference, supply minus demand, for every zone."""
    t = grid.time_index(now)
    row = table.V[t]
    total = row.sum()
    if total <= 0:
        raise ZeroValueRow(f"no positive values at time index {t}")
    demand = row / total
    supply = fleet.zone_counts() / max(len(fleet), 1)
    return [
        ZoneBalance(z, float(demand[z]), float(supply[z]), float(supply[z] - demand[z]))
        for z in range(grid.num_zones)
    ]


def relocation_gains(
    req: Request, pool: np.ndarray, fleet: Fleet, pcfg: PlannerConfig, grid: SpaceTimeGrid, now: float
) -> np.ndarray:
    """Marginal expected gain of sending each idle vehicle in `pool` on `req`.

    Same quantity as `marginal_gain(try_insert(...))` for an idle vehicle,
    evaluated for the whole pool at once.
    """
    net, cfg = fleet.net, fleet.cfg
    at = fleet.anchor_idx[pool]
    to_origin = net.dist_to[net.stop_pos[req.origin_stop], at]
    leg = net.dist_to[net.stop_pos[req.dest_stop], net.index[req.origin_stop]]
    arrive = now + to_origin + cfg.dwell_seconds + leg
    cost = cfg.theta * (to_origin + leg) / 60.0
    t_now = grid.time_index(now)
    v_before = pcfg.table.V[t_now, net.zone_arr[at]]
    t_after = (np.floor(arrive / grid.period_seconds).astype(np.int64)) % grid.num_periods
    ahead = np.maximum(0, np.floor((arrive - now) / grid.period_seconds)).astype(np.int64)
    v_after = pcfg.table.V[t_after, net.zone_of(req.dest_stop)]
    return -pcfg.lam * cost + pcfg.gamma**ahead * v_after - v_before


def _best_in_pool(req, pool, fleet, pcfg, grid, now) -> int:
    gains = relocation_gains(req, pool, fleet, pcfg, grid, now)
    order = np.lexsort((pool, -gains))
    return int(pool[order[0]])


def rebalance_step(
    balances: list[ZoneBalance],
    fleet: Fleet,
    pcfg: PlannerConfig,
    grid: SpaceTimeGrid,
    now: float,
    rng: np.random.Generator,
) -> list[Relocation]:
    """Send idle surplus-zone vehicles to deficit zones, most deficient first.

    For each deficit zone a relocation request is drawn: its origin is a
    random stop in a surplus zone (zone picked with probability proportional
    to its surplus), its destination a random stop in the deficit zone. The
    idle vehicle with the highest marginal expected gain takes it.
    """
    net = fleet.net
    by_zone = {b.zone: b for b in balances}
    surplus = {b.zone for b in balances if b.imbalance >= 0}
    deficit = sorted((b for b in balances if b.imbalance < 0), key=lambda b: (b.imbalance, b.zone))
    if not deficit:
        return []
    idle = np.array(fleet.idle_vehicles(now), dtype=np.int64)
    if idle.size == 0:
        return []
    zones = net.zone_arr[fleet.node_idx[idle]]
    pool = idle[np.isin(zones, list(surplus))]
    sources = [z for z in sorted(surplus) if by_zone[z].imbalance > 0 and net.stops_in_zone[z]]
    if not sources:
        return []
    weights = np.array([by_zone[z].imbalance for z in sources])
    weights = weights / weights.sum()

    plan = []
    for b in deficit:
        if pool.size == 0:
            break
        targets = net.stops_in_zone[b.zone]
        if not targets:
            continue
        src = sources[int(rng.choice(len(sources), p=weights))]
        origin = net.stops_in_zone[src][int(rng.integers(len(net.stops_in_zone[src])))]
        dest = targets[int(rng.integers(len(targets)))]
        req = fleet.relocation_request(origin, dest, now)
        vid = _best_in_pool(req, pool, fleet, pcfg, grid, now)
        pool = pool[pool != vid]
        res = try_insert(fleet.schedule(vid), req, net, fleet.cfg, now)
        from_zone = net.zone_of(fleet.vehicles[vid].node)
        plan.append(Relocation(vid, res, from_zone, b.zone, by_zone[from_zone].imbalance, b.imbalance))
    return plan


class ValueRebalancer:
    """Rebalancing hook: runs `rebalance_step` every `interval` seconds."""

    def __init__(self, pcfg: PlannerConfig, grid: SpaceTimeGrid, interval: float = 30.0):
        self.pcfg = pcfg
        self.grid = grid
        self.interval = interval

    def plan(self, fleet: Fleet, now: float, rng: np.random.Generator) -> list[Relocation]:
        try:
            balances = zone_balances(self.pcfg.table, self.grid, fleet, now)
        except ZeroValueRow:
            return []
        return rebalance_step(balances, fleet, self.pcfg, self.grid, now, rng)


class RejectedChaseRebalancer:
    """Comparison policy: after each rejection, send the best idle vehicle to
    the rejected pickup; dropped when no vehicle is idle."""

    def __init__(self, pcfg: PlannerConfig, grid: SpaceTimeGrid, interval: float = 30.0):
        self.pcfg = pcfg
        self.grid = grid
        self.interval = interval
        self.queue: list[int] = []

    def on_reject(self, req: Request, now: float) -> None:
        self.queue.append(req.origin_stop)

    def plan(self, fleet: Fleet, now: float, rng: np.random.Generator) -> list[Relocation]:
        queue, self.queue = self.queue, []
        pool = np.array(fleet.idle_vehicles(now), dtype=np.int64)
        plan = []
        net = fleet.net
        for stop in queue:
            if pool.size == 0:
                break
            req = fleet.relocation_request(stop, stop, now)
            vid = _best_in_pool(req, pool, fleet, self.pcfg, self.grid, now)
            pool = pool[pool != vid]
            res = try_insert(fleet.schedule(vid), req, net, fleet.cfg, now)
            plan.append(Relocation(vid, res, net.zone_of(fleet.vehicles[vid].node), net.zone_of(stop)))
        return plan

"""Value-aware matching: maximise the marginal expected gain of an assignment."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .engine import Fleet
from .learning import StateValueTable
from .myopic import cheapest, feasible_insertions
from .network import RoadNetwork, SpaceTimeGrid, state_of
from .schedule import InsertionResult, Request, VehicleSchedule


class DegenerateDenominator(ZeroDivisionError):
    """Mean cost change is zero, so the scale factor is undefined."""


@dataclass
class PlannerConfig:
    table: StateValueTable
    gamma: float = 0.9
    lam: float = 0.005

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")


@dataclass(frozen=True)
class GainBreakdown:
    immediate: float
    v_before: float
    v_after: float
    dt_before: int
    dt_after: int
    total: float


def vehicle_state(
    sched: VehicleSchedule, grid: SpaceTimeGrid, net: RoadNetwork, now: float
) -> tuple[tuple[int, int], int]:
    """State of the vehicle's final scheduled stop and how many whole periods
    ahead of `now` it lies. Idle vehicles are in their current state."""
    last = sched.final_stop()
    if last is None:
        return state_of(grid, now, sched.current_node, net), 0
    ahead = max(0, math.floor((last.planned_arrival - now) / grid.period_seconds))
    return state_of(grid, last.planned_arrival, last.node, net), ahead


def future_gain(gamma: float, v_before: float, dt_before: int, v_after: float, dt_after: int) -> float:
    return gamma**dt_after * v_after - gamma**dt_before * v_before


def marginal_gain(
    result: InsertionResult, pcfg: PlannerConfig, grid: SpaceTimeGrid, net: RoadNetwork, now: float
) -> GainBreakdown:
    before, dt_b = vehicle_state(result.base, grid, net, now)
    after, dt_a = vehicle_state(result.schedule, grid, net, now)
    v_b, v_a = pcfg.table.value(before), pcfg.table.value(after)
    immediate = pcfg.lam * (result.old_cost - result.new_cost)
    total = immediate + future_gain(pcfg.gamma, v_b, dt_b, v_a, dt_a)
    return GainBreakdown(immediate, v_b, v_a, dt_b, dt_a, total)


def match_nonmyopic(
    req: Request,
    fleet: Fleet,
    now: float,
    pcfg: PlannerConfig,
    grid: SpaceTimeGrid,
    candidates: Optional[Iterable[int]] = None,
    audit: Optional[list] = None,
) -> Optional[InsertionResult]:
    """Feasible candidate with the highest marginal expected gain (ties to
    the lowest vehicle id). A feasible match is taken even at negative gain."""
    scored = []
    for res in feasible_insertions(req, fleet, now, candidates):
        scored.append((res, marginal_gain(res, pcfg, grid, fleet.net, now)))
    if not scored:
        return None
    best, _ = max(scored, key=lambda item: (item[1].total, -item[0].vehicle_id))
    if audit is not None:
        for res, g in scored:
            audit.append((req.id, res.vehicle_id, g, res is best))
    return best


class NonMyopicMatcher:
    """Matcher hook around `match_nonmyopic`, optionally keeping an audit trail."""

    def __init__(self, pcfg: PlannerConfig, grid: SpaceTimeGrid, audit: bool = False):
        self.pcfg = pcfg
        self.grid = grid
        self.audit = [] if audit else None

    def __call__(self, req, fleet, now):
        return match_nonmyopic(req, fleet, now, self.pcfg, self.grid, audit=self.audit)

    def write_audit(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["request_id", "vehicle_id", "R_v", "v_before", "v_after",
                        "dt_before", "dt_after", "total_gain", "chosen"])
            for rid, vid, g, chosen in self.audit or ():
                w.writerow([rid, vid, repr(g.immediate), repr(g.v_before), repr(g.v_after),
                            g.dt_before, g.dt_after, repr(g.total), int(chosen)])


def calibrate_lambda(pairs: Sequence[tuple[float, float]]) -> float:
    """Ratio of the mean future-value change to the mean cost change.

    Each pair is (gamma^dt' V(s') - gamma^dt V(s), c(v, xi) - c(v, xi'))
    for one feasible candidate seen in a myopic calibration run.
    """
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if arr.shape[0] == 0:
        raise DegenerateDenominator("no calibration pairs")
    num, den = arr[:, 0].mean(), arr[:, 1].mean()
    if den == 0:
        raise DegenerateDenominator("mean cost change is zero")
    return float(num / den)


class CalibrationRecorder:
    """Myopic matcher hook that records a calibration pair per feasible candidate."""

    def __init__(self, table: StateValueTable, grid: SpaceTimeGrid, gamma: float = 0.9):
        self.pcfg = PlannerConfig(table, gamma=gamma, lam=1.0)
        self.grid = grid
        self.pairs: list[tuple[float, float]] = []

    def __call__(self, req, fleet, now):
        options = list(feasible_insertions(req, fleet, now))
        for res in options:
            g = marginal_gain(res, self.pcfg, self.grid, fleet.net, now)
            self.pairs.append((g.total - g.immediate, res.old_cost - res.new_cost))
        return cheapest(options)

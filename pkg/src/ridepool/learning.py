"""Offline n-step TD policy evaluation of spatiotemporal state values."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np

from .engine import SimOutcome, run
from .network import RoadNetwork, SpaceTimeGrid
from .schedule import REJECTED, Request, SimConfig


class RejectionDuringLearning(RuntimeError):
    """The learning fleet was too small: some requests were rejected."""


@dataclass
class LearnerConfig:
    n: int = 12
    gamma: float = 0.9

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")


class StateValueTable:
    """Lookup table V(t, z) with visit counters N(t, z)."""

    def __init__(self, num_periods: int, num_zones: int):
        self.V = np.zeros((num_periods, num_zones))
        self.N = np.zeros((num_periods, num_zones), dtype=np.int64)

    @classmethod
    def for_grid(cls, grid: SpaceTimeGrid) -> "StateValueTable":
        return cls(grid.num_periods, grid.num_zones)

    @property
    def shape(self) -> tuple[int, int]:
        return self.V.shape

    @property
    def num_periods(self) -> int:
        return self.V.shape[0]

    @property
    def num_zones(self) -> int:
        return self.V.shape[1]

    def value(self, state: tuple[int, int]) -> float:
        t, z = state
        return float(self.V[t, z])

    def copy(self) -> "StateValueTable":
        out = StateValueTable(*self.shape)
        out.V[:] = self.V
        out.N[:] = self.N
        return out

    def __eq__(self, other):
        if not isinstance(other, StateValueTable):
            return NotImplemented
        return np.array_equal(self.V, other.V) and np.array_equal(self.N, other.N)

    def save(self, path) -> None:
        """Write `time_index,zone_id,value,count` rows for visited states."""
        tmp = f"{path}.tmp"
        with open(tmp, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time_index", "zone_id", "value", "count"])
            for t, z in zip(*np.nonzero(self.N)):
                w.writerow([int(t), int(z), repr(float(self.V[t, z])), int(self.N[t, z])])
        os.replace(tmp, path)

    @classmethod
    def load(cls, path, num_periods: int, num_zones: int) -> "StateValueTable":
        table = cls(num_periods, num_zones)
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["time_index", "zone_id", "value", "count"]:
                raise ValueError(f"{path}: line 1: expected header time_index,zone_id,value,count")
            for row in reader:
                try:
                    t, z = int(row["time_index"]), int(row["zone_id"])
                    table.V[t, z] = float(row["value"])
                    table.N[t, z] = int(row["count"])
                except (ValueError, IndexError, TypeError) as exc:
                    raise ValueError(f"{path}: line {reader.line_num}: {exc}") from None
        return table


class Episode(NamedTuple):
    zones: np.ndarray    # zone at the start of each period
    rewards: np.ndarray  # assignments received during each period


@dataclass
class EpisodeLog:
    """Per-vehicle episodes as (vehicles x periods) arrays.

    Pair t of a vehicle is (state (t, zones[t]), reward collected during
    period t), i.e. the reward that follows state t.
    """

    zones: np.ndarray
    rewards: np.ndarray

    def __len__(self):
        return self.zones.shape[0]

    def __getitem__(self, v: int) -> Episode:
        return Episode(self.zones[v], self.rewards[v])

    def pairs(self, v: int) -> list[tuple[tuple[int, int], int]]:
        return [((t, int(z)), int(r)) for t, (z, r) in enumerate(zip(self.zones[v], self.rewards[v]))]


def extract_episodes(outcome: SimOutcome, grid: SpaceTimeGrid, net: RoadNetwork) -> EpisodeLog:
    tick = outcome.tick_seconds
    n_ticks = outcome.num_ticks
    if n_ticks * tick < grid.day_length - 1e-9:
        raise ValueError("outcome does not cover the full day")
    first = np.ceil(np.arange(grid.num_periods) * grid.period_seconds / tick - 1e-9).astype(np.int64)
    nodes = np.asarray(net.nodes)
    idx = np.searchsorted(nodes, outcome.node_ids[first])
    zones = net.zone_arr[idx].T.copy()

    rewards = np.zeros((outcome.fleet_size, grid.num_periods), dtype=np.int64)
    if outcome.assignment_events:
        ev = np.asarray(outcome.assignment_events, dtype=np.int64)
        ev = ev[ev[:, 0] < n_ticks]
        period = np.floor(ev[:, 0] * tick / grid.period_seconds + 1e-9).astype(np.int64)
        keep = period < grid.num_periods
        np.add.at(rewards, (ev[keep, 1], period[keep]), 1)
    return EpisodeLog(zones, rewards)


def nstep_return(episode: Episode, t: int, table: StateValueTable, lcfg: LearnerConfig) -> float:
    """Discounted n-step return from period t.

    Sums the rewards of periods t .. t+n-1 (truncated at the end of the day)
    and bootstraps with gamma^n V(S_{t+n}) only when period t+n exists.
    """
    horizon = len(episode.rewards)
    if not 0 <= t < horizon:
        raise IndexError(f"t={t} outside episode of length {horizon}")
    n, gamma = lcfg.n, lcfg.gamma
    g = 0.0
    for i in range(min(n, horizon - t)):
        g += gamma**i * float(episode.rewards[t + i])
    if t + n < horizon:
        g += gamma**n * float(table.V[t + n, episode.zones[t + n]])
    return g


def update(table: StateValueTable, state: tuple[int, int], ret: float) -> None:
    """Incremental-mean update of one state with one return."""
    t, z = state
    table.N[t, z] += 1
    table.V[t, z] += (ret - table.V[t, z]) / table.N[t, z]


def sweep(episodes: EpisodeLog, table: StateValueTable, lcfg: LearnerConfig) -> StateValueTable:
    """Apply one day of episodes to `table` in place, period by period.

    All vehicles in the same period are folded in together; their returns
    bootstrap from period t+n, which this day's sweep has not touched yet,
    so this equals the one-vehicle-at-a-time loop up to rounding.
    """
    Z, R = episodes.zones, episodes.rewards.astype(float)
    horizon, nz = table.shape
    if R.shape[1] != horizon:
        raise ValueError(f"episodes have {R.shape[1]} periods, table has {horizon}")
    n, gamma = lcfg.n, lcfg.gamma
    disc = gamma ** np.arange(n)
    boot = gamma**n
    for t in range(horizon):
        m = min(n, horizon - t)
        g = R[:, t : t + m] @ disc[:m]
        if t + n < horizon:
            g = g + boot * table.V[t + n, Z[:, t + n]]
        z = Z[:, t]
        cnt = np.bincount(z, minlength=nz)
        tot = np.bincount(z, weights=g, minlength=nz)
        hit = cnt > 0
        new_n = table.N[t] + cnt
        table.V[t, hit] += (tot[hit] - cnt[hit] * table.V[t, hit]) / new_n[hit]
        table.N[t] = new_n
    return table


DaySpec = Union[str, "os.PathLike[str]", Sequence[Request]]


def _fresh(requests: Iterable[Request]) -> list[Request]:
    return [Request(r.id, r.submission_time, r.origin_stop, r.dest_stop) for r in requests]


def learn(
    days: Sequence[DaySpec],
    net: RoadNetwork,
    cfg: SimConfig,
    lcfg: LearnerConfig,
    grid: SpaceTimeGrid,
    table: Optional[StateValueTable] = None,
    matcher=None,
    seeds: Optional[Sequence[int]] = None,
    on_day: Optional[Callable[[int, StateValueTable, SimOutcome], None]] = None,
    start_nodes: Optional[Sequence[int]] = None,
) -> StateValueTable:
    """Simulate each day with a large fleet under the myopic policy and fold
    its episodes into `table` (values carry over from day to day).

    Days are trip files or request lists. `start_nodes` pins the fleet's
    starting positions (random per day seed otherwise). Raises
    RejectionDuringLearning if any request of a day is rejected.
    """
    from .ingest import load_trips
    from .myopic import match_myopic

    matcher = matcher or match_myopic
    table = table if table is not None else StateValueTable.for_grid(grid)
    if table.shape != (grid.num_periods, grid.num_zones):
        raise ValueError(f"table shape {table.shape} does not match grid")
    for d, day in enumerate(days):
        seed = cfg.rng_seed if seeds is None else seeds[d]
        day_cfg = SimConfig(**{**vars(cfg), "rng_seed": seed})
        if isinstance(day, (str, os.PathLike)):
            requests = load_trips(day, net, np.random.default_rng(seed), day_length=cfg.day_length_seconds)
        else:
            requests = _fresh(day)
        outcome = run(net, day_cfg, requests, matcher, start_nodes=start_nodes)
        rejected = sum(r.status == REJECTED for r in outcome.requests)
        if rejected:
            raise RejectionDuringLearning(
                f"day {d}: {rejected} of {len(outcome.requests)} requests rejected "
                f"with fleet {cfg.fleet_size}; increase the learning fleet"
            )
        sweep(extract_episodes(outcome, grid, net), table, lcfg)
        if on_day is not None:
            on_day(d, table, outcome)
    return table

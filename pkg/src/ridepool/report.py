"""Evaluation metrics, comparison tables and value heatmap export."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .engine import SimOutcome
from .learning import StateValueTable
from .schedule import COMPLETED, REJECTED


class EmptyRun(ValueError):
    pass


class MissingBaseline(KeyError):
    pass


@dataclass
class MetricsSummary:
    submitted: int
    served: int
    rejected: int
    service_rate: float
    mean_wait: Optional[float]          # minutes, served passengers only
    mean_in_vehicle: Optional[float]    # minutes, served passengers only
    vehicle_minutes: float
    vmt_per_passenger: Optional[float]  # None when nobody was served
    hourly_submissions: np.ndarray
    hourly_rejections: np.ndarray
    days: list["MetricsSummary"] = field(default_factory=list)

    HEADLINE = ("service_rate", "mean_wait", "mean_in_vehicle", "vmt_per_passenger")

    def headline(self) -> dict:
        return {k: getattr(self, k) for k in self.HEADLINE}

    def __eq__(self, other):
        if not isinstance(other, MetricsSummary):
            return NotImplemented
        scalars = ("submitted", "served", "rejected", "service_rate", "mean_wait",
                   "mean_in_vehicle", "vehicle_minutes", "vmt_per_passenger")
        return (
            all(getattr(self, k) == getattr(other, k) for k in scalars)
            and np.array_equal(self.hourly_submissions, other.hourly_submissions)
            and np.array_equal(self.hourly_rejections, other.hourly_rejections)
            and self.days == other.days
        )


def _hour_bins(times, day_length: float) -> np.ndarray:
    hours = int(round(day_length / 3600.0))
    idx = np.floor(np.asarray(times, dtype=float) / 3600.0).astype(np.int64)
    return np.bincount(np.clip(idx, 0, hours - 1), minlength=hours)


def summarize(outcome: SimOutcome) -> MetricsSummary:
    reqs = [r for r in outcome.requests if not r.is_rebalancing]
    if not reqs:
        raise EmptyRun("no requests were submitted")
    served = [r for r in reqs if r.status == COMPLETED]
    rejected = [r for r in reqs if r.status == REJECTED]
    waits = [(r.pickup_time - r.submission_time) / 60.0 for r in served]
    rides = [(r.dropoff_time - r.pickup_time) / 60.0 for r in served]
    vm = outcome.vehicle_minutes
    return MetricsSummary(
        submitted=len(reqs),
        served=len(served),
        rejected=len(rejected),
        service_rate=len(served) / len(reqs),
        mean_wait=float(np.mean(waits)) if served else None,
        mean_in_vehicle=float(np.mean(rides)) if served else None,
        vehicle_minutes=vm,
        vmt_per_passenger=vm / len(served) if served else None,
        hourly_submissions=_hour_bins([r.submission_time for r in reqs], outcome.day_length),
        hourly_rejections=_hour_bins([r.submission_time for r in rejected], outcome.day_length),
    )


def combine(days: Sequence[MetricsSummary]) -> MetricsSummary:
    """Pool several days. Means are weighted by served requests, the service
    rate by submissions; the per-day summaries are kept in `days`."""
    if not days:
        raise EmptyRun("no days to combine")
    submitted = sum(d.submitted for d in days)
    served = sum(d.served for d in days)
    vm = sum(d.vehicle_minutes for d in days)

    def pooled(key):
        if served == 0:
            return None
        return sum(getattr(d, key) * d.served for d in days if d.served) / served

    return MetricsSummary(
        submitted=submitted,
        served=served,
        rejected=sum(d.rejected for d in days),
        service_rate=served / submitted,
        mean_wait=pooled("mean_wait"),
        mean_in_vehicle=pooled("mean_in_vehicle"),
        vehicle_minutes=vm,
        vmt_per_passenger=vm / served if served else None,
        hourly_submissions=np.sum([d.hourly_submissions for d in days], axis=0),
        hourly_rejections=np.sum([d.hourly_rejections for d in days], axis=0),
        days=list(days),
    )


def _cell(x) -> str:
    return "" if x is None else repr(float(x))


def write_summary(summary: MetricsSummary, path) -> None:
    """Headline metrics as `metric,value` rows, then hourly counts and the
    per-day breakdown when there is more than one day."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "value"])
        for key in ("submitted", "served", "rejected"):
            w.writerow([key, getattr(summary, key)])
        for key in ("service_rate", "mean_wait", "mean_in_vehicle", "vehicle_minutes", "vmt_per_passenger"):
            w.writerow([key, _cell(getattr(summary, key))])
        for h, (s, r) in enumerate(zip(summary.hourly_submissions, summary.hourly_rejections)):
            w.writerow([f"hour_{h:02d}_submissions", int(s)])
            w.writerow([f"hour_{h:02d}_rejections", int(r)])
        for d, day in enumerate(summary.days):
            for key in ("service_rate", "mean_wait", "mean_in_vehicle", "vmt_per_passenger"):
                w.writerow([f"day_{d}_{key}", _cell(getattr(day, key))])


def heatmap_export(table: StateValueTable, indices: Iterable[int], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_index", "zone_id", "value"])
        for t in indices:
            if not 0 <= t < table.num_periods:
                raise IndexError(f"time index {t} outside [0, {table.num_periods})")
            for z in range(table.num_zones):
                w.writerow([t, z, repr(float(table.V[t, z]))])


def percent_delta(value: Optional[float], base: Optional[float]) -> Optional[float]:
    if value is None or base is None or base == 0:
        return None
    return 100.0 * (value - base) / base


CompareKey = tuple  # (policy, fleet_size)


def compare(runs: Mapping[CompareKey, MetricsSummary], baseline: str = "myopic") -> list[dict]:
    """One row per (policy, fleet) with the headline metrics and percent
    changes against `baseline` at the same fleet size."""
    if len(runs) < 2:
        raise MissingBaseline("need at least two runs to compare")
    fleets = {fleet for _, fleet in runs}
    missing = sorted(f for f in fleets if (baseline, f) not in runs)
    if missing:
        raise MissingBaseline(f"no {baseline!r} run at fleet size(s) {missing}")
    rows = []
    for (policy, fleet) in sorted(runs, key=lambda k: (k[1], k[0] != baseline, k[0])):
        s, b = runs[(policy, fleet)], runs[(baseline, fleet)]
        row = {"policy": policy, "fleet": fleet}
        for key in MetricsSummary.HEADLINE:
            row[key] = getattr(s, key)
            row[f"{key}_delta_pct"] = percent_delta(getattr(s, key), getattr(b, key))
        rows.append(row)
    return rows


def write_comparison(rows: Sequence[dict], path) -> None:
    cols = ["policy", "fleet"]
    for key in MetricsSummary.HEADLINE:
        cols += [key, f"{key}_delta_pct"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow([row[c] if c in ("policy", "fleet") else _cell(row[c]) for c in cols])

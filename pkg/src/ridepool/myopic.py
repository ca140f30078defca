"""Myopic matching: cheapest post-insertion route cost."""

from __future__ import annotations

from typing import Iterable, Iterator, Optional

from .engine import Fleet
from .schedule import Infeasible, InsertionResult, Request, try_insert


def feasible_insertions(
    req: Request, fleet: Fleet, now: float, candidates: Optional[Iterable[int]] = None
) -> Iterator[InsertionResult]:
    """Best insertion of `req` for every candidate vehicle that can take it."""
    if candidates is None:
        candidates = fleet.candidate_vehicles(req, now)
    for vid in candidates:
        try:
            yield try_insert(fleet.schedule(vid), req, fleet.net, fleet.cfg, now)
        except Infeasible:
            continue


def cheapest(options: Iterable[InsertionResult]) -> Optional[InsertionResult]:
    return min(options, key=lambda r: (r.new_cost, r.vehicle_id), default=None)


def match_myopic(req: Request, fleet: Fleet, now: float, candidates=None) -> Optional[InsertionResult]:
    """Candidate with the lowest absolute route cost after insertion; ties
    go to the lowest vehicle id. None when no candidate is feasible."""
    return cheapest(feasible_insertions(req, fleet, now, candidates))

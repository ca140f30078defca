import heapq
import itertools
import math

import numpy as np
import pytest

from ridepool.network import RoadNetwork, grid_network
from ridepool.schedule import (
    DROPOFF,
    ONBOARD,
    PICKUP,
    Infeasible,
    Request,
    SimConfig,
    Stop,
    VehicleSchedule,
    latest_dropoff_of,
    route_cost,
    try_insert,
)


def reference_dijkstra(edges, source):
    """Plain heap Dijkstra over an edge list, independent of scipy."""
    adj = {}
    for u, v, w in edges:
        adj.setdefault(u, []).append((v, w))
    dist = {source: 0.0}
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist.get(u, math.inf):
            continue
        for v, w in adj.get(u, ()):
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def line_network(n=5, edge_time=60.0, zones=None):
    """Bidirectional path 0 - 1 - ... - n-1, all nodes stops."""
    edges = []
    for i in range(n - 1):
        edges += [(i, i + 1, edge_time), (i + 1, i, edge_time)]
    zones = zones or {i: 0 for i in range(n)}
    return RoadNetwork(range(n), edges, range(n), zones)


@pytest.fixture
def grid5():
    return grid_network(5, 5, 60.0, zone_fn=lambda r, c: int(c >= 3))


def brute_force_insert(sched, req, net, cfg, now):
    """Try every (i <= j) placement, recompute the whole schedule from
    scratch and check every constraint naively. Returns the minimal new
    cost or None."""
    start = max(sched.current_time, now)
    stops = list(sched.stops)
    latest = req.latest_dropoff if req.latest_dropoff is not None else latest_dropoff_of(req, net, cfg)
    best = None
    k = len(stops)
    for i in range(k + 1):
        for j in range(i, k + 1):
            seq = [(s.node, s.kind, s.request) for s in stops]
            seq.insert(j, (req.dest_stop, DROPOFF, req))
            seq.insert(i, (req.origin_stop, PICKUP, req))
            t, here, load = start, sched.current_node, sched.onboard_count
            ok = True
            rebuilt = []
            for node, kind, r in seq:
                t = t + net.time_idx(net.index[here], net.index[node])
                rebuilt.append(Stop(node, kind, r, t))
                load += 1 if kind == PICKUP else -1
                if load > cfg.capacity or load < 0:
                    ok = False
                if kind == PICKUP and t > r.submission_time + cfg.w_max + 1e-6:
                    ok = False
                if kind == DROPOFF:
                    deadline = latest if r is req else r.latest_dropoff
                    if t > deadline + 1e-6:
                        ok = False
                t += cfg.dwell_seconds
                here = node
            if not ok:
                continue
            cost = route_cost(VehicleSchedule(sched.vehicle_id, sched.current_node, start, rebuilt,
                                              sched.onboard_count), cfg).total
            if best is None or cost < best:
                best = cost
    return best


def random_schedule(net, cfg, rng, n_requests=4, now=0.0, onboard=True):
    """Build a feasible schedule by successive insertions, then optionally
    'drive' through leading pickups so some passengers are onboard."""
    sched = VehicleSchedule(0, int(rng.choice(net.stops)), now)
    rid = itertools.count()
    for _ in range(n_requests):
        o, d = (int(x) for x in rng.choice(net.stops, 2))
        t_sub = now - float(rng.uniform(0, cfg.w_max * 0.5))
        req = Request(next(rid), t_sub, o, d)
        req.latest_dropoff = latest_dropoff_of(req, net, cfg)
        try:
            res = try_insert(sched, req, net, cfg, now)
        except Infeasible:
            continue
        req.status = "assigned"
        sched = res.schedule
    if onboard:
        while sched.stops and sched.stops[0].kind == PICKUP and rng.random() < 0.6:
            s = sched.stops.pop(0)
            s.request.status = ONBOARD
            s.request.pickup_time = s.planned_arrival
            sched.onboard_count += 1
            sched.current_node, sched.current_time = s.node, s.planned_arrival + cfg.dwell_seconds
    return sched


def naive_learning(days, num_periods, num_zones, n, gamma):
    """Vehicle-by-vehicle loop keeping every return per state; V is the mean
    of the stored returns, bootstrapping from those means."""
    returns = {}
    value = lambda s: float(np.mean(returns[s])) if s in returns else 0.0
    for zones, rewards in days:
        T = len(zones[0])
        for t in range(T):
            for z_row, r_row in zip(zones, rewards):
                g = 0.0
                for i in range(n):
                    if t + i < T:
                        g += gamma**i * r_row[t + i]
                if t + n < T:
                    g += gamma**n * value((t + n, z_row[t + n]))
                returns.setdefault((t, z_row[t]), []).append(g)
    V = np.zeros((num_periods, num_zones))
    for (t, z), rs in returns.items():
        V[t, z] = np.mean(rs)
    return V, returns

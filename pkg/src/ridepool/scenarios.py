"""Small synthetic cities and demand patterns for experiments and tests."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .ingest import Pulse, requests_from_records, synth_demand
from .network import RoadNetwork, grid_network
from .schedule import Request


def two_zone_city(rows: int = 6, half_width: int = 6, gap: int = 4, edge_time: float = 60.0) -> RoadNetwork:
    """Two square-ish districts joined by a bridge road of `gap` links.

    The west district (zone 0) occupies the first `half_width` columns, the
    east district (zone 1) the last `half_width`. The columns in between
    are road without stops, only the middle row crosses them.
    """
    cols = 2 * half_width + gap
    mid = rows // 2
    west = lambda c: c < half_width
    east = lambda c: c >= half_width + gap
    nodes, edges, zones, stops = [], [], {}, []
    for r in range(rows):
        for c in range(cols):
            on_road = west(c) or east(c) or r == mid
            if not on_road:
                continue
            n = r * cols + c
            nodes.append(n)
            zones[n] = 0 if c < half_width + gap // 2 else 1
            if west(c) or east(c):
                stops.append(n)
    present = set(nodes)
    for n in nodes:
        r, c = divmod(n, cols)
        for m in (n + 1 if c + 1 < cols else None, n + cols if r + 1 < rows else None):
            if m is not None and m in present:
                edges += [(n, m, edge_time), (m, n, edge_time)]
    coords = {n: (float(n // cols), float(n % cols)) for n in nodes}
    return RoadNetwork(nodes, edges, stops, zones, num_zones=2, coords=coords)


def alternating_pulses(
    hours: int = 24, per_hour: int = 400, local_share: float = 0.8, start_zone: int = 0
) -> list[Pulse]:
    """Demand that switches district every hour.

    In each hour `per_hour` trips start in the active district; a share
    `local_share` stays inside it, the rest crosses to the other district.
    The active district alternates, starting with `start_zone`.
    """
    pulses = []
    for h in range(hours):
        z = (start_zone + h) % 2
        local = int(round(per_hour * local_share))
        pulses.append(Pulse(h * 3600.0, (h + 1) * 3600.0, z, z, local))
        if per_hour - local:
            pulses.append(Pulse(h * 3600.0, (h + 1) * 3600.0, z, 1 - z, per_hour - local))
    return pulses


def pulsed_requests(net: RoadNetwork, pulses: Sequence[Pulse], seed: int) -> list[Request]:
    """Trip records for `pulses` expanded onto the network's stops, seeded."""
    rng = np.random.default_rng(seed)
    return requests_from_records(synth_demand(pulses, rng), net, rng)


def uniform_requests(
    net: RoadNetwork, count: int, seed: int, day_length: float = 86400.0
) -> list[Request]:
    """`count` trips with uniform submission times and uniform random stops."""
    rng = np.random.default_rng(seed)
    times = np.sort(np.round(rng.uniform(0, day_length, size=count), 1))
    times = np.minimum(times, np.nextafter(day_length, 0))
    stops = np.asarray(net.stops)
    o = stops[rng.integers(len(stops), size=count)]
    d = stops[rng.integers(len(stops), size=count)]
    return [Request(i, float(t), int(a), int(b)) for i, (t, a, b) in enumerate(zip(times, o, d))]


def zone_start_nodes(
    net: RoadNetwork, fleet_size: int, seed: int, shares: Optional[Sequence[float]] = None
) -> list[int]:
    """Initial vehicle nodes: zone drawn by `shares` (default uniform), then a
    uniform stop in that zone."""
    rng = np.random.default_rng([seed, 7])
    zones = [z for z in range(net.num_zones) if net.stops_in_zone[z]]
    p = None if shares is None else np.asarray([shares[z] for z in zones], dtype=float)
    if p is not None:
        p = p / p.sum()
    picks = rng.choice(len(zones), size=fleet_size, p=p)
    out = []
    for k in picks:
        stops = net.stops_in_zone[zones[k]]
        out.append(stops[int(rng.integers(len(stops)))])
    return out

"""Road network, shortest travel times and the space-time state grid."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra


class Unreachable(Exception):
    """No directed path exists between two nodes."""


class NetworkError(ValueError):
    """Network files or contents violate the network invariants."""


class RoadNetwork:
    """Directed weighted graph with virtual stops and a node -> zone map.

    Travel times from every node *to* every virtual stop are precomputed at
    construction (one reverse Dijkstra per stop), together with the next hop
    toward each stop. Vehicles only ever drive toward stops, so routing needs
    nothing else; other point queries run a one-to-all search and cache it.
    """

    def __init__(
        self,
        nodes: Sequence[int],
        edges: Iterable[tuple[int, int, float]],
        virtual_stops: Iterable[int],
        zone_of: dict[int, int],
        num_zones: int | None = None,
        coords: dict[int, tuple[float, float]] | None = None,
    ):
        self.nodes = sorted(int(n) for n in nodes)
        if len(set(self.nodes)) != len(self.nodes):
            raise NetworkError("duplicate node ids")
        self.index = {n: i for i, n in enumerate(self.nodes)}
        self.coords = coords or {}

        best: dict[tuple[int, int], float] = {}
        for u, v, w in edges:
            if u not in self.index or v not in self.index:
                raise NetworkError(f"edge ({u}, {v}) references an undeclared node")
            w = float(w)
            if not w > 0 or not math.isfinite(w):
                raise NetworkError(f"edge ({u}, {v}) has non-positive travel time {w}")
            if u == v:
                continue
            key = (self.index[u], self.index[v])
            # parallel edges: csr_matrix would sum them, keep the fastest
            if key not in best or w < best[key]:
                best[key] = w
        self.edges = [(self.nodes[i], self.nodes[j], w) for (i, j), w in sorted(best.items())]

        self.stops = sorted(int(s) for s in set(virtual_stops))
        for s in self.stops:
            if s not in self.index:
                raise NetworkError(f"virtual stop {s} is not a declared node")
        if not self.stops:
            raise NetworkError("network has no virtual stops")
        self.stop_pos = {s: k for k, s in enumerate(self.stops)}
        self.stop_idx = np.array([self.index[s] for s in self.stops], dtype=np.int64)

        missing = [n for n in self.nodes if n not in zone_of]
        if missing:
            raise NetworkError(f"nodes without a zone: {missing[:5]}")
        self.zone_arr = np.array([int(zone_of[n]) for n in self.nodes], dtype=np.int64)
        if (self.zone_arr < 0).any():
            raise NetworkError("zone ids must be non-negative")
        self.num_zones = int(num_zones) if num_zones is not None else int(self.zone_arr.max()) + 1
        if self.zone_arr.max() >= self.num_zones:
            raise NetworkError("zone id outside [0, num_zones)")

        n = len(self.nodes)
        if best:
            rows, cols = zip(*best.keys())
            data = list(best.values())
        else:
            rows, cols, data = (), (), []
        self._graph = csr_matrix((data, (rows, cols)), shape=(n, n))
        # reverse search from each stop: dist_to[k, u] = time u -> stop k,
        # next_hop[k, u] = successor of u on a shortest path toward stop k
        dist, pred = dijkstra(
            self._graph.T.tocsr(), directed=True, indices=self.stop_idx, return_predecessors=True
        )
        self.dist_to = dist
        self.next_hop = pred.astype(np.int64)
        self._rows: dict[int, np.ndarray] = {}

        between = self.dist_to[:, self.stop_idx]
        if not np.isfinite(between).all():
            raise NetworkError("virtual stops are not strongly connected")
        self.stop_zone = self.zone_arr[self.stop_idx]
        self.stops_in_zone = {
            z: [s for s, sz in zip(self.stops, self.stop_zone) if sz == z] for z in range(self.num_zones)
        }

    def __repr__(self):
        return (
            f"RoadNetwork({len(self.nodes)} nodes, {len(self.edges)} edges, "
            f"{len(self.stops)} stops, {self.num_zones} zones)"
        )

    # -- lookups ---------------------------------------------------------

    def zone_of(self, node: int) -> int:
        return int(self.zone_arr[self.index[node]])

    def is_stop(self, node: int) -> bool:
        return node in self.stop_pos

    def _row(self, i: int) -> np.ndarray:
        row = self._rows.get(i)
        if row is None:
            row = dijkstra(self._graph, directed=True, indices=i)
            self._rows[i] = row
        return row

    def time_idx(self, i: int, j: int) -> float:
        """Shortest time between node *indices* (no Unreachable check)."""
        k = self.stop_pos.get(self.nodes[j])
        if k is not None:
            return float(self.dist_to[k, i])
        return float(self._row(i)[j])

    def route_nodes(self, start: int, stop: int) -> list[tuple[int, float]]:
        """Nodes after `start` on a shortest path to `stop`, with the
        cumulative travel time at each. Empty when start == stop."""
        k = self.stop_pos[stop]
        i = self.index[start]
        target = self.index[stop]
        if not np.isfinite(self.dist_to[k, i]):
            raise Unreachable(f"{start} -> {stop}")
        total = self.dist_to[k, i]
        out = []
        while i != target:
            i = int(self.next_hop[k, i])
            out.append((self.nodes[i], float(total - self.dist_to[k, i])))
        return out


def shortest_time(net: RoadNetwork, source: int, target: int) -> float:
    """Minimal travel time in seconds from `source` to `target`."""
    if source not in net.index or target not in net.index:
        raise KeyError(f"unknown node in ({source}, {target})")
    t = net.time_idx(net.index[source], net.index[target])
    if not math.isfinite(t):
        raise Unreachable(f"no path {source} -> {target}")
    return t


def snap_to_stop(net: RoadNetwork, node: int) -> int:
    """Virtual stop closest to `node` by travel time; ties go to the lowest stop id."""
    col = net.dist_to[:, net.index[node]]
    k = int(np.argmin(col))  # first minimum == lowest stop id (stops are sorted)
    if not np.isfinite(col[k]):
        raise Unreachable(f"node {node} reaches no virtual stop")
    return net.stops[k]


@dataclass(frozen=True)
class SpaceTimeGrid:
    period_seconds: float = 300.0
    num_periods: int = 288
    num_zones: int = 1

    def __post_init__(self):
        if self.period_seconds <= 0 or self.num_periods < 1 or self.num_zones < 1:
            raise ValueError(f"invalid grid {self}")

    @property
    def day_length(self) -> float:
        return self.period_seconds * self.num_periods

    @classmethod
    def for_network(cls, net: RoadNetwork, period_seconds=300.0, day_length=86400.0):
        return cls(period_seconds, int(round(day_length / period_seconds)), net.num_zones)

    def time_index(self, sim_time: float) -> int:
        return int(sim_time // self.period_seconds) % self.num_periods


def state_of(grid: SpaceTimeGrid, sim_time: float, node: int, net: RoadNetwork) -> tuple[int, int]:
    if sim_time < 0:
        raise ValueError("sim_time must be non-negative")
    return grid.time_index(sim_time), net.zone_of(node)


# -- file formats ---------------------------------------------------------

NODE_HEADER = ["node_id", "lat", "lon", "zone_id", "is_stop"]
EDGE_HEADER = ["from_node", "to_node", "travel_time_s"]


def _truthy(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "y", "t"):
        return True
    if t in ("0", "false", "no", "n", "f", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _read_rows(path: Path, header: list[str], parse: Callable[[dict], object]) -> list:
    errors, out = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(h not in reader.fieldnames for h in header if h not in ("lat", "lon")):
            raise NetworkError(f"{path}: line 1: expected header {','.join(header)}")
        for row in reader:
            try:
                out.append(parse(row))
            except (TypeError, ValueError) as exc:
                errors.append(f"{path}: line {reader.line_num}: {exc}")
    if errors:
        raise NetworkError("\n".join(errors))
    return out


def _parse_node(row):
    lat, lon = (row.get("lat") or "").strip(), (row.get("lon") or "").strip()
    coord = (float(lat), float(lon)) if lat and lon else None
    return int(row["node_id"]), int(row["zone_id"]), _truthy(row["is_stop"]), coord


def _parse_edge(row):
    return int(row["from_node"]), int(row["to_node"]), float(row["travel_time_s"])


def load_network(node_file, edge_file, num_zones: int | None = None) -> RoadNetwork:
    node_rows = _read_rows(Path(node_file), NODE_HEADER, _parse_node)
    edge_rows = _read_rows(Path(edge_file), EDGE_HEADER, _parse_edge)
    zone_of = {n: z for n, z, _, _ in node_rows}
    coords = {n: c for n, _, _, c in node_rows if c is not None}
    stops = [n for n, _, s, _ in node_rows if s]
    return RoadNetwork([n for n, *_ in node_rows], edge_rows, stops, zone_of, num_zones, coords)


def save_network(net: RoadNetwork, node_file, edge_file) -> None:
    with open(node_file, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(NODE_HEADER)
        for n in net.nodes:
            lat, lon = net.coords.get(n, ("", ""))
            w.writerow([n, lat, lon, net.zone_of(n), int(net.is_stop(n))])
    with open(edge_file, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EDGE_HEADER)
        for u, v, t in net.edges:
            w.writerow([u, v, repr(t)])


def grid_network(
    rows: int,
    cols: int,
    edge_time: float = 60.0,
    zone_fn: Callable[[int, int], int] | None = None,
    stop_fn: Callable[[int, int], bool] | None = None,
) -> RoadNetwork:
    """Bidirectional Manhattan grid; node id = r * cols + c.

    `zone_fn(r, c)` defaults to a single zone and `stop_fn(r, c)` to every node
    being a stop.
    """
    zone_fn = zone_fn or (lambda r, c: 0)
    stop_fn = stop_fn or (lambda r, c: True)
    nodes, edges, zones, stops = [], [], {}, []
    for r in range(rows):
        for c in range(cols):
            n = r * cols + c
            nodes.append(n)
            zones[n] = zone_fn(r, c)
            if stop_fn(r, c):
                stops.append(n)
            if c + 1 < cols:
                edges += [(n, n + 1, edge_time), (n + 1, n, edge_time)]
            if r + 1 < rows:
                edges += [(n, n + cols, edge_time), (n + cols, n, edge_time)]
    coords = {r * cols + c: (float(r), float(c)) for r in range(rows) for c in range(cols)}
    return RoadNetwork(nodes, edges, stops, zones, coords=coords)


"""World generation: region, Poisson WAP deployment, base stations and pedestrian mobility.

The pedestrian follows a road graph: it picks a random hotspot, walks the
shortest route there at constant speed without stopping, and repeats from
the node it arrived at.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import networkx as nx
import numpy as np

from .errors import GraphError, ParameterError

# 2.4 GHz non-overlapping channels plus seventeen 5 GHz channels.
DEFAULT_CHANNELS = (1, 6, 11, 36, 40, 44, 48, 52, 56, 60, 64,
                    100, 104, 108, 112, 116, 120, 124, 128, 132)


@dataclass(frozen=True)
class Region:
    """Rectangle ``[0, width] x [0, height]`` in meters.

    With ``periodic=True`` distances between access points and the UE wrap
    around the edges (a torus), which removes boundary effects so that the
    deployment behaves like a stationary planar point process.
    """

    width: float = 800.0
    height: float = 1200.0
    periodic: bool = True

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ParameterError(f"region must have positive size, got {self.width}x{self.height}")

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return (p[:, 0] >= 0) & (p[:, 0] <= self.width) & (p[:, 1] >= 0) & (p[:, 1] <= self.height)

    def displacement(self, a, b) -> np.ndarray:
        """Vector from ``a`` to ``b``, taking the short way round when periodic."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.periodic:
            size = np.array([self.width, self.height])
            d = d - size * np.round(d / size)
        return d

    def distance(self, a, b) -> np.ndarray:
        return np.hypot(*np.moveaxis(self.displacement(a, b), -1, 0))


@dataclass(frozen=True)
class Wap:
    id: int
    position: tuple[float, float]
    channel: int
    tx_power: float


@dataclass(frozen=True, eq=False)
class WapSet:
    """Deployed access points stored column-wise.

    ``per_channel_density`` is the generating intensity (WAPs/m^2) per channel,
    not the empirical density of this realization.
    """

    region: Region
    ids: np.ndarray
    positions: np.ndarray
    channels: np.ndarray
    tx_power: np.ndarray
    per_channel_density: Mapping[int, float] = field(default_factory=dict)
    _by_channel: dict = field(default_factory=dict, repr=False)
    _row_of: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for ch in np.unique(self.channels):
            self._by_channel[int(ch)] = np.flatnonzero(self.channels == ch)
        self._row_of.update({int(i): k for k, i in enumerate(self.ids)})

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        for k in range(len(self)):
            yield self.wap(k)

    @property
    def total_density(self) -> float:
        return float(sum(self.per_channel_density.values()))

    def wap(self, row: int) -> Wap:
        return Wap(int(self.ids[row]), tuple(self.positions[row]), int(self.channels[row]),
                   float(self.tx_power[row]))

    def row_of(self, wap_id: int) -> int | None:
        return self._row_of.get(int(wap_id))

    def rows_on(self, channel: int) -> np.ndarray:
        return self._by_channel.get(int(channel), np.empty(0, dtype=int))

    def channel_set(self) -> list[int]:
        return sorted(self._by_channel)

    def distances_from(self, position, rows=None) -> np.ndarray:
        pos = self.positions if rows is None else self.positions[rows]
        return self.region.distance(np.asarray(position, dtype=float), pos)

    def subset(self, rows) -> "WapSet":
        rows = np.asarray(rows, dtype=int)
        return WapSet(self.region, self.ids[rows], self.positions[rows], self.channels[rows],
                      self.tx_power[rows], dict(self.per_channel_density))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "x_m", "y_m", "channel", "tx_power_dbm"])
            for k in range(len(self)):
                w.writerow([int(self.ids[k]), repr(float(self.positions[k, 0])),
                            repr(float(self.positions[k, 1])), int(self.channels[k]),
                            repr(float(self.tx_power[k]))])

    @classmethod
    def from_csv(cls, path, region: Region, per_channel_density: Mapping[int, float] | None = None) -> "WapSet":
        ids, pos, chans, txp = [], [], [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                ids.append(int(row["id"]))
                pos.append((float(row["x_m"]), float(row["y_m"])))
                chans.append(int(row["channel"]))
                txp.append(float(row["tx_power_dbm"]))
        return cls(region, np.array(ids, dtype=int), np.array(pos, dtype=float).reshape(-1, 2),
                   np.array(chans, dtype=int), np.array(txp, dtype=float),
                   dict(per_channel_density or {}))


def split_density(total: float, channels: Sequence[int]) -> dict[int, float]:
    """Spread a total density evenly over the channels (lambda / n per channel)."""
    if total < 0:
        raise ParameterError(f"density must be non-negative, got {total}")
    return {int(ch): total / len(channels) for ch in channels}


def generate_ppp_waps(region: Region, densities: Mapping[int, float], seed,
                      tx_power: float = 20.0) -> WapSet:
    """Independent homogeneous Poisson deployments, one per channel.

    ``seed`` is anything accepted by :func:`numpy.random.default_rng`.
    Channels are processed in sorted order so the result does not depend on
    mapping order.
    """
    for ch, rho in densities.items():
        if not rho >= 0:
            raise ParameterError(f"negative density {rho} on channel {ch}")
    rng = np.random.default_rng(seed)
    pos, chans = [], []
    for ch in sorted(densities):
        n = rng.poisson(densities[ch] * region.area)
        xy = rng.uniform(0.0, 1.0, size=(n, 2)) * (region.width, region.height)
        pos.append(xy)
        chans.append(np.full(n, int(ch), dtype=int))
    positions = np.concatenate(pos) if pos else np.empty((0, 2))
    channels = np.concatenate(chans) if chans else np.empty(0, dtype=int)
    n = len(channels)
    return WapSet(region, np.arange(n, dtype=int), positions, channels,
                  np.full(n, float(tx_power)), {int(c): float(r) for c, r in densities.items()})


@dataclass(frozen=True)
class BaseStation:
    id: int
    position: tuple[float, float]
    tx_power: float = 46.0


def base_station_grid(region: Region, spacing: float = 400.0, tx_power: float = 46.0) -> list[BaseStation]:
    """One station at the center of each ``spacing`` x ``spacing`` cell covering the region."""
    nx_ = max(1, math.ceil(region.width / spacing))
    ny_ = max(1, math.ceil(region.height / spacing))
    out = []
    for j in range(ny_):
        for i in range(nx_):
            out.append(BaseStation(len(out), ((i + 0.5) * spacing, (j + 0.5) * spacing), tx_power))
    return out


# -- mobility graph ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MobilityGraph:
    graph: nx.Graph
    positions: Mapping[int, tuple[float, float]]
    hotspots: tuple[int, ...]
    _dist_cache: dict = field(default_factory=dict, repr=False)

    @property
    def nodes(self) -> list[int]:
        return sorted(self.graph.nodes)

    def position(self, node) -> np.ndarray:
        return np.asarray(self.positions[node], dtype=float)

    def edge_length(self, u, v) -> float:
        return self.graph.edges[u, v]["length"]

    def distances_to(self, target) -> dict:
        if target not in self._dist_cache:
            self._dist_cache[target] = nx.single_source_dijkstra_path_length(
                self.graph, target, weight="length")
        return self._dist_cache[target]


def build_mobility_graph(spec: Mapping) -> MobilityGraph:
    """Validate a ``{"nodes", "edges", "hotspots"}`` description.

    ``nodes`` maps node id to ``(x, y)`` (a list is indexed from 0), ``edges``
    is a list of node pairs. Edge lengths are the Euclidean distance between
    endpoints.
    """
    nodes = spec.get("nodes")
    if not nodes:
        raise GraphError("mobility graph needs at least one node")
    if not isinstance(nodes, Mapping):
        nodes = dict(enumerate(nodes))
    positions = {k: (float(p[0]), float(p[1])) for k, p in nodes.items()}
    g = nx.Graph()
    g.add_nodes_from(positions)
    for u, v in spec.get("edges", []):
        if u not in positions or v not in positions:
            raise GraphError(f"edge ({u}, {v}) references an unknown node")
        length = math.dist(positions[u], positions[v])
        if length <= 0:
            raise GraphError(f"edge ({u}, {v}) has zero length")
        g.add_edge(u, v, length=length)
    hotspots = tuple(sorted(spec.get("hotspots") or ()))
    if not hotspots:
        raise GraphError("mobility graph needs at least one hotspot")
    missing = [h for h in hotspots if h not in positions]
    if missing:
        raise GraphError(f"hotspots {missing} are not graph nodes")
    comp = nx.node_connected_component(g, hotspots[0])
    cut = [h for h in hotspots if h not in comp]
    if cut:
        raise GraphError(f"hotspots {hotspots[0]} and {cut[0]} are not connected")
    return MobilityGraph(g, positions, hotspots)


def grid_graph_spec(region: Region, cols: int = 16, rows: int = 24, hotspot_fraction: float = 0.1,
                    seed: int = 0) -> dict:
    """Manhattan grid spanning the region with a random subset of hotspot nodes.

    Node ``r * cols + c`` sits at column ``c``, row ``r``.
    """
    if cols < 2 or rows < 1:
        raise GraphError("grid needs at least two columns and one row")
    xs = np.linspace(0.0, region.width, cols)
    ys = np.linspace(0.0, region.height, rows) if rows > 1 else np.array([0.0])
    nodes = {r * cols + c: (float(xs[c]), float(ys[r])) for r in range(rows) for c in range(cols)}
    edges = []
    for r in range(rows):
        for c in range(cols):
            k = r * cols + c
            if c + 1 < cols:
                edges.append((k, k + 1))
            if r + 1 < rows:
                edges.append((k, k + cols))
    n_hot = max(2, round(hotspot_fraction * len(nodes)))
    rng = np.random.default_rng(seed)
    hotspots = sorted(int(h) for h in rng.choice(len(nodes), size=min(n_hot, len(nodes)), replace=False))
    return {"nodes": nodes, "edges": edges, "hotspots": hotspots}


def shortest_path(graph: MobilityGraph, source, target) -> list:
    """Shortest route by length; among equal-length routes the smallest next node wins at each step."""
    dist = graph.distances_to(target)
    if source not in dist:
        raise GraphError(f"node {source} cannot reach hotspot {target}")
    path = [source]
    u = source
    while u != target:
        best = None
        for w in sorted(graph.graph[u]):
            if w not in dist:
                continue
            through = graph.edge_length(u, w) + dist[w]
            if math.isclose(through, dist[u], rel_tol=1e-9, abs_tol=1e-9):
                best = w
                break
        if best is None:  # pragma: no cover - dijkstra guarantees a tight neighbour
            raise GraphError(f"no shortest-path successor from {u}")
        path.append(best)
        u = best
    return path


def next_route(graph: MobilityGraph, current, rng: np.random.Generator) -> list:
    """Shortest path from ``current`` to a uniformly chosen hotspot other than ``current``."""
    if current not in graph.positions:
        raise GraphError(f"node {current} is not in the mobility graph")
    choices = [h for h in graph.hotspots if h != current]
    if not choices:
        raise GraphError("no hotspot other than the current node to travel to")
    target = choices[int(rng.integers(len(choices)))]
    return shortest_path(graph, current, target)


class Trajectory:
    """Piecewise-linear walk at constant speed.

    Breakpoints are appended lazily: asking for a position past the last
    breakpoint draws new routes from ``rng``. A trajectory without a graph
    stays at its final breakpoint.
    """

    def __init__(self, times, points, speed: float, graph: MobilityGraph | None = None,
                 rng: np.random.Generator | None = None, last_node=None):
        self.times = [float(t) for t in times]
        self.points = [np.asarray(p, dtype=float) for p in points]
        self.speed = float(speed)
        self.graph = graph
        self.rng = rng
        self.last_node = last_node

    @classmethod
    def static(cls, position) -> "Trajectory":
        return cls([0.0], [position], 0.0)

    @classmethod
    def along(cls, graph: MobilityGraph, path: Sequence, speed: float, t0: float = 0.0) -> "Trajectory":
        traj = cls([t0], [graph.position(path[0])], speed, last_node=path[0])
        traj._append_path(graph, path)
        return traj

    @classmethod
    def random_walk(cls, graph: MobilityGraph, speed: float, rng: np.random.Generator, start=None) -> "Trajectory":
        if speed <= 0:
            raise ParameterError("a wandering pedestrian needs a positive speed")
        if start is None:
            start = graph.hotspots[int(rng.integers(len(graph.hotspots)))]
        return cls([0.0], [graph.position(start)], speed, graph, rng, start)

    def _append_path(self, graph: MobilityGraph, path: Sequence) -> None:
        for u, v in zip(path[:-1], path[1:]):
            self.times.append(self.times[-1] + graph.edge_length(u, v) / self.speed)
            self.points.append(graph.position(v))
        self.last_node = path[-1]

    def extend_to(self, t: float) -> None:
        if self.graph is None or self.rng is None:
            return
        while self.times[-1] < t:
            self._append_path(self.graph, next_route(self.graph, self.last_node, self.rng))

    def position_at(self, t: float) -> np.ndarray:
        if t < 0:
            raise ParameterError(f"time must be non-negative, got {t}")
        self.extend_to(t)
        k = bisect.bisect_right(self.times, t) - 1
        if k >= len(self.times) - 1:
            return self.points[-1].copy()
        t0, t1 = self.times[k], self.times[k + 1]
        frac = (t - t0) / (t1 - t0)
        return self.points[k] + frac * (self.points[k + 1] - self.points[k])

    def distance_travelled(self, t0: float, t1: float) -> float:
        """Path length covered in ``[t0, t1]``; the walk never halts while it has a graph."""
        if self.graph is not None:
            return self.speed * (t1 - t0)
        end = self.times[-1]
        return self.speed * max(0.0, min(t1, end) - min(t0, end))


def position_at(trajectory: Trajectory, t: float) -> np.ndarray:
    return trajectory.position_at(t)

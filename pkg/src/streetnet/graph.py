"""Distance-weighted directed street graphs and the shortest-path machinery the
metrics are built on."""
from __future__ import annotations

import csv
import heapq
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Iterator, Literal

EARTH_RADIUS_M = 6_371_008.8

NodeId = Hashable
PathWeight = Literal["length", "hops"]


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        lat, lon = float(self.lat), float(self.lon)
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise GraphError(f"non-finite coordinate ({self.lat}, {self.lon})")
        if not -90.0 <= lat <= 90.0:
            raise GraphError(f"latitude out of range: {lat}")
        if not -180.0 <= lon <= 180.0:
            raise GraphError(f"longitude out of range: {lon}")
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", lon)


def great_circle_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Haversine distance in meters on the mean Earth sphere."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = phi2 - phi1
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    h = min(1.0, max(0.0, h))
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


@dataclass(frozen=True)
class Edge:
    origin: NodeId
    destination: NodeId
    weight: float


@dataclass(frozen=True, eq=False)
class StreetGraph:
    """Immutable directed graph; build instances with :meth:`build`.

    Nodes keep their insertion order, which is also the internal index order
    used by the algorithms below.
    """

    nodes: dict[NodeId, GeoPoint]
    edges: tuple[Edge, ...]
    _index: dict[NodeId, int] = field(repr=False)
    _ids: tuple[NodeId, ...] = field(repr=False)
    # _out[i] holds (j, weight) pairs, sorted by j
    _out: tuple[tuple[tuple[int, float], ...], ...] = field(repr=False)

    @classmethod
    def build(
        cls,
        nodes: dict[NodeId, GeoPoint] | Iterable[tuple[NodeId, GeoPoint]],
        edges: Iterable[tuple[NodeId, NodeId, float]],
    ) -> "StreetGraph":
        """Validate and assemble a graph.

        Parallel edges along the same direction collapse to the lightest one.
        """
        node_map = dict(nodes.items() if isinstance(nodes, dict) else nodes)
        for nid, pt in node_map.items():
            if not isinstance(pt, GeoPoint):
                raise GraphError(f"node {nid!r} position is not a GeoPoint")
        merged: dict[tuple[NodeId, NodeId], float] = {}
        for o, d, w in edges:
            if o not in node_map:
                raise GraphError(f"edge origin {o!r} not in nodes")
            if d not in node_map:
                raise GraphError(f"edge destination {d!r} not in nodes")
            if o == d:
                raise GraphError(f"self-loop on node {o!r}")
            w = float(w)
            if not (math.isfinite(w) and w > 0):
                raise GraphError(f"edge {o!r}->{d!r} has invalid weight {w}")
            key = (o, d)
            if key not in merged or w < merged[key]:
                merged[key] = w

        ids = tuple(node_map)
        index = {nid: i for i, nid in enumerate(ids)}
        out: list[list[tuple[int, float]]] = [[] for _ in ids]
        for (o, d), w in merged.items():
            out[index[o]].append((index[d], w))
        return cls(
            nodes=node_map,
            edges=tuple(Edge(o, d, w) for (o, d), w in merged.items()),
            _index=index,
            _ids=ids,
            _out=tuple(tuple(sorted(adj)) for adj in out),
        )

    def __len__(self) -> int:
        return len(self._ids)

    @property
    def node_ids(self) -> tuple[NodeId, ...]:
        return self._ids

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def index_of(self, node: NodeId) -> int:
        try:
            return self._index[node]
        except (KeyError, TypeError):
            raise GraphError(f"node not found: {node!r}") from None

    def successors(self, node: NodeId) -> list[tuple[NodeId, float]]:
        return [(self._ids[j], w) for j, w in self._out[self.index_of(node)]]

    def has_edge(self, origin: NodeId, destination: NodeId) -> bool:
        if origin not in self._index or destination not in self._index:
            return False
        j = self._index[destination]
        return any(k == j for k, _ in self._out[self._index[origin]])

    def out_degrees(self) -> list[int]:
        return [len(adj) for adj in self._out]

    def in_degrees(self) -> list[int]:
        deg = [0] * len(self._ids)
        for adj in self._out:
            for j, _ in adj:
                deg[j] += 1
        return deg

    def adjacency(self, weight: PathWeight = "length") -> tuple[tuple[tuple[int, float], ...], ...]:
        """Index-based adjacency with weights in meters or unit hops."""
        if weight == "length":
            return self._out
        if weight == "hops":
            return tuple(tuple((j, 1.0) for j, _ in adj) for adj in self._out)
        raise GraphError(f"unknown path weight {weight!r}")

    def relabel(self, mapping: dict[NodeId, NodeId]) -> "StreetGraph":
        nodes = {mapping[n]: p for n, p in self.nodes.items()}
        return StreetGraph.build(
            nodes, ((mapping[e.origin], mapping[e.destination], e.weight) for e in self.edges)
        )


# -- shortest paths -----------------------------------------------------------


def _sssp_index(adj, source: int) -> dict[int, float]:
    dist: dict[int, float] = {source: 0.0}
    done: set[int] = set()
    heap = [(0.0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for w, length in adj[v]:
            nd = d + length
            if nd < dist.get(w, math.inf):
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return dist


def dijkstra(g: StreetGraph, source: NodeId, weight: PathWeight = "length") -> dict[NodeId, float]:
    """Single-source shortest distances; unreachable nodes are absent."""
    s = g.index_of(source)
    dist = _sssp_index(g.adjacency(weight), s)
    ids = g.node_ids
    return {ids[i]: d for i, d in sorted(dist.items())}


@dataclass
class SourceSweep:
    """Per-source shortest-path DAG as used by Brandes accumulation."""

    source: int
    order: list[int]  # settled nodes by nondecreasing distance
    dist: dict[int, float]
    sigma: dict[int, float]
    preds: dict[int, list[int]]


def shortest_path_dag(adj, source: int) -> SourceSweep:
    dist: dict[int, float] = {source: 0.0}
    sigma: dict[int, float] = {source: 1.0}
    preds: dict[int, list[int]] = {source: []}
    order: list[int] = []
    done: set[int] = set()
    heap = [(0.0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        order.append(v)
        sv = sigma[v]
        for w, length in adj[v]:
            nd = d + length
            cur = dist.get(w, math.inf)
            if nd < cur:
                dist[w] = nd
                sigma[w] = sv
                preds[w] = [v]
                heapq.heappush(heap, (nd, w))
            elif nd == cur and w not in done:
                sigma[w] += sv
                preds[w].append(v)
    return SourceSweep(source, order, dist, sigma, preds)


def iter_sweeps(g: StreetGraph, weight: PathWeight = "length") -> Iterator[SourceSweep]:
    adj = g.adjacency(weight)
    for s in range(len(g)):
        yield shortest_path_dag(adj, s)


def accumulate_dependencies(sweep: SourceSweep, into: list[float]) -> None:
    delta = dict.fromkeys(sweep.order, 0.0)
    for w in reversed(sweep.order):
        coeff = (1.0 + delta[w]) / sweep.sigma[w]
        for v in sweep.preds[w]:
            delta[v] += sweep.sigma[v] * coeff
        if w != sweep.source:
            into[w] += delta[w]


def raw_betweenness(g: StreetGraph, weight: PathWeight = "length") -> list[float]:
    scores = [0.0] * len(g)
    for sweep in iter_sweeps(g, weight):
        accumulate_dependencies(sweep, scores)
    return scores


def normalize_betweenness(raw: list[float]) -> list[float]:
    n = len(raw)
    if n < 3:
        raise GraphError("graph too small for betweenness normalization")
    scale = 1.0 / ((n - 1) * (n - 2))
    return [b * scale for b in raw]


def betweenness(g: StreetGraph, weight: PathWeight = "length") -> dict[NodeId, float]:
    """Brandes betweenness divided by (|V|-1)(|V|-2), endpoints excluded."""
    if len(g) < 3:
        raise GraphError("graph too small for betweenness normalization")
    norm = normalize_betweenness(raw_betweenness(g, weight))
    return dict(zip(g.node_ids, norm))


# -- structure ---------------------------------------------------------------


def connected_components(
    g: StreetGraph, mode: Literal["weak", "strong"] = "weak"
) -> list[set[NodeId]]:
    n = len(g)
    ids = g.node_ids
    if mode == "weak":
        parent = list(range(n))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, adj in enumerate(g.adjacency()):
            for j, _ in adj:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
        groups: dict[int, set[NodeId]] = {}
        for i in range(n):
            groups.setdefault(find(i), set()).add(ids[i])
        return list(groups.values())
    if mode == "strong":
        return [{ids[i] for i in comp} for comp in _tarjan(g.adjacency(), n)]
    raise GraphError(f"unknown component mode {mode!r}")


def _tarjan(adj, n: int) -> list[list[int]]:
    # iterative Tarjan to stay clear of the recursion limit on long streets
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pos = work[-1]
            if pos == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            if pos < len(adj[v]):
                work[-1] = (v, pos + 1)
                w = adj[v][pos][0]
                if index[w] == -1:
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def degree_histogram(
    g: StreetGraph, kind: Literal["total", "in", "out"] = "total"
) -> dict[int, int]:
    if kind == "out":
        deg = g.out_degrees()
    elif kind == "in":
        deg = g.in_degrees()
    elif kind == "total":
        deg = [a + b for a, b in zip(g.out_degrees(), g.in_degrees())]
    else:
        raise GraphError(f"unknown degree kind {kind!r}")
    return dict(sorted(Counter(deg).items()))


# -- CSV serialization -------------------------------------------------------


def write_graph_csv(g: StreetGraph, nodes_path: Path, edges_path: Path) -> None:
    with open(nodes_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "lat", "lon"])
        for nid, p in g.nodes.items():
            w.writerow([nid, repr(p.lat), repr(p.lon)])
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["origin", "destination", "weight_m"])
        for e in g.edges:
            w.writerow([e.origin, e.destination, repr(e.weight)])


def read_graph_csv(nodes_path: Path, edges_path: Path) -> StreetGraph:
    """Load a graph written by :func:`write_graph_csv`; node ids come back as str."""
    with open(nodes_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader.fieldnames, ("node_id", "lat", "lon"), nodes_path)
        nodes = {row["node_id"]: GeoPoint(float(row["lat"]), float(row["lon"])) for row in reader}
    with open(edges_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader.fieldnames, ("origin", "destination", "weight_m"), edges_path)
        edges = [(row["origin"], row["destination"], float(row["weight_m"])) for row in reader]
    return StreetGraph.build(nodes, edges)


def _require_columns(found, wanted, path) -> None:
    missing = [c for c in wanted if c not in (found or ())]
    if missing:
        raise GraphError(f"{path}: missing columns {missing}")

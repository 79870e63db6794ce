"""Global topological features of a street graph.

Path-based features share a single Brandes sweep per graph: every source is
expanded once, and the distances feed the average path length and
eccentricities while the dependency accumulation feeds betweenness.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

from .graph import (
    PathWeight,
    StreetGraph,
    accumulate_dependencies,
    degree_histogram,
    iter_sweeps,
    normalize_betweenness,
)


class UndefinedMetric(ArithmeticError):
    """The metric has no value on this graph (e.g. zero variance)."""


@dataclass
class PathSummary:
    pair_sum: float
    pair_count: int
    eccentricity: list[float | None]
    raw_betweenness: list[float]


class GraphAnalysis:
    """Lazily computed, cached quantities shared by the metrics of one graph."""

    def __init__(self, g: StreetGraph, weight: PathWeight = "length", log_base: float = 2.0):
        self.g = g
        self.weight = weight
        self.log_base = log_base

    @cached_property
    def paths(self) -> PathSummary:
        n = len(self.g)
        total = 0.0
        count = 0
        ecc: list[float | None] = [None] * n
        raw = [0.0] * n
        for sweep in iter_sweeps(self.g, self.weight):
            others = [d for v, d in sweep.dist.items() if v != sweep.source]
            if others:
                total += math.fsum(others)
                count += len(others)
                ecc[sweep.source] = max(others)
            accumulate_dependencies(sweep, raw)
        return PathSummary(total, count, ecc, raw)

    @cached_property
    def total_degrees(self) -> list[int]:
        return [a + b for a, b in zip(self.g.out_degrees(), self.g.in_degrees())]

    @cached_property
    def undirected_neighbors(self) -> list[set[int]]:
        nbrs: list[set[int]] = [set() for _ in range(len(self.g))]
        for i, adj in enumerate(self.g.adjacency()):
            for j, _ in adj:
                nbrs[i].add(j)
                nbrs[j].add(i)
        return nbrs


def _analysis(g: StreetGraph | GraphAnalysis) -> GraphAnalysis:
    return g if isinstance(g, GraphAnalysis) else GraphAnalysis(g)


# -- core metrics ----------------------------------------------------------------


def degree_entropy(g: StreetGraph | GraphAnalysis, base: float | None = None) -> float:
    a = _analysis(g)
    n = len(a.g)
    if n == 0:
        raise UndefinedMetric("empty graph")
    base = a.log_base if base is None else base
    hist = degree_histogram(a.g, "total")
    h = -sum((c / n) * math.log(c / n, base) for c in hist.values())
    return h + 0.0  # normalizes -0.0


def average_shortest_path(g: StreetGraph | GraphAnalysis) -> float:
    """Mean shortest distance over ordered reachable pairs."""
    p = _analysis(g).paths
    if p.pair_count == 0:
        raise UndefinedMetric("no reachable pairs")
    return p.pair_sum / p.pair_count


def reachability(g: StreetGraph | GraphAnalysis) -> float:
    a = _analysis(g)
    n = len(a.g)
    if n < 2:
        raise UndefinedMetric("fewer than 2 nodes")
    return a.paths.pair_count / (n * (n - 1))


def _pearson_pairs(xs: list[float], ys: list[float]) -> float:
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        raise UndefinedMetric("zero variance in endpoint degrees")
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))


def degree_assortativity(g: StreetGraph | GraphAnalysis) -> float:
    """Pearson correlation of (source out-degree, target in-degree) over edges."""
    a = _analysis(g)
    if a.g.edge_count < 2:
        raise UndefinedMetric("fewer than 2 edges")
    outd = a.g.out_degrees()
    ind = a.g.in_degrees()
    xs, ys = [], []
    for i, adj in enumerate(a.g.adjacency()):
        for j, _ in adj:
            xs.append(float(outd[i]))
            ys.append(float(ind[j]))
    return _pearson_pairs(xs, ys)


@dataclass(frozen=True)
class EccentricityProfile:
    diameter: float
    radius: float
    mean_inverse_ecc: float


def eccentricity_profile(g: StreetGraph | GraphAnalysis) -> EccentricityProfile:
    ecc = [e for e in _analysis(g).paths.eccentricity if e is not None]
    if not ecc:
        raise UndefinedMetric("no node reaches another")
    return EccentricityProfile(
        diameter=max(ecc),
        radius=min(ecc),
        mean_inverse_ecc=math.fsum(1.0 / e for e in ecc) / len(ecc),
    )


def planar_density(g: StreetGraph | GraphAnalysis) -> float:
    a = _analysis(g)
    n = len(a.g)
    if n < 2:
        raise UndefinedMetric("fewer than 2 nodes")
    return a.g.edge_count / (n * (n - 1))


def _betweenness_gap(a: GraphAnalysis) -> float:
    n = len(a.g)
    if n < 3:
        raise UndefinedMetric("fewer than 3 nodes")
    if a.paths.pair_count == 0:
        raise UndefinedMetric("no shortest paths to share")
    b = normalize_betweenness(a.paths.raw_betweenness)
    top = max(b)
    return math.fsum(top - x for x in b)


def central_point_dominance(g: StreetGraph | GraphAnalysis) -> float:
    """Betweenness gap to the top node over |V|(|V|-1), as the formula prints it."""
    a = _analysis(g)
    n = len(a.g)
    return _betweenness_gap(a) / (n * (n - 1))


def central_point_dominance_classical(g: StreetGraph | GraphAnalysis) -> float:
    """Textbook variant with denominator |V|-1."""
    a = _analysis(g)
    return _betweenness_gap(a) / (len(a.g) - 1)


def two_way_streets(g: StreetGraph | GraphAnalysis) -> int:
    a = _analysis(g)
    pairs = {(e.origin, e.destination) for e in a.g.edges}
    return sum((d, o) in pairs for o, d in pairs) // 2


def global_clustering(g: StreetGraph | GraphAnalysis) -> float:
    """3 x triangles / connected triples on the undirected simple projection."""
    nbrs = _analysis(g).undirected_neighbors
    triples = sum(len(s) * (len(s) - 1) // 2 for s in nbrs)
    if triples == 0:
        raise UndefinedMetric("no connected triples")
    corners = 0
    for i, s in enumerate(nbrs):
        higher = [j for j in s if j > i]
        for x in range(len(higher)):
            for y in range(x + 1, len(higher)):
                if higher[y] in nbrs[higher[x]]:
                    corners += 1
    # every triangle is counted once at its lowest-index vertex
    return 3 * corners / triples


# -- registry -----------------------------------------------------------------------


MetricFn = Callable[[GraphAnalysis], float]


@dataclass
class MetricEntry:
    name: str
    compute: MetricFn
    enabled: bool = True
    core: bool = False


CORE_FEATURES = (
    "degree_entropy",
    "average_shortest_path",
    "degree_assortativity",
    "eccentricity",
    "diameter",
    "planar_density",
    "central_point_dominance",
    "two_way_streets",
    "global_clustering",
)


def _entries() -> list[MetricEntry]:
    core: list[tuple[str, MetricFn]] = [
        ("degree_entropy", degree_entropy),
        ("average_shortest_path", average_shortest_path),
        ("degree_assortativity", degree_assortativity),
        ("eccentricity", lambda a: eccentricity_profile(a).mean_inverse_ecc),
        ("diameter", lambda a: eccentricity_profile(a).diameter),
        ("planar_density", planar_density),
        ("central_point_dominance", central_point_dominance),
        ("two_way_streets", lambda a: float(two_way_streets(a))),
        ("global_clustering", global_clustering),
    ]
    extra: list[tuple[str, MetricFn]] = [
        ("radius", lambda a: eccentricity_profile(a).radius),
        ("cpd_classical", central_point_dominance_classical),
        ("node_count", lambda a: float(len(a.g))),
        ("edge_count", lambda a: float(a.g.edge_count)),
        ("mean_degree", _mean_degree),
        ("reachability", reachability),
    ]
    entries = [MetricEntry(n, f, core=True) for n, f in core] + [MetricEntry(n, f) for n, f in extra]
    for e in entries:
        # comparison alias only; off unless requested
        if e.name == "cpd_classical":
            e.enabled = False
    return entries


def _mean_degree(a: GraphAnalysis) -> float:
    if len(a.g) == 0:
        raise UndefinedMetric("empty graph")
    return math.fsum(a.total_degrees) / len(a.g)


@dataclass
class MetricRegistry:
    entries: list[MetricEntry] = field(default_factory=_entries)

    def __post_init__(self) -> None:
        names = [e.name for e in self.entries]
        dupes = [n for n, c in Counter(names).items() if c > 1]
        if dupes:
            raise ValueError(f"duplicate metric names: {dupes}")
        missing = set(CORE_FEATURES) - set(names)
        if missing:
            raise ValueError(f"registry lacks required metrics: {sorted(missing)}")

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries if e.enabled]

    def set_enabled(self, name: str, enabled: bool) -> None:
        for e in self.entries:
            if e.name == name:
                e.enabled = enabled
                return
        raise KeyError(name)

    def register(self, name: str, compute: MetricFn) -> None:
        if any(e.name == name for e in self.entries):
            raise ValueError(f"metric {name!r} already registered")
        self.entries.append(MetricEntry(name, compute))


@dataclass
class FeatureVector:
    city_id: str
    values: dict[str, float | None]
    flags: dict[str, str]

    def defined(self, name: str) -> bool:
        return self.flags[name] == "ok"


def compute_features(
    g: StreetGraph,
    registry: MetricRegistry | None = None,
    city_id: str = "",
    weight: PathWeight = "length",
    log_base: float = 2.0,
) -> FeatureVector:
    if len(g) == 0:
        raise ValueError("cannot compute features of an empty graph")
    registry = registry or MetricRegistry()
    analysis = GraphAnalysis(g, weight=weight, log_base=log_base)
    values: dict[str, float | None] = {}
    flags: dict[str, str] = {}
    for entry in registry.entries:
        if not entry.enabled:
            continue
        try:
            v = float(entry.compute(analysis))
        except (UndefinedMetric, ZeroDivisionError):
            values[entry.name], flags[entry.name] = None, "undefined"
            continue
        if math.isfinite(v):
            values[entry.name], flags[entry.name] = v, "ok"
        else:
            values[entry.name], flags[entry.name] = None, "undefined"
    return FeatureVector(city_id, values, flags)

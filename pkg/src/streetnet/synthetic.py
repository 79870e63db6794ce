"""Deterministic synthetic street networks and test corpora.

Cities are laid out in a local metric frame around an origin and projected to
latitude/longitude, so the graph weights are true great-circle lengths.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import EARTH_RADIUS_M, GeoPoint, StreetGraph, great_circle_distance
from .osm import BoundaryPolygon, Way, boundary_to_geojson, write_osm_xml

DEFAULT_ORIGIN = GeoPoint(-22.0, -47.9)


def _to_geo(origin: GeoPoint, x: float, y: float) -> GeoPoint:
    lat = origin.lat + math.degrees(y / EARTH_RADIUS_M)
    lon = origin.lon + math.degrees(x / (EARTH_RADIUS_M * math.cos(math.radians(origin.lat))))
    return GeoPoint(lat, lon)


def _spanning_streets(n: int, streets: list[tuple[int, int]], rng) -> set[tuple[int, int]]:
    # random-order Kruskal over unit weights: a random spanning tree
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    tree = set()
    for idx in rng.permutation(len(streets)):
        a, b = streets[idx]
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            tree.add(streets[idx])
    return tree


def generate_synthetic_city(
    kind: str,
    size: int,
    seed: int = 0,
    noise: float = 0.0,
    *,
    spacing_m: float = 100.0,
    oneway_fraction: float = 0.0,
    spokes: int = 8,
    drop_fraction: float = 0.0,
    row_stride: int = 2,
    cols: int | None = None,
    jitter: str = "lines",
    origin: GeoPoint = DEFAULT_ORIGIN,
) -> StreetGraph:
    """Build a synthetic street graph.

    kind     -- ``grid`` (size x cols lattice, cols defaulting to size), ``radial`` (``size`` rings of
                ``spokes`` nodes around a hub) or ``sparse`` (grid keeping
                east-west streets only on every ``row_stride``-th row, then
                dropping ``drop_fraction`` of the streets off a random
                spanning tree)
    noise    -- coordinate jitter as a fraction of ``spacing_m``
    jitter   -- ``lines`` shifts whole rows/columns of a lattice (streets stay
                straight), ``points`` shifts every node independently;
                radial cities always use ``points``
    oneway_fraction -- share of streets made one-way in a random direction
    Node ids are 1-based integers.
    """
    if size < 2 and kind != "radial":
        raise ValueError("size must be >= 2")
    if kind == "radial" and (size < 1 or spokes < 3):
        raise ValueError("radial cities need >= 1 ring and >= 3 spokes")
    rng = np.random.default_rng(seed)
    xy: list[tuple[float, float]] = []
    streets: list[tuple[int, int]] = []

    if kind in ("grid", "sparse"):
        width = size if cols is None else cols
        if width < 2:
            raise ValueError("cols must be >= 2")
        for r in range(size):
            for c in range(width):
                xy.append((c * spacing_m, r * spacing_m))
        for r in range(size):
            for c in range(width):
                i = r * width + c
                if c + 1 < width:
                    streets.append((i, i + 1))
                if r + 1 < size:
                    streets.append((i, i + width))
        if kind == "sparse":
            streets = [(a, b) for a, b in streets if b == a + width or (a // width) % row_stride == 0]
            tree = _spanning_streets(len(xy), streets, rng)
            extra = [s for s in streets if s not in tree]
            n_drop = int(round(drop_fraction * len(extra)))
            dropped = {extra[i] for i in rng.permutation(len(extra))[:n_drop]}
            streets = [s for s in streets if s not in dropped]
    elif kind == "radial":
        xy.append((0.0, 0.0))
        for ring in range(1, size + 1):
            for s in range(spokes):
                theta = 2 * math.pi * s / spokes
                xy.append((ring * spacing_m * math.cos(theta), ring * spacing_m * math.sin(theta)))
        for ring in range(1, size + 1):
            base = 1 + (ring - 1) * spokes
            for s in range(spokes):
                inner = 0 if ring == 1 else base - spokes + s
                streets.append((inner, base + s))
                streets.append((base + s, base + (s + 1) % spokes))
    else:
        raise ValueError(f"unknown city kind {kind!r}")

    if jitter not in ("lines", "points"):
        raise ValueError(f"unknown jitter mode {jitter!r}")
    if kind != "radial" and jitter == "lines":
        width = len(xy) // size
        col_shift = rng.uniform(-0.5, 0.5, size=width) * noise * spacing_m
        row_shift = rng.uniform(-0.5, 0.5, size=size) * noise * spacing_m
        offsets = np.array([(col_shift[i % width], row_shift[i // width]) for i in range(len(xy))])
    else:
        offsets = rng.uniform(-0.5, 0.5, size=(len(xy), 2)) * noise * spacing_m
    points = {i + 1: _to_geo(origin, x + jx, y + jy) for i, ((x, y), (jx, jy)) in enumerate(zip(xy, offsets))}

    oneway = rng.random(len(streets)) < oneway_fraction
    flip = rng.random(len(streets)) < 0.5
    edges = []
    for (a, b), ow, fl in zip(streets, oneway, flip):
        a, b = a + 1, b + 1
        w = great_circle_distance(points[a], points[b])
        if not ow:
            edges += [(a, b, w), (b, a, w)]
        elif fl:
            edges.append((b, a, w))
        else:
            edges.append((a, b, w))
    return StreetGraph.build(points, edges)


def graph_to_osm_ways(g: StreetGraph, highway: str = "residential") -> list[Way]:
    ways = []
    seen = set()
    for wid, e in enumerate(g.edges, start=1):
        key = frozenset((e.origin, e.destination))
        if key in seen:
            continue
        seen.add(key)
        tags = {"highway": highway}
        if not g.has_edge(e.destination, e.origin):
            tags["oneway"] = "yes"
        ways.append(Way(wid, (e.origin, e.destination), tags))
    return ways


def bounding_boundary(g: StreetGraph, margin_m: float = 50.0) -> BoundaryPolygon:
    lats = [p.lat for p in g.nodes.values()]
    lons = [p.lon for p in g.nodes.values()]
    dlat = math.degrees(margin_m / EARTH_RADIUS_M)
    mid = math.radians((min(lats) + max(lats)) / 2)
    dlon = math.degrees(margin_m / (EARTH_RADIUS_M * math.cos(mid)))
    s, n, w, e = min(lats) - dlat, max(lats) + dlat, min(lons) - dlon, max(lons) + dlon
    ring = tuple(GeoPoint(lat, lon) for lat, lon in ((s, w), (s, e), (n, e), (n, w), (s, w)))
    return BoundaryPolygon(ring)


def boundary_area_km2(b: BoundaryPolygon) -> float:
    """Spherical-excess area of the exterior ring minus holes."""

    def ring_area(ring) -> float:
        total = 0.0
        for p, q in zip(ring[:-1], ring[1:]):
            total += math.radians(q.lon - p.lon) * (
                2 + math.sin(math.radians(p.lat)) + math.sin(math.radians(q.lat))
            )
        return abs(total) * EARTH_RADIUS_M**2 / 2

    area = ring_area(b.exterior) - sum(ring_area(h) for h in b.holes)
    return area / 1e6


@dataclass(frozen=True)
class CityPlan:
    city_id: str
    kind: str
    size: int
    spacing_m: float
    noise: float
    oneway_fraction: float
    seed: int
    city_type: str
    cols: int | None = None
    jitter: str = "points"
    drop_fraction: float = 0.0


def planted_corpus(n_per_type: int = 20, seed: int = 0) -> list[CityPlan]:
    """Two planted types: small dense grids and large sparse grids.

    Dense cities are 7 x 7..8 full lattices at 60-90 m spacing; sparse ones are
    20 x 20..22 lattices with every other east-west street missing, at
    200-300 m spacing. Per-node jitter keeps the features continuous within
    a type, so no two cities coincide in feature space.
    """
    rng = np.random.default_rng(seed)
    plans = []
    for prefix, kind, rows, cols, spacing, city_type in (
        ("dense", "grid", 7, (7, 9), (60.0, 90.0), "small_dense"),
        ("sparse", "sparse", 20, (20, 23), (200.0, 300.0), "large_sparse"),
    ):
        for i in range(n_per_type):
            plans.append(
                CityPlan(
                    f"{prefix}_{i:03d}",
                    kind,
                    rows,
                    float(rng.uniform(*spacing)),
                    0.1,
                    0.0,
                    int(rng.integers(2**31)),
                    city_type,
                    cols=int(rng.integers(*cols)),
                )
            )
    return plans


def planted_population(node_count: int) -> int:
    """Population strictly increasing in node count."""
    return int(round(120.0 * node_count**1.25))


def write_corpus(out_dir: str | Path, plans: list[CityPlan], manifest_extra: dict | None = None) -> Path:
    """Write OSM files, boundaries, indicators and a manifest; returns the manifest path."""
    out = Path(out_dir)
    (out / "osm").mkdir(parents=True, exist_ok=True)
    (out / "boundaries").mkdir(parents=True, exist_ok=True)
    rows = []
    for plan in plans:
        g = generate_synthetic_city(
            plan.kind,
            plan.size,
            seed=plan.seed,
            noise=plan.noise,
            spacing_m=plan.spacing_m,
            oneway_fraction=plan.oneway_fraction,
            cols=plan.cols,
            jitter=plan.jitter,
            drop_fraction=plan.drop_fraction,
        )
        write_osm_xml(g.nodes, graph_to_osm_ways(g), out / "osm" / f"{plan.city_id}.osm")
        boundary = bounding_boundary(g)
        with open(out / "boundaries" / f"{plan.city_id}.json", "w", encoding="utf-8") as fh:
            json.dump(boundary_to_geojson(boundary), fh)
            fh.write("\n")
        rows.append((plan.city_id, planted_population(len(g)), boundary_area_km2(boundary), plan.city_type))

    with open(out / "indicators.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["city_id", "population", "area", "planted_type"])
        for cid, pop, area, ctype in rows:
            w.writerow([cid, pop, repr(area), ctype])

    sections = {
        "corpus": {"output": "out", "indicators": "indicators.csv"},
    }
    for section, values in (manifest_extra or {}).items():
        sections.setdefault(section, {}).update(values)
    lines = []
    for section, values in sections.items():
        lines.append(f"[{section}]")
        lines += [f"{k} = {v}" for k, v in values.items()]
        lines.append("")
    lines.append("[cities]")
    lines += [f"{p.city_id} = osm/{p.city_id}.osm, boundaries/{p.city_id}.json" for p in plans]
    manifest = out / "manifest.ini"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest

"""OpenStreetMap XML ingestion: parse, crop to a city boundary, build the graph."""
from __future__ import annotations

import json
import logging
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .graph import GeoPoint, GraphError, StreetGraph, great_circle_distance

log = logging.getLogger(__name__)

DEFAULT_HIGHWAY_FILTER = frozenset(
    base + suffix
    for base in (
        "motorway",
        "trunk",
        "primary",
        "secondary",
        "tertiary",
        "residential",
        "unclassified",
        "living_street",
    )
    for suffix in ("", "_link")
    if not (suffix and base in ("residential", "unclassified", "living_street"))
)

_FORWARD = {"yes", "true", "1"}
_REVERSE = {"-1", "reverse"}


class OsmError(ValueError):
    pass


@dataclass(frozen=True)
class Way:
    osm_id: int
    refs: tuple[int, ...]
    tags: dict[str, str] = field(default_factory=dict)


@dataclass
class OsmDocument:
    osm_nodes: dict[int, GeoPoint] = field(default_factory=dict)
    ways: list[Way] = field(default_factory=list)
    dropped_ways: int = 0


def parse_osm_xml(data: bytes) -> OsmDocument:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise OsmError(f"malformed OSM XML at line {line}, column {col}: {exc}") from None
    if root.tag != "osm":
        raise OsmError(f"expected <osm> root element, found <{root.tag}>")

    doc = OsmDocument()
    raw_ways = []
    for el in root:
        if el.tag == "node":
            try:
                nid = int(el.attrib["id"])
                doc.osm_nodes[nid] = GeoPoint(float(el.attrib["lat"]), float(el.attrib["lon"]))
            except (KeyError, ValueError) as exc:
                raise OsmError(f"bad <node> element {el.attrib}: {exc}") from None
        elif el.tag == "way":
            try:
                wid = int(el.attrib["id"])
                refs = tuple(int(nd.attrib["ref"]) for nd in el.iter("nd"))
            except (KeyError, ValueError) as exc:
                raise OsmError(f"bad <way> element {el.attrib}: {exc}") from None
            tags = {t.attrib["k"]: t.attrib.get("v", "") for t in el.iter("tag") if "k" in t.attrib}
            raw_ways.append(Way(wid, refs, tags))

    for way in raw_ways:
        if all(r in doc.osm_nodes for r in way.refs):
            doc.ways.append(way)
        else:
            doc.dropped_ways += 1
    if doc.dropped_ways:
        log.warning("dropped %d way(s) referencing missing nodes", doc.dropped_ways)
    return doc


def read_osm(path: str | Path) -> OsmDocument:
    return parse_osm_xml(Path(path).read_bytes())


# -- boundary ------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryPolygon:
    exterior: tuple[GeoPoint, ...]
    holes: tuple[tuple[GeoPoint, ...], ...] = ()

    def __post_init__(self) -> None:
        for ring in (self.exterior, *self.holes):
            _check_ring(ring)

    def contains(self, p: GeoPoint) -> bool:
        """Closed even-odd test: points on any ring count as inside."""
        if _on_ring(self.exterior, p):
            return True
        if not _even_odd(self.exterior, p):
            return False
        for hole in self.holes:
            if _on_ring(hole, p):
                return True
            if _even_odd(hole, p):
                return False
        return True


def _check_ring(ring) -> None:
    if len(ring) < 4:
        raise OsmError("degenerate polygon: ring needs at least 4 points")
    if ring[0] != ring[-1]:
        raise OsmError("degenerate polygon: ring is not closed")
    pts = np.array([(p.lon, p.lat) for p in ring])
    seg_a, seg_b = pts[:-1], pts[1:]
    m = len(seg_a)
    if m < 3 or len({(p.lat, p.lon) for p in ring[:-1]}) < 3:
        raise OsmError("degenerate polygon: fewer than 3 distinct vertices")
    for i in range(m):
        # neighbours share an endpoint by construction; skip them
        js = np.arange(i + 2, m)
        if i == 0:
            js = js[js != m - 1]
        if js.size == 0:
            continue
        if np.any(_segments_intersect(seg_a[i], seg_b[i], seg_a[js], seg_b[js])):
            raise OsmError(f"degenerate polygon: ring self-intersects at segment {i}")


def _orient(a, b, c):
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (
        c[..., 0] - a[..., 0]
    )


def _segments_intersect(p1, p2, q1, q2) -> np.ndarray:
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)

    def within(a, b, c):
        return (np.minimum(a[..., 0], b[..., 0]) <= c[..., 0]) & (
            c[..., 0] <= np.maximum(a[..., 0], b[..., 0])
        ) & (np.minimum(a[..., 1], b[..., 1]) <= c[..., 1]) & (
            c[..., 1] <= np.maximum(a[..., 1], b[..., 1])
        )

    touch = (
        ((d1 == 0) & within(q1, q2, p1))
        | ((d2 == 0) & within(q1, q2, p2))
        | ((d3 == 0) & within(p1, p2, q1))
        | ((d4 == 0) & within(p1, p2, q2))
    )
    return proper | touch


def _even_odd(ring, p: GeoPoint) -> bool:
    x, y = p.lon, p.lat
    inside = False
    for a, b in zip(ring[:-1], ring[1:]):
        if (a.lat > y) != (b.lat > y):
            x_cross = a.lon + (y - a.lat) * (b.lon - a.lon) / (b.lat - a.lat)
            if x < x_cross:
                inside = not inside
    return inside


def _on_ring(ring, p: GeoPoint) -> bool:
    x, y = p.lon, p.lat
    for a, b in zip(ring[:-1], ring[1:]):
        cross = (b.lon - a.lon) * (y - a.lat) - (b.lat - a.lat) * (x - a.lon)
        if cross == 0 and min(a.lon, b.lon) <= x <= max(a.lon, b.lon) and min(a.lat, b.lat) <= y <= max(
            a.lat, b.lat
        ):
            return True
    return False


def _ring_from_coords(coords) -> tuple[GeoPoint, ...]:
    try:
        return tuple(GeoPoint(float(lat), float(lon)) for lon, lat, *_ in coords)
    except (TypeError, ValueError) as exc:
        raise OsmError(f"bad polygon coordinates: {exc}") from None


def boundary_from_geojson(obj: dict) -> BoundaryPolygon:
    """Accepts a Polygon geometry, a Feature wrapping one, or a single-feature
    FeatureCollection. Coordinates are GeoJSON order: [lon, lat]."""
    if obj.get("type") == "FeatureCollection":
        feats = obj.get("features") or []
        if len(feats) != 1:
            raise OsmError(f"expected exactly one boundary feature, got {len(feats)}")
        obj = feats[0]
    if obj.get("type") == "Feature":
        obj = obj.get("geometry") or {}
    if obj.get("type") != "Polygon":
        raise OsmError(f"boundary must be a GeoJSON Polygon, got {obj.get('type')!r}")
    rings = obj.get("coordinates") or []
    if not rings:
        raise OsmError("degenerate polygon: no rings")
    return BoundaryPolygon(
        exterior=_ring_from_coords(rings[0]),
        holes=tuple(_ring_from_coords(r) for r in rings[1:]),
    )


def read_boundary(path: str | Path) -> BoundaryPolygon:
    with open(path, encoding="utf-8") as fh:
        return boundary_from_geojson(json.load(fh))


def boundary_to_geojson(b: BoundaryPolygon) -> dict:
    return {
        "type": "Polygon",
        "coordinates": [[[p.lon, p.lat] for p in ring] for ring in (b.exterior, *b.holes)],
    }


# -- clip & build ----------------------------------------------------------------


def clip(doc: OsmDocument, boundary: BoundaryPolygon) -> OsmDocument:
    kept = {nid: p for nid, p in doc.osm_nodes.items() if boundary.contains(p)}
    ways = []
    for way in doc.ways:
        run: list[int] = []
        for ref in (*way.refs, None):
            if ref is not None and ref in kept:
                run.append(ref)
                continue
            if len(run) >= 2:
                ways.append(Way(way.osm_id, tuple(run), dict(way.tags)))
            run = []
    return OsmDocument(osm_nodes=kept, ways=ways, dropped_ways=doc.dropped_ways)


def _direction(tags: dict[str, str]) -> str:
    value = tags.get("oneway", "").strip().lower()
    if value in _FORWARD:
        return "forward"
    if value in _REVERSE:
        return "reverse"
    return "both"


def street_segments(
    doc: OsmDocument,
    highway_filter: Iterable[str] = DEFAULT_HIGHWAY_FILTER,
    keep_geometry_nodes: bool = False,
) -> list[tuple[tuple[int, ...], str]]:
    """Split retained ways at intersection nodes.

    Returns (node run, direction) per segment; self-loop segments are skipped.
    """
    allowed = set(highway_filter)
    if not allowed:
        raise OsmError("highway filter is empty")
    ways = [w for w in doc.ways if w.tags.get("highway") in allowed and len(w.refs) >= 2]
    uses = Counter(ref for w in ways for ref in w.refs)

    segments = []
    for way in ways:
        direction = _direction(way.tags)
        last = len(way.refs) - 1
        start = 0
        for i in range(1, last + 1):
            ref = way.refs[i]
            if i == last or keep_geometry_nodes or uses[ref] >= 2:
                run = way.refs[start : i + 1]
                if run[0] != run[-1]:
                    segments.append((run, direction))
                start = i
    return segments


def segment_length(doc: OsmDocument, run: tuple[int, ...]) -> float:
    pts = [doc.osm_nodes[r] for r in run]
    return sum(great_circle_distance(a, b) for a, b in zip(pts[:-1], pts[1:]))


def build_street_graph(
    doc: OsmDocument,
    highway_filter: Iterable[str] = DEFAULT_HIGHWAY_FILTER,
    keep_geometry_nodes: bool = False,
) -> StreetGraph:
    """Street graph whose vertices are crossings and street ends.

    Interior geometry nodes of each segment are folded into the edge length
    unless ``keep_geometry_nodes`` is set.
    """
    edges = []
    used: dict[int, None] = {}
    for run, direction in street_segments(doc, highway_filter, keep_geometry_nodes):
        a, b = run[0], run[-1]
        length = segment_length(doc, run)
        if length <= 0:
            # coincident coordinates carry no metric information
            continue
        used.setdefault(a)
        used.setdefault(b)
        if direction in ("forward", "both"):
            edges.append((a, b, length))
        if direction in ("reverse", "both"):
            edges.append((b, a, length))
    if not edges:
        raise OsmError("no street data after filtering")
    try:
        return StreetGraph.build({n: doc.osm_nodes[n] for n in used}, edges)
    except GraphError as exc:
        raise OsmError(str(exc)) from None


def write_osm_xml(nodes: dict[int, GeoPoint], ways: Iterable[Way], path: str | Path) -> None:
    root = ET.Element("osm", version="0.6", generator="streetnet")
    for nid, p in nodes.items():
        ET.SubElement(root, "node", id=str(nid), lat=repr(p.lat), lon=repr(p.lon))
    for way in ways:
        el = ET.SubElement(root, "way", id=str(way.osm_id))
        for ref in way.refs:
            ET.SubElement(el, "nd", ref=str(ref))
        for k, v in way.tags.items():
            ET.SubElement(el, "tag", k=k, v=v)
    ET.indent(root)
    Path(path).write_bytes(ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n")

"""Urban indicator tables and their comparison with embeddings and clusters."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import ClusterAssignment
from .projection import Embedding
from .selection import pearson

AREA_CLASSES = ("q1", "q2", "q3", "q4")


class IndicatorError(ValueError):
    pass


@dataclass
class IndicatorTable:
    """Per-city numeric indicators; ``population`` and ``area`` (km2) are required."""

    columns: dict[str, dict[str, float]]

    def __post_init__(self) -> None:
        for required in ("population", "area"):
            if required not in self.columns:
                raise IndicatorError(f"indicator table lacks a {required!r} column")
        for cid, v in self.columns["population"].items():
            if not v >= 0:
                raise IndicatorError(f"population of {cid!r} must be >= 0, got {v}")
        for cid, v in self.columns["area"].items():
            if not v > 0:
                raise IndicatorError(f"area of {cid!r} must be > 0, got {v}")

    @property
    def city_ids(self) -> list[str]:
        return list(self.columns["population"])

    def column(self, name: str) -> dict[str, float]:
        try:
            return self.columns[name]
        except KeyError:
            raise IndicatorError(f"unknown indicator column {name!r}") from None


def read_indicators(path: str | Path) -> IndicatorTable:
    """Numeric columns only; non-numeric columns (labels) are skipped."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or reader.fieldnames[0] != "city_id":
            raise IndicatorError(f"{path}: first column must be city_id")
        rows = list(reader)
    columns: dict[str, dict[str, float]] = {}
    for name in reader.fieldnames[1:]:
        try:
            columns[name] = {r["city_id"]: float(r[name]) for r in rows if r[name] != ""}
        except ValueError:
            if name in ("population", "area"):
                raise IndicatorError(f"{path}: column {name!r} is not numeric") from None
    return IndicatorTable(columns)


@dataclass(frozen=True)
class IndicatorCorrelation:
    r: float
    abs_r: float
    n: int


def correlate_indicator(
    embedding: Embedding, indicators: IndicatorTable, column: str = "population"
) -> IndicatorCorrelation:
    if embedding.dims != 1:
        raise IndicatorError(f"expected a 1-D embedding, got {embedding.dims} dimensions")
    values = indicators.column(column)
    pairs = [
        (float(embedding.coordinates[i, 0]), values[cid])
        for i, cid in enumerate(embedding.city_ids)
        if cid in values
    ]
    if len(pairs) < 3:
        raise IndicatorError(f"only {len(pairs)} cities match the indicator table (need >= 3)")
    x, y = np.array(pairs).T
    if np.all(y == y[0]):
        raise IndicatorError(f"indicator column {column!r} is constant over matched cities")
    r = pearson(x, y)
    return IndicatorCorrelation(r, abs(r), len(pairs))


def area_classes(areas: dict[str, float]) -> dict[str, str]:
    """Quartile class per city; values on a quartile edge fall in the lower class."""
    vals = np.array(list(areas.values()))
    edges = np.quantile(vals, [0.25, 0.5, 0.75])
    return {cid: AREA_CLASSES[int(np.searchsorted(edges, a, side="left"))] for cid, a in areas.items()}


def cluster_profile(assignment: ClusterAssignment, indicators: IndicatorTable) -> dict:
    if assignment.city_ids is None:
        raise IndicatorError("assignment carries no city ids")
    pop = indicators.column("population")
    area = indicators.column("area")
    matched = [
        (cid, int(lab)) for cid, lab in zip(assignment.city_ids, assignment.labels) if cid in pop and cid in area
    ]
    if not matched:
        raise IndicatorError("no city is shared by the assignment and the indicator table")
    classes = area_classes({cid: area[cid] for cid, _ in matched})
    total_pop = math.fsum(pop[cid] for cid, _ in matched)
    clusters = {}
    for label in sorted({lab for _, lab in matched}):
        members = [cid for cid, lab in matched if lab == label]
        cpop = math.fsum(pop[c] for c in members)
        hist = {cls: 0 for cls in AREA_CLASSES}
        for c in members:
            hist[classes[c]] += 1
        clusters[str(label)] = {
            "cities": len(members),
            "population": cpop,
            "population_share_pct": 100.0 * cpop / total_pop if total_pop > 0 else 0.0,
            "area_class_counts": hist,
        }
    return {"matched_cities": len(matched), "area_classes": "quartiles of area over matched cities", "clusters": clusters}

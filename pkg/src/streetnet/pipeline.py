"""File-based, resumable corpus pipeline.

Stages and their artifacts (under the output directory)::

    ingest    graphs/<city>.nodes.csv, graphs/<city>.edges.csv, graphs/ingest.json
    features  features.csv, features.json
    select    correlation.csv, kept_features.json
    project   embeddings/{pca,isomap}[_1d].csv + .json
    cluster   clusters/quality.json, clusters/assignment.csv
    profile   report.json

A stage is skipped when its stamp under ``.stamps/`` still matches the
content hashes of its inputs and outputs and its parameters.
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import json
import logging
import math
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .clustering import ClusterAssignment, sweep_k
from .graph import GraphError, read_graph_csv, write_graph_csv
from .indicators import IndicatorError, cluster_profile, correlate_indicator, read_indicators
from .metrics import MetricRegistry, compute_features
from .osm import DEFAULT_HIGHWAY_FILTER, OsmError, build_street_graph, clip, read_boundary, read_osm
from .projection import Embedding, ProjectionError, isomap, pca, standardize
from .selection import FeatureMatrix, correlation_matrix, select_features

log = logging.getLogger(__name__)

STAGES = ("ingest", "features", "select", "project", "cluster", "profile")


class ManifestError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, artifact: str | Path, message: str):
        super().__init__(f"[{stage}] {message} (see {artifact})")
        self.stage = stage
        self.artifact = str(artifact)


# -- manifest -------------------------------------------------------------------


@dataclass
class CityEntry:
    city_id: str
    osm: Path
    boundary: Path


@dataclass
class Manifest:
    path: Path
    cities: list[CityEntry]
    output: Path
    indicators: Path | None = None
    exclude: list[str] = field(default_factory=list)
    seed: int = 0
    stages: dict[str, bool] = field(default_factory=lambda: dict.fromkeys(STAGES, True))
    highway_filter: list[str] = field(default_factory=lambda: sorted(DEFAULT_HIGHWAY_FILTER))
    keep_geometry_nodes: bool = False
    path_weight: str = "length"
    log_base: float = 2.0
    disabled_metrics: list[str] = field(default_factory=list)
    threshold: float = 0.5
    policy: str = "deterministic"
    dims: int = 2
    isomap_k: int = 5
    isomap_escalate: bool = False
    k_min: int = 2
    k_max: int | None = None
    seeds_per_k: int = 10
    cluster_on: str = "features"
    indicator_column: str = "population"

    def stage_params(self, stage: str) -> dict:
        return {
            "ingest": {"highway_filter": sorted(self.highway_filter), "keep_geometry_nodes": self.keep_geometry_nodes},
            "features": {
                "path_weight": self.path_weight,
                "log_base": self.log_base,
                "disabled_metrics": sorted(self.disabled_metrics),
            },
            "select": {
                "threshold": self.threshold,
                "policy": self.policy,
                "seed": self.seed,
                "exclude": sorted(self.exclude),
            },
            "project": {"dims": self.dims, "isomap_k": self.isomap_k, "isomap_escalate": self.isomap_escalate},
            "cluster": {
                "k_min": self.k_min,
                "k_max": self.k_max,
                "seeds_per_k": self.seeds_per_k,
                "cluster_on": self.cluster_on,
                "seed": self.seed,
            },
            "profile": {"indicator_column": self.indicator_column},
        }[stage]

    def parameters(self) -> dict:
        return {s: self.stage_params(s) for s in STAGES}


def _split_list(value: str) -> list[str]:
    return [v.strip() for v in value.replace("\n", ",").split(",") if v.strip()]


def load_manifest(path: str | Path, **overrides) -> Manifest:
    """Read an INI manifest; relative paths resolve against its directory.

    ``overrides`` (output, seed, highway_filter, keep_geometry_nodes) take
    precedence over file values when not None.
    """
    path = Path(path).resolve()
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # city ids are case-sensitive
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ManifestError(f"{path}: {exc}") from None
    base = path.parent

    def get(section, key, default=None, conv: Callable = str):
        if not cp.has_option(section, key) or cp.get(section, key).strip() == "":
            return default
        raw = cp.get(section, key).strip()
        try:
            if conv is bool:
                return cp.getboolean(section, key)
            return conv(raw)
        except ValueError as exc:
            raise ManifestError(f"{path}: [{section}] {key} = {raw!r}: {exc}") from None

    if not cp.has_section("cities"):
        raise ManifestError(f"{path}: missing [cities] section")
    cities = []
    for cid, spec in cp.items("cities"):
        parts = _split_list(spec)
        if len(parts) != 2:
            raise ManifestError(f"{path}: city {cid!r} needs '<osm path>, <boundary path>'")
        cities.append(CityEntry(cid, (base / parts[0]).resolve(), (base / parts[1]).resolve()))
    if not cities:
        raise ManifestError(f"{path}: no cities listed")

    m = Manifest(path=path, cities=cities, output=(base / get("corpus", "output", "out")).resolve())
    ind = get("corpus", "indicators")
    m.indicators = (base / ind).resolve() if ind else None
    m.exclude = _split_list(get("corpus", "exclude", ""))
    m.seed = get("corpus", "seed", 0, int)
    for stage in STAGES:
        m.stages[stage] = get("stages", stage, True, bool)
    hf = get("ingest", "highway_filter")
    if hf:
        m.highway_filter = _split_list(hf)
    m.keep_geometry_nodes = get("ingest", "keep_geometry_nodes", False, bool)
    m.path_weight = get("features", "path_weight", "length")
    m.log_base = get("features", "log_base", 2.0, float)
    m.disabled_metrics = _split_list(get("features", "disabled", ""))
    m.threshold = get("select", "threshold", 0.5, float)
    m.policy = get("select", "policy", "deterministic")
    m.dims = get("project", "dims", 2, int)
    m.isomap_k = get("project", "isomap_k", 5, int)
    m.isomap_escalate = get("project", "isomap_escalate", False, bool)
    m.k_min = get("cluster", "k_min", 2, int)
    m.k_max = get("cluster", "k_max", None, int)
    m.seeds_per_k = get("cluster", "seeds_per_k", 10, int)
    m.cluster_on = get("cluster", "cluster_on", "features")
    m.indicator_column = get("profile", "indicator_column", "population")

    for key, value in overrides.items():
        if value is not None:
            setattr(m, key, Path(value).resolve() if key == "output" else value)
    _validate(m)
    return m


def _validate(m: Manifest) -> None:
    ids = [c.city_id for c in m.cities]
    if len(set(ids)) != len(ids):
        raise ManifestError("duplicate city ids in manifest")
    missing = [str(p) for c in m.cities for p in (c.osm, c.boundary) if not p.is_file()]
    if m.indicators is not None and not m.indicators.is_file():
        missing.append(str(m.indicators))
    if missing:
        raise ManifestError(f"referenced files do not exist: {missing}")
    if m.path_weight not in ("length", "hops"):
        raise ManifestError(f"path_weight must be 'length' or 'hops', not {m.path_weight!r}")
    if m.policy not in ("deterministic", "seeded"):
        raise ManifestError(f"unknown selection policy {m.policy!r}")
    if m.cluster_on not in ("features", "pca", "isomap"):
        raise ManifestError(f"cluster_on must be features, pca or isomap, not {m.cluster_on!r}")
    if not m.highway_filter:
        raise ManifestError("highway filter is empty")
    if m.dims < 1 or m.isomap_k < 1 or m.seeds_per_k < 1 or m.k_min < 2:
        raise ManifestError("dims, isomap_k, seeds_per_k must be >= 1 and k_min >= 2")
    unknown = set(m.disabled_metrics) - {e.name for e in MetricRegistry().entries}
    if unknown:
        raise ManifestError(f"unknown metrics in [features] disabled: {sorted(unknown)}")


# -- artifact helpers ----------------------------------------------------------


def _sha256(path: Path) -> str | None:
    if not path.is_file():
        return None
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _json_safe(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_json_safe(obj), indent=2) + "\n", encoding="utf-8")


def _cell(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def write_feature_table(path: Path, m: FeatureMatrix) -> None:
    write_csv(path, ["city_id", *m.feature_names], ([cid, *row] for cid, row in zip(m.city_ids, m.values)))


def read_feature_table(path: Path) -> FeatureMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if not header or header[0] != "city_id":
        raise ValueError(f"{path}: first column must be city_id")
    vals = np.array([[float(c) if c != "" else math.nan for c in r[1:]] for r in rows], dtype=float)
    return FeatureMatrix([r[0] for r in rows], header[1:], vals.reshape(len(rows), len(header) - 1))


def write_embedding(csv_path: Path, emb: Embedding) -> None:
    header = ["city_id", *[f"c{i + 1}" for i in range(emb.dims)]]
    write_csv(csv_path, header, ([cid, *row] for cid, row in zip(emb.city_ids, emb.coordinates)))
    write_json(csv_path.with_suffix(".json"), {"method": emb.method, **emb.diagnostics})


def read_embedding(csv_path: Path) -> Embedding:
    m = read_feature_table(csv_path)
    diag = json.loads(csv_path.with_suffix(".json").read_text(encoding="utf-8"))
    return Embedding(m.city_ids, m.values, diag.get("method", ""), diag)


def read_assignment(path: Path) -> ClusterAssignment:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    labels = np.array([int(r["cluster"]) for r in rows], dtype=int)
    k = int(labels.max()) + 1 if len(labels) else 0
    return ClusterAssignment(labels, np.empty((k, 0)), math.nan, city_ids=[r["city_id"] for r in rows])


def _ingest_city(entry: CityEntry, highway_filter: list[str], keep_geometry: bool, graphs: Path) -> str | None:
    """Returns None on success, else the error message."""
    nodes_csv = graphs / f"{entry.city_id}.nodes.csv"
    edges_csv = graphs / f"{entry.city_id}.edges.csv"
    failed = graphs / f"{entry.city_id}.failed.json"
    try:
        doc = clip(read_osm(entry.osm), read_boundary(entry.boundary))
        g = build_street_graph(doc, highway_filter, keep_geometry_nodes=keep_geometry)
    except (OsmError, GraphError, OSError, ValueError) as exc:
        for p in (nodes_csv, edges_csv):
            p.unlink(missing_ok=True)
        write_json(failed, {"city_id": entry.city_id, "error": str(exc)})
        return str(exc)
    failed.unlink(missing_ok=True)
    write_graph_csv(g, nodes_csv, edges_csv)
    return None


def _features_for(city_id: str, graphs: Path, disabled: list[str], weight: str, log_base: float):
    g = read_graph_csv(graphs / f"{city_id}.nodes.csv", graphs / f"{city_id}.edges.csv")
    registry = MetricRegistry()
    for name in disabled:
        registry.set_enabled(name, False)
    return compute_features(g, registry, city_id=city_id, weight=weight, log_base=log_base)


# -- pipeline ---------------------------------------------------------------------


class Pipeline:
    def __init__(self, manifest: Manifest, force: bool = False, jobs: int = 1):
        self.m = manifest
        self.force = force
        self.jobs = max(1, jobs)
        self.out = manifest.output
        self.status: dict[str, str] = {}

    # paths
    @property
    def graphs(self) -> Path:
        return self.out / "graphs"

    def _rel(self, p: Path) -> str:
        try:
            return p.relative_to(self.out).as_posix()
        except ValueError:
            return p.name

    # staleness bookkeeping
    def _stamp_path(self, name: str) -> Path:
        return self.out / ".stamps" / f"{name}.json"

    def _fingerprint(self, inputs: dict[str, Path], outputs: list[Path], params: dict) -> dict:
        return {
            "params": _json_safe(params),
            "inputs": {k: _sha256(p) for k, p in sorted(inputs.items())},
            "outputs": {self._rel(p): _sha256(p) for p in outputs},
        }

    def _fresh(self, name: str, inputs: dict[str, Path], outputs: list[Path], params: dict) -> bool:
        if self.force:
            return False
        stamp = self._stamp_path(name)
        if not stamp.is_file() or not all(p.is_file() for p in outputs):
            return False
        try:
            saved = json.loads(stamp.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            return False
        return saved == self._fingerprint(inputs, outputs, params)

    def _stamp(self, name: str, inputs: dict[str, Path], outputs: list[Path], params: dict) -> None:
        write_json(self._stamp_path(name), self._fingerprint(inputs, outputs, params))

    def _map(self, fn, *iterables):
        if self.jobs == 1:
            return list(map(fn, *iterables))
        with ProcessPoolExecutor(max_workers=self.jobs) as pool:
            return list(pool.map(fn, *iterables))

    def _require(self, stage: str, paths: list[Path]) -> None:
        for p in paths:
            if not p.is_file():
                raise StageError(stage, p, "required upstream artifact is missing; run the earlier stages first")

    # -- stages -------------------------------------------------------------------

    def ingest(self) -> str:
        params = self.m.stage_params("ingest")
        summary = self.graphs / "ingest.json"
        stale = []
        for c in self.m.cities:
            inputs = {"osm": c.osm, "boundary": c.boundary}
            outs = [self.graphs / f"{c.city_id}.{s}.csv" for s in ("nodes", "edges")]
            failed = self.graphs / f"{c.city_id}.failed.json"
            if not (
                self._fresh(f"ingest/{c.city_id}", inputs, outs, params)
                or self._fresh(f"ingest/{c.city_id}", inputs, [failed], params)
            ):
                stale.append(c)
        if not stale and summary.is_file():
            return "skipped"
        self.graphs.mkdir(parents=True, exist_ok=True)
        errors = self._map(
            _ingest_city,
            stale,
            [self.m.highway_filter] * len(stale),
            [self.m.keep_geometry_nodes] * len(stale),
            [self.graphs] * len(stale),
        )
        for c, err in zip(stale, errors):
            if err is None:
                outs = [self.graphs / f"{c.city_id}.{s}.csv" for s in ("nodes", "edges")]
            else:
                log.warning("city %s excluded at ingest: %s", c.city_id, err)
                outs = [self.graphs / f"{c.city_id}.failed.json"]
            self._stamp(f"ingest/{c.city_id}", {"osm": c.osm, "boundary": c.boundary}, outs, params)

        ok, failed = [], {}
        for c in sorted(self.m.cities, key=lambda c: c.city_id):
            fail_path = self.graphs / f"{c.city_id}.failed.json"
            if fail_path.is_file():
                failed[c.city_id] = json.loads(fail_path.read_text(encoding="utf-8"))["error"]
            else:
                ok.append(c.city_id)
        new = json.dumps(_json_safe({"ingested": ok, "failed": failed}), indent=2) + "\n"
        if not summary.is_file() or summary.read_text(encoding="utf-8") != new:
            summary.write_text(new, encoding="utf-8")
        if not ok:
            raise StageError("ingest", summary, "no city could be ingested")
        return "ran"

    def _ingested(self) -> list[str]:
        summary = self.graphs / "ingest.json"
        self._require("features", [summary])
        return json.loads(summary.read_text(encoding="utf-8"))["ingested"]

    def features(self) -> str:
        cities = self._ingested()
        inputs = {"ingest.json": self.graphs / "ingest.json"}
        for cid in cities:
            for s in ("nodes", "edges"):
                inputs[f"{cid}.{s}.csv"] = self.graphs / f"{cid}.{s}.csv"
        outputs = [self.out / "features.csv", self.out / "features.json"]
        params = self.m.stage_params("features")
        if self._fresh("features", inputs, outputs, params):
            return "skipped"
        self._require("features", list(inputs.values()))
        n = len(cities)
        vectors = self._map(
            _features_for,
            cities,
            [self.graphs] * n,
            [self.m.disabled_metrics] * n,
            [self.m.path_weight] * n,
            [self.m.log_base] * n,
        )
        matrix = FeatureMatrix.from_vectors(vectors)
        write_feature_table(outputs[0], matrix)
        write_json(
            outputs[1],
            {
                "features": matrix.feature_names,
                "log_base": self.m.log_base,
                "path_weight": self.m.path_weight,
                "flags": {v.city_id: v.flags for v in sorted(vectors, key=lambda v: v.city_id)},
            },
        )
        self._stamp("features", inputs, outputs, params)
        return "ran"

    def _corpus_matrix(self, stage: str) -> FeatureMatrix:
        path = self.out / "features.csv"
        self._require(stage, [path])
        return read_feature_table(path).drop_cities(self.m.exclude)

    def select(self) -> str:
        inputs = {"features.csv": self.out / "features.csv"}
        outputs = [self.out / "correlation.csv", self.out / "kept_features.json"]
        params = self.m.stage_params("select")
        if self._fresh("select", inputs, outputs, params):
            return "skipped"
        matrix = self._corpus_matrix("select")
        try:
            corr = correlation_matrix(matrix)
        except ValueError as exc:
            raise StageError("select", inputs["features.csv"], str(exc)) from None
        kept, drops = select_features(corr, self.m.threshold, self.m.policy, seed=self.m.seed)
        if not kept:
            raise StageError("select", inputs["features.csv"], "no feature survived selection")
        write_csv(
            outputs[0],
            ["feature", *corr.feature_names],
            ([n, *row] for n, row in zip(corr.feature_names, corr.entries)),
        )
        write_json(
            outputs[1],
            {
                "kept": kept,
                "drops": [asdict(d) for d in drops],
                "excluded_constant": corr.excluded,
                "threshold": self.m.threshold,
                "policy": self.m.policy,
                "seed": self.m.seed,
                "cities": matrix.city_ids,
            },
        )
        self._stamp("select", inputs, outputs, params)
        return "ran"

    def _selected_matrix(self, stage: str) -> tuple[FeatureMatrix, list[str]]:
        kept_path = self.out / "kept_features.json"
        self._require(stage, [kept_path])
        kept = json.loads(kept_path.read_text(encoding="utf-8"))["kept"]
        full = self._corpus_matrix(stage).select(kept)
        complete = full.complete_rows()
        dropped = sorted(set(full.city_ids) - set(complete.city_ids))
        if len(complete.city_ids) < 3:
            raise StageError(stage, kept_path, f"only {len(complete.city_ids)} cities have every kept feature")
        try:
            return standardize(complete), dropped
        except ProjectionError as exc:
            raise StageError(stage, kept_path, str(exc)) from None

    def _embedding_paths(self) -> dict[str, Path]:
        e = self.out / "embeddings"
        return {name: e / f"{name}.csv" for name in ("pca", "isomap", "pca_1d", "isomap_1d")}

    def project(self) -> str:
        inputs = {"features.csv": self.out / "features.csv", "kept_features.json": self.out / "kept_features.json"}
        paths = self._embedding_paths()
        outputs = [q for p in paths.values() for q in (p, p.with_suffix(".json"))]
        params = self.m.stage_params("project")
        if self._fresh("project", inputs, outputs, params):
            return "skipped"
        z, incomplete = self._selected_matrix("project")
        n, p = z.values.shape
        dims = min(self.m.dims, p, n - 1)
        runs = {
            "pca": lambda: pca(z, dims),
            "pca_1d": lambda: pca(z, 1),
            "isomap": lambda: isomap(z, min(self.m.dims, n - 1), self.m.isomap_k, self.m.isomap_escalate),
            "isomap_1d": lambda: isomap(z, 1, self.m.isomap_k, self.m.isomap_escalate),
        }
        for name, run in runs.items():
            try:
                emb = run()
            except ProjectionError as exc:
                raise StageError("project", paths[name], str(exc)) from None
            emb.diagnostics["incomplete_cities_dropped"] = incomplete
            write_embedding(paths[name], emb)
        self._stamp("project", inputs, outputs, params)
        return "ran"

    def cluster(self) -> str:
        inputs = {"features.csv": self.out / "features.csv", "kept_features.json": self.out / "kept_features.json"}
        if self.m.cluster_on != "features":
            emb = self._embedding_paths()[self.m.cluster_on]
            inputs[emb.name] = emb
        quality = self.out / "clusters" / "quality.json"
        assignment = self.out / "clusters" / "assignment.csv"
        params = self.m.stage_params("cluster")
        if self._fresh("cluster", inputs, [quality, assignment], params):
            return "skipped"
        if self.m.cluster_on == "features":
            z, _ = self._selected_matrix("cluster")
            city_ids, points = z.city_ids, z.values
        else:
            self._require("cluster", [inputs[emb.name]])
            e = read_embedding(inputs[emb.name])
            city_ids, points = e.city_ids, e.coordinates
        k_max = self.m.k_max if self.m.k_max is not None else len(city_ids) - 1
        k_max = min(k_max, len(city_ids) - 1)
        if k_max < self.m.k_min:
            raise StageError("cluster", inputs["features.csv"], f"too few cities ({len(city_ids)}) for k >= {self.m.k_min}")
        report = sweep_k(points, self.m.k_min, k_max, self.m.seeds_per_k, base_seed=self.m.seed)
        if report.selected_k is None:
            raise StageError("cluster", quality, report.selection_reason)
        write_json(
            quality,
            {
                "cluster_on": self.m.cluster_on,
                "records": [asdict(r) for r in report.records],
                "selected_k": report.selected_k,
                "selection_reason": report.selection_reason,
                "seeds": report.seeds,
            },
        )
        write_csv(assignment, ["city_id", "cluster"], zip(city_ids, report.assignment.labels.tolist()))
        self._stamp("cluster", inputs, [quality, assignment], params)
        return "ran"

    def profile(self) -> str:
        paths = self._embedding_paths()
        inputs = {
            "assignment.csv": self.out / "clusters" / "assignment.csv",
            "quality.json": self.out / "clusters" / "quality.json",
            "pca_1d.csv": paths["pca_1d"],
            "isomap_1d.csv": paths["isomap_1d"],
        }
        if self.m.indicators is not None:
            inputs["indicators"] = self.m.indicators
        report_path = self.out / "report.json"
        params = self.m.stage_params("profile")
        if self._fresh("profile", inputs, [report_path], params):
            return "skipped"
        self._require("profile", [inputs["assignment.csv"], inputs["quality.json"]])
        quality = json.loads(inputs["quality.json"].read_text(encoding="utf-8"))
        assignment = read_assignment(inputs["assignment.csv"])
        sel = next(r for r in quality["records"] if r["k"] == quality["selected_k"])
        report: dict = {
            "cities": len(assignment.city_ids),
            "selected_k": quality["selected_k"],
            "selection_reason": quality["selection_reason"],
            "silhouette_avg": sel["avg"],
            "dunn": sel["dnn"],
            "cluster_sizes": {str(c): int((assignment.labels == c).sum()) for c in np.unique(assignment.labels)},
        }
        if self.m.indicators is not None:
            try:
                table = read_indicators(self.m.indicators)
                report["indicator_column"] = self.m.indicator_column
                corr = {}
                for name in ("pca_1d", "isomap_1d"):
                    if paths[name].is_file():
                        c = correlate_indicator(read_embedding(paths[name]), table, self.m.indicator_column)
                        corr[name.removesuffix("_1d")] = {"r": c.r, "abs_r": c.abs_r, "n": c.n}
                report["indicator_correlation"] = corr
                report["cluster_profile"] = cluster_profile(assignment, table)
            except (IndicatorError, ValueError) as exc:
                raise StageError("profile", self.m.indicators, str(exc)) from None
        write_json(report_path, report)
        self._stamp("profile", inputs, [report_path], params)
        return "ran"

    # -- driver -------------------------------------------------------------------

    def run(self, stages=STAGES) -> dict[str, str]:
        self.out.mkdir(parents=True, exist_ok=True)
        started = datetime.now(timezone.utc).isoformat()
        error = None
        try:
            for stage in stages:
                if not self.m.stages.get(stage, True):
                    self.status[stage] = "disabled"
                    continue
                self.status[stage] = getattr(self, stage)()
                log.info("stage %-8s %s", stage, self.status[stage])
        except StageError as exc:
            self.status[exc.stage] = "failed"
            error = str(exc)
            raise
        finally:
            write_json(
                self.out / "run_log.json",
                {
                    "started": started,
                    "finished": datetime.now(timezone.utc).isoformat(),
                    "versions": {
                        "streetnet": __version__,
                        "python": platform.python_version(),
                        "numpy": np.__version__,
                        "scipy": _scipy_version(),
                    },
                    "argv": sys.argv,
                    "manifest": str(self.m.path),
                    "seed": self.m.seed,
                    "force": self.force,
                    "parameters": self.m.parameters(),
                    "stages": self.status,
                    "error": error,
                },
            )
        return self.status


def _scipy_version() -> str:
    import scipy

    return scipy.__version__


def run_pipeline(manifest: Manifest, stages=STAGES, force: bool = False, jobs: int = 1) -> dict[str, str]:
    return Pipeline(manifest, force=force, jobs=jobs).run(stages)

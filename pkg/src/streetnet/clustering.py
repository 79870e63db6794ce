"""KMeans with Silhouette/Dunn validity and the k-sweep selection rule."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ClusteringError(ValueError):
    pass


@dataclass
class ClusterAssignment:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iter: int = 0
    inertia_history: list[float] = field(default_factory=list)
    city_ids: list[str] | None = None

    @property
    def k(self) -> int:
        return len(self.centroids)


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(-1)


def _kmeanspp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centers = [points[rng.integers(n)]]
    closest = ((points - centers[0]) ** 2).sum(1)
    for _ in range(1, k):
        total = closest.sum()
        if total == 0:
            # every point already coincides with a center
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(points[idx])
        closest = np.minimum(closest, ((points - points[idx]) ** 2).sum(1))
    return np.array(centers, dtype=float)


def _repair_empty(points, labels, centers, k) -> np.ndarray:
    labels = labels.copy()
    for c in range(k):
        if np.any(labels == c):
            continue
        d = ((points - centers[labels]) ** 2).sum(1)
        # only steal from clusters that keep at least one member
        sizes = np.bincount(labels, minlength=k)
        d[sizes[labels] <= 1] = -1.0
        far = int(np.argmax(d))
        labels[far] = c
        centers[c] = points[far]
    return labels


def kmeans(
    points,
    k: int,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> ClusterAssignment:
    """Lloyd iterations from a k-means++ start; deterministic in (points, k, seed)."""
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = len(x)
    if not 1 <= k <= n:
        raise ClusteringError(f"k={k} must be within [1, {n}]")
    if not np.isfinite(x).all():
        raise ClusteringError("points must be finite")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp(x, k, rng)
    labels = np.argmin(_sq_dists(x, centers), axis=1)
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        labels = _repair_empty(x, labels, centers, k)
        new = np.array([x[labels == c].mean(axis=0) for c in range(k)])
        shift = float(np.sqrt(((new - centers) ** 2).sum(1)).max())
        centers = new
        new_labels = np.argmin(_sq_dists(x, centers), axis=1)
        history.append(float(((x - centers[labels]) ** 2).sum()))
        stable = np.array_equal(new_labels, labels)
        labels = new_labels
        if stable or (shift < tol and len(np.unique(labels)) == k):
            break
    labels = _repair_empty(x, labels, centers, k)
    inertia = float(((x - centers[labels]) ** 2).sum())
    return ClusterAssignment(labels, centers, inertia, it, history)


def _pairwise(points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))


def _check_labels(labels) -> tuple[np.ndarray, np.ndarray]:
    labels = np.asarray(labels)
    clusters = np.unique(labels)
    if len(clusters) < 2:
        raise ClusteringError("need at least 2 clusters")
    return labels, clusters


def silhouette(points, labels) -> tuple[np.ndarray, float]:
    labels, clusters = _check_labels(labels)
    dist = _pairwise(points)
    n = len(labels)
    scores = np.zeros(n)
    members = {c: labels == c for c in clusters}
    for i in range(n):
        own = members[labels[i]]
        size = own.sum()
        if size == 1:
            continue
        a = dist[i, own].sum() / (size - 1)
        b = min(dist[i, members[c]].mean() for c in clusters if c != labels[i])
        top = max(a, b)
        scores[i] = 0.0 if top == 0 else (b - a) / top
    return scores, float(scores.mean())


def dunn_index(points, labels) -> float:
    """Smallest single-linkage gap over the largest cluster diameter.

    Returns ``math.inf`` when every cluster is a single point.
    """
    labels, clusters = _check_labels(labels)
    dist = _pairwise(points)
    idx = [np.flatnonzero(labels == c) for c in clusters]
    gap = min(
        dist[np.ix_(idx[a], idx[b])].min() for a in range(len(idx)) for b in range(a + 1, len(idx))
    )
    diameter = max(dist[np.ix_(m, m)].max() for m in idx)
    if diameter == 0:
        return math.inf
    return float(gap / diameter)


@dataclass
class KRecord:
    k: int
    avg: float | None = None
    dnn: float | None = None
    inertia: float | None = None
    seed: int | None = None
    skipped: str | None = None


@dataclass
class QualityReport:
    records: list[KRecord]
    selected_k: int | None
    selection_reason: str
    seeds: list[int]
    assignment: ClusterAssignment | None = None

    def record(self, k: int) -> KRecord:
        return next(r for r in self.records if r.k == k)


def sweep_k(
    points,
    k_min: int = 2,
    k_max: int | None = None,
    seeds_per_k: int = 10,
    base_seed: int = 0,
) -> QualityReport:
    """Best-of-seeds KMeans per k; pick the greatest average Silhouette among
    the k whose Dunn index is strictly above 1.

    If no k qualifies, the greatest average Silhouette overall is taken and the
    reason says so.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = len(x)
    k_max = n - 1 if k_max is None else k_max
    if k_min < 2 or k_max < k_min:
        raise ClusteringError(f"invalid k range [{k_min}, {k_max}]")
    seeds = [base_seed + i for i in range(seeds_per_k)]
    records: list[KRecord] = []
    best_runs: dict[int, ClusterAssignment] = {}
    for k in range(k_min, k_max + 1):
        try:
            runs = [(kmeans(x, k, seed=s), s) for s in seeds]
            best, seed = min(runs, key=lambda r: r[0].inertia)
            _, avg = silhouette(x, best.labels)
            dnn = dunn_index(x, best.labels)
        except ClusteringError as exc:
            records.append(KRecord(k, skipped=str(exc)))
            continue
        records.append(KRecord(k, avg, dnn, best.inertia, seed))
        best_runs[k] = best

    scored = [r for r in records if r.skipped is None]
    admissible = [r for r in scored if r.dnn > 1.0]
    if admissible:
        chosen = max(admissible, key=lambda r: (r.avg, -r.k))
        reason = f"greatest average silhouette among k with Dunn index > 1 (k={chosen.k})"
    elif scored:
        chosen = max(scored, key=lambda r: (r.avg, -r.k))
        reason = f"fallback: no k reached Dunn index > 1; greatest average silhouette overall (k={chosen.k})"
    else:
        return QualityReport(records, None, "no k could be evaluated", seeds)
    return QualityReport(records, chosen.k, reason, seeds, best_runs[chosen.k])

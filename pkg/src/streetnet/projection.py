"""Standardization, PCA and Isomap embeddings of the feature table."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .selection import FeatureMatrix

log = logging.getLogger(__name__)


class ProjectionError(ValueError):
    pass


@dataclass
class Embedding:
    city_ids: list[str]
    coordinates: np.ndarray
    method: str
    diagnostics: dict = field(default_factory=dict)
    # PCA only: loadings (features x d) and the centering vector
    components: np.ndarray | None = None
    mean: np.ndarray | None = None

    @property
    def dims(self) -> int:
        return self.coordinates.shape[1]


def standardize(m: FeatureMatrix) -> FeatureMatrix:
    """Zero mean, unit sample variance (ddof=1) per column."""
    x = m.values
    if np.isnan(x).any():
        raise ProjectionError("standardize needs a complete matrix (undefined cells present)")
    if x.shape[0] < 2:
        raise ProjectionError("standardize needs at least 2 rows")
    sd = x.std(axis=0, ddof=1)
    const = [n for n, s in zip(m.feature_names, sd) if s == 0]
    if const:
        raise ProjectionError(f"constant column(s) cannot be standardized: {const}")
    return FeatureMatrix(list(m.city_ids), list(m.feature_names), (x - x.mean(axis=0)) / sd)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    vectors = vectors.copy()
    for j in range(vectors.shape[1]):
        i = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[i, j] < 0:
            vectors[:, j] = -vectors[:, j]
    return vectors


def symmetric_eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a symmetric matrix, eigenvalues descending."""
    a = np.asarray(a, dtype=float)
    if not np.allclose(a, a.T, rtol=0, atol=1e-10 * max(1.0, np.abs(a).max(initial=0))):
        raise ProjectionError("eigendecomposition requires a symmetric matrix")
    try:
        vals, vecs = np.linalg.eigh((a + a.T) / 2)
    except np.linalg.LinAlgError as exc:
        raise ProjectionError(f"eigen-solver did not converge: {exc}") from None
    order = np.argsort(-vals, kind="stable")
    return vals[order], vecs[:, order]


def pca(m: FeatureMatrix, d: int = 2) -> Embedding:
    x = m.values
    n, p = x.shape
    if not 1 <= d <= min(n - 1, p):
        raise ProjectionError(f"d={d} outside [1, min(rows-1, cols)] = [1, {min(n - 1, p)}]")
    if np.isnan(x).any():
        raise ProjectionError("pca needs a complete matrix")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    vals, vecs = symmetric_eigh(cov)
    vals = np.clip(vals, 0.0, None)
    vecs = _fix_signs(vecs[:, :d])
    total = vals.sum()
    ratios = vals[:d] / total if total > 0 else np.zeros(d)
    return Embedding(
        city_ids=list(m.city_ids),
        coordinates=centered @ vecs,
        method="pca",
        diagnostics={
            "explained_variance": vals[:d].tolist(),
            "explained_variance_ratio": ratios.tolist(),
        },
        components=vecs,
        mean=mean,
    )


def knn_graph(x: np.ndarray, k: int) -> csr_matrix:
    """Symmetrized k-nearest-neighbour graph with Euclidean edge lengths."""
    n = len(x)
    dist = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))
    linked = np.zeros((n, n), dtype=bool)
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")
        linked[i, [j for j in order if j != i][:k]] = True
    linked |= linked.T
    w = np.where(linked, dist, 0.0)
    # coincident neighbours would vanish as zero-weight sparse entries
    w[linked & (w == 0)] = 1e-300
    return csr_matrix(w)


def classical_mds(dist: np.ndarray, d: int) -> tuple[np.ndarray, dict]:
    n = len(dist)
    j = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * j @ (dist**2) @ j
    vals, vecs = symmetric_eigh(b)
    neg = vals < 0
    clamped = float(-vals[neg].sum())
    if clamped > 1e-9 * max(1.0, float(np.abs(vals).sum())):
        log.warning("classical MDS clamped %.6g of negative eigenvalue mass to zero", clamped)
    vals = np.clip(vals, 0.0, None)
    vecs = _fix_signs(vecs[:, :d])
    coords = vecs * np.sqrt(vals[:d])
    return coords, {"eigenvalues": vals[:d].tolist(), "clamped_mass": clamped}


def isomap(m: FeatureMatrix, d: int = 2, k: int = 5, escalate: bool = False) -> Embedding:
    """Classical MDS on k-NN graph geodesics.

    With ``escalate`` the neighbourhood size grows until the graph connects;
    otherwise a disconnected graph is an error.
    """
    x = m.values
    n = len(x)
    if k < 1:
        raise ProjectionError("k must be >= 1")
    if np.isnan(x).any():
        raise ProjectionError("isomap needs a complete matrix")
    if not 1 <= d < n:
        raise ProjectionError(f"d={d} must satisfy 1 <= d < rows ({n})")
    k_used = min(k, n - 1)
    while True:
        graph = knn_graph(x, k_used)
        n_comp, labels = connected_components(graph, directed=False)
        if n_comp == 1:
            break
        if escalate and k_used < n - 1:
            k_used += 1
            continue
        sizes = sorted(np.bincount(labels).tolist(), reverse=True)
        raise ProjectionError(
            f"k-NN graph with k={k_used} is disconnected into {n_comp} components "
            f"of sizes {sizes}; try a larger k"
        )
    geo = shortest_path(graph, method="D", directed=False)
    coords, diag = classical_mds(geo, d)
    emb_dist = np.sqrt(((coords[:, None, :] - coords[None, :, :]) ** 2).sum(-1))
    denom = float((geo**2).sum())
    stress = float(np.sqrt(((geo - emb_dist) ** 2).sum() / denom)) if denom > 0 else 0.0
    diag.update({"k": k, "k_used": k_used, "residual_stress": stress})
    return Embedding(list(m.city_ids), coords, "isomap", diag)

"""Brute-force reference implementations used to cross-check the library.

Everything here is deliberately naive: cubic all-pairs, explicit path
enumeration, direct triangle census. Only meant for graphs of a few nodes.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

INF = math.inf


def floyd_warshall(n: int, edges) -> list[list[float]]:
    d = [[INF] * n for _ in range(n)]
    for i in range(n):
        d[i][i] = 0
    for o, t, w in edges:
        d[o][t] = min(d[o][t], w)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return d


def all_shortest_paths(n: int, edges, s: int, t: int) -> list[tuple[int, ...]]:
    """Every minimum-weight simple path from s to t, by exhaustive DFS."""
    out = {i: [] for i in range(n)}
    for o, d, w in edges:
        out[o].append((d, w))
    best = INF
    found: list[tuple[tuple[int, ...], float]] = []

    def walk(v, path, length):
        nonlocal best
        if v == t:
            found.append((tuple(path), length))
            best = min(best, length)
            return
        for u, w in out[v]:
            if u not in path:
                path.append(u)
                walk(u, path, length + w)
                path.pop()

    walk(s, [s], 0)
    return [p for p, length in found if length == best]


def raw_betweenness_by_enumeration(n: int, edges) -> list[Fraction]:
    """Exact raw betweenness: share of shortest s-t paths through v, summed over ordered pairs."""
    score = [Fraction(0)] * n
    for s, t in itertools.permutations(range(n), 2):
        paths = all_shortest_paths(n, edges, s, t)
        for p in paths:
            for v in p[1:-1]:
                score[v] += Fraction(1, len(paths))
    return score


def entropy_from_degrees(degrees, base=2.0) -> float:
    n = len(degrees)
    counts = {}
    for k in degrees:
        counts[k] = counts.get(k, 0) + 1
    return -sum(c / n * math.log(c / n, base) for c in counts.values()) + 0.0


def clustering_by_census(n: int, edges) -> float | None:
    nbrs = [set() for _ in range(n)]
    for o, d, _ in edges:
        nbrs[o].add(d)
        nbrs[d].add(o)
    triangles = sum(
        1 for a, b, c in itertools.combinations(range(n), 3) if b in nbrs[a] and c in nbrs[a] and c in nbrs[b]
    )
    triples = sum(1 for v in range(n) for _ in itertools.combinations(sorted(nbrs[v]), 2))
    if triples == 0:
        return None
    return 3 * triangles / triples


def pearson_oracle(x, y) -> float:
    return float(np.corrcoef(np.asarray(x, float), np.asarray(y, float))[0, 1])


def best_two_partition_inertia(points: np.ndarray) -> float:
    """Minimum within-cluster sum of squares over every split into two nonempty groups."""
    n = len(points)
    best = INF
    for mask in range(1, 2 ** (n - 1)):
        a = [i for i in range(n) if mask >> i & 1]
        b = [i for i in range(n) if not mask >> i & 1]
        cost = 0.0
        for grp in (a, b):
            p = points[grp]
            cost += float(((p - p.mean(axis=0)) ** 2).sum())
        best = min(best, cost)
    return best


def power_iteration_eigs(a: np.ndarray, count: int, iters: int = 20000, tol: float = 1e-14):
    """Top eigenpairs of a symmetric PSD matrix by power iteration with deflation."""
    a = np.array(a, float)
    vals, vecs = [], []
    rng = np.random.default_rng(12345)
    for _ in range(count):
        v = rng.normal(size=len(a))
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(iters):
            w = a @ v
            nrm = np.linalg.norm(w)
            if nrm == 0:
                break
            w /= nrm
            new_lam = float(w @ a @ w)
            if abs(new_lam - lam) < tol * max(1.0, abs(new_lam)) and np.linalg.norm(w - v) < 1e-10:
                v = w
                lam = new_lam
                break
            v, lam = w, new_lam
        vals.append(lam)
        vecs.append(v)
        a = a - lam * np.outer(v, v)
    return np.array(vals), np.array(vecs).T


def spearman(x, y) -> float:
    rx = np.argsort(np.argsort(x))
    ry = np.argsort(np.argsort(y))
    return pearson_oracle(rx, ry)

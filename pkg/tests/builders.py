"""Small hand-made graphs on integer node ids."""
from __future__ import annotations

import random

from streetnet.graph import GeoPoint, StreetGraph

ORIGIN = GeoPoint(0.0, 0.0)


def make_graph(n: int, edges) -> StreetGraph:
    """Graph on integer nodes 0..n-1 with explicit weights; positions are irrelevant."""
    return StreetGraph.build({i: ORIGIN for i in range(n)}, edges)


def both_ways(pairs, w=1.0):
    out = []
    for a, b in pairs:
        out += [(a, b, w), (b, a, w)]
    return out


def path_graph(n, w=1.0):
    return make_graph(n, both_ways([(i, i + 1) for i in range(n - 1)], w))


def cycle_graph(n, w=1.0, directed=False):
    pairs = [(i, (i + 1) % n) for i in range(n)]
    return make_graph(n, [(a, b, w) for a, b in pairs] if directed else both_ways(pairs, w))


def star_graph(leaves, w=1.0):
    return make_graph(leaves + 1, both_ways([(0, i) for i in range(1, leaves + 1)], w))


def clique_graph(n, w=1.0):
    return make_graph(n, [(a, b, w) for a in range(n) for b in range(n) if a != b])


def random_edges(rng: random.Random, n: int, p: float, integer: bool = True):
    edges = []
    for a in range(n):
        for b in range(n):
            if a != b and rng.random() < p:
                w = rng.randint(1, 5) if integer else rng.uniform(0.1, 10.0)
                edges.append((a, b, w))
    return edges

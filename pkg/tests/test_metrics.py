from __future__ import annotations

import math
import random

import pytest

from builders import both_ways, clique_graph, cycle_graph, make_graph, path_graph, random_edges, star_graph
from oracles import clustering_by_census, entropy_from_degrees, floyd_warshall, pearson_oracle
from streetnet.metrics import (
    CORE_FEATURES,
    GraphAnalysis,
    MetricRegistry,
    UndefinedMetric,
    average_shortest_path,
    central_point_dominance,
    central_point_dominance_classical,
    compute_features,
    degree_assortativity,
    degree_entropy,
    eccentricity_profile,
    global_clustering,
    planar_density,
    reachability,
    two_way_streets,
)


def disjoint_copies(g, copies=2):
    n = len(g)
    edges = []
    for c in range(copies):
        edges += [(e.origin + c * n, e.destination + c * n, e.weight) for e in g.edges]
    return make_graph(n * copies, edges)


# -- entropy ------------------------------------------------------------------------


def test_entropy_examples():
    assert degree_entropy(cycle_graph(4)) == 0.0
    # two nodes of total degree 1 and two of degree 3
    half = make_graph(4, both_ways([(0, 1)]) + [(0, 2, 1), (1, 3, 1)])
    assert sorted(a + b for a, b in zip(half.out_degrees(), half.in_degrees())) == [1, 1, 3, 3]
    assert degree_entropy(half) == 1.0
    star = -(0.8 * math.log2(0.8) + 0.2 * math.log2(0.2))
    assert degree_entropy(star_graph(4)) == pytest.approx(star, rel=1e-15)
    assert degree_entropy(star_graph(4)) == pytest.approx(0.7219280948873623, abs=1e-15)


def test_entropy_configurable_base():
    assert degree_entropy(star_graph(4), base=math.e) == pytest.approx(
        -(0.8 * math.log(0.8) + 0.2 * math.log(0.2)), rel=1e-14
    )


def test_entropy_nonnegative_and_zero_iff_one_class(rng):
    for _ in range(100):
        n = rng.randint(1, 8)
        g = make_graph(n, random_edges(rng, n, 0.4))
        h = degree_entropy(g)
        classes = {a + b for a, b in zip(g.out_degrees(), g.in_degrees())}
        assert h >= 0
        assert (h == 0) == (len(classes) == 1)


# -- average shortest path ------------------------------------------------------------------


def test_average_shortest_path_examples():
    assert average_shortest_path(path_graph(2, w=10.0)) == 10.0
    assert average_shortest_path(cycle_graph(3, directed=True)) == 1.5


def test_average_shortest_path_and_reachability_disconnected():
    g = make_graph(4, [(0, 1, 2.0), (1, 2, 2.0)])
    # reachable ordered pairs: 0->1, 0->2, 1->2 with lengths 2, 4, 2
    assert average_shortest_path(g) == pytest.approx(8 / 3)
    assert reachability(g) == 3 / 12


def test_average_shortest_path_undefined_without_pairs():
    with pytest.raises(UndefinedMetric):
        average_shortest_path(make_graph(3, []))


# -- assortativity -------------------------------------------------------------------------


def test_assortativity_directed_cycle_undefined():
    with pytest.raises(UndefinedMetric):
        degree_assortativity(cycle_graph(5, directed=True))


def test_assortativity_like_to_like_pairs():
    # sources of out-degree k feed targets of in-degree k, k = 1, 2, 3
    edges = []
    nxt = 0
    for k in (1, 2, 3):
        sources = list(range(nxt, nxt + k))
        targets = list(range(nxt + k, nxt + 2 * k))
        nxt += 2 * k
        edges += [(s, t, 1.0) for s in sources for t in targets]
    g = make_graph(nxt, edges)
    outd, ind = g.out_degrees(), g.in_degrees()
    pairs = sorted((outd[e.origin], ind[e.destination]) for e in g.edges)
    assert pairs == [(1, 1)] + [(2, 2)] * 4 + [(3, 3)] * 9
    assert degree_assortativity(g) == 1.0


def test_assortativity_matches_pearson_of_edge_list(rng):
    checked = 0
    while checked < 50:
        n = rng.randint(5, 8)
        all_pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
        chosen = rng.sample(all_pairs, 10)
        g = make_graph(n, [(a, b, 1.0) for a, b in chosen])
        outd, ind = g.out_degrees(), g.in_degrees()
        xs = [outd[a] for a, b in chosen]
        ys = [ind[b] for a, b in chosen]
        if len(set(xs)) < 2 or len(set(ys)) < 2:
            continue
        assert degree_assortativity(g) == pytest.approx(pearson_oracle(xs, ys), rel=1e-12, abs=1e-12)
        checked += 1


# -- eccentricity ---------------------------------------------------------------------------


def test_eccentricity_examples():
    p = eccentricity_profile(path_graph(3))
    assert (p.diameter, p.radius) == (2.0, 1.0)
    assert p.mean_inverse_ecc == pytest.approx(2 / 3, rel=1e-15)
    c = eccentricity_profile(cycle_graph(4))
    assert c.diameter == c.radius == 2.0


def test_eccentricity_undefined_without_reach():
    with pytest.raises(UndefinedMetric):
        eccentricity_profile(make_graph(2, []))


def test_paths_match_floyd_warshall(rng):
    for _ in range(150):
        n = rng.randint(2, 8)
        edges = random_edges(rng, n, rng.uniform(0.15, 0.6))
        g = make_graph(n, edges)
        fw = floyd_warshall(n, edges)
        finite = [fw[i][j] for i in range(n) for j in range(n) if i != j and fw[i][j] < math.inf]
        if not finite:
            continue
        assert average_shortest_path(g) == pytest.approx(sum(finite) / len(finite), rel=1e-15)
        ecc = [max(fw[i][j] for j in range(n) if j != i and fw[i][j] < math.inf) for i in range(n)
               if any(fw[i][j] < math.inf for j in range(n) if j != i)]
        prof = eccentricity_profile(g)
        assert prof.diameter == max(ecc)
        assert prof.radius == min(ecc)
        assert prof.diameter >= prof.radius


# -- density, dominance, two-way, clustering --------------------------------------------------


def test_planar_density_examples():
    assert planar_density(clique_graph(4)) == 1.0
    assert planar_density(make_graph(2, [(0, 1, 1.0)])) == 0.5
    five_six = make_graph(5, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1), (4, 0, 1), (0, 2, 1)])
    assert planar_density(five_six) == 0.3
    with pytest.raises(UndefinedMetric):
        planar_density(make_graph(1, []))


def test_cpd_examples():
    assert central_point_dominance(star_graph(4)) == 0.2
    assert central_point_dominance_classical(star_graph(4)) == 1.0
    assert central_point_dominance(clique_graph(3)) == 0.0
    with pytest.raises(UndefinedMetric):
        central_point_dominance(path_graph(2))


@pytest.mark.parametrize("g", [cycle_graph(5), cycle_graph(6, directed=True), clique_graph(5)])
def test_cpd_zero_on_vertex_transitive(g):
    assert central_point_dominance(g) == 0.0


def test_two_way_examples():
    g = make_graph(3, [(0, 1, 1), (1, 0, 1), (1, 2, 1)])
    assert two_way_streets(g) == 1
    assert two_way_streets(make_graph(0, [])) == 0
    assert two_way_streets(cycle_graph(4)) == 4


def test_clustering_examples():
    assert global_clustering(clique_graph(3)) == 1.0
    assert global_clustering(path_graph(3)) == 0.0
    assert global_clustering(clique_graph(4)) == 1.0
    with pytest.raises(UndefinedMetric):
        global_clustering(path_graph(2))


def test_clustering_matches_census(rng):
    for _ in range(100):
        n = rng.randint(3, 8)
        edges = random_edges(rng, n, rng.uniform(0.1, 0.6))
        expected = clustering_by_census(n, edges)
        g = make_graph(n, edges)
        if expected is None:
            with pytest.raises(UndefinedMetric):
                global_clustering(g)
        else:
            assert global_clustering(g) == pytest.approx(expected, rel=1e-15)


def test_bounds(rng):
    for _ in range(100):
        n = rng.randint(2, 8)
        g = make_graph(n, random_edges(rng, n, 0.4))
        if g.edge_count:
            assert 0 < planar_density(g) <= 1
        assert two_way_streets(g) <= g.edge_count / 2
        try:
            assert 0 <= global_clustering(g) <= 1
        except UndefinedMetric:
            pass


# -- whole feature vectors ----------------------------------------------------------------------


def test_disjoint_copies_algebra():
    g = make_graph(5, both_ways([(0, 1), (1, 2), (2, 3)]) + [(3, 4, 2.0), (4, 0, 1.5)])
    n, e = len(g), g.edge_count
    double = disjoint_copies(g)
    assert degree_entropy(double) == degree_entropy(g)
    assert two_way_streets(double) == 2 * two_way_streets(g)
    assert planar_density(double) == 2 * e / (2 * n * (2 * n - 1))


def test_relabel_invariance(rng):
    registry = MetricRegistry()
    registry.set_enabled("cpd_classical", True)
    for _ in range(40):
        n = rng.randint(3, 9)
        g = make_graph(n, random_edges(rng, n, 0.4, integer=False))
        perm = list(range(n))
        rng.shuffle(perm)
        h = g.relabel({i: 100 + perm[i] for i in range(n)})
        assert compute_features(g, registry).values == compute_features(h, registry).values


def test_compute_features_four_cycle():
    fv = compute_features(cycle_graph(4), city_id="c4")
    assert fv.city_id == "c4"
    assert list(fv.values)[: len(CORE_FEATURES)] == list(CORE_FEATURES)
    assert fv.values["degree_entropy"] == 0.0
    assert fv.values["two_way_streets"] == 4.0
    assert fv.values["planar_density"] == 8 / 12
    assert fv.values["node_count"] == 4.0 and fv.values["edge_count"] == 8.0
    assert "cpd_classical" not in fv.values
    assert fv.flags["degree_assortativity"] == "undefined"
    assert all(flag == "ok" for name, flag in fv.flags.items() if name != "degree_assortativity")


def test_compute_features_edgeless_graph():
    fv = compute_features(make_graph(3, []))
    for name in ("average_shortest_path", "eccentricity", "diameter", "radius", "central_point_dominance",
                 "degree_assortativity", "global_clustering"):
        assert fv.flags[name] == "undefined" and fv.values[name] is None
    assert fv.values["node_count"] == 3.0
    assert fv.values["edge_count"] == 0.0
    assert fv.values["two_way_streets"] == 0.0
    assert fv.values["reachability"] == 0.0


def test_compute_features_rejects_empty():
    with pytest.raises(ValueError):
        compute_features(make_graph(0, []))


def test_compute_features_twelve_node_fixture():
    r = random.Random(7)
    n = 12
    edges = both_ways([(i, i + 1) for i in range(n - 1)], 3.0) + random_edges(r, n, 0.15)
    g = make_graph(n, edges)
    fv = compute_features(g)
    fw = floyd_warshall(n, [(e.origin, e.destination, e.weight) for e in g.edges])
    finite = [fw[i][j] for i in range(n) for j in range(n) if i != j and fw[i][j] < math.inf]
    ecc = [max(fw[i][j] for j in range(n) if j != i) for i in range(n)]
    deg = [a + b for a, b in zip(g.out_degrees(), g.in_degrees())]
    pairs = {(e.origin, e.destination) for e in g.edges}
    outd, ind = g.out_degrees(), g.in_degrees()
    expected = {
        "degree_entropy": entropy_from_degrees(deg),
        "average_shortest_path": sum(finite) / len(finite),
        "degree_assortativity": pearson_oracle([outd[a] for a, b in sorted(pairs)], [ind[b] for a, b in sorted(pairs)]),
        "eccentricity": sum(1 / x for x in ecc) / n,
        "diameter": max(ecc),
        "planar_density": len(pairs) / (n * (n - 1)),
        "central_point_dominance": central_point_dominance(GraphAnalysis(g)),
        "two_way_streets": sum((b, a) in pairs for a, b in pairs) / 2,
        "global_clustering": clustering_by_census(n, [(a, b, 1) for a, b in pairs]),
    }
    for name in CORE_FEATURES:
        assert fv.values[name] == pytest.approx(expected[name], rel=1e-12), name


def test_registry_rules():
    reg = MetricRegistry()
    assert set(CORE_FEATURES) <= set(reg.names)
    with pytest.raises(ValueError, match="already registered"):
        reg.register("diameter", lambda a: 0.0)
    reg.register("constant_one", lambda a: 1.0)
    assert compute_features(path_graph(3), reg).values["constant_one"] == 1.0
    with pytest.raises(ValueError, match="lacks required"):
        MetricRegistry(entries=[e for e in MetricRegistry().entries if e.name != "diameter"])


def test_hops_weighting():
    g = make_graph(3, both_ways([(0, 1)], 100.0) + both_ways([(1, 2)], 300.0))
    assert compute_features(g, weight="hops").values["average_shortest_path"] == pytest.approx(8 / 6)
    assert compute_features(g).values["average_shortest_path"] == pytest.approx(1600 / 6)

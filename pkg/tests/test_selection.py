from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import pearson_oracle
from streetnet.metrics import FeatureVector
from streetnet.selection import (
    ConstantFeature,
    CorrelationMatrix,
    FeatureMatrix,
    correlation_matrix,
    pearson,
    select_features,
)


def data_with_correlation(target: np.ndarray, rows: int, seed: int = 0) -> np.ndarray:
    """Rows whose sample correlation matrix equals ``target`` up to rounding."""
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(rows, len(target)))
    z -= z.mean(axis=0)
    q, _ = np.linalg.qr(z)  # orthonormal, zero-mean columns
    return q @ np.linalg.cholesky(target).T * math.sqrt(rows - 1)


# -- pearson ----------------------------------------------------------------------


def test_pearson_examples():
    x = [1.0, 2.0, 3.0, 4.0]
    assert pearson(x, x) == 1.0
    assert pearson(x, [-v for v in x]) == -1.0
    assert pearson(x, [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-15)


def test_pearson_constant():
    with pytest.raises(ConstantFeature, match="constant feature"):
        pearson([1, 1, 1], [1, 2, 3])


finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(arrays(float, 12, elements=finite), arrays(float, 12, elements=finite), st.floats(0.01, 100), st.floats(-50, 50),
       st.booleans())
@settings(max_examples=200, deadline=None)
def test_pearson_symmetric_and_affine_invariant(x, y, a, b, negate):
    assume(np.ptp(x) > 1e-3 and np.ptp(y) > 1e-3)
    a = -a if negate else a
    r = pearson(x, y)
    assert -1 <= r <= 1
    assert pearson(y, x) == pytest.approx(r, abs=1e-12)
    assert pearson(a * x + b, y) == pytest.approx(math.copysign(1, a) * r, abs=1e-12)
    assert r == pytest.approx(pearson_oracle(x, y), abs=1e-12)


# -- correlation matrix --------------------------------------------------------------


def test_correlation_identical_and_orthogonal_columns():
    x = np.array([1.0, -1.0, 1.0, -1.0])
    y = np.array([1.0, 1.0, -1.0, -1.0])
    m = FeatureMatrix(list("abcd"), ["x", "x2", "y"], np.column_stack([x, x, y]))
    c = correlation_matrix(m)
    assert c.r("x", "x2") == 1.0
    assert c.r("x", "y") == 0.0
    assert np.array_equal(np.diag(c.entries), np.ones(3))
    assert np.array_equal(c.entries, c.entries.T)


def test_correlation_matches_pairwise_oracle():
    rng = np.random.default_rng(5)
    v = rng.normal(size=(5, 3))
    c = correlation_matrix(FeatureMatrix([f"c{i}" for i in range(5)], ["a", "b", "c"], v))
    for i, j in itertools.combinations(range(3), 2):
        assert c.entries[i, j] == pytest.approx(pearson_oracle(v[:, i], v[:, j]), abs=1e-14)


def test_correlation_excludes_constant_and_uses_complete_pairs(caplog):
    v = np.array(
        [
            [1.0, 5.0, 2.0],
            [2.0, 5.0, np.nan],
            [3.0, 5.0, 1.0],
            [4.0, 5.0, 4.0],
            [5.0, 5.0, 3.0],
        ]
    )
    c = correlation_matrix(FeatureMatrix(list("abcde"), ["p", "flat", "q"], v))
    assert c.excluded == ["flat"]
    assert c.feature_names == ["p", "q"]
    assert "constant" in caplog.text
    assert c.r("p", "q") == pytest.approx(pearson_oracle([1, 3, 4, 5], [2, 1, 4, 3]), abs=1e-15)


def test_feature_matrix_from_vectors_sorted():
    vs = [
        FeatureVector("b", {"x": 1.0, "y": None}, {"x": "ok", "y": "undefined"}),
        FeatureVector("a", {"x": 2.0, "y": 3.0}, {"x": "ok", "y": "ok"}),
    ]
    m = FeatureMatrix.from_vectors(vs)
    assert m.city_ids == ["a", "b"]
    assert m.mask.tolist() == [[False, False], [False, True]]
    assert m.complete_rows().city_ids == ["a"]


# -- selection ---------------------------------------------------------------------------


def test_select_all_below_threshold():
    c = CorrelationMatrix(["a", "b"], np.array([[1.0, 0.5], [0.5, 1.0]]))
    assert select_features(c) == (["a", "b"], [])


def test_select_three_correlated_hand_trace():
    # step 1 breaks (a, b): mean |r| a = (0.9 + 0.8) / 2, b = (0.9 + 0.6) / 2, so a goes;
    # step 2 breaks (b, c) on a mean tie, dropping the larger name c
    e = np.array([[1.0, 0.9, 0.8], [0.9, 1.0, 0.6], [0.8, 0.6, 1.0]])
    kept, drops = select_features(CorrelationMatrix(["a", "b", "c"], e))
    assert kept == ["b"]
    assert [(d.step, d.dropped, d.kept, d.r) for d in drops] == [(1, "a", "b", 0.9), (2, "c", "b", 0.6)]
    assert "tie" in drops[1].reason


def test_select_seeded_policy_is_repeatable():
    e = np.array([[1.0, 0.9, 0.8], [0.9, 1.0, 0.6], [0.8, 0.6, 1.0]])
    c = CorrelationMatrix(["a", "b", "c"], e)
    runs = {tuple(select_features(c, policy="seeded", seed=s)[0]) for s in range(40)}
    assert all(len(r) == 1 for r in runs)
    assert len(runs) > 1
    assert select_features(c, policy="seeded", seed=3) == select_features(c, policy="seeded", seed=3)


def test_select_negative_correlation_counts():
    c = CorrelationMatrix(["a", "b"], np.array([[1.0, -0.7], [-0.7, 1.0]]))
    kept, drops = select_features(c)
    assert len(kept) == 1 and drops[0].r == -0.7


def test_select_strict_threshold():
    c = CorrelationMatrix(["a", "b"], np.array([[1.0, 0.5], [0.5, 1.0]]))
    assert select_features(c, threshold=0.5)[0] == ["a", "b"]
    assert len(select_features(c, threshold=0.49)[0]) == 1


@given(st.integers(0, 10_000), st.integers(3, 8))
@settings(max_examples=60, deadline=None)
def test_selected_set_has_no_strong_pair(seed, p):
    rng = np.random.default_rng(seed)
    latent = rng.normal(size=(30, 2))
    v = latent @ rng.normal(size=(2, p)) + 0.4 * rng.normal(size=(30, p))
    m = FeatureMatrix([f"c{i:02d}" for i in range(30)], [f"f{j}" for j in range(p)], v)
    c = correlation_matrix(m)
    kept, drops = select_features(c)
    assert kept == select_features(c)[0]
    assert len(kept) + len(drops) == p
    again = correlation_matrix(m.select(kept))
    off = np.abs(again.entries - np.eye(len(kept)))
    assert off.max() <= 0.5


def test_data_generator_hits_target():
    target = np.array([[1.0, 0.9, 0.1], [0.9, 1.0, 0.2], [0.1, 0.2, 1.0]])
    v = data_with_correlation(target, 40)
    c = correlation_matrix(FeatureMatrix([str(i) for i in range(40)], list("abc"), v))
    assert np.allclose(c.entries, target, atol=1e-12)

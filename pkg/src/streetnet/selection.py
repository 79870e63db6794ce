"""Pearson correlation over the corpus feature table and correlated-feature pruning."""
from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)


class ConstantFeature(ValueError):
    pass


@dataclass
class FeatureMatrix:
    """City x feature table; NaN marks an undefined cell."""

    city_ids: list[str]
    feature_names: list[str]
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.city_ids), len(self.feature_names)):
            raise ValueError(
                f"matrix shape {self.values.shape} does not match "
                f"{len(self.city_ids)} cities x {len(self.feature_names)} features"
            )

    @property
    def mask(self) -> np.ndarray:
        return np.isnan(self.values)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_names.index(name)]

    def select(self, names: Sequence[str]) -> "FeatureMatrix":
        idx = [self.feature_names.index(n) for n in names]
        return FeatureMatrix(list(self.city_ids), list(names), self.values[:, idx])

    def drop_cities(self, city_ids) -> "FeatureMatrix":
        drop = set(city_ids)
        rows = [i for i, c in enumerate(self.city_ids) if c not in drop]
        return FeatureMatrix([self.city_ids[i] for i in rows], list(self.feature_names), self.values[rows])

    def complete_rows(self) -> "FeatureMatrix":
        rows = ~self.mask.any(axis=1)
        return FeatureMatrix(
            [c for c, keep in zip(self.city_ids, rows) if keep], list(self.feature_names), self.values[rows]
        )

    @classmethod
    def from_vectors(cls, vectors) -> "FeatureMatrix":
        vectors = sorted(vectors, key=lambda v: v.city_id)
        if not vectors:
            return cls([], [], np.empty((0, 0)))
        names = list(vectors[0].values)
        for v in vectors:
            if list(v.values) != names:
                raise ValueError(f"feature names of {v.city_id!r} differ from the corpus")
        vals = [[math.nan if v.values[n] is None else v.values[n] for n in names] for v in vectors]
        return cls([v.city_id for v in vectors], names, np.array(vals, dtype=float))


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-D vectors of equal length")
    if len(x) < 2:
        raise ValueError("pearson needs at least 2 observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ConstantFeature("constant feature")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


@dataclass
class CorrelationMatrix:
    feature_names: list[str]
    entries: np.ndarray
    excluded: list[str] = field(default_factory=list)

    def r(self, a: str, b: str) -> float:
        return float(self.entries[self.feature_names.index(a), self.feature_names.index(b)])

    def subset(self, names: Sequence[str]) -> "CorrelationMatrix":
        idx = [self.feature_names.index(n) for n in names]
        return CorrelationMatrix(list(names), self.entries[np.ix_(idx, idx)])


def _is_constant(col: np.ndarray) -> bool:
    finite = col[~np.isnan(col)]
    return finite.size < 2 or bool(np.all(finite == finite[0]))


def correlation_matrix(m: FeatureMatrix, min_rows: int = 3) -> CorrelationMatrix:
    """Pairwise-complete Pearson matrix; constant columns are excluded."""
    excluded = [n for j, n in enumerate(m.feature_names) if _is_constant(m.values[:, j])]
    for n in excluded:
        log.warning("feature %r is constant over the corpus; excluded from correlation", n)
    names = [n for n in m.feature_names if n not in excluded]
    cols = [m.column(n) for n in names]
    k = len(names)
    entries = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            both = ~np.isnan(cols[i]) & ~np.isnan(cols[j])
            if both.sum() < min_rows:
                raise ValueError(
                    f"features {names[i]!r} and {names[j]!r} share only {int(both.sum())} defined rows"
                )
            try:
                r = pearson(cols[i][both], cols[j][both])
            except ConstantFeature:
                raise ConstantFeature(
                    f"features {names[i]!r}/{names[j]!r} are constant on their shared rows"
                ) from None
            entries[i, j] = entries[j, i] = r
    return CorrelationMatrix(names, entries, excluded)


@dataclass(frozen=True)
class DropRecord:
    step: int
    dropped: str
    kept: str
    r: float
    reason: str


def select_features(
    c: CorrelationMatrix,
    threshold: float = 0.5,
    policy: str = "deterministic",
    seed: int | None = None,
) -> tuple[list[str], list[DropRecord]]:
    """Repeatedly break the strongest pair with |r| > threshold until none remain.

    ``deterministic`` drops the pair member with the larger mean |r| to the
    other remaining features (ties: the lexicographically larger name);
    ``seeded`` drops a uniformly random member using ``seed``.
    """
    if policy not in ("deterministic", "seeded"):
        raise ValueError(f"unknown selection policy {policy!r}")
    rng = random.Random(seed)
    remaining = list(c.feature_names)
    absr = np.abs(c.entries)
    pos = {n: i for i, n in enumerate(c.feature_names)}
    drops: list[DropRecord] = []
    step = 0
    while True:
        worst = None
        for a_i in range(len(remaining)):
            for b_i in range(a_i + 1, len(remaining)):
                a, b = sorted((remaining[a_i], remaining[b_i]))
                v = absr[pos[a], pos[b]]
                if v > threshold and (worst is None or v > worst[0] or (v == worst[0] and (a, b) < worst[1])):
                    worst = (v, (a, b))
        if worst is None:
            break
        step += 1
        a, b = worst[1]
        if policy == "seeded":
            victim = rng.choice((a, b))
            reason = "seeded random choice"
        else:
            ma, mb = (_mean_abs(absr, pos, x, remaining) for x in (a, b))
            if ma != mb:
                victim = a if ma > mb else b
                reason = f"larger mean |r| ({max(ma, mb):.6g} vs {min(ma, mb):.6g})"
            else:
                victim = b
                reason = "mean |r| tie; lexicographically larger name"
        survivor = b if victim == a else a
        drops.append(DropRecord(step, victim, survivor, float(c.r(a, b)), reason))
        remaining.remove(victim)
    return remaining, drops


def _mean_abs(absr: np.ndarray, pos: dict[str, int], name: str, remaining: list[str]) -> float:
    others = [pos[o] for o in remaining if o != name]
    if not others:
        return 0.0
    return float(np.mean(absr[pos[name], others]))

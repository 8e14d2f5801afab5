"""Pairwise disagreement metrics between two feature-attribution vectors.

Six metrics. Four compare the top-k features (selected by attribution
magnitude): feature agreement (shared membership), rank agreement (shared
membership at the same rank), sign agreement (shared membership with the
same sign), and signed rank agreement (same rank and sign). Two compare a
chosen feature subset: Spearman rank correlation and pairwise rank
agreement over all feature pairs. Higher values always mean stronger
agreement.

Tie conventions are fixed so every metric is a total, deterministic
function: equal magnitudes are ordered by ascending feature index when
selecting and ranking top-k features; sign(0) = 0, and two zeros count as
matching signs; Spearman uses average ranks with the tie-corrected
(Pearson-on-ranks) formula; a relative-order comparison where one
explanation ties and the other does not counts as disagreement.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import MetricError

__all__ = [
    "METRIC_IDS",
    "TOP_K_METRICS",
    "SUBSET_METRICS",
    "TopKSelection",
    "DegenerateRankingWarning",
    "top_features",
    "feature_agreement",
    "rank_agreement",
    "sign_agreement",
    "signed_rank_agreement",
    "rank_correlation",
    "pairwise_rank_agreement",
    "compute_metric",
]

TOP_K_METRICS = (
    "feature_agreement",
    "rank_agreement",
    "sign_agreement",
    "signed_rank_agreement",
)
SUBSET_METRICS = ("rank_correlation", "pairwise_rank_agreement")
METRIC_IDS = TOP_K_METRICS + SUBSET_METRICS

RANKING_BASES = ("magnitude", "signed")


class DegenerateRankingWarning(UserWarning):
    """All compared values tied on one side; rank correlation is set to 0."""


@dataclass(frozen=True)
class TopKSelection:
    """The k most important feature indices, strongest first."""

    k: int
    features: tuple[int, ...]


def _values(e) -> np.ndarray:
    v = np.asarray(getattr(e, "values", e), dtype=float)
    if v.ndim != 1:
        raise MetricError(f"attribution values must be 1-d, got shape {v.shape}")
    return v


def _pair(ea, eb) -> tuple[np.ndarray, np.ndarray]:
    a, b = _values(ea), _values(eb)
    if a.shape != b.shape:
        raise MetricError(f"attribution lengths differ: {a.shape[0]} vs {b.shape[0]}")
    return a, b


def _magnitude_order(v: np.ndarray) -> np.ndarray:
    """All feature indices sorted by descending |value|, ties by index."""
    # lexsort uses the last key as primary
    return np.lexsort((np.arange(v.shape[0]), -np.abs(v)))


def _check_k(k: int, d: int) -> int:
    k = int(k)
    if not 1 <= k <= d:
        raise MetricError(f"k must be in [1, {d}], got {k}")
    return k


def top_features(e, k: int) -> TopKSelection:
    """Top-k features by attribution magnitude, strongest first."""
    v = _values(e)
    k = _check_k(k, v.shape[0])
    order = _magnitude_order(v)
    return TopKSelection(k=k, features=tuple(int(i) for i in order[:k]))


@lru_cache(maxsize=8192)
def _ranks_cached(buf: bytes, d: int) -> np.ndarray:
    v = np.frombuffer(buf, dtype=float)
    order = np.lexsort((np.arange(d), -np.abs(v)))
    ranks = np.empty(d, dtype=np.intp)
    ranks[order] = np.arange(d)
    ranks.setflags(write=False)
    return ranks


def _ranks(v: np.ndarray) -> np.ndarray:
    """ranks[i] = position (0-based) of feature i in the magnitude order.

    Cached on the raw bytes: metric sweeps evaluate many (k, metric)
    combinations against the same attribution vectors.
    """
    return _ranks_cached(np.ascontiguousarray(v).tobytes(), v.shape[0])


def feature_agreement(ea, eb, k: int) -> float:
    """Fraction of the top-k features shared by both explanations."""
    a, b = _pair(ea, eb)
    k = _check_k(k, a.shape[0])
    ra, rb = _ranks(a), _ranks(b)
    return float(np.sum((ra < k) & (rb < k))) / k


def rank_agreement(ea, eb, k: int) -> float:
    """Fraction of features in both top-k sets that sit at the same rank."""
    a, b = _pair(ea, eb)
    k = _check_k(k, a.shape[0])
    ra, rb = _ranks(a), _ranks(b)
    both = (ra < k) & (rb < k)
    return float(np.sum(both & (ra == rb))) / k


def sign_agreement(ea, eb, k: int) -> float:
    """Fraction of features in both top-k sets whose signs match."""
    a, b = _pair(ea, eb)
    k = _check_k(k, a.shape[0])
    ra, rb = _ranks(a), _ranks(b)
    both = (ra < k) & (rb < k)
    return float(np.sum(both & (np.sign(a) == np.sign(b)))) / k


def signed_rank_agreement(ea, eb, k: int) -> float:
    """Fraction of features in both top-k sets matching on rank and sign."""
    a, b = _pair(ea, eb)
    k = _check_k(k, a.shape[0])
    ra, rb = _ranks(a), _ranks(b)
    both = (ra < k) & (rb < k)
    return float(np.sum(both & (ra == rb) & (np.sign(a) == np.sign(b)))) / k


def _subset(a: np.ndarray, subset) -> np.ndarray:
    if subset is None:
        return np.arange(a.shape[0])
    idx = np.asarray(subset, dtype=int)
    if idx.ndim != 1 or idx.shape[0] < 2:
        raise MetricError("feature subset must hold at least 2 distinct indices")
    if np.unique(idx).shape[0] != idx.shape[0]:
        raise MetricError("feature subset indices must be distinct")
    if idx.min() < 0 or idx.max() >= a.shape[0]:
        raise MetricError(f"feature subset indices out of range [0, {a.shape[0]})")
    return idx


def _ranking_values(v: np.ndarray, by: str) -> np.ndarray:
    if by == "magnitude":
        return np.abs(v)
    if by == "signed":
        return v
    raise MetricError(f"ranking basis must be one of {RANKING_BASES}, got {by!r}")


def _average_ranks(v: np.ndarray) -> np.ndarray:
    """Fractional ranks (1-based, ascending); tied values share the mean rank."""
    n = v.shape[0]
    order = np.argsort(v, kind="stable")
    inv = np.empty(n, dtype=int)
    inv[order] = np.arange(n)
    sv = v[order]
    new_group = np.r_[True, sv[1:] != sv[:-1]]
    group_id = np.cumsum(new_group) - 1
    starts = np.flatnonzero(new_group)
    ends = np.r_[starts[1:], n]
    mean_rank = 0.5 * (starts + ends - 1) + 1.0
    return mean_rank[group_id[inv]]


def rank_correlation(ea, eb, subset=None, by: str = "magnitude") -> float:
    """Spearman correlation of the two rankings over a feature subset.

    Rankings compare attribution magnitudes by default (``by="signed"``
    switches to raw values). Ties get average ranks and the coefficient is
    Pearson's on those ranks. If either side has zero rank variance the
    result is defined as 0 and a DegenerateRankingWarning is issued.
    """
    a, b = _pair(ea, eb)
    idx = _subset(a, subset)
    ra = _average_ranks(_ranking_values(a[idx], by))
    rb = _average_ranks(_ranking_values(b[idx], by))
    ra = ra - ra.mean()
    rb = rb - rb.mean()
    va, vb = float(ra @ ra), float(rb @ rb)
    if va == 0.0 or vb == 0.0:
        warnings.warn(
            "all compared attribution values are tied; rank correlation set to 0",
            DegenerateRankingWarning,
            stacklevel=2,
        )
        return 0.0
    return float((ra @ rb) / np.sqrt(va * vb))


def pairwise_rank_agreement(ea, eb, subset=None, by: str = "magnitude") -> float:
    """Fraction of feature pairs whose relative importance order matches.

    Each pair is compared by the trichotomy (less / tied / greater) of
    importance, so a pair tied in one explanation but not the other counts
    as disagreement, while a pair tied in both counts as agreement.
    """
    a, b = _pair(ea, eb)
    idx = _subset(a, subset)
    va = _ranking_values(a[idx], by)
    vb = _ranking_values(b[idx], by)
    i, j = np.triu_indices(idx.shape[0], k=1)
    cmp_a = np.sign(va[i] - va[j])
    cmp_b = np.sign(vb[i] - vb[j])
    return float(np.mean(cmp_a == cmp_b))


def compute_metric(metric_id: str, ea, eb, k: int | None = None, subset=None) -> float:
    """Uniform dispatch by metric id (see METRIC_IDS)."""
    if metric_id in TOP_K_METRICS:
        if k is None:
            raise MetricError(f"{metric_id} requires k")
        fn = {
            "feature_agreement": feature_agreement,
            "rank_agreement": rank_agreement,
            "sign_agreement": sign_agreement,
            "signed_rank_agreement": signed_rank_agreement,
        }[metric_id]
        return fn(ea, eb, k)
    if metric_id == "rank_correlation":
        return rank_correlation(ea, eb, subset)
    if metric_id == "pairwise_rank_agreement":
        return pairwise_rank_agreement(ea, eb, subset)
    raise MetricError(f"unknown metric {metric_id!r}; valid ids: {', '.join(METRIC_IDS)}")

"""Meta-feature extraction and the content-based (traditional) recommender.

The content baseline characterizes datasets by simple statistical and
information-theoretic measures, finds the nearest training datasets in
z-scored meta-feature space, and predicts each configuration's accuracy as
the neighbor mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .experiments import Dataset
from .recommend import Recommendation, top_k

__all__ = ["MetaFeatureVector", "meta_features", "content_recommend"]

_FIELD_ORDER = (
    "n_instances",
    "n_features",
    "n_classes",
    "log_n_instances",
    "log_n_features",
    "log_n_classes",
    "class_entropy",
    "mean_feature_entropy",
    "mean_feature_skewness",
    "mean_feature_kurtosis",
    "majority_class_fraction",
)


@dataclass(frozen=True)
class MetaFeatureVector:
    """Dataset characterization used by the content baseline.

    Entropies are in bits; skewness/kurtosis are the mean over numeric
    features (0 when there are none, as is mean_feature_entropy when there
    are no categorical features).
    """

    n_instances: float
    n_features: float
    n_classes: float
    log_n_instances: float
    log_n_features: float
    log_n_classes: float
    class_entropy: float
    mean_feature_entropy: float
    mean_feature_skewness: float
    mean_feature_kurtosis: float
    majority_class_fraction: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in _FIELD_ORDER], dtype=float)


def _entropy_bits(counts: Sequence[int]) -> float:
    total = sum(counts)
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h


def _moments(x: np.ndarray) -> tuple[float, float]:
    """(skewness, excess kurtosis) with zero-variance features contributing 0."""
    mu = x.mean()
    m2 = ((x - mu) ** 2).mean()
    if m2 <= 0:
        return 0.0, 0.0
    m3 = ((x - mu) ** 3).mean()
    m4 = ((x - mu) ** 4).mean()
    return float(m3 / m2**1.5), float(m4 / m2**2 - 3.0)


def meta_features(d: Dataset) -> MetaFeatureVector:
    """Deterministic meta-feature vector; invariant to instance order."""
    counts = sorted(d.class_counts().values())
    n = d.n_instances
    class_entropy = _entropy_bits(counts)

    cat_entropies = []
    skews = []
    kurts = []
    for col in d.columns:
        if col.kind == "categorical":
            value_counts: dict[str, int] = {}
            for v in col.values:
                value_counts[str(v)] = value_counts.get(str(v), 0) + 1
            cat_entropies.append(_entropy_bits(sorted(value_counts.values())))
        else:
            # sort first so the summation order (and thus the result) is
            # exactly invariant to instance order
            s, k = _moments(np.sort(col.values.astype(float)))
            skews.append(s)
            kurts.append(k)

    return MetaFeatureVector(
        n_instances=float(n),
        n_features=float(d.n_features),
        n_classes=float(len(counts)),
        log_n_instances=math.log(n),
        log_n_features=math.log(d.n_features),
        log_n_classes=math.log(len(counts)),
        class_entropy=class_entropy,
        mean_feature_entropy=float(np.mean(cat_entropies)) if cat_entropies else 0.0,
        mean_feature_skewness=float(np.mean(skews)) if skews else 0.0,
        mean_feature_kurtosis=float(np.mean(kurts)) if kurts else 0.0,
        majority_class_fraction=max(counts) / n,
    )


def _row_items(row) -> list[tuple[str, float]]:
    if isinstance(row, Mapping):
        return [(str(k), float(v)) for k, v in row.items()]
    return [(str(k), float(v)) for k, v in row]


def content_recommend(
    target: MetaFeatureVector,
    training: Sequence[tuple[MetaFeatureVector, object]],
    n_neighbors: int,
    k: int,
    dataset_id: str = "",
) -> Recommendation:
    """Nearest-neighbor content recommendation over meta-feature space.

    Meta-features are z-scored with training-pool statistics (zero-variance
    fields dropped); the predicted row is the per-config mean over the
    ``n_neighbors`` nearest training rows, ranked by ``top_k``.
    """
    if not training:
        raise ValueError("training pool must be non-empty")
    if not (1 <= n_neighbors <= len(training)):
        raise ValueError(
            f"n_neighbors must be in [1, {len(training)}], got {n_neighbors}"
        )
    rows = [_row_items(row) for _, row in training]
    config_ids = [cid for cid, _ in rows[0]]
    for items in rows[1:]:
        if [cid for cid, _ in items] != config_ids:
            raise ValueError("training rows must share one configuration list")

    pool = np.stack([mfv.as_array() for mfv, _ in training])
    mean = pool.mean(axis=0)
    std = pool.std(axis=0)
    keep = std > 0
    if keep.any():
        z_pool = (pool[:, keep] - mean[keep]) / std[keep]
        z_target = (target.as_array()[keep] - mean[keep]) / std[keep]
        dist = np.sqrt(((z_pool - z_target) ** 2).sum(axis=1))
    else:
        dist = np.zeros(len(training))
    order = np.argsort(dist, kind="stable")[:n_neighbors]

    values = np.array([[v for _, v in rows[i]] for i in order])
    predicted = values.mean(axis=0)
    pairs = list(zip(config_ids, predicted.tolist()))
    return top_k(pairs, k, dataset_id)

"""Turn completed matrix rows into ranked recommendations and oracle scores."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import EvaluationError

__all__ = ["Recommendation", "top_k", "score_best_of_topk", "oracle_best"]


@dataclass(frozen=True)
class Recommendation:
    """Ranked configurations for one dataset, highest predicted accuracy first."""

    dataset_id: str
    ranked_configs: tuple[tuple[str, float], ...]
    k: int


def top_k(
    completed_row: Sequence[tuple[str, float]],
    k: int,
    dataset_id: str = "",
) -> Recommendation:
    """The k highest-valued configs; ties break toward the earlier column."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    pairs = list(completed_row)
    if not pairs:
        raise ValueError("cannot rank an empty row")
    order = sorted(range(len(pairs)), key=lambda j: (-pairs[j][1], j))
    ranked = tuple((pairs[j][0], float(pairs[j][1])) for j in order[:k])
    return Recommendation(dataset_id=dataset_id, ranked_configs=ranked, k=k)


def score_best_of_topk(true_row: Mapping[str, float], rec: Recommendation) -> float:
    """Best TRUE accuracy among the recommended configs (not the predicted one)."""
    missing = [cid for cid, _ in rec.ranked_configs if cid not in true_row]
    if missing:
        raise EvaluationError(
            f"no true accuracy for recommended config(s): {', '.join(missing)}"
        )
    return max(float(true_row[cid]) for cid, _ in rec.ranked_configs)


def oracle_best(true_row: Mapping[str, float], candidates: Iterable[str]) -> float:
    """Maximum true accuracy over the candidate configs present in the row."""
    present = [float(true_row[c]) for c in candidates if c in true_row]
    if not present:
        raise ValueError("no candidate config has an observed accuracy in this row")
    return max(present)

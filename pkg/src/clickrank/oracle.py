"""Simulated feedback agent.

Stands in for a human clicking likes and dislikes: given the candidates
shown after a retrieval round and the (hidden) target, it likes the
candidates most similar to the target and dislikes the least similar
ones.  Similarity is judged either in the preference embedding space (a
deliberately different space from the one the retrieval engine scores
with) or by attribute-set overlap.

The oracle never sees the retrieval embeddings or any adapter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ranker import Feedback
from .store import Dataset

MODES = ("preference_embedding", "attribute_iou")


@dataclass(frozen=True)
class OracleConfig:
    n_like: int = 1
    n_dislike: int = 1
    mode: str = "preference_embedding"

    def __post_init__(self):
        if self.n_like < 1 or self.n_dislike < 1:
            raise ValueError("n_like and n_dislike must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES} (got {self.mode!r})")


def attribute_iou(a: frozenset[str] | set[str], b: frozenset[str] | set[str]) -> float:
    """Intersection-over-union of two attribute sets."""
    if not a or not b:
        raise ValueError("empty attribute set")
    return len(a & b) / len(a | b)


def _target_similarities(
    candidates: list[int], target: int, cfg: OracleConfig, dataset: Dataset
) -> dict[int, float]:
    if cfg.mode == "attribute_iou":
        target_attrs = dataset.items[target].attributes
        return {
            c: attribute_iou(dataset.items[c].attributes, target_attrs)
            for c in candidates
        }
    pref = dataset.preference_images.rows.astype(np.float64)
    target_vec = pref[target]
    return {c: float(pref[c] @ target_vec) for c in candidates}


def give_feedback(
    candidates: list[int] | tuple[int, ...],
    target: int,
    cfg: OracleConfig,
    dataset: Dataset,
) -> Feedback:
    """Pick the liked and disliked candidates for one feedback round.

    Likes are the ``n_like`` candidates most similar to the target,
    best-first; dislikes are the ``n_dislike`` least similar among the
    remaining ones, worst-first.  All ties break toward the lower item id,
    so the result depends only on the candidate *set*.
    """
    candidates = [int(c) for c in candidates]
    if not candidates:
        raise ValueError("candidates must be non-empty")
    if len(set(candidates)) != len(candidates):
        raise ValueError("duplicate candidate id")
    n = dataset.n_items
    for c in candidates:
        if not 0 <= c < n:
            raise ValueError(f"invalid candidate id {c}")
    if not 0 <= target < n:
        raise ValueError(f"invalid target id {target}")
    if cfg.n_like + cfg.n_dislike > len(candidates):
        raise ValueError(
            f"n_like + n_dislike = {cfg.n_like + cfg.n_dislike} exceeds "
            f"candidate pool size {len(candidates)}"
        )

    sims = _target_similarities(candidates, target, cfg, dataset)
    best_first = sorted(candidates, key=lambda c: (-sims[c], c))
    likes = best_first[: cfg.n_like]
    remaining = [c for c in candidates if c not in set(likes)]
    worst_first = sorted(remaining, key=lambda c: (sims[c], c))
    dislikes = worst_first[: cfg.n_dislike]
    return Feedback(tuple(likes), tuple(dislikes))

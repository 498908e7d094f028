"""Candidate selection for the feedback round.

Plain mode shows the top-k scored items.  With a positive diversity
weight, selection turns greedy: each step picks the item maximizing
(score - lambda_diversity * mean similarity to the already-selected),
which spreads the shown candidates out in embedding space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoders import EncodedIndex
from .ranker import top_k


@dataclass(frozen=True)
class SelectorConfig:
    k: int = 10
    lambda_diversity: float = 0.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        if not np.isfinite(self.lambda_diversity) or self.lambda_diversity < 0:
            raise ValueError("lambda_diversity must be finite and >= 0")


def select_candidates(
    scores: np.ndarray, index: EncodedIndex, cfg: SelectorConfig
) -> list[int]:
    """Pick cfg.k candidate ids to show the feedback agent.

    With lambda_diversity == 0 this is exactly ``top_k`` (same tie-breaks).
    Otherwise selection is greedy over all items: the first pick is the
    plain argmax, each later pick maximizes
    score[i] - lambda_diversity * mean_j sim(i, selected_j),
    with already-selected items excluded and ties broken by ascending id.
    """
    scores = np.asarray(scores)
    n = scores.shape[0]
    if cfg.k > n:
        raise ValueError(f"k={cfg.k} exceeds item count {n}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("non-finite score")
    if cfg.lambda_diversity == 0.0:
        return top_k(scores, cfg.k)

    base = scores.astype(np.float64)
    uni = index.unimodal.astype(np.float64)
    sim_sum = np.zeros(n, dtype=np.float64)
    chosen: list[int] = []
    picked = np.zeros(n, dtype=bool)
    for step in range(cfg.k):
        if step == 0:
            objective = base.copy()
        else:
            objective = base - cfg.lambda_diversity * (sim_sum / step)
        objective[picked] = -np.inf
        pick = int(np.argmax(objective))  # argmax takes the lowest id on ties
        chosen.append(pick)
        picked[pick] = True
        sim_sum += uni @ uni[pick]
    return chosen

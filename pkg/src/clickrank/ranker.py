"""Similarity, scoring and exact ranking.

Scoring is a brute-force scan over the encoded item matrix: a cosine term
against the query plus, when feedback is present, the mean similarity to
the liked items (weighted by ``lambda_p``) minus the mean similarity to the
disliked ones (weighted by ``lambda_n``).  Ranking sorts scores descending
with ties broken by ascending item id, so it is a pure function of the
score array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .encoders import EncodedIndex


@dataclass(frozen=True)
class RankerParams:
    """Feedback term weights; the defaults favor positive feedback 2:1."""

    lambda_p: float = 1.0
    lambda_n: float = 0.5

    def __post_init__(self):
        for name in ("lambda_p", "lambda_n"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0 (got {value})")


@dataclass(frozen=True)
class Feedback:
    """The liked and disliked item-id lists of one feedback round."""

    likes: tuple[int, ...] = ()
    dislikes: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "likes", tuple(int(i) for i in self.likes))
        object.__setattr__(self, "dislikes", tuple(int(i) for i in self.dislikes))
        if len(set(self.likes)) != len(self.likes):
            raise ValueError("duplicate id in likes")
        if len(set(self.dislikes)) != len(self.dislikes):
            raise ValueError("duplicate id in dislikes")
        if set(self.likes) & set(self.dislikes):
            raise ValueError("likes and dislikes overlap")

    @property
    def is_empty(self) -> bool:
        return not self.likes and not self.dislikes


@dataclass(frozen=True)
class Ranking:
    """A full permutation: rank[i] is the 1-based rank of item i."""

    rank: np.ndarray
    order: np.ndarray

    def __post_init__(self):
        self.rank.flags.writeable = False
        self.order.flags.writeable = False


def similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1]."""
    u64 = np.asarray(u, dtype=np.float64)
    v64 = np.asarray(v, dtype=np.float64)
    if not (np.all(np.isfinite(u64)) and np.all(np.isfinite(v64))):
        raise ValueError("non-finite vector")
    nu = np.linalg.norm(u64)
    nv = np.linalg.norm(v64)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("zero-norm vector")
    return float(np.clip(np.dot(u64, v64) / (nu * nv), -1.0, 1.0))


def group_similarity(v: np.ndarray, group: np.ndarray) -> float:
    """Mean cosine similarity between v and each row of group."""
    group = np.atleast_2d(np.asarray(group))
    if group.shape[0] == 0:
        raise ValueError("empty group")
    return float(np.mean([similarity(v, g) for g in group]))


def _check_query(query_vec: np.ndarray, index: EncodedIndex) -> np.ndarray:
    q = np.ascontiguousarray(query_vec, dtype=np.float32)
    if q.ndim != 1 or q.shape[0] != index.dim:
        raise ValueError(
            f"dimension mismatch: query has {q.shape}, index dim is {index.dim}"
        )
    return q


def score_no_feedback(query_vec: np.ndarray, index: EncodedIndex) -> np.ndarray:
    """score[i] = similarity of item i to the query (normalized inputs)."""
    q = _check_query(query_vec, index)
    return kernels.dot_scores(index.crossmodal, q)


def _gather(index: EncodedIndex, ids: tuple[int, ...]) -> np.ndarray:
    n = index.n_items
    for i in ids:
        if not 0 <= i < n:
            raise ValueError(f"invalid id {i}")
    if not ids:
        return np.empty((0, index.dim), dtype=np.float32)
    return np.ascontiguousarray(index.unimodal[list(ids)])


def score_with_feedback(
    query_vec: np.ndarray,
    feedback: Feedback,
    params: RankerParams,
    index: EncodedIndex,
) -> np.ndarray:
    """Query score plus weighted mean-similarity feedback terms.

    score[i] = <item_i, query>
               + lambda_p * mean similarity to liked items
               - lambda_n * mean similarity to disliked items

    An empty likes or dislikes list contributes exactly zero, so with both
    weights zero this reduces bit-for-bit to :func:`score_no_feedback`.
    """
    q = _check_query(query_vec, index)
    like_rows = _gather(index, feedback.likes)
    dislike_rows = _gather(index, feedback.dislikes)
    return kernels.feedback_scores(
        index.crossmodal,
        q,
        index.unimodal,
        like_rows,
        dislike_rows,
        params.lambda_p,
        params.lambda_n,
    )


def rank(scores: np.ndarray) -> Ranking:
    """Full ranking: descending score, ties broken by ascending item id."""
    scores = np.asarray(scores)
    if scores.ndim != 1 or scores.shape[0] == 0:
        raise ValueError("scores must be a non-empty 1-d array")
    if not np.all(np.isfinite(scores)):
        bad = int(np.argmax(~np.isfinite(scores)))
        raise ValueError(f"non-finite score at index {bad}")
    order = np.argsort(-scores.astype(np.float64), kind="stable")
    ranks = np.empty(scores.shape[0], dtype=np.int64)
    ranks[order] = np.arange(1, scores.shape[0] + 1)
    return Ranking(rank=ranks, order=order)


def top_k(scores: np.ndarray, k: int) -> list[int]:
    """First k ids of the full ranking (same tie-break contract)."""
    n = np.asarray(scores).shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}] (got {k})")
    return [int(i) for i in rank(scores).order[:k]]

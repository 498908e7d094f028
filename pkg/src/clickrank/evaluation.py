"""Retrieval metrics, the three-step benchmark protocol, and ablation grids.

The protocol runs, per test query: (1) text-only retrieval and the
target's baseline rank, (2) candidate selection and simulated feedback,
(3) feedback-weighted re-ranking and the target's updated rank.  Reports
carry per-query ranks for both stages plus the aggregate recall/median/
mean-rank numbers, and serialize to JSON with stable key order so golden
files diff cleanly.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .encoders import EncoderStack, encode_dataset
from .oracle import OracleConfig, give_feedback
from .ranker import RankerParams, rank, score_no_feedback, score_with_feedback
from .selector import SelectorConfig, select_candidates
from .store import Dataset, encode_query

DEFAULT_RECALL_KS = (1, 5, 10)


@dataclass(frozen=True)
class ProtocolParams:
    ranker: RankerParams = field(default_factory=RankerParams)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    recall_ks: tuple[int, ...] = DEFAULT_RECALL_KS
    exclude_target_feedback: bool = False

    def __post_init__(self):
        ks = tuple(int(k) for k in self.recall_ks)
        if not ks or any(k < 1 for k in ks) or list(ks) != sorted(ks):
            raise ValueError("recall_ks must be ascending positive integers")
        object.__setattr__(self, "recall_ks", ks)

    def to_dict(self) -> dict:
        return {
            "lambda_p": self.ranker.lambda_p,
            "lambda_n": self.ranker.lambda_n,
            "n_like": self.oracle.n_like,
            "n_dislike": self.oracle.n_dislike,
            "oracle_mode": self.oracle.mode,
            "k": self.selector.k,
            "lambda_diversity": self.selector.lambda_diversity,
            "recall_ks": list(self.recall_ks),
            "exclude_target_feedback": self.exclude_target_feedback,
        }


def recall_at_k(ranks, k: int) -> float:
    """Fraction of queries whose target ranked within the top k (rank <= k)."""
    if k < 1:
        raise ValueError("K must be >= 1")
    ranks = list(ranks)
    if not ranks:
        raise ValueError("empty rank list")
    return sum(1 for r in ranks if r <= k) / len(ranks)


def median_rank(ranks) -> int:
    """Median rank; even counts take the lower-middle element."""
    ranks = sorted(ranks)
    if not ranks:
        raise ValueError("empty rank list")
    return int(ranks[(len(ranks) - 1) // 2])


def mean_rank(ranks) -> float:
    ranks = list(ranks)
    if not ranks:
        raise ValueError("empty rank list")
    return float(np.mean(ranks))


def stage_metrics(ranks, recall_ks=DEFAULT_RECALL_KS) -> dict:
    return {
        "r_at": {str(k): recall_at_k(ranks, k) for k in recall_ks},
        "medr": median_rank(ranks),
        "meanr": mean_rank(ranks),
    }


@dataclass
class Report:
    """Outcome of one protocol run over a query split."""

    params: dict
    seed: int
    baseline: dict
    feedback: dict
    per_query: list[dict]
    wall_time_s: float

    def canonical_dict(self) -> dict:
        """Everything except wall time; the determinism contract covers this."""
        return {
            "params": self.params,
            "seed": self.seed,
            "baseline": self.baseline,
            "feedback": self.feedback,
            "per_query": self.per_query,
        }

    def to_dict(self) -> dict:
        out = self.canonical_dict()
        out["wall_time_s"] = self.wall_time_s
        return out

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def checksum(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    @classmethod
    def from_dict(cls, obj: dict) -> "Report":
        return cls(
            params=obj["params"],
            seed=obj["seed"],
            baseline=obj["baseline"],
            feedback=obj["feedback"],
            per_query=obj["per_query"],
            wall_time_s=obj.get("wall_time_s", 0.0),
        )


def run_protocol(
    dataset: Dataset,
    split,
    params: ProtocolParams,
    seed: int = 0,
    stack: EncoderStack | None = None,
) -> Report:
    """Run the three-step protocol over a list of query ids.

    Every step is deterministic, so identical (dataset, split, params,
    stack) reproduce the same Report apart from wall time; ``seed`` is
    echoed into the report for provenance.
    """
    split = [int(q) for q in split]
    if not split:
        raise ValueError("empty split")
    started = time.perf_counter()
    index = encode_dataset(dataset, stack)
    per_query = []
    ranks_before = []
    ranks_after = []
    for qid in split:
        raw_query = encode_query(dataset.items[qid].text, dataset.vocab)
        query_vec = stack.encode_text_vec(raw_query) if stack is not None else raw_query

        base_scores = score_no_feedback(query_vec, index)
        rank_before = int(rank(base_scores).rank[qid])

        pool = select_candidates(base_scores, index, params.selector)
        if params.exclude_target_feedback:
            pool = [c for c in pool if c != qid]
        fb = give_feedback(pool, qid, params.oracle, dataset)

        fb_scores = score_with_feedback(query_vec, fb, params.ranker, index)
        rank_after = int(rank(fb_scores).rank[qid])

        per_query.append({"qid": qid, "rank_before": rank_before, "rank_after": rank_after})
        ranks_before.append(rank_before)
        ranks_after.append(rank_after)

    return Report(
        params=params.to_dict(),
        seed=int(seed),
        baseline=stage_metrics(ranks_before, params.recall_ks),
        feedback=stage_metrics(ranks_after, params.recall_ks),
        per_query=per_query,
        wall_time_s=time.perf_counter() - started,
    )


def run_ablation(
    dataset: Dataset,
    grid: list[ProtocolParams],
    seed: int = 0,
    stack: EncoderStack | None = None,
) -> list[Report]:
    """One protocol run per grid point, in grid order."""
    if not grid:
        raise ValueError("empty grid")
    return [
        run_protocol(dataset, dataset.splits.test, params, seed=seed, stack=stack)
        for params in grid
    ]


def lambda_grid(base: ProtocolParams | None = None) -> list[ProtocolParams]:
    """Positive-vs-negative feedback sweep: no feedback, each side alone, both."""
    base = base or ProtocolParams()
    rows = [(0.0, 0.0), (1.0, 0.0), (0.0, 0.1), (1.0, 0.5)]
    return [
        ProtocolParams(
            ranker=RankerParams(lambda_p=lp, lambda_n=ln),
            oracle=base.oracle,
            selector=base.selector,
            recall_ks=base.recall_ks,
            exclude_target_feedback=base.exclude_target_feedback,
        )
        for lp, ln in rows
    ]


def feedback_count_grid(base: ProtocolParams | None = None) -> list[ProtocolParams]:
    """Sweep over how many likes/dislikes the feedback agent hands back."""
    base = base or ProtocolParams()
    rows = [(1, 1), (2, 2), (3, 3), (4, 4), (5, 5), (5, 1), (1, 5)]
    return [
        ProtocolParams(
            ranker=base.ranker,
            oracle=OracleConfig(n_like=nl, n_dislike=nd, mode=base.oracle.mode),
            selector=base.selector,
            recall_ks=base.recall_ks,
            exclude_target_feedback=base.exclude_target_feedback,
        )
        for nl, nd in rows
    ]


def diversity_grid(base: ProtocolParams | None = None) -> list[ProtocolParams]:
    """Sweep the diversity weight of the candidate selector."""
    base = base or ProtocolParams()
    values = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    return [
        ProtocolParams(
            ranker=base.ranker,
            oracle=base.oracle,
            selector=SelectorConfig(k=base.selector.k, lambda_diversity=lam),
            recall_ks=base.recall_ks,
            exclude_target_feedback=base.exclude_target_feedback,
        )
        for lam in values
    ]


GRIDS = {
    "lambda": lambda_grid,
    "feedback-count": feedback_count_grid,
    "diversity": diversity_grid,
}

_GRID_LABELS = {
    "lambda": ("lambda_p", "lambda_n"),
    "feedback-count": ("n_like", "n_dislike"),
    "diversity": ("lambda_diversity",),
}


def ablation_table(reports: list[Report], grid_name: str) -> str:
    """Aligned plain-text comparison table, one row per grid point."""
    label_keys = _GRID_LABELS[grid_name]
    recall_ks = reports[0].params["recall_ks"]
    header = list(label_keys) + [f"R@{k}" for k in recall_ks] + ["MedR", "MeanR"]
    rows = []
    for report in reports:
        row = [f"{report.params[key]:g}" for key in label_keys]
        row += [f"{report.feedback['r_at'][str(k)] * 100:.1f}" for k in recall_ks]
        row += [str(report.feedback["medr"]), f"{report.feedback['meanr']:.1f}"]
        rows.append(row)
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(len(header))]
    lines = [
        "  ".join(h.rjust(w) for h, w in zip(header, widths)),
        "  ".join("-" * w for w in widths),
    ]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines)

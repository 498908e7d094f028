"""Feedback-guided training of the linear embedding adapters.

Losses operate on frozen base embeddings pushed through the stack's
adapters (project, then re-normalize).  The feedback loss is either a
like/dislike ranking hinge or a symmetric contrastive loss over liked
items only; a text-image alignment term keeps the query and item spaces
glued together.  Everything here runs in float64: the engine's float32
rounding applies to scoring, not to training math, and the gradient
checker needs the headroom.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoders import EncoderStack, encode_dataset
from .oracle import OracleConfig, give_feedback
from .ranker import score_no_feedback
from .seeds import stream
from .selector import SelectorConfig, select_candidates
from .store import Dataset, encode_query

LOSS_KINDS = ("ranking", "contrastive")

DEFAULT_FD_STEP = 1e-5


class TrainingDiverged(RuntimeError):
    """Loss or adapter weights went non-finite during training."""


@dataclass(frozen=True)
class TrainerConfig:
    loss_kind: str = "ranking"
    margin: float = 0.2
    temperature: float = 0.07
    batch_size: int = 32
    epochs: int = 30
    learning_rate: float = 1e-2
    seed: int = 0

    def __post_init__(self):
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"loss_kind must be one of {LOSS_KINDS}")
        if not (np.isfinite(self.margin) and self.margin >= 0):
            raise ValueError("margin must be finite and >= 0")
        if not (np.isfinite(self.temperature) and self.temperature > 0):
            raise ValueError("temperature must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not np.isfinite(self.learning_rate):
            raise ValueError("learning_rate must be finite")


@dataclass(frozen=True)
class Batch:
    """One mini-batch of raw (unadapted) vectors, row j per example.

    ``negatives`` is consumed only by the ranking loss but always carried,
    so batches are interchangeable between loss kinds.
    """

    queries: np.ndarray
    targets: np.ndarray
    positives: np.ndarray
    negatives: np.ndarray

    def __post_init__(self):
        shapes = set()
        for name in ("queries", "targets", "positives", "negatives"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 2:
                raise ValueError(f"{name} must be a 2-D array")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            shapes.add(arr.shape)
            object.__setattr__(self, name, arr)
        if len(shapes) != 1:
            raise ValueError("batch arrays must share one shape")
        if self.queries.shape[0] < 1:
            raise ValueError("batch is empty")

    @property
    def size(self) -> int:
        return int(self.queries.shape[0])

    @property
    def dim(self) -> int:
        return int(self.queries.shape[1])


def ranking_loss(s_like: float, s_dislike: float, m: float) -> float:
    """Hinge pushing the liked similarity above the disliked one by m."""
    return float(max(0.0, -s_like + s_dislike + m))


def _pair_batch(a: np.ndarray, b: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape != b.shape:
        raise ValueError("paired batches must be 2-D with matching shapes")
    if a.shape[0] < 1:
        raise ValueError("batch is empty")
    if not (np.isfinite(t) and t > 0):
        raise ValueError("temperature must be positive")
    return a, b


def _diag_cross_entropy(logits: np.ndarray) -> float:
    """Mean over rows of -log softmax(row)[diagonal]."""
    peak = logits.max(axis=1, keepdims=True)
    lse = peak[:, 0] + np.log(np.exp(logits - peak).sum(axis=1))
    return float(np.mean(lse - np.diagonal(logits)))


def _row_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
    return shifted / shifted.sum(axis=1, keepdims=True)


def _symmetric_info_nce(
    a: np.ndarray, b: np.ndarray, t: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Two-direction contrastive loss and its gradients w.r.t. both batches.

    Row j of each batch is the positive for row j of the other; every
    other in-batch row is a negative.  Both directional cross-entropies
    are averaged with weight one half.
    """
    n = a.shape[0]
    logits = a @ b.T / t
    loss = 0.5 * (_diag_cross_entropy(logits) + _diag_cross_entropy(logits.T))
    eye = np.eye(n)
    d_logits = 0.5 * ((_row_softmax(logits) - eye) + (_row_softmax(logits.T) - eye).T) / n
    return loss, d_logits @ b / t, d_logits.T @ a / t


def contrastive_feedback_loss(target_embs: np.ndarray, pos_feedback_embs: np.ndarray, t: float) -> float:
    """Symmetric contrastive loss between targets and their liked items.

    Disliked items never enter this loss; contrasting away explicit
    negatives hurts, so only in-batch rows serve as negatives.
    """
    a, b = _pair_batch(target_embs, pos_feedback_embs, t)
    loss, _, _ = _symmetric_info_nce(a, b, t)
    return loss


def alignment_loss(text_embs: np.ndarray, image_embs: np.ndarray, t: float) -> float:
    """Same symmetric contrastive form with text and image in the two roles."""
    a, b = _pair_batch(text_embs, image_embs, t)
    loss, _, _ = _symmetric_info_nce(a, b, t)
    return loss


def _project(weight: np.ndarray, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Adapted rows normalize(rows @ W.T) plus pre-normalization norms."""
    pre = rows @ weight.T
    norms = np.linalg.norm(pre, axis=1)
    if np.any(norms == 0.0):
        raise TrainingDiverged("adapter projected a row to zero")
    return pre / norms[:, None], norms


def _project_backward(
    rows: np.ndarray, adapted: np.ndarray, norms: np.ndarray, d_adapted: np.ndarray
) -> np.ndarray:
    """dL/dW for U = normalize(rows @ W.T) given dL/dU."""
    inner = np.sum(adapted * d_adapted, axis=1)
    d_pre = (d_adapted - adapted * inner[:, None]) / norms[:, None]
    return d_pre.T @ rows


def _evaluate(
    batch: Batch,
    stack: EncoderStack,
    cfg: TrainerConfig,
    alignment_weight: float,
    need_grads: bool,
) -> tuple[float, dict[str, np.ndarray] | None]:
    if batch.dim != stack.dim:
        raise ValueError(f"batch dim {batch.dim} does not match stack dim {stack.dim}")
    w_text = stack.text_adapter.weight
    w_cross = stack.image_crossmodal.weight
    w_uni = stack.image_unimodal.weight
    aliased = stack.image_unimodal is stack.image_crossmodal

    u_query, n_query = _project(w_text, batch.queries)
    u_target_cross, n_target_cross = _project(w_cross, batch.targets)
    if aliased:
        u_target_uni, n_target_uni = u_target_cross, n_target_cross
    else:
        u_target_uni, n_target_uni = _project(w_uni, batch.targets)
    u_pos, n_pos = _project(w_uni, batch.positives)

    size = batch.size
    if cfg.loss_kind == "ranking":
        u_neg, n_neg = _project(w_uni, batch.negatives)
        s_like = np.sum(u_target_uni * u_pos, axis=1)
        s_dislike = np.sum(u_target_uni * u_neg, axis=1)
        slack = -s_like + s_dislike + cfg.margin
        feedback = float(np.mean(np.maximum(slack, 0.0)))
        if need_grads:
            # subgradient at the hinge boundary is 0 (strict inequality)
            active = (slack > 0.0).astype(np.float64)[:, None] / size
            d_target_uni = active * (u_neg - u_pos)
            d_pos = -active * u_target_uni
            d_neg = active * u_target_uni
    else:
        feedback, d_target_uni, d_pos = _symmetric_info_nce(u_target_uni, u_pos, cfg.temperature)

    align, d_query, d_target_cross = _symmetric_info_nce(u_query, u_target_cross, cfg.temperature)
    loss = feedback + alignment_weight * align
    if not np.isfinite(loss):
        raise TrainingDiverged(f"non-finite loss {loss!r}")
    if not need_grads:
        return loss, None

    d_w_uni = _project_backward(batch.targets, u_target_uni, n_target_uni, d_target_uni)
    d_w_uni += _project_backward(batch.positives, u_pos, n_pos, d_pos)
    if cfg.loss_kind == "ranking":
        d_w_uni += _project_backward(batch.negatives, u_neg, n_neg, d_neg)
    d_w_text = alignment_weight * _project_backward(batch.queries, u_query, n_query, d_query)
    d_w_cross = alignment_weight * _project_backward(
        batch.targets, u_target_cross, n_target_cross, d_target_cross
    )

    if aliased:
        grads = {"text": d_w_text, "image": d_w_cross + d_w_uni}
    else:
        grads = {"text": d_w_text, "image_crossmodal": d_w_cross, "image_unimodal": d_w_uni}
    return loss, grads


def total_loss(
    batch: Batch,
    stack: EncoderStack,
    cfg: TrainerConfig,
    alignment_weight: float = 1.0,
) -> tuple[float, dict[str, np.ndarray]]:
    """Feedback loss plus alignment loss, with analytic adapter gradients.

    The gradient dict is keyed like ``stack.trainable()``.  Feedback
    gradients reach only the image adapters (the unimodal one under
    separate encoders); alignment gradients reach the text adapter and
    the cross-modal image adapter.  ``alignment_weight`` scales the
    alignment term (1.0 reproduces the plain unweighted sum).
    """
    loss, grads = _evaluate(batch, stack, cfg, alignment_weight, need_grads=True)
    return loss, grads


def train(
    dataset: Dataset,
    cfg: TrainerConfig,
    stack: EncoderStack,
    selector: SelectorConfig | None = None,
    oracle: OracleConfig | None = None,
) -> tuple[EncoderStack, list[dict]]:
    """Mini-batch gradient descent with feedback regenerated every epoch.

    Each epoch re-runs retrieval, candidate selection, and the feedback
    agent for every training query under the current adapters, then
    consumes the (query, target, like, dislike) examples in shuffled
    mini-batches.  Returns the trained copy of the stack and the loss
    curve as [{"epoch", "mean_loss"}, ...].
    """
    train_split = dataset.splits.train
    if not train_split:
        raise ValueError("train split is empty")
    selector = selector if selector is not None else SelectorConfig()
    oracle = oracle if oracle is not None else OracleConfig()
    trained = stack.copy()
    base_rows = dataset.retrieval_images.rows
    raw_queries = {
        qid: encode_query(dataset.items[qid].text, dataset.vocab) for qid in train_split
    }
    curve: list[dict] = []
    for epoch in range(cfg.epochs):
        index = encode_dataset(dataset, trained)
        examples = []
        for qid in train_split:
            query_vec = trained.encode_text_vec(raw_queries[qid])
            scores = score_no_feedback(query_vec, index)
            pool = select_candidates(scores, index, selector)
            fb = give_feedback(pool, qid, oracle, dataset)
            # groups reduce to their strongest member: best like, worst dislike
            examples.append((qid, fb.likes[0], fb.dislikes[0]))

        order = stream(cfg.seed, f"train-epoch-{epoch}").permutation(len(examples))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            rows = [examples[i] for i in order[start : start + cfg.batch_size]]
            batch = Batch(
                queries=np.stack([raw_queries[qid] for qid, _, _ in rows]),
                targets=base_rows[[qid for qid, _, _ in rows]],
                positives=base_rows[[like for _, like, _ in rows]],
                negatives=base_rows[[dislike for _, _, dislike in rows]],
            )
            loss, grads = total_loss(batch, trained, cfg)
            losses.append(loss)
            if cfg.learning_rate != 0.0:
                for name, adapter in trained.trainable().items():
                    adapter.weight -= cfg.learning_rate * grads[name]
                    if not np.all(np.isfinite(adapter.weight)):
                        raise TrainingDiverged(
                            f"non-finite adapter weights ({name}) at epoch {epoch}, "
                            f"batch offset {start}"
                        )
        curve.append({"epoch": epoch, "mean_loss": float(np.mean(losses))})
    return trained, curve


@dataclass(frozen=True)
class GradCheckReport:
    loss_kind: str
    n_trials: int
    tolerance: float
    max_rel_err: float
    failures: int

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        return {
            "loss_kind": self.loss_kind,
            "n_trials": self.n_trials,
            "tolerance": self.tolerance,
            "max_rel_err": self.max_rel_err,
            "failures": self.failures,
            "passed": self.passed,
        }


def _random_unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    rows = rng.normal(size=(n, dim))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def _random_stack(rng: np.random.Generator, dim: int, sep_enc: bool) -> EncoderStack:
    stack = EncoderStack.identity(dim, sep_enc=sep_enc)
    for adapter in stack.trainable().values():
        adapter.weight += 0.1 * rng.normal(size=(dim, dim))
    return stack


def _hinge_slack(batch: Batch, stack: EncoderStack, cfg: TrainerConfig) -> np.ndarray:
    w_uni = stack.image_unimodal.weight
    u_target, _ = _project(w_uni, batch.targets)
    u_pos, _ = _project(w_uni, batch.positives)
    u_neg, _ = _project(w_uni, batch.negatives)
    s_like = np.sum(u_target * u_pos, axis=1)
    s_dislike = np.sum(u_target * u_neg, axis=1)
    return -s_like + s_dislike + cfg.margin


def gradient_check(
    cfg: TrainerConfig,
    n_trials: int = 100,
    tolerance: float = 1e-4,
    h: float = DEFAULT_FD_STEP,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    Random small instances (dim <= 16, batch <= 8, random adapters and
    temperature, both encoder layouts).  Hinge configurations whose slack
    sits within 10h of the boundary are resampled: the subgradient is
    defined there but the finite-difference stencil straddles the kink.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rng = stream(cfg.seed, "gradcheck")
    max_rel = 0.0
    failures = 0
    for _ in range(n_trials):
        dim = int(rng.integers(2, 17))
        size = int(rng.integers(1, 9))
        sep_enc = bool(rng.integers(0, 2))
        trial_cfg = TrainerConfig(
            loss_kind=cfg.loss_kind,
            margin=cfg.margin,
            temperature=float(rng.uniform(0.05, 1.0)),
            batch_size=size,
            epochs=1,
            learning_rate=0.0,
            seed=cfg.seed,
        )
        while True:
            batch = Batch(
                queries=_random_unit_rows(rng, size, dim),
                targets=_random_unit_rows(rng, size, dim),
                positives=_random_unit_rows(rng, size, dim),
                negatives=_random_unit_rows(rng, size, dim),
            )
            stack = _random_stack(rng, dim, sep_enc)
            if cfg.loss_kind != "ranking":
                break
            if np.min(np.abs(_hinge_slack(batch, stack, trial_cfg))) > 10.0 * h:
                break

        _, grads = _evaluate(batch, stack, trial_cfg, 1.0, need_grads=True)
        trial_rel = 0.0
        for name, adapter in stack.trainable().items():
            weight = adapter.weight
            fd = np.zeros_like(weight)
            for i in range(dim):
                for j in range(dim):
                    kept = weight[i, j]
                    weight[i, j] = kept + h
                    plus, _ = _evaluate(batch, stack, trial_cfg, 1.0, need_grads=False)
                    weight[i, j] = kept - h
                    minus, _ = _evaluate(batch, stack, trial_cfg, 1.0, need_grads=False)
                    weight[i, j] = kept
                    fd[i, j] = (plus - minus) / (2.0 * h)
            denom = np.maximum(np.maximum(np.abs(grads[name]), np.abs(fd)), 1e-6)
            trial_rel = max(trial_rel, float(np.max(np.abs(grads[name] - fd) / denom)))
        max_rel = max(max_rel, trial_rel)
        if trial_rel >= tolerance:
            failures += 1
    return GradCheckReport(
        loss_kind=cfg.loss_kind,
        n_trials=n_trials,
        tolerance=tolerance,
        max_rel_err=max_rel,
        failures=failures,
    )


__all__ = [
    "LOSS_KINDS",
    "Batch",
    "GradCheckReport",
    "TrainerConfig",
    "TrainingDiverged",
    "alignment_loss",
    "contrastive_feedback_loss",
    "gradient_check",
    "ranking_loss",
    "total_loss",
    "train",
]

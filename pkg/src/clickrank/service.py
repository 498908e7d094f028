"""HTTP session service for the retrieve, feedback, re-rank loop.

One session is one query: the client gets the initial top-k, submits a
single round of like/dislike feedback over those candidates, and gets
the re-ranked list back.  Sessions live in memory with TTL eviction;
the dataset and encoder stack are immutable shared state, so the only
locking is around the session table and each session's state flip.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from . import _kernels
from .encoders import EncoderStack, encode_dataset
from .ranker import Feedback, RankerParams, rank, score_no_feedback, score_with_feedback
from .store import Dataset, UnencodableQueryError, encode_query

STATE_RETRIEVED = "RETRIEVED"
STATE_UPDATED = "UPDATED"


@dataclass(frozen=True)
class ServiceConfig:
    lambda_p: float = 1.0
    lambda_n: float = 0.5
    default_k: int = 10
    session_ttl_s: float = 1800.0

    def __post_init__(self):
        params = RankerParams(self.lambda_p, self.lambda_n)  # reuse its validation
        del params
        if self.default_k < 1:
            raise ValueError("default_k must be >= 1")
        if not (np.isfinite(self.session_ttl_s) and self.session_ttl_s > 0):
            raise ValueError("session_ttl_s must be positive")


@dataclass
class Session:
    id: str
    query: str
    query_vec: np.ndarray
    k: int
    shown: list[int]
    results_before: list[dict]
    created_at: float
    demo_target: int | None
    rank_before: int | None
    state: str = STATE_RETRIEVED
    rank_after: int | None = None
    results_after: list[dict] | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    """In-memory session table; expired entries are swept on every access."""

    def __init__(self, ttl_s: float):
        self._ttl_s = ttl_s
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}

    def _sweep(self, now: float) -> None:
        expired = [sid for sid, s in self._sessions.items() if now - s.created_at > self._ttl_s]
        for sid in expired:
            del self._sessions[sid]

    def add(self, session: Session) -> None:
        with self._lock:
            self._sweep(time.monotonic())
            self._sessions[session.id] = session

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            self._sweep(time.monotonic())
            return self._sessions.get(session_id)

    def __len__(self) -> int:
        with self._lock:
            self._sweep(time.monotonic())
            return len(self._sessions)


class CreateSessionBody(BaseModel):
    query: str
    k: int | None = None
    demo_target: int | None = None


class FeedbackBody(BaseModel):
    likes: list[int] = Field(default_factory=list)
    dislikes: list[int] = Field(default_factory=list)


def create_app(
    dataset: Dataset,
    stack: EncoderStack | None = None,
    config: ServiceConfig | None = None,
    ui_dir: str | None = None,
) -> FastAPI:
    """Build the service around one dataset and optional adapter stack.

    All scoring goes through the same ranker functions the offline
    benchmark uses; the service adds session bookkeeping and nothing else.
    """
    cfg = config if config is not None else ServiceConfig()
    index = encode_dataset(dataset, stack)
    params = RankerParams(lambda_p=cfg.lambda_p, lambda_n=cfg.lambda_n)
    store = SessionStore(cfg.session_ttl_s)

    app = FastAPI(title="clickrank")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def entry(item_id: int, score: float, position: int) -> dict:
        item = dataset.items[item_id]
        return {
            "id": item.id,
            "text": item.text,
            "attributes": sorted(item.attributes),
            "image_uri": item.image_uri,
            "score": float(score),
            "rank": position,
        }

    def top_entries(scores: np.ndarray, k: int):
        ranking = rank(scores)
        entries = [
            entry(int(item_id), scores[item_id], position + 1)
            for position, item_id in enumerate(ranking.order[:k])
        ]
        return entries, ranking

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "n_items": dataset.n_items,
            "dim": dataset.dim,
            "kernel_backend": _kernels.backend_name(),
        }

    @app.get("/v1/items/{item_id}")
    def get_item(item_id: int):
        if not 0 <= item_id < dataset.n_items:
            raise HTTPException(404, f"unknown item {item_id}")
        item = dataset.items[item_id]
        return {
            "id": item.id,
            "text": item.text,
            "attributes": sorted(item.attributes),
            "image_uri": item.image_uri,
        }

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        k = body.k if body.k is not None else cfg.default_k
        if not 1 <= k <= dataset.n_items:
            raise HTTPException(422, f"k must be in [1, {dataset.n_items}]")
        if body.demo_target is not None and not 0 <= body.demo_target < dataset.n_items:
            raise HTTPException(422, f"demo_target out of range: {body.demo_target}")
        try:
            raw = encode_query(body.query, dataset.vocab)
        except UnencodableQueryError as exc:
            raise HTTPException(400, str(exc)) from exc
        query_vec = stack.encode_text_vec(raw) if stack is not None else raw
        scores = score_no_feedback(query_vec, index)
        entries, ranking = top_entries(scores, k)
        session = Session(
            id=uuid.uuid4().hex,
            query=body.query,
            query_vec=query_vec,
            k=k,
            shown=[e["id"] for e in entries],
            results_before=entries,
            created_at=time.monotonic(),
            demo_target=body.demo_target,
            rank_before=(
                int(ranking.rank[body.demo_target]) if body.demo_target is not None else None
            ),
        )
        store.add(session)
        response = {"session_id": session.id, "state": session.state, "results": entries}
        if session.demo_target is not None:
            response["demo_target_rank_before"] = session.rank_before
        return response

    @app.post("/v1/sessions/{session_id}/feedback")
    def submit_feedback(session_id: str, body: FeedbackBody):
        session = store.get(session_id)
        if session is None:
            raise HTTPException(404, f"unknown session {session_id}")
        with session.lock:
            if session.state != STATE_RETRIEVED:
                raise HTTPException(409, f"session already {session.state}")
            if not body.likes and not body.dislikes:
                raise HTTPException(422, "likes and dislikes are both empty")
            shown = set(session.shown)
            outside = [i for i in body.likes + body.dislikes if i not in shown]
            if outside:
                raise HTTPException(422, f"ids not among shown candidates: {outside}")
            try:
                feedback = Feedback(tuple(body.likes), tuple(body.dislikes))
            except ValueError as exc:
                raise HTTPException(422, str(exc)) from exc
            scores = score_with_feedback(session.query_vec, feedback, params, index)
            entries, ranking = top_entries(scores, session.k)
            session.state = STATE_UPDATED
            session.results_after = entries
            if session.demo_target is not None:
                session.rank_after = int(ranking.rank[session.demo_target])
            response = {"session_id": session.id, "state": session.state, "results": entries}
            if session.demo_target is not None:
                response["demo_target_rank_before"] = session.rank_before
                response["demo_target_rank_after"] = session.rank_after
            return response

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        session = store.get(session_id)
        if session is None:
            raise HTTPException(404, f"unknown session {session_id}")
        with session.lock:
            view = {
                "session_id": session.id,
                "query": session.query,
                "state": session.state,
                "k": session.k,
                "shown_candidates": session.results_before,
                "results": (
                    session.results_after
                    if session.state == STATE_UPDATED
                    else session.results_before
                ),
            }
            if session.demo_target is not None:
                view["demo_target"] = session.demo_target
                view["demo_target_rank_before"] = session.rank_before
                view["demo_target_rank_after"] = session.rank_after
            return view

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    app.state.store = store
    app.state.config = cfg
    return app


__all__ = [
    "STATE_RETRIEVED",
    "STATE_UPDATED",
    "CreateSessionBody",
    "FeedbackBody",
    "ServiceConfig",
    "Session",
    "SessionStore",
    "create_app",
]

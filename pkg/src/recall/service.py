"""Session service: one place where parallel reviewers' labels meet.

Persistence is an append-only event log per session (plus the corpus
and config snapshot taken at creation). The log is the source of truth:
a restart replays it and retrains the model, reproducing the exact
in-memory state. Mutations are serialized through a per-session lock
and written to disk before the request is acknowledged.

Documents handed to a reviewer are checked out with a timeout so
concurrent reviewers never see the same document; expired checkouts
silently return to the pool. Stopping rules are advisory here: once one
fires, new checkouts stop but already-held documents can still be
labeled, and the recheck flow keeps working.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from pydantic import BaseModel

from . import stopping as stopping_rules
from .corpus import CorpusError, load_corpus
from .review_quality import (
    RecheckItem,
    RecheckQueue,
    apply_recheck,
    disagreement_recheck_queue,
    knee_recheck_queue,
)
from .strategy import (
    STOPPED,
    InspectionEvent,
    Session,
    SessionConfig,
    create_session,
    next_batch,
    record_label,
    replay_events,
)

STORE_ENV_VAR = "RECALL_STORE"
DEFAULT_STORE = "recall_store"
CHECKOUT_TIMEOUT_SECONDS = 30 * 60


class StoreIntegrityError(RuntimeError):
    """A persisted session snapshot is unreadable or inconsistent."""


@dataclass
class Checkout:
    reviewer_id: str
    expires_at: float


class LiveSession:
    """A session plus its coordination state; all mutation under ``lock``."""

    def __init__(self, session_id: str, session: Session,
                 checkout_timeout: float = CHECKOUT_TIMEOUT_SECONDS) -> None:
        self.session_id = session_id
        self.session = session
        self.lock = threading.RLock()
        self.checkouts: dict[str, Checkout] = {}
        self.pending_recheck: list[RecheckItem] = []
        self.stop_recommendation: str | None = None
        self.checkout_timeout = checkout_timeout

    def prune_checkouts(self, now: float | None = None) -> None:
        now = time.monotonic() if now is None else now
        expired = [d for d, co in self.checkouts.items() if co.expires_at <= now]
        for doc_id in expired:
            del self.checkouts[doc_id]

    def refresh_stop_recommendation(self) -> None:
        fired, reason = stopping_rules.should_stop(self.session)
        self.stop_recommendation = reason if fired else None


class SessionStore:
    """Directory-per-session persistence with an append-only label log."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _dir(self, session_id: str) -> Path:
        return self.root / session_id

    def create(self, corpus_bytes: bytes, config: SessionConfig) -> str:
        session_id = uuid.uuid4().hex[:12]
        directory = self._dir(session_id)
        directory.mkdir(parents=True)
        corpus_path = directory / "corpus.csv"
        corpus_path.write_bytes(corpus_bytes)
        load_corpus(corpus_path)  # validate before acknowledging
        (directory / "config.json").write_text(
            json.dumps(config.to_dict(), sort_keys=True, indent=2), encoding="utf-8"
        )
        (directory / "labels.jsonl").touch()
        return session_id

    def exists(self, session_id: str) -> bool:
        return (self._dir(session_id) / "config.json").exists()

    def session_ids(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if (p / "config.json").exists())

    def append_event(self, session_id: str, event: InspectionEvent) -> None:
        line = json.dumps(
            {
                "sequence": event.sequence,
                "doc_id": event.doc_id,
                "value": event.value,
                "reviewer": event.reviewer_id,
                "rechecked": event.rechecked,
            },
            sort_keys=True,
        )
        path = self._dir(session_id) / "labels.jsonl"
        with path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def load(self, session_id: str) -> Session:
        directory = self._dir(session_id)
        if not (directory / "config.json").exists():
            raise KeyError(session_id)
        try:
            config = SessionConfig.from_dict(
                json.loads((directory / "config.json").read_text(encoding="utf-8"))
            )
        except (ValueError, TypeError) as exc:
            raise StoreIntegrityError(f"session {session_id}: bad config: {exc}") from exc
        try:
            corpus = load_corpus(directory / "corpus.csv")
        except CorpusError as exc:
            raise StoreIntegrityError(f"session {session_id}: bad corpus: {exc}") from exc
        events: list[InspectionEvent] = []
        log_path = directory / "labels.jsonl"
        if log_path.exists():
            for line_no, line in enumerate(
                log_path.read_text(encoding="utf-8").splitlines(), start=1
            ):
                if not line.strip():
                    continue
                try:
                    raw = json.loads(line)
                    events.append(
                        InspectionEvent(
                            sequence=int(raw["sequence"]),
                            doc_id=str(raw["doc_id"]),
                            value=str(raw["value"]),
                            reviewer_id=str(raw["reviewer"]),
                            rechecked=bool(raw.get("rechecked", False)),
                        )
                    )
                except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
                    raise StoreIntegrityError(
                        f"session {session_id}: corrupt label log at line {line_no}: {exc}"
                    ) from exc
        session = create_session(corpus, config)
        try:
            replay_events(session, events)
        except (ValueError, KeyError) as exc:
            raise StoreIntegrityError(f"session {session_id}: {exc}") from exc
        return session


def resolve_store_root(store_root: str | Path | None = None) -> Path:
    if store_root is not None:
        return Path(store_root)
    return Path(os.environ.get(STORE_ENV_VAR, DEFAULT_STORE))


class LabelBody(BaseModel):
    doc_id: str
    reviewer: str
    value: str
    recheck: bool = False


class RecheckBody(BaseModel):
    method: str
    budget: int = 10


def _progress_payload(live: LiveSession) -> dict:
    session = live.session
    estimate = None
    if session.model is not None:
        est = stopping_rules.estimate_positives(session)
        estimate = {
            "estimated_positives": est.estimated_positives,
            "estimated_recall": est.estimated_recall,
            "degenerate": est.degenerate,
        }
    return {
        "phase": session.phase,
        "inspected": session.inspected_count(),
        "found": session.found_count(),
        "corpus_size": len(session.corpus),
        "curve": [list(p) for p in session.curve.points],
        "estimate": estimate,
        "stop_recommendation": live.stop_recommendation,
        "stopping_rule": session.config.stopping.rule,
        "pending_recheck": len(live.pending_recheck),
    }


def create_app(store_root: str | Path | None = None,
               checkout_timeout: float = CHECKOUT_TIMEOUT_SECONDS) -> FastAPI:
    """Build the HTTP app over a session store rooted at ``store_root``
    (argument, else $RECALL_STORE, else ./recall_store)."""
    store = SessionStore(resolve_store_root(store_root))
    app = FastAPI(title="recall review service")
    live_sessions: dict[str, LiveSession] = {}
    registry_lock = threading.Lock()

    def get_live(session_id: str) -> LiveSession:
        with registry_lock:
            if session_id in live_sessions:
                return live_sessions[session_id]
            try:
                session = store.load(session_id)
            except KeyError:
                raise HTTPException(status_code=404, detail=f"no session {session_id!r}")
            except StoreIntegrityError as exc:
                raise HTTPException(status_code=500, detail=str(exc))
            live = LiveSession(session_id, session, checkout_timeout)
            if session.model is not None or session.inspection_log:
                live.refresh_stop_recommendation()
            live_sessions[session_id] = live
            return live

    @app.post("/sessions")
    async def create_session_endpoint(
        corpus: UploadFile = File(...), config: str = Form("{}")
    ):
        try:
            raw = json.loads(config) if config.strip() else {}
            session_config = SessionConfig.from_dict(raw)
        except (ValueError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=f"bad config: {exc}")
        data = await corpus.read()
        try:
            session_id = store.create(data, session_config)
        except CorpusError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"session_id": session_id}

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": store.session_ids()}

    @app.get("/sessions/{session_id}/next")
    def get_next(session_id: str, reviewer: str, count: int = 1):
        live = get_live(session_id)
        with live.lock:
            session = live.session
            if session.phase == STOPPED:
                return {"documents": [], "stop_reason": session.stop_reason}
            if live.stop_recommendation is not None:
                return {"documents": [], "stop_reason": live.stop_recommendation}
            now = time.monotonic()
            live.prune_checkouts(now)
            held_by_others = {
                d for d, co in live.checkouts.items() if co.reviewer_id != reviewer
            }
            candidates = next_batch(session, count + len(held_by_others))
            if not candidates:
                return {"documents": [], "stop_reason": session.stop_reason}
            batch = [d for d in candidates if d not in held_by_others][:count]
            for doc_id in batch:
                live.checkouts[doc_id] = Checkout(reviewer, now + live.checkout_timeout)
            documents = [
                {
                    "doc_id": d,
                    "title": session.corpus[d].title,
                    "body": session.corpus[d].body,
                }
                for d in batch
            ]
            return {"documents": documents, "stop_reason": None}

    @app.post("/sessions/{session_id}/labels")
    def post_label(session_id: str, body: LabelBody):
        live = get_live(session_id)
        with live.lock:
            session = live.session
            if body.doc_id not in session.corpus:
                raise HTTPException(status_code=404, detail=f"no document {body.doc_id!r}")
            if body.value not in ("relevant", "irrelevant"):
                raise HTTPException(status_code=400, detail=f"bad value {body.value!r}")
            if body.recheck:
                item = next(
                    (it for it in live.pending_recheck if it.doc_id == body.doc_id), None
                )
                if item is None:
                    raise HTTPException(
                        status_code=409,
                        detail=f"document {body.doc_id!r} is not queued for recheck",
                    )
                live.pending_recheck.remove(item)
                _, report = apply_recheck(
                    session,
                    RecheckQueue((item,)),
                    lambda _doc_id: body.value,
                    reviewer_id=body.reviewer,
                )
                store.append_event(session_id, session.inspection_log[-1])
                live.refresh_stop_recommendation()
                payload = _progress_payload(live)
                payload["correction"] = report.to_dict()
                return payload
            if body.doc_id in session.labels:
                raise HTTPException(
                    status_code=409,
                    detail=(
                        f"document {body.doc_id!r} already labeled; further opinions "
                        "go through the recheck flow"
                    ),
                )
            try:
                record_label(session, body.doc_id, body.value, body.reviewer)
            except ValueError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            live.checkouts.pop(body.doc_id, None)
            store.append_event(session_id, session.inspection_log[-1])
            live.refresh_stop_recommendation()
            return _progress_payload(live)

    @app.get("/sessions/{session_id}/progress")
    def get_progress(session_id: str):
        live = get_live(session_id)
        with live.lock:
            return _progress_payload(live)

    @app.post("/sessions/{session_id}/recheck")
    def build_recheck(session_id: str, body: RecheckBody):
        live = get_live(session_id)
        with live.lock:
            session = live.session
            try:
                if body.method == "knee":
                    queue = knee_recheck_queue(session)
                elif body.method == "disagreement":
                    queue = disagreement_recheck_queue(session, body.budget)
                else:
                    raise HTTPException(
                        status_code=400, detail=f"unknown recheck method {body.method!r}"
                    )
            except ValueError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            live.pending_recheck = list(queue.items[: body.budget])
            return {
                "queued": [
                    {"doc_id": it.doc_id, "reason": it.reason, "priority": it.priority}
                    for it in live.pending_recheck
                ]
            }

    @app.get("/sessions/{session_id}/recheck/next")
    def next_recheck(session_id: str, count: int = 1):
        live = get_live(session_id)
        with live.lock:
            session = live.session
            items = live.pending_recheck[: max(1, count)]
            # Original labels are withheld: second opinions are blind.
            documents = [
                {
                    "doc_id": it.doc_id,
                    "title": session.corpus[it.doc_id].title,
                    "body": session.corpus[it.doc_id].body,
                    "reason": it.reason,
                }
                for it in items
            ]
            return {"documents": documents}

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str):
        live = get_live(session_id)
        with live.lock:
            session = live.session
            payload = _progress_payload(live)
            curve = []
            fully_labeled = session.corpus.is_fully_labeled()
            true_r = session.corpus.relevant_count() if fully_labeled else None
            for cost, found in session.curve.points:
                point = {"cost": cost, "found": found}
                if true_r:
                    point["recall"] = found / true_r
                curve.append(point)
            return {
                "config": session.config.to_dict(),
                "curve": curve,
                "metrics": {
                    "found": payload["found"],
                    "inspected": payload["inspected"],
                    "estimate": payload["estimate"],
                },
                "corrections": {
                    "rechecked": sum(1 for ev in session.inspection_log if ev.rechecked)
                },
            }

    app.state.store = store
    app.state.live_sessions = live_sessions
    return app

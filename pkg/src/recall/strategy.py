"""The incremental review loop: bootstrap, query, label, retrain.

A session walks a pool in three phases. During *bootstrapping*,
documents are served in a seeded-random order (or ranked by a seed
keyword query) until enough positives have been labeled. It then enters
*learning*: the classifier is retrained on the labeled set at a
configurable cadence and the unlabeled pool is re-ranked, either by
descending score (certainty: grab likely positives) or by ascending
|score| (uncertainty: probe the boundary). The session becomes
*stopped* when the pool runs out or a stopping rule fires.

All selection is deterministic given the config seed; score ties break
by document load order.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import stopping as stopping_rules
from .corpus import IRRELEVANT, RELEVANT, Corpus, Label
from .features import FeatureMatrix, build_features
from .learner import LinearModel, train
from .stopping import StoppingConfig

BOOTSTRAPPING = "bootstrapping"
LEARNING = "learning"
STOPPED = "stopped"

CERTAINTY = "certainty"
UNCERTAINTY = "uncertainty"


@dataclass(frozen=True)
class SessionConfig:
    """Knobs for one review session; defaults favor fast exploitation."""

    bootstrap_k: int = 1
    bootstrap_mode: str = "random"  # or "keyword_seed"
    seed_query: str = ""  # keyword for keyword_seed bootstrapping
    query_mode: str = CERTAINTY
    balancing: str = "none"
    batch_size: int = 1
    retrain_every: int = 1
    seed: int = 0
    epochs: int = 20
    regularization: float = 1e-4
    stopping: StoppingConfig = field(default_factory=StoppingConfig)

    def __post_init__(self) -> None:
        for name in ("bootstrap_k", "batch_size", "retrain_every", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.regularization <= 0.0:
            raise ValueError("regularization must be > 0")
        if self.query_mode not in (CERTAINTY, UNCERTAINTY):
            raise ValueError(f"unknown query_mode {self.query_mode!r}")
        if self.bootstrap_mode not in ("random", "keyword_seed"):
            raise ValueError(f"unknown bootstrap_mode {self.bootstrap_mode!r}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        d = dict(d)
        if "stopping" in d and isinstance(d["stopping"], dict):
            d["stopping"] = StoppingConfig(**d["stopping"])
        return cls(**d)


@dataclass(frozen=True)
class InspectionEvent:
    """One unit of human (or simulated) inspection cost."""

    sequence: int
    doc_id: str
    value: str
    reviewer_id: str
    rechecked: bool = False


@dataclass
class RetrievalCurve:
    """Cumulative (cost, found) trace, one point per inspection event."""

    points: list[tuple[int, int]] = field(default_factory=list)

    def append(self, cost: int, found: int) -> None:
        self.points.append((cost, found))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def costs(self) -> list[int]:
        return [c for c, _ in self.points]

    @property
    def founds(self) -> list[int]:
        return [f for _, f in self.points]


@dataclass
class Session:
    """Full mutable review state. Single-writer; see the service module."""

    corpus: Corpus
    features: FeatureMatrix
    config: SessionConfig
    labels: dict[str, list[Label]] = field(default_factory=dict)
    inspection_log: list[InspectionEvent] = field(default_factory=list)
    model: LinearModel | None = None
    curve: RetrievalCurve = field(default_factory=RetrievalCurve)
    phase: str = BOOTSTRAPPING
    stop_reason: str | None = None
    bootstrap_order: list[str] = field(default_factory=list)
    labels_since_train: int = 0

    def effective_label(self, doc_id: str) -> str | None:
        """Latest recorded value for a document (corrections win)."""
        recorded = self.labels.get(doc_id)
        if not recorded:
            return None
        return recorded[-1].value

    def found_count(self) -> int:
        return sum(1 for d in self.labels if self.effective_label(d) == RELEVANT)

    def inspected_count(self) -> int:
        return len(self.inspection_log)

    def labeled_ids(self) -> set[str]:
        return set(self.labels)

    def unlabeled_ids(self) -> list[str]:
        """Unlabeled ids in load order."""
        return [doc.id for doc in self.corpus if doc.id not in self.labels]

    def first_pass_values(self) -> list[str]:
        return [ev.value for ev in self.inspection_log if not ev.rechecked]

    def effective_labels(self) -> dict[str, str]:
        return {d: self.effective_label(d) for d in self.labels}


def _bootstrap_order(corpus: Corpus, config: SessionConfig) -> list[str]:
    ids = list(corpus.ids)
    if config.bootstrap_mode == "keyword_seed":
        query = config.seed_query.lower()
        if not query:
            raise ValueError("keyword_seed bootstrapping requires a seed_query")

        def rank(i: int) -> tuple[int, int]:
            doc = corpus.documents[i]
            hit = query in (doc.title + " " + doc.body).lower()
            return (0 if hit else 1, i)

        return [ids[i] for i in sorted(range(len(ids)), key=rank)]
    rng = np.random.default_rng(config.seed)
    return [ids[i] for i in rng.permutation(len(ids))]


def create_session(corpus: Corpus, config: SessionConfig) -> Session:
    """Fresh session: features built, nothing labeled, bootstrap pending."""
    features = build_features(corpus)
    return Session(
        corpus=corpus,
        features=features,
        config=config,
        bootstrap_order=_bootstrap_order(corpus, config),
    )


def _ranked_unlabeled(session: Session) -> list[str]:
    """Unlabeled pool in serving order for the current phase."""
    unlabeled = session.unlabeled_ids()
    if not unlabeled:
        return []
    if session.model is None:
        labeled = session.labeled_ids()
        return [d for d in session.bootstrap_order if d not in labeled]
    matrix = session.features
    rows = np.asarray([matrix.row_of(d) for d in unlabeled], dtype=np.intp)
    scores = matrix.matrix[rows] @ session.model.weights + session.model.bias
    if session.config.query_mode == CERTAINTY:
        key = -scores
    else:
        key = np.abs(scores)
    # lexsort: primary key last; row order (= load order) breaks ties.
    order = np.lexsort((rows, key))
    return [unlabeled[i] for i in order]


def next_batch(session: Session, count: int | None = None) -> list[str]:
    """Ids the reviewer should inspect next, best first.

    Empty result means the pool is exhausted; the session is then marked
    stopped. Never returns an already-labeled id.
    """
    if session.phase == STOPPED:
        raise ValueError("session is stopped")
    ranked = _ranked_unlabeled(session)
    if not ranked:
        session.phase = STOPPED
        session.stop_reason = session.stop_reason or "exhausted"
        return []
    limit = session.config.batch_size if count is None else count
    return ranked[: max(1, limit)]


def _maybe_retrain(session: Session) -> None:
    if session.labels_since_train < session.config.retrain_every:
        return
    # Corrections supersede first-pass values, so train on the latest label.
    training = {d: recorded[-1] for d, recorded in session.labels.items() if recorded}
    if len({lab.value for lab in training.values()}) < 2:
        return  # single class so far; retry on the next label
    session.model = train(
        session.features,
        training,
        mode=session.config.balancing,
        seed=session.config.seed,
        lam=session.config.regularization,
        epochs=session.config.epochs,
    )
    session.labels_since_train = 0


def record_label(session: Session, doc_id: str, value: str, reviewer_id: str) -> Session:
    """Record one first-pass inspection and update model/curve/phase."""
    if session.phase == STOPPED:
        raise ValueError("session is stopped")
    if doc_id not in session.corpus:
        raise KeyError(f"unknown document id {doc_id!r}")
    if value not in (RELEVANT, IRRELEVANT):
        raise ValueError(f"bad label value {value!r}")
    for existing in session.labels.get(doc_id, []):
        if existing.reviewer_id == reviewer_id:
            raise ValueError(
                f"reviewer {reviewer_id!r} already labeled document {doc_id!r}"
            )
    sequence = len(session.inspection_log) + 1
    label = Label(value=value, reviewer_id=reviewer_id, sequence=sequence)
    session.labels.setdefault(doc_id, []).append(label)
    session.inspection_log.append(
        InspectionEvent(sequence=sequence, doc_id=doc_id, value=value,
                        reviewer_id=reviewer_id)
    )
    session.curve.append(sequence, session.found_count())

    if session.phase == BOOTSTRAPPING and session.found_count() >= session.config.bootstrap_k:
        session.phase = LEARNING
    session.labels_since_train += 1
    if session.phase == LEARNING:
        _maybe_retrain(session)
    return session


def rebuild_curve(session: Session) -> None:
    """Recompute the curve from the (possibly corrected) inspection log."""
    effective: dict[str, str] = {}
    found = 0
    curve = RetrievalCurve()
    for ev in session.inspection_log:
        before = effective.get(ev.doc_id)
        effective[ev.doc_id] = ev.value
        if before != RELEVANT and ev.value == RELEVANT:
            found += 1
        elif before == RELEVANT and ev.value != RELEVANT:
            found -= 1
        curve.append(ev.sequence, found)
    session.curve = curve


def replay_events(session: Session, events: list[InspectionEvent]) -> Session:
    """Rebuild a fresh session's state from a persisted event log.

    Intermediate retrains are skipped; instead the label snapshot at the
    last point where incremental operation would have retrained is
    trained once at the end. Because training is deterministic in its
    inputs, the resulting model is identical to the one a live session
    would hold, at a fraction of the replay cost.
    """
    if session.inspection_log:
        raise ValueError("replay requires a fresh session")
    last_train_at: int | None = None
    counter = 0
    for k, ev in enumerate(events):
        if ev.sequence != k + 1:
            raise ValueError(
                f"event log corrupt: expected sequence {k + 1}, got {ev.sequence}"
            )
        if ev.rechecked:
            recorded = session.labels.get(ev.doc_id)
            if not recorded:
                raise ValueError(f"recheck event for never-labeled id {ev.doc_id!r}")
            recorded[0].rechecked = True
            recorded.append(
                Label(value=ev.value, reviewer_id=ev.reviewer_id,
                      sequence=ev.sequence, rechecked=True)
            )
            session.inspection_log.append(ev)
            continue
        if ev.doc_id not in session.corpus:
            raise ValueError(f"event log names unknown id {ev.doc_id!r}")
        session.labels.setdefault(ev.doc_id, []).append(
            Label(value=ev.value, reviewer_id=ev.reviewer_id, sequence=ev.sequence)
        )
        session.inspection_log.append(ev)
        if session.phase == BOOTSTRAPPING and session.found_count() >= session.config.bootstrap_k:
            session.phase = LEARNING
        counter += 1
        if session.phase == LEARNING and counter >= session.config.retrain_every:
            effective = {}
            for prior in session.inspection_log:
                effective[prior.doc_id] = prior.value
            if len(set(effective.values())) >= 2:
                last_train_at = k
                counter = 0
    rebuild_curve(session)
    session.labels_since_train = counter
    if last_train_at is not None:
        snapshot: dict[str, str] = {}
        for ev in events[: last_train_at + 1]:
            snapshot[ev.doc_id] = ev.value
        session.model = train(
            session.features,
            snapshot,
            mode=session.config.balancing,
            seed=session.config.seed,
            lam=session.config.regularization,
            epochs=session.config.epochs,
        )
    return session


def step_until_stopped(
    session: Session,
    oracle: Callable[[str], str],
    error_model=None,
    *,
    reviewer_id: str = "sim",
    max_cost: int | None = None,
) -> Session:
    """Drive a simulated review until a stopping rule fires or the pool ends.

    ``oracle`` maps a document id to its true label; ``error_model`` (a
    review_quality.ReviewerErrorModel) optionally corrupts what the
    simulated reviewer reports. ``max_cost`` caps total inspections, for
    partial-run experiments. Fully deterministic given the seeds.
    """
    from .review_quality import simulate_reviewer  # circular-at-import only

    rng = np.random.default_rng(error_model.seed) if error_model is not None else None
    while session.phase != STOPPED:
        remaining = None if max_cost is None else max_cost - session.inspected_count()
        if remaining is not None and remaining <= 0:
            session.phase = STOPPED
            session.stop_reason = "budget"
            break
        count = session.config.batch_size
        if remaining is not None:
            count = min(count, remaining)
        batch = next_batch(session, count)
        if not batch:
            break
        for doc_id in batch:
            true_value = oracle(doc_id)
            observed = (
                simulate_reviewer(true_value, error_model, rng)
                if error_model is not None
                else true_value
            )
            record_label(session, doc_id, observed, reviewer_id)
        should_stop, reason = stopping_rules.should_stop(session)
        if should_stop:
            session.phase = STOPPED
            session.stop_reason = reason
    return session

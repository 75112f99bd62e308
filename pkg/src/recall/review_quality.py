"""Imperfect reviewers and label-error correction.

The reviewer error model is one-sided: a relevant document can be
missed (labeled irrelevant) with some probability, but an irrelevant
document is never promoted. Three ways of finding suspect labels are
implemented: dual-review majority vote, the knee recheck (positives
found after the curve's elbow, negatives before it), and model
disagreement (labeled documents the classifier scores hard against
their label). Rechecks are real inspections: each one appends an event
to the session log and costs one inspection unit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .corpus import IRRELEVANT, RELEVANT, Corpus, Label, oracle_label
from .learner import decision_scores
from .stopping import knee_detect
from .strategy import InspectionEvent, Session, rebuild_curve

REASON_DISAGREEMENT = "disagreement"
REASON_KNEE_POSITIVE_AFTER = "knee_positive_after"
REASON_KNEE_NEGATIVE_BEFORE = "knee_negative_before"
REASON_VOTE_CONFLICT = "vote_conflict"
REASON_RANDOM = "random"  # baseline queues in experiments


@dataclass(frozen=True)
class ReviewerErrorModel:
    """One-sided human error: misses positives, never invents them."""

    false_negative_rate: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.false_negative_rate <= 1.0:
            raise ValueError("false_negative_rate must be in [0, 1]")

    @property
    def false_positive_rate(self) -> float:
        return 0.0


def simulate_reviewer(true_label: str, model: ReviewerErrorModel, rng) -> str:
    """One simulated judgment. Irrelevant documents pass through untouched;
    relevant ones flip with probability ``false_negative_rate``."""
    if true_label == RELEVANT and model.false_negative_rate > 0.0:
        if rng.random() < model.false_negative_rate:
            return IRRELEVANT
    return true_label


def simulated_oracle(corpus: Corpus, model: ReviewerErrorModel) -> Callable[[str], str]:
    """A second-opinion reviewer as a doc_id -> label callable."""
    rng = np.random.default_rng(model.seed)

    def review(doc_id: str) -> str:
        return simulate_reviewer(oracle_label(corpus, doc_id), model, rng)

    return review


def majority_vote(labels: Iterable[Label], tiebreak_source) -> str:
    """Resolve multiple judgments of one document.

    Agreement wins outright; on a tie the ``tiebreak_source`` (a third
    reviewer: either a label value or a zero-arg callable returning one)
    decides.
    """
    recorded = list(labels)
    if len(recorded) < 2:
        raise ValueError("majority vote needs at least two labels")
    if len({lab.reviewer_id for lab in recorded}) < 2:
        raise ValueError("majority vote needs labels from distinct reviewers")
    n_rel = sum(1 for lab in recorded if lab.value == RELEVANT)
    n_irr = len(recorded) - n_rel
    if n_rel > n_irr:
        return RELEVANT
    if n_irr > n_rel:
        return IRRELEVANT
    return tiebreak_source() if callable(tiebreak_source) else tiebreak_source


@dataclass(frozen=True)
class RecheckItem:
    doc_id: str
    reason: str
    priority: float


@dataclass(frozen=True)
class RecheckQueue:
    """Documents queued for a second opinion, highest priority first."""

    items: tuple[RecheckItem, ...]

    def __post_init__(self) -> None:
        ids = [item.doc_id for item in self.items]
        if len(ids) != len(set(ids)):
            raise ValueError("recheck queue contains duplicate ids")
        priorities = [item.priority for item in self.items]
        if priorities != sorted(priorities, reverse=True):
            raise ValueError("recheck queue must be sorted by priority descending")

    def __len__(self) -> int:
        return len(self.items)

    def ids(self) -> list[str]:
        return [item.doc_id for item in self.items]


def _first_pass_sequence(session: Session) -> dict[str, int]:
    seqs: dict[str, int] = {}
    for ev in session.inspection_log:
        if not ev.rechecked and ev.doc_id not in seqs:
            seqs[ev.doc_id] = ev.sequence
    return seqs


def knee_recheck_queue(session: Session) -> RecheckQueue:
    """Suspects around the curve elbow: positives labeled after it and
    negatives labeled before it, prioritized by distance from the elbow."""
    i = knee_detect(session.curve)
    knee_cost = session.curve.points[i][0]
    first_seq = _first_pass_sequence(session)
    items = []
    for doc_id, seq in first_seq.items():
        value = session.effective_label(doc_id)
        if value == RELEVANT and seq > knee_cost:
            items.append(RecheckItem(doc_id, REASON_KNEE_POSITIVE_AFTER, float(seq - knee_cost)))
        elif value == IRRELEVANT and seq < knee_cost:
            items.append(RecheckItem(doc_id, REASON_KNEE_NEGATIVE_BEFORE, float(knee_cost - seq)))
    items.sort(key=lambda item: (-item.priority, first_seq[item.doc_id]))
    return RecheckQueue(tuple(items))


def disagreement_recheck_queue(session: Session, budget: int) -> RecheckQueue:
    """Labeled documents the model most confidently contradicts."""
    if session.model is None:
        raise ValueError("disagreement recheck requires a trained model")
    if budget < 0:
        raise ValueError("budget must be >= 0")
    labeled = list(session.labels)
    scores = decision_scores(session.model, session.features, labeled)
    disagreements = []
    for doc_id in labeled:
        value = session.effective_label(doc_id)
        predicted = RELEVANT if scores[doc_id] > 0.0 else IRRELEVANT
        if predicted != value:
            disagreements.append(RecheckItem(doc_id, REASON_DISAGREEMENT, abs(scores[doc_id])))
    disagreements.sort(key=lambda item: (-item.priority, session.corpus.position(item.doc_id)))
    return RecheckQueue(tuple(disagreements[:budget]))


def random_recheck_queue(session: Session, budget: int, seed: int = 0) -> RecheckQueue:
    """Uniformly sampled labeled documents; the experiment control arm."""
    labeled = sorted(session.labels, key=_first_pass_sequence(session).get)
    rng = np.random.default_rng(seed)
    picked = [labeled[i] for i in rng.permutation(len(labeled))[: max(0, budget)]]
    items = tuple(
        RecheckItem(doc_id, REASON_RANDOM, float(len(picked) - k))
        for k, doc_id in enumerate(picked)
    )
    return RecheckQueue(items)


@dataclass(frozen=True)
class CorrectionReport:
    """What a recheck pass changed."""

    rechecked: int
    flips_to_relevant: int
    flips_to_irrelevant: int
    flipped_ids: tuple[str, ...]

    @property
    def flips(self) -> int:
        return self.flips_to_relevant + self.flips_to_irrelevant

    def to_dict(self) -> dict:
        return {
            "rechecked": self.rechecked,
            "flips_to_relevant": self.flips_to_relevant,
            "flips_to_irrelevant": self.flips_to_irrelevant,
            "flipped_ids": list(self.flipped_ids),
        }


def apply_recheck(
    session: Session,
    queue: RecheckQueue,
    second_oracle: Callable[[str], str],
    *,
    limit: int | None = None,
    reviewer_id: str = "recheck",
) -> tuple[Session, CorrectionReport]:
    """Run second opinions over the queue (optionally capped at ``limit``).

    Every recheck appends an inspection event. When the second opinion
    differs, it supersedes the earlier label and the curve is rebuilt
    from the corrected log.
    """
    items = queue.items if limit is None else queue.items[:limit]
    to_relevant: list[str] = []
    to_irrelevant: list[str] = []
    for item in items:
        if item.doc_id not in session.labels:
            raise ValueError(f"recheck queue contains unlabeled id {item.doc_id!r}")
        before = session.effective_label(item.doc_id)
        verdict = second_oracle(item.doc_id)
        sequence = len(session.inspection_log) + 1
        session.inspection_log.append(
            InspectionEvent(sequence, item.doc_id, verdict, reviewer_id, rechecked=True)
        )
        session.labels[item.doc_id][0].rechecked = True
        session.labels[item.doc_id].append(
            Label(value=verdict, reviewer_id=reviewer_id, sequence=sequence, rechecked=True)
        )
        if verdict != before:
            (to_relevant if verdict == RELEVANT else to_irrelevant).append(item.doc_id)
    rebuild_curve(session)
    report = CorrectionReport(
        rechecked=len(items),
        flips_to_relevant=len(to_relevant),
        flips_to_irrelevant=len(to_irrelevant),
        flipped_ids=tuple(to_relevant + to_irrelevant),
    )
    return session, report

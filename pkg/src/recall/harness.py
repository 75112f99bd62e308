"""Experiment harness: synthetic pools, seeded runs, cost/recall metrics.

The synthetic generator builds fully labeled pools where relevant
documents draw a configurable fraction of their tokens from a reserved
"relevant" slice of the vocabulary (disjoint from the background slice
used by everything else). Token ranks follow a 1/rank distribution
within each slice, so common terms dominate the way they do in real
text. signal=0 makes the classes indistinguishable; signal=1 makes them
trivially separable.

Runs are deterministic given their seeds, so every statistical claim in
the test suite is a fixed-seed battery, not a flaky sample.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, Document, IRRELEVANT, RELEVANT, oracle_label
from .review_quality import (
    ReviewerErrorModel,
    apply_recheck,
    disagreement_recheck_queue,
    knee_recheck_queue,
    random_recheck_queue,
    simulated_oracle,
)
from .strategy import Session, SessionConfig, create_session, step_until_stopped

RELEVANT_VOCAB_FRACTION = 0.1
DOC_LENGTH_RANGE = (30, 80)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a fully labeled synthetic pool."""

    n_docs: int
    prevalence: float
    vocab_size: int
    signal: float
    seed: int

    def __post_init__(self) -> None:
        if self.n_docs < 2:
            raise ValueError("n_docs must be >= 2")
        if not 0.0 < self.prevalence <= 0.5:
            raise ValueError("prevalence must be in (0, 0.5]")
        if not 0.0 <= self.signal <= 1.0:
            raise ValueError("signal must be in [0, 1]")
        if self.vocab_size < 2:
            raise ValueError("vocab_size must be >= 2")


def _rank_probabilities(size: int) -> np.ndarray:
    ranks = np.arange(1, size + 1, dtype=float)
    p = 1.0 / ranks
    return p / p.sum()


def generate_synthetic(spec: SyntheticSpec) -> Corpus:
    """Deterministic labeled pool with exactly round(n*prevalence) positives."""
    rng = np.random.default_rng(spec.seed)
    n_relevant = int(round(spec.n_docs * spec.prevalence))
    if n_relevant < 1:
        raise ValueError("spec yields zero relevant documents")

    n_rel_vocab = max(1, int(round(spec.vocab_size * RELEVANT_VOCAB_FRACTION)))
    n_bg_vocab = spec.vocab_size - n_rel_vocab
    if n_bg_vocab < 1:
        raise ValueError("vocab_size too small for a background partition")
    relevant_terms = np.array([f"rel{i:04d}" for i in range(n_rel_vocab)])
    background_terms = np.array([f"bg{i:04d}" for i in range(n_bg_vocab)])
    p_rel = _rank_probabilities(n_rel_vocab)
    p_bg = _rank_probabilities(n_bg_vocab)

    flags = np.zeros(spec.n_docs, dtype=bool)
    flags[:n_relevant] = True
    flags = flags[rng.permutation(spec.n_docs)]

    lo, hi = DOC_LENGTH_RANGE
    documents = []
    for i in range(spec.n_docs):
        length = int(rng.integers(lo, hi + 1))
        if flags[i]:
            n_signal = int(round(spec.signal * length))
            tokens = list(rng.choice(relevant_terms, size=n_signal, p=p_rel))
            tokens += list(rng.choice(background_terms, size=length - n_signal, p=p_bg))
            tokens = [tokens[j] for j in rng.permutation(length)]
        else:
            tokens = list(rng.choice(background_terms, size=length, p=p_bg))
        documents.append(
            Document(
                id=f"d{i:05d}",
                title="",
                body=" ".join(tokens),
                true_label=RELEVANT if flags[i] else IRRELEVANT,
            )
        )
    source = (
        f"synthetic(n={spec.n_docs},prevalence={spec.prevalence},"
        f"vocab={spec.vocab_size},signal={spec.signal},seed={spec.seed})"
    )
    return Corpus(tuple(documents), source_path=source)


@dataclass(frozen=True)
class RecheckPlan:
    """Optional post-stop correction pass for a simulated run."""

    method: str  # "knee", "disagreement", or "random"
    budget: int
    reviewer: ReviewerErrorModel | None = None  # None = perfect second opinion
    seed: int = 0

    def __post_init__(self) -> None:
        if self.method not in ("knee", "disagreement", "random"):
            raise ValueError(f"unknown recheck method {self.method!r}")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")


@dataclass
class RunResult:
    """One completed simulated review."""

    config: dict
    corpus_id: str
    corpus_size: int
    curve: list[tuple[int, int]]
    true_positives: int
    found: int
    inspected: int
    stop_point: int | str
    corrections: dict | None
    wall_time: float

    def found_at(self, cost: int) -> int:
        best = 0
        for c, f in self.curve:
            if c > cost:
                break
            best = f
        return best

    def recall_curve(self) -> list[tuple[int, int, float]]:
        return [(c, f, f / self.true_positives) for c, f in self.curve]

    def metrics(self) -> dict:
        final_recall = self.found / self.true_positives if self.true_positives else 0.0
        out = {
            "found": self.found,
            "inspected": self.inspected,
            "true_positives": self.true_positives,
            "final_recall": final_recall,
        }
        for target in (0.95, 0.99, 1.0):
            cost = cost_at_recall(self, target)
            out[f"cost_at_recall_{target}"] = cost
        return out

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "corpus_id": self.corpus_id,
            "corpus_size": self.corpus_size,
            "true_positives": self.true_positives,
            "found": self.found,
            "inspected": self.inspected,
            "stop_point": self.stop_point,
            "curve": [list(point) for point in self.curve],
            "corrections": self.corrections,
            "wall_time": self.wall_time,
        }

    def canonical_bytes(self) -> bytes:
        """Stable serialization for determinism checks.

        Wall time is the one field that legitimately varies between
        identical runs, so it is excluded here.
        """
        payload = self.to_dict()
        payload.pop("wall_time")
        return json.dumps(payload, sort_keys=True).encode("utf-8")


def run_simulation(
    corpus: Corpus,
    config: SessionConfig,
    error_model: ReviewerErrorModel | None = None,
    *,
    max_cost: int | None = None,
    recheck: RecheckPlan | None = None,
) -> RunResult:
    """Run one simulated review end to end and package the outcome."""
    if not corpus.is_fully_labeled():
        raise ValueError("simulation requires a fully labeled corpus")
    start = time.perf_counter()
    session = create_session(corpus, config)
    step_until_stopped(
        session,
        lambda doc_id: oracle_label(corpus, doc_id),
        error_model,
        max_cost=max_cost,
    )
    corrections = None
    if recheck is not None:
        corrections = _run_recheck(session, corpus, recheck).to_dict()
    wall = time.perf_counter() - start
    stop_point: int | str
    stop_point = "exhausted" if session.stop_reason == "exhausted" else session.inspected_count()
    return RunResult(
        config=config.to_dict(),
        corpus_id=corpus.source_path,
        corpus_size=len(corpus),
        curve=list(session.curve.points),
        true_positives=corpus.relevant_count(),
        found=session.found_count(),
        inspected=session.inspected_count(),
        stop_point=stop_point,
        corrections=corrections,
        wall_time=wall,
    )


def _run_recheck(session: Session, corpus: Corpus, plan: RecheckPlan):
    if plan.method == "knee":
        queue = knee_recheck_queue(session)
    elif plan.method == "disagreement":
        queue = disagreement_recheck_queue(session, plan.budget)
    else:
        queue = random_recheck_queue(session, plan.budget, plan.seed)
    if plan.reviewer is None:
        second = lambda doc_id: oracle_label(corpus, doc_id)  # noqa: E731
    else:
        second = simulated_oracle(corpus, plan.reviewer)
    _, report = apply_recheck(session, queue, second, limit=plan.budget)
    return report


def cost_at_recall(result: RunResult, target: float) -> float | None:
    """Fraction of the pool inspected when recall first reached ``target``;
    None when the run never got there."""
    if not 0.0 < target <= 1.0:
        raise ValueError("target must be in (0, 1]")
    needed = target * result.true_positives
    for cost, found in result.curve:
        if found >= needed:
            return cost / result.corpus_size
    return None


def random_order_config(seed: int, batch_size: int = 50) -> SessionConfig:
    """A pure random-inspection baseline: bootstrap never hands over."""
    return SessionConfig(
        bootstrap_k=10**9,
        bootstrap_mode="random",
        batch_size=batch_size,
        seed=seed,
    )


def export_result(result: RunResult, path: str | Path, format: str = "csv") -> Path:
    """Write the retrieval curve (plus metadata) for external plotting."""
    path = Path(path)
    if format == "csv":
        lines = [
            f"# corpus_id={result.corpus_id}",
            f"# corpus_size={result.corpus_size}",
            f"# true_positives={result.true_positives}",
            f"# stop_point={result.stop_point}",
            "cost,found,recall",
        ]
        for cost, found, recall in result.recall_curve():
            lines.append(f"{cost},{found},{recall!r}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif format == "json":
        payload = {
            "config": result.config,
            "curve": [
                {"cost": c, "found": f, "recall": r} for c, f, r in result.recall_curve()
            ],
            "metrics": result.metrics(),
            "corrections": result.corrections,
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown export format {format!r}")
    return path


def read_exported_csv(path: str | Path) -> tuple[dict, list[tuple[int, int, float]]]:
    """Parse a CSV export back into (metadata, curve rows)."""
    meta: dict = {}
    rows: list[tuple[int, int, float]] = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    body = []
    for line in lines:
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            meta[key] = value
        elif line:
            body.append(line)
    if not body or body[0] != "cost,found,recall":
        raise ValueError("missing cost,found,recall header")
    for line in body[1:]:
        cost, found, recall = line.split(",")
        rows.append((int(cost), int(found), float(recall)))
    return meta, rows

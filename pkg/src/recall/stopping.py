"""Stopping rules: when is further human inspection no longer worth it.

Three rule families are available, all pure functions over a session
snapshot:

* ``consecutive_negatives`` -- halt after N irrelevant labels in a row.
* ``knee`` -- locate the elbow of the cost/found curve (maximum
  perpendicular distance to the chord between its endpoints) and halt
  when the slope before the elbow exceeds the slope after it by a
  factor rho. A flat tail counts as an infinite ratio.
* ``target_recall`` -- maintain a semi-supervised estimate of the total
  number of positives and halt once found/estimate reaches the target.

The positives estimator iterates a fixed point: calibrate scores to
probabilities on the labeled set, sum probabilities over the unlabeled
pool, then re-calibrate with the top-scoring unlabeled documents
temporarily treated as relevant, until the estimate settles (change
below 0.5) or 20 rounds pass. Only documents the current calibration
puts at or above even odds are eligible for temporary marking, which
keeps the recursion anchored when every unlabeled document is a clear
negative. On a fully labeled session the unlabeled sum is empty and
the estimate is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import IRRELEVANT, RELEVANT
from .learner import calibrate_probabilities

STOPPING_RULES = ("none", "consecutive_negatives", "knee", "target_recall")


@dataclass(frozen=True)
class StoppingConfig:
    """Rule selection and parameters; ``rule="none"`` runs to exhaustion."""

    rule: str = "none"
    n: int = 50
    rho: float = 6.0
    target: float = 0.95
    min_inspected: int = 10
    require_estimated_recall: float | None = None

    def __post_init__(self) -> None:
        if self.rule not in STOPPING_RULES:
            raise ValueError(f"unknown stopping rule {self.rule!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.rho <= 1.0:
            raise ValueError("rho must be > 1")
        if not 0.0 < self.target <= 1.0:
            raise ValueError("target must be in (0, 1]")
        if self.min_inspected < 0:
            raise ValueError("min_inspected must be >= 0")


@dataclass(frozen=True)
class RecallEstimate:
    """Estimated total positives and the recall implied by it."""

    estimated_positives: float
    estimated_recall: float
    degenerate: bool


def _curve_points(curve) -> list[tuple[float, float]]:
    return list(getattr(curve, "points", curve))


def consecutive_negative_rule(session, n: int | None = None) -> bool:
    """True iff the last ``n`` first-pass labels were all irrelevant."""
    if n is None:
        n = session.config.stopping.n
    values = session.first_pass_values()
    if len(values) < n:
        return False
    return all(v == IRRELEVANT for v in values[-n:])


def knee_detect(curve) -> int:
    """Index of the curve's elbow: the interior point farthest from the
    chord joining the first and last points; ties take the smallest index."""
    points = _curve_points(curve)
    if len(points) < 3:
        raise ValueError("curve too short: knee detection needs >= 3 points")
    x1, y1 = points[0]
    x2, y2 = points[-1]
    dx, dy = x2 - x1, y2 - y1
    chord = math.hypot(dx, dy)
    best_i, best_d = 1, -1.0
    for i in range(1, len(points) - 1):
        x, y = points[i]
        if chord == 0.0:
            d = math.hypot(x - x1, y - y1)
        else:
            d = abs(dy * x - dx * y + x2 * y1 - y2 * x1) / chord
        if d > best_d:
            best_i, best_d = i, d
    return best_i


def knee_slopes(curve) -> tuple[int, float, float]:
    """(knee index, slope before the knee, slope after it)."""
    points = _curve_points(curve)
    i = knee_detect(points)
    cost_i, found_i = points[i]
    cost_end, found_end = points[-1]
    slope_before = found_i / cost_i if cost_i else 0.0
    slope_after = (found_end - found_i) / (cost_end - cost_i)
    return i, slope_before, slope_after


def knee_stop(curve, rho: float) -> bool:
    """Curve-level knee rule: flat tail, or slope ratio exceeding rho."""
    _, before, after = knee_slopes(curve)
    if after == 0.0:
        return True  # ratio is infinite
    return before / after > rho


def knee_rule(session, rho: float | None = None, min_inspected: int | None = None) -> bool:
    """Session-level knee rule with the short-curve guard."""
    cfg = session.config.stopping
    if rho is None:
        rho = cfg.rho
    if min_inspected is None:
        min_inspected = cfg.min_inspected
    if len(session.first_pass_values()) < min_inspected:
        return False
    return knee_stop(session.curve, rho)


def estimate_positives(session, max_rounds: int = 20, tol: float = 0.5) -> RecallEstimate:
    """Semi-supervised fixed-point estimate of the number of positives.

    Never below the observed found count; exact when nothing is left
    unlabeled. The degenerate flag of the underlying calibration
    propagates (constant-probability fallback).
    """
    if session.model is None:
        raise ValueError("estimator unavailable before learning phase")
    matrix = session.features
    model = session.model
    all_scores = matrix.matrix @ model.weights + model.bias

    effective = session.effective_labels()
    found = sum(1 for v in effective.values() if v == RELEVANT)
    labeled_ids = list(effective)
    labeled_scores = np.asarray([all_scores[matrix.row_of(d)] for d in labeled_ids])
    labeled_values = [effective[d] for d in labeled_ids]

    unlabeled = [doc.id for doc in session.corpus if doc.id not in effective]
    if not unlabeled:
        return RecallEstimate(float(found), 1.0, degenerate=False)
    unl_scores = np.asarray([all_scores[matrix.row_of(d)] for d in unlabeled])

    calibration = calibrate_probabilities(labeled_scores, labeled_values)
    if calibration.degenerate:
        estimate = found + calibration.prevalence * len(unlabeled)
        recall = found / estimate if estimate > 0 else 1.0
        return RecallEstimate(estimate, recall, degenerate=True)

    estimate = found + float(np.sum(calibration(unl_scores)))
    order = np.argsort(-unl_scores, kind="stable")
    for _ in range(max_rounds):
        k = min(len(unlabeled), max(0, math.ceil(estimate) - found))
        # Temporary positives only make sense for documents the current
        # calibration already leans relevant on; marking hopeless tail
        # documents as relevant flattens the fit and the estimate runs away.
        probs = calibration(unl_scores[order[:k]])
        k = int(np.sum(probs >= 0.5))
        aug_scores = np.concatenate([labeled_scores, unl_scores[order[:k]]])
        aug_values = labeled_values + [RELEVANT] * k
        calibration = calibrate_probabilities(aug_scores, aug_values)
        if calibration.degenerate:
            break
        new_estimate = found + float(np.sum(calibration(unl_scores)))
        done = abs(new_estimate - estimate) < tol
        estimate = new_estimate
        if done:
            break
    recall = found / estimate if estimate > 0 else 1.0
    return RecallEstimate(estimate, recall, degenerate=False)


def target_recall_rule(session, target: float | None = None) -> bool:
    """True iff the estimated recall has reached the target (and the
    estimate is trustworthy)."""
    if target is None:
        target = session.config.stopping.target
    estimate = estimate_positives(session)
    if estimate.degenerate:
        return False
    return estimate.estimated_recall >= target


def should_stop(session) -> tuple[bool, str | None]:
    """Evaluate the configured rule; returns (stop?, reason)."""
    cfg = session.config.stopping
    if cfg.rule == "none":
        return False, None
    if cfg.rule == "consecutive_negatives":
        fired = consecutive_negative_rule(session, cfg.n)
    elif cfg.rule == "knee":
        if len(session.curve) < 3:
            return False, None
        fired = knee_rule(session, cfg.rho, cfg.min_inspected)
    elif cfg.rule == "target_recall":
        if session.model is None:
            return False, None
        fired = target_recall_rule(session, cfg.target)
    else:  # pragma: no cover - guarded by StoppingConfig
        raise ValueError(f"unknown stopping rule {cfg.rule!r}")
    if fired and cfg.require_estimated_recall is not None:
        if session.model is None:
            return False, None
        estimate = estimate_positives(session)
        if estimate.degenerate or estimate.estimated_recall < cfg.require_estimated_recall:
            return False, None
    return (fired, cfg.rule) if fired else (False, None)

from __future__ import annotations

import copy
import math
from types import SimpleNamespace

import pytest

from recall.corpus import IRRELEVANT, RELEVANT, oracle_label
from recall.stopping import (
    RecallEstimate,
    StoppingConfig,
    consecutive_negative_rule,
    estimate_positives,
    knee_detect,
    knee_rule,
    knee_slopes,
    knee_stop,
    should_stop,
    target_recall_rule,
)
from recall.strategy import SessionConfig, create_session, record_label, step_until_stopped

from conftest import make_corpus

ELBOW = [(0, 0), (10, 10), (20, 10)]
STRAIGHT = [(k, k) for k in range(21)]


def fake_session(values: list[str], n: int = 50) -> SimpleNamespace:
    """Just enough session surface for the log-based rules."""
    return SimpleNamespace(
        first_pass_values=lambda: list(values),
        config=SimpleNamespace(stopping=StoppingConfig(rule="consecutive_negatives", n=n)),
    )


def test_consecutive_negatives_fires_at_fifty():
    values = [RELEVANT] + [IRRELEVANT] * 50
    assert consecutive_negative_rule(fake_session(values), 50)
    assert not consecutive_negative_rule(fake_session(values[:-1]), 50)


def test_consecutive_negatives_broken_run():
    values = [IRRELEVANT] * 49 + [RELEVANT]
    assert not consecutive_negative_rule(fake_session(values), 50)


def test_consecutive_negatives_insufficient_history():
    assert not consecutive_negative_rule(fake_session([IRRELEVANT] * 49), 50)


def test_consecutive_negatives_monotone_recovery():
    # once broken by a trailing relevant, stays false until N more negatives
    values = [IRRELEVANT] * 50 + [RELEVANT]
    for extra in range(50):
        assert not consecutive_negative_rule(
            fake_session(values + [IRRELEVANT] * extra), 50
        )
    assert consecutive_negative_rule(fake_session(values + [IRRELEVANT] * 50), 50)


def test_knee_detect_perfect_elbow():
    assert knee_detect(ELBOW) == 1


def test_knee_detect_straight_line_degenerates_to_first_interior():
    assert knee_detect(STRAIGHT) == 1


def brute_force_knee(points):
    x1, y1 = points[0]
    x2, y2 = points[-1]
    best, best_d = None, -1.0
    for i in range(1, len(points) - 1):
        x, y = points[i]
        num = abs((y2 - y1) * x - (x2 - x1) * y + x2 * y1 - y2 * x1)
        den = math.hypot(x2 - x1, y2 - y1)
        d = num / den if den else math.hypot(x - x1, y - y1)
        if d > best_d:
            best, best_d = i, d
    return best


def test_knee_detect_matches_brute_force_on_noisy_curve():
    curve = [(0, 0), (1, 2), (2, 5), (3, 9), (4, 11), (5, 12), (6, 12),
             (7, 13), (8, 13), (9, 13), (10, 14)]
    assert knee_detect(curve) == brute_force_knee(curve)


def test_knee_detect_requires_three_points():
    with pytest.raises(ValueError, match="curve too short"):
        knee_detect([(0, 0), (1, 1)])


def test_knee_detect_scale_invariant():
    scaled = [(7 * c, 7 * f) for c, f in ELBOW]
    assert knee_detect(scaled) == knee_detect(ELBOW)
    noisy = [(0, 0), (1, 2), (2, 5), (3, 9), (4, 11), (5, 12), (6, 12), (7, 13)]
    assert knee_detect([(3 * c, 3 * f) for c, f in noisy]) == knee_detect(noisy)


def test_knee_stop_true_on_elbow():
    assert knee_stop(ELBOW, rho=6.0)  # slope after the knee is zero


def test_knee_stop_false_on_straight_line():
    assert not knee_stop(STRAIGHT, rho=6.0)  # ratio is exactly 1


def test_knee_stop_slope_ratio_eight():
    # slope 1.0 before the knee at (10,10); 2 found over 16 cost after it
    curve = [(k, k) for k in range(11)]
    after = [(11, 10), (12, 10), (13, 10), (14, 10), (15, 10), (16, 10), (17, 10),
             (18, 11), (19, 11), (20, 11), (21, 11), (22, 11), (23, 11), (24, 11),
             (25, 11), (26, 12)]
    curve += after
    i, before, after_slope = knee_slopes(curve)
    assert curve[i] == (10, 10)
    assert before == pytest.approx(1.0)
    assert after_slope == pytest.approx(0.125)
    assert knee_stop(curve, rho=6.0)      # 8 > 6
    assert not knee_stop(curve, rho=9.0)  # 8 < 9


def test_knee_rule_respects_min_inspected(toy8):
    session = create_session(toy8, SessionConfig(bootstrap_k=99, seed=0))
    record_label(session, "d1", RELEVANT, "r")
    record_label(session, "d2", IRRELEVANT, "r")
    record_label(session, "d3", IRRELEVANT, "r")
    assert not knee_rule(session, rho=6.0, min_inspected=10)
    assert knee_rule(session, rho=6.0, min_inspected=3) == knee_stop(
        session.curve, 6.0
    )


def estimator_session(n_labeled: int):
    """Separable 12-doc pool: 3 relevant with a giveaway term."""
    texts, labels = [], []
    for i in range(12):
        relevant = i < 3
        texts.append("magic signal here" if relevant else f"plain noise{i % 3:02d} words")
        labels.append(RELEVANT if relevant else IRRELEVANT)
    corpus = make_corpus(texts, labels)
    session = create_session(
        corpus, SessionConfig(batch_size=1, retrain_every=1, seed=1)
    )
    step_until_stopped(session, lambda d: oracle_label(corpus, d), max_cost=n_labeled)
    return session


def test_estimator_exact_on_fully_labeled():
    session = estimator_session(12)
    estimate = estimate_positives(session)
    assert estimate.estimated_positives == session.found_count()
    assert estimate.estimated_recall == 1.0
    assert not estimate.degenerate


def test_estimator_close_to_found_when_tail_scores_negative():
    session = estimator_session(9)
    assert session.found_count() == 3  # certainty mode grabs the positives early
    estimate = estimate_positives(session)
    assert estimate.estimated_positives >= session.found_count()
    assert estimate.estimated_positives == pytest.approx(3.0, abs=1.0)


def test_estimator_unavailable_without_model(toy8):
    session = create_session(toy8, SessionConfig(seed=0))
    with pytest.raises(ValueError, match="estimator unavailable"):
        estimate_positives(session)


def test_estimator_never_below_found():
    for n in (5, 7, 9, 12):
        session = estimator_session(n)
        if session.model is None:
            continue
        estimate = estimate_positives(session)
        assert estimate.estimated_positives >= session.found_count()


def test_target_recall_rule_thresholds(monkeypatch):
    session = estimator_session(9)
    cases = [
        (19.0, 20.0, True),   # 0.95 >= 0.95
        (18.0, 20.0, False),  # 0.90 < 0.95
    ]
    for found, estimated, expected in cases:
        monkeypatch.setattr(
            "recall.stopping.estimate_positives",
            lambda s, found=found, estimated=estimated: RecallEstimate(
                estimated, found / estimated, degenerate=False
            ),
        )
        assert target_recall_rule(session, target=0.95) is expected
    monkeypatch.setattr(
        "recall.stopping.estimate_positives",
        lambda s: RecallEstimate(20.0, 1.0, degenerate=True),
    )
    assert target_recall_rule(session, target=0.95) is False


def test_rules_do_not_mutate_session():
    session = estimator_session(9)
    before = (
        copy.deepcopy(session.labels),
        list(session.inspection_log),
        list(session.curve.points),
        session.phase,
    )
    consecutive_negative_rule(session, 5)
    if len(session.curve) >= 3:
        knee_rule(session, rho=6.0, min_inspected=1)
    estimate_positives(session)
    after = (
        session.labels,
        list(session.inspection_log),
        list(session.curve.points),
        session.phase,
    )
    assert before[0] == after[0]
    assert before[1:] == after[1:]


def test_should_stop_dispatch(toy8):
    none_session = estimator_session(9)
    assert should_stop(none_session) == (False, None)

    config = SessionConfig(
        bootstrap_k=99, seed=0,
        stopping=StoppingConfig(rule="consecutive_negatives", n=3),
    )
    session = create_session(toy8, config)
    record_label(session, "d1", RELEVANT, "r")
    for doc_id in ("d2", "d3", "d5"):
        record_label(session, doc_id, IRRELEVANT, "r")
    assert should_stop(session) == (True, "consecutive_negatives")


def test_stopping_config_validation():
    with pytest.raises(ValueError, match="rule"):
        StoppingConfig(rule="countdown")
    with pytest.raises(ValueError, match="rho"):
        StoppingConfig(rho=1.0)
    with pytest.raises(ValueError, match="target"):
        StoppingConfig(target=0.0)

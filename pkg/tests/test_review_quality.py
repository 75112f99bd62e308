from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from recall.corpus import IRRELEVANT, RELEVANT, Label, oracle_label
from recall.learner import decision_scores
from recall.review_quality import (
    REASON_KNEE_NEGATIVE_BEFORE,
    REASON_KNEE_POSITIVE_AFTER,
    RecheckItem,
    RecheckQueue,
    ReviewerErrorModel,
    apply_recheck,
    disagreement_recheck_queue,
    knee_recheck_queue,
    majority_vote,
    random_recheck_queue,
    simulate_reviewer,
)
from recall.stopping import knee_detect
from recall.strategy import SessionConfig, create_session, record_label, step_until_stopped

from conftest import make_corpus


def test_zero_rate_never_flips():
    model = ReviewerErrorModel(0.0)
    rng = np.random.default_rng(0)
    assert all(
        simulate_reviewer(RELEVANT, model, rng) == RELEVANT for _ in range(100)
    )


def test_certain_miss_at_rate_one():
    model = ReviewerErrorModel(1.0)
    rng = np.random.default_rng(0)
    assert all(
        simulate_reviewer(RELEVANT, model, rng) == IRRELEVANT for _ in range(100)
    )


def test_forty_seven_percent_rate_statistics():
    model = ReviewerErrorModel(0.47, seed=123)
    rng = np.random.default_rng(model.seed)
    flipped = sum(
        1 for _ in range(10_000) if simulate_reviewer(RELEVANT, model, rng) == IRRELEVANT
    )
    assert flipped / 10_000 == pytest.approx(0.47, abs=0.02)


@given(
    st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_no_false_positives_ever(rate, seed):
    model = ReviewerErrorModel(rate, seed=seed)
    rng = np.random.default_rng(seed)
    assert all(
        simulate_reviewer(IRRELEVANT, model, rng) == IRRELEVANT for _ in range(20)
    )


def test_reviewer_rate_validated():
    with pytest.raises(ValueError):
        ReviewerErrorModel(-0.1)
    with pytest.raises(ValueError):
        ReviewerErrorModel(1.5)
    assert ReviewerErrorModel(0.3).false_positive_rate == 0.0


def _label(value, reviewer, seq=1):
    return Label(value=value, reviewer_id=reviewer, sequence=seq)


def test_majority_vote_agreement():
    labels = [_label(RELEVANT, "a"), _label(RELEVANT, "b")]
    assert majority_vote(labels, IRRELEVANT) == RELEVANT


def test_majority_vote_tie_goes_to_third_reviewer():
    labels = [_label(RELEVANT, "a"), _label(IRRELEVANT, "b")]
    assert majority_vote(labels, IRRELEVANT) == IRRELEVANT
    assert majority_vote(labels, lambda: RELEVANT) == RELEVANT


def test_majority_vote_requires_two_labels():
    with pytest.raises(ValueError, match="two labels"):
        majority_vote([_label(RELEVANT, "a")], IRRELEVANT)
    with pytest.raises(ValueError, match="distinct"):
        majority_vote([_label(RELEVANT, "a"), _label(RELEVANT, "a")], IRRELEVANT)


def test_majority_vote_symmetric():
    one = [_label(RELEVANT, "a"), _label(IRRELEVANT, "b")]
    two = [_label(IRRELEVANT, "b"), _label(RELEVANT, "a")]
    assert majority_vote(one, RELEVANT) == majority_vote(two, RELEVANT)


def test_recheck_queue_invariants():
    with pytest.raises(ValueError, match="duplicate"):
        RecheckQueue((RecheckItem("d1", "random", 2.0), RecheckItem("d1", "random", 1.0)))
    with pytest.raises(ValueError, match="sorted"):
        RecheckQueue((RecheckItem("d1", "random", 1.0), RecheckItem("d2", "random", 2.0)))


def erroneous_session(seed=3, fn_rate=0.4, n=40):
    """A small run with reviewer errors baked in; fully deterministic."""
    texts, labels = [], []
    for i in range(n):
        relevant = i % 5 == 0
        texts.append("magic topic words" if relevant else f"plain noise{i % 7:02d} body")
        labels.append(RELEVANT if relevant else IRRELEVANT)
    corpus = make_corpus(texts, labels)
    session = create_session(
        corpus,
        SessionConfig(batch_size=4, retrain_every=4, seed=seed,
                      balancing="aggressive_undersampling"),
    )
    step_until_stopped(
        session, lambda d: oracle_label(corpus, d), ReviewerErrorModel(fn_rate, seed=seed)
    )
    return corpus, session


def test_knee_queue_matches_brute_force_set():
    _, session = erroneous_session()
    queue = knee_recheck_queue(session)
    knee_cost = session.curve.points[knee_detect(session.curve)][0]
    expected = set()
    for ev in session.inspection_log:
        if ev.rechecked:
            continue
        value = session.effective_label(ev.doc_id)
        if value == RELEVANT and ev.sequence > knee_cost:
            expected.add((ev.doc_id, REASON_KNEE_POSITIVE_AFTER))
        elif value == IRRELEVANT and ev.sequence < knee_cost:
            expected.add((ev.doc_id, REASON_KNEE_NEGATIVE_BEFORE))
    assert {(item.doc_id, item.reason) for item in queue.items} == expected
    priorities = [item.priority for item in queue.items]
    assert priorities == sorted(priorities, reverse=True)


def test_knee_queue_empty_on_clean_split(toy8):
    session = create_session(toy8, SessionConfig(bootstrap_k=99, seed=0))
    # positives first, negatives after: elbow at the last positive
    for doc_id in ("d1", "d4", "d2", "d3", "d5", "d6", "d7", "d8"):
        record_label(session, doc_id, oracle_label(toy8, doc_id), "r")
    knee_cost = session.curve.points[knee_detect(session.curve)][0]
    queue = knee_recheck_queue(session)
    assert knee_cost == 2
    assert all(item.reason == REASON_KNEE_NEGATIVE_BEFORE for item in queue.items)
    assert len(queue) <= 1  # only a negative labeled before the elbow would queue


def test_disagreement_queue_empty_when_model_agrees():
    corpus = make_corpus(
        ["magic words", "plain body", "magic again", "plain others"],
        [RELEVANT, IRRELEVANT, RELEVANT, IRRELEVANT],
    )
    session = create_session(corpus, SessionConfig(batch_size=1, retrain_every=1, seed=0))
    step_until_stopped(session, lambda d: oracle_label(corpus, d))
    assert len(disagreement_recheck_queue(session, budget=10)) == 0


def test_disagreement_queue_flags_contradicted_label():
    # d4 duplicates d0's text, so the model cannot satisfy both labels
    corpus = make_corpus(
        ["magic words", "plain body", "magic again", "plain others", "magic words"],
        [RELEVANT, IRRELEVANT, RELEVANT, IRRELEVANT, RELEVANT],
    )
    session = create_session(corpus, SessionConfig(bootstrap_k=99, batch_size=1, seed=0))
    truth = {doc.id: doc.true_label for doc in corpus}
    wrong = {"d4": IRRELEVANT}  # truly relevant, labeled wrong
    for doc_id in corpus.ids:
        record_label(session, doc_id, wrong.get(doc_id, truth[doc_id]), "r")
    session.phase = "learning"
    session.labels_since_train = 99
    from recall.strategy import _maybe_retrain

    _maybe_retrain(session)
    queue = disagreement_recheck_queue(session, budget=1)
    assert queue.ids() == ["d4"]


def test_disagreement_queue_matches_brute_force_sort():
    _, session = erroneous_session(seed=5)
    budget = 3
    queue = disagreement_recheck_queue(session, budget)
    scores = decision_scores(session.model, session.features, list(session.labels))
    disagreements = []
    for doc_id in session.labels:
        value = session.effective_label(doc_id)
        predicted = RELEVANT if scores[doc_id] > 0 else IRRELEVANT
        if predicted != value:
            disagreements.append(doc_id)
    expected = sorted(
        disagreements,
        key=lambda d: (-abs(scores[d]), session.corpus.position(d)),
    )[:budget]
    assert queue.ids() == expected


def test_disagreement_queue_requires_model(toy8):
    session = create_session(toy8, SessionConfig(seed=0))
    with pytest.raises(ValueError, match="model"):
        disagreement_recheck_queue(session, budget=5)


def test_apply_recheck_empty_queue_is_noop():
    _, session = erroneous_session()
    before = list(session.curve.points)
    _, report = apply_recheck(session, RecheckQueue(()), lambda d: RELEVANT)
    assert report.rechecked == 0
    assert report.flips == 0
    assert session.curve.points == before


def test_apply_recheck_corrects_wrong_negative(toy8):
    session = create_session(toy8, SessionConfig(bootstrap_k=99, seed=0))
    record_label(session, "d1", RELEVANT, "r")
    record_label(session, "d4", IRRELEVANT, "r")  # truly relevant, missed
    record_label(session, "d2", IRRELEVANT, "r")
    found_before = session.found_count()
    queue = RecheckQueue((RecheckItem("d4", "disagreement", 1.0),))
    _, report = apply_recheck(session, queue, lambda d: oracle_label(toy8, d))
    assert report.flips_to_relevant == 1
    assert session.found_count() == found_before + 1
    assert session.effective_label("d4") == RELEVANT
    assert session.labels["d4"][0].rechecked is True
    # recheck consumed one inspection unit and the curve was rebuilt
    assert session.inspected_count() == 4
    assert session.curve.points == [(1, 1), (2, 1), (3, 1), (4, 2)]


def test_apply_recheck_rejects_unlabeled_ids(toy8):
    session = create_session(toy8, SessionConfig(seed=0))
    queue = RecheckQueue((RecheckItem("d1", "random", 1.0),))
    with pytest.raises(ValueError, match="unlabeled"):
        apply_recheck(session, queue, lambda d: RELEVANT)


def test_apply_recheck_flips_bounded_by_queue():
    _, session = erroneous_session(seed=7)
    queue = random_recheck_queue(session, budget=6, seed=1)
    corpus_oracle = lambda d: oracle_label(session.corpus, d)  # noqa: E731
    _, report = apply_recheck(session, queue, corpus_oracle)
    assert report.rechecked == len(queue)
    assert report.flips <= len(queue)


def test_apply_recheck_limit_truncates():
    _, session = erroneous_session(seed=9)
    queue = random_recheck_queue(session, budget=10, seed=2)
    _, report = apply_recheck(
        session, queue, lambda d: oracle_label(session.corpus, d), limit=4
    )
    assert report.rechecked == 4

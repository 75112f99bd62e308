# Imperfect reviewers and what a recheck pass recovers.
#
# The simulated reviewer misses 30% of the relevant documents (never the
# other way around). After the review, three ways of picking documents
# for a second opinion are compared at the same budget: the documents
# the model most disagrees with, the documents around the curve's knee,
# and a random control.

import copy

from recall import (
    ReviewerErrorModel,
    SessionConfig,
    SyntheticSpec,
    apply_recheck,
    disagreement_recheck_queue,
    generate_synthetic,
    knee_recheck_queue,
    oracle_label,
)
from recall.review_quality import random_recheck_queue
from recall.strategy import create_session, step_until_stopped

corpus = generate_synthetic(
    SyntheticSpec(n_docs=1000, prevalence=0.05, vocab_size=250, signal=0.7, seed=3)
)
config = SessionConfig(
    batch_size=25, retrain_every=25, seed=3, balancing="aggressive_undersampling"
)
session = create_session(corpus, config)
step_until_stopped(session, lambda d: oracle_label(corpus, d), ReviewerErrorModel(0.3, seed=3))

missed = corpus.relevant_count() - session.found_count()
print(f"first pass: found {session.found_count()}/{corpus.relevant_count()} "
      f"({missed} lost to reviewer misses)")

budget = 100
queues = {
    "disagreement": disagreement_recheck_queue(session, budget),
    "knee": knee_recheck_queue(session),
    "random": random_recheck_queue(session, budget, seed=3),
}
print(f"\nsecond opinions, budget {budget} rechecks:")
for name, queue in queues.items():
    trial = copy.deepcopy(session)
    _, report = apply_recheck(trial, queue, lambda d: oracle_label(corpus, d), limit=budget)
    print(f"{name:>13}: recovered {report.flips_to_relevant} of the {missed} misses")

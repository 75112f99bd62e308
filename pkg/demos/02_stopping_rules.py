# When to stop reading: the three stopping rules on one pool.
#
# The same corpus is reviewed under each rule; the table shows where each
# one halted, what recall it had actually reached at that point, and what
# it cost. rule="none" runs to exhaustion for reference.

from recall import SessionConfig, StoppingConfig, SyntheticSpec, generate_synthetic, run_simulation

corpus = generate_synthetic(
    SyntheticSpec(n_docs=1000, prevalence=0.05, vocab_size=250, signal=0.7, seed=7)
)
true_r = corpus.relevant_count()

rules = [
    StoppingConfig(rule="none"),
    StoppingConfig(rule="consecutive_negatives", n=50),
    StoppingConfig(rule="knee", rho=6.0, min_inspected=100),
    StoppingConfig(rule="target_recall", target=0.95),
]

print(f"{'rule':>22}  {'inspected':>9}  {'found':>5}  {'recall':>6}")
for stopping in rules:
    config = SessionConfig(batch_size=25, retrain_every=25, seed=7, stopping=stopping)
    result = run_simulation(corpus, config)
    recall = result.found / true_r
    print(f"{stopping.rule:>22}  {result.inspected:>9}  {result.found:>5}  {recall:>6.2f}")

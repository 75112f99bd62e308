# Active learning vs random inspection order on a synthetic pool.
#
# Generates a 1000-document pool where 5% of documents are relevant, runs
# the same review twice (model-guided and random order), and writes both
# retrieval curves as CSV for plotting.

import numpy as np

from recall import (
    SessionConfig,
    SyntheticSpec,
    cost_at_recall,
    export_result,
    generate_synthetic,
    random_order_config,
    run_simulation,
)

spec = SyntheticSpec(n_docs=1000, prevalence=0.05, vocab_size=250, signal=0.7, seed=1)
corpus = generate_synthetic(spec)
print(f"pool: {len(corpus)} documents, {corpus.relevant_count()} relevant")

active = run_simulation(corpus, SessionConfig(batch_size=25, retrain_every=25, seed=1))
baseline = run_simulation(corpus, random_order_config(seed=1))

for name, result in [("active", active), ("random", baseline)]:
    path = export_result(result, f"curve_{name}.csv", "csv")
    cost95 = cost_at_recall(result, 0.95)
    print(f"{name:>7}: 95% recall at {cost95:.1%} of the pool -> {path}")

# quick textual curve: recall at each decile of cost
print("\ncost  active  random")
for frac in np.linspace(0.1, 1.0, 10):
    cost = int(frac * len(corpus))
    row = (
        active.found_at(cost) / active.true_positives,
        baseline.found_at(cost) / baseline.true_positives,
    )
    print(f"{frac:4.0%}  {row[0]:6.2f}  {row[1]:6.2f}")

# to plot instead:
# import matplotlib.pyplot as plt
# plt.plot(*zip(*[(c, f / active.true_positives) for c, f in active.curve]), label="active")
# plt.plot(*zip(*[(c, f / baseline.true_positives) for c, f in baseline.curve]), "--", label="random")
# plt.xlabel("documents inspected"); plt.ylabel("recall"); plt.legend(); plt.show()

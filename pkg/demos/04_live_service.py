# Driving the review service over HTTP, end to end.
#
# Uses the in-process test client so no separate server is needed; the
# same requests work against `recall serve --port 8000 --store ./store`.

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from recall.corpus import save_corpus
from recall.harness import SyntheticSpec, generate_synthetic
from recall.service import create_app

workdir = Path(tempfile.mkdtemp())
corpus = generate_synthetic(
    SyntheticSpec(n_docs=80, prevalence=0.1, vocab_size=80, signal=0.8, seed=5)
)
corpus_path = workdir / "corpus.csv"
save_corpus(corpus, corpus_path)

client = TestClient(create_app(workdir / "store"))

created = client.post(
    "/sessions",
    files={"corpus": ("corpus.csv", corpus_path.read_text(), "text/csv")},
    data={"config": json.dumps({"seed": 5, "batch_size": 5, "retrain_every": 5})},
)
session_id = created.json()["session_id"]
print("session:", session_id)

# two reviewers, each labeling what the server hands them
for round_no in range(4):
    for reviewer in ("alice", "bob"):
        batch = client.get(
            f"/sessions/{session_id}/next",
            params={"reviewer": reviewer, "count": 3},
        ).json()["documents"]
        for doc in batch:
            truth = corpus[doc["doc_id"]].true_label
            snapshot = client.post(
                f"/sessions/{session_id}/labels",
                json={"doc_id": doc["doc_id"], "reviewer": reviewer, "value": truth},
            ).json()
        print(f"round {round_no}, {reviewer}: inspected={snapshot['inspected']} "
              f"found={snapshot['found']} phase={snapshot['phase']}")

progress = client.get(f"/sessions/{session_id}/progress").json()
estimate = progress["estimate"]
if estimate:
    print(f"\nestimated positives: {estimate['estimated_positives']:.1f} "
          f"(recall {estimate['estimated_recall']:.0%})")
print("export:", json.dumps(client.get(f"/sessions/{session_id}/export").json()["metrics"]))

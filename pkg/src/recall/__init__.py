"""recall: active-learning engine for high-recall human review.

Order human inspection of a mostly-irrelevant pool so that near-total
recall arrives at a fraction of the labeling cost, know when to stop,
and catch reviewer mistakes along the way.
"""

from .corpus import (
    Corpus,
    CorpusError,
    Document,
    IRRELEVANT,
    Label,
    RELEVANT,
    load_corpus,
    oracle_label,
    save_corpus,
)
from .features import FeatureMatrix, Vocabulary, build_features, build_vocabulary, tokenize, vectorize
from .harness import (
    RecheckPlan,
    RunResult,
    SyntheticSpec,
    cost_at_recall,
    export_result,
    generate_synthetic,
    random_order_config,
    run_simulation,
)
from .learner import (
    LinearModel,
    ScoreCalibration,
    aggressive_undersample,
    calibrate_probabilities,
    decision_scores,
    train,
)
from .review_quality import (
    CorrectionReport,
    RecheckQueue,
    ReviewerErrorModel,
    apply_recheck,
    disagreement_recheck_queue,
    knee_recheck_queue,
    majority_vote,
    simulate_reviewer,
)
from .stopping import (
    RecallEstimate,
    StoppingConfig,
    consecutive_negative_rule,
    estimate_positives,
    knee_detect,
    knee_rule,
    target_recall_rule,
)
from .strategy import (
    RetrievalCurve,
    Session,
    SessionConfig,
    create_session,
    next_batch,
    record_label,
    step_until_stopped,
)

__version__ = "0.1.0"

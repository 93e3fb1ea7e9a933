"""Topic classification of short social-media texts via entropy-selected
keywords and linear SVMs, plus ICA-based causal analysis of per-topic
mention counts against establishment sales."""

from .corpus import (
    Document,
    LabeledCorpus,
    SegmenterSpec,
    attach_labels,
    load_documents,
    save_documents,
    segment,
    segment_all,
)
from .entropy_keywords import (
    CountMatrix,
    EntropyTable,
    KeywordConfig,
    KeywordSet,
    ProbabilityTable,
    count_occurrences,
    select_keywords,
    select_negative_keywords,
    topic_entropies,
    word_entropy,
    word_probabilities,
)
from .linear_classifier import (
    FeatureSpace,
    FeatureVector,
    Hyper,
    LinearModel,
    Metrics,
    f1,
    featurize,
    featurize_all,
    kfold_evaluate,
    predict,
    train,
)
from .topic_pipeline import (
    ObservationMatrix,
    PipelineConfig,
    TopicAssignment,
    aggregate,
    classify_corpus,
    route,
)
from .causal_lingam import (
    AssumptionReport,
    CausalModel,
    ConvergenceError,
    DataMatrix,
    IdentifiabilityError,
    LingamConfig,
    RankError,
    TargetEffects,
    UnmixingEstimate,
    causal_order,
    center,
    check_assumptions,
    connection_matrix,
    fast_ica,
    fit,
    normalize_diagonal,
    resolve_permutation,
    target_effects,
)
from .synthgen import (
    CorpusSpec,
    StructuralSpec,
    TopicVocab,
    default_corpus_spec,
    generate_corpus,
    generate_sem,
)

__version__ = "0.1.0"

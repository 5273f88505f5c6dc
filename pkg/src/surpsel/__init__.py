"""Surprisal-driven speech segment selection for emotion recognition.

Pipeline: score each word's informativeness (unigram surprisal, causal-LM
surprisal, normalized rank), select the spans of the most informative words,
pool acoustic functionals or frame embeddings over just those spans, and
cross-validate a feed-forward classifier with speaker-disjoint folds.
"""

from .corpus import (
    EmotionLabel,
    LABEL_INDEX,
    LABEL_ORDER,
    Utterance,
    WordAlignment,
    load_corpus,
    parse_ravdess_filename,
)
from .informativeness import (
    TokenScore,
    UnigramModel,
    WordInfo,
    aggregate_word_scores,
    build_unigram_model,
    unigram_surprisal,
)
from .selection import (
    SpanSelection,
    rank_words,
    select_full_utterance,
    select_independent_n,
    select_top_n,
)
from .acoustics import (
    AcousticsConfig,
    FrameSeries,
    FunctionalVector,
    FUNCTIONAL_NAMES,
    compute_frame_series,
    pool_functionals,
)
from .embeddings import (
    FrameEmbeddings,
    PooledEmbedding,
    load_frame_embeddings,
    pool_mean_std,
    read_sfv1,
    write_sfv1,
)
from .model import MLPConfig, MLPParams, TrainRecord, init_params, predict, train
from .evaluation import (
    ExperimentConfig,
    ExperimentData,
    FoldSpec,
    MetricsReport,
    compute_metrics,
    emit_report,
    make_folds,
    run_experiment,
)

__version__ = "0.1.0"

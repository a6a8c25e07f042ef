"""Set-level divergence metrics for conditional text generation.

Compares the full set of system outputs for an input against the full set
of references, instead of scoring outputs one at a time: a triangle-rank
statistic and two embedding-space set distances, each wired to an exact (or
sampled) permutation significance test.
"""

from .core import Corpus, EvalInstance, NgramMultiset, Utterance, ngrams, tokenize
from .distances import (
    KINDS,
    DistanceMatrix,
    IdfTable,
    MetricSpec,
    bleu_score,
    build_idf,
    cider_d_score,
    embedding_cosine_distance,
    meteor_lite_score,
    pairwise_matrix,
    rouge_l_score,
    score_to_distance,
)
from .errors import (
    CorpusFormatError,
    ExactLimitExceededError,
    InsufficientSamplesError,
    MissingEmbeddingError,
    TextdivError,
)
from .io import (
    canonical_json,
    load_corpus,
    load_embeddings,
    write_curve_csv,
    write_matrix_csv,
    write_report,
)
from .kbm import (
    EmbeddingTable,
    GaussianSummary,
    frechet_distance,
    matrix_sqrt_psd,
    median_heuristic,
    mmd_rbf,
    rbf_kernel,
    summarize,
    text_key,
)
from .significance import (
    CorpusSignificance,
    CurvePoint,
    InstanceSignificance,
    SignificanceConfig,
    StatisticKind,
    corpus_significance,
    exact_pvalue,
    harmonic_mean_p,
    instance_significance,
    mean_aggregate_score,
    montecarlo_pvalue,
    prepare_from_matrix,
    prepare_from_vectors,
    prepare_instance,
    sensitivity_curve,
    statistic_for_partition,
)
from .trm import (
    Partition,
    TrmResult,
    classify_triangle,
    enumerate_triangles,
    triangle_count,
    trm_statistic,
)

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "CorpusFormatError",
    "CorpusSignificance",
    "CurvePoint",
    "DistanceMatrix",
    "EmbeddingTable",
    "EvalInstance",
    "ExactLimitExceededError",
    "GaussianSummary",
    "IdfTable",
    "InstanceSignificance",
    "InsufficientSamplesError",
    "KINDS",
    "MetricSpec",
    "MissingEmbeddingError",
    "NgramMultiset",
    "Partition",
    "SignificanceConfig",
    "StatisticKind",
    "TextdivError",
    "TrmResult",
    "Utterance",
    "bleu_score",
    "build_idf",
    "canonical_json",
    "cider_d_score",
    "classify_triangle",
    "corpus_significance",
    "embedding_cosine_distance",
    "enumerate_triangles",
    "exact_pvalue",
    "frechet_distance",
    "harmonic_mean_p",
    "instance_significance",
    "load_corpus",
    "load_embeddings",
    "matrix_sqrt_psd",
    "mean_aggregate_score",
    "median_heuristic",
    "meteor_lite_score",
    "mmd_rbf",
    "montecarlo_pvalue",
    "ngrams",
    "pairwise_matrix",
    "prepare_from_matrix",
    "prepare_from_vectors",
    "prepare_instance",
    "rbf_kernel",
    "rouge_l_score",
    "score_to_distance",
    "sensitivity_curve",
    "statistic_for_partition",
    "summarize",
    "text_key",
    "tokenize",
    "triangle_count",
    "trm_statistic",
    "write_curve_csv",
    "write_matrix_csv",
    "write_report",
]

"""Permutation significance for set-divergence statistics.

If candidates and references were drawn from the same pool, every way of
splitting the joint texts into a size-n and a size-m group would be equally
likely.  The p-value is the fraction of such splits whose divergence is at
least as extreme as the observed split, enumerated exactly when feasible
and sampled otherwise.  Per-instance p-values combine across a corpus by
harmonic mean.

All partitions of one instance share a single precomputation (the pairwise
distance matrix, or the embedding vectors and kernel gram matrix); only the
role assignment changes.  Results are deterministic for a fixed seed and
independent of the thread count.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._kernels import backend
from .core import Corpus, EvalInstance
from .distances import (
    DistanceMatrix,
    MetricSpec,
    bleu_score,
    cider_d_score,
    embedding_cosine_distance,
    meteor_lite_score,
    pairwise_matrix,
    rouge_l_score,
)
from .errors import ExactLimitExceededError, InsufficientSamplesError
from .kbm import (
    EmbeddingTable,
    frechet_distance,
    median_heuristic,
    mmd_rbf,
    rbf_kernel,
    summarize,
)
from .trm import (
    SYMMETRIZATIONS,
    TIE_POLICIES,
    Partition,
    masses_for_combos,
    q_from_masses,
    triangle_count,
)

STATISTIC_KINDS = ("trm", "mean_agg", "frechet", "mmd")

DEFAULT_EXACT_LIMIT = 200_000

_CHUNK = 4096

#: Offset that turns the matrix-derived mean-of-best distances back into
#: score units (score = offset - distance for the best reference).
_MEAN_AGG_OFFSET = {
    "bleu": 1.0,
    "rouge_l": 1.0,
    "meteor_lite": 1.0,
    "cider_d": 10.0,
    "embedding_cosine": 1.0,
}


@dataclass(frozen=True)
class StatisticKind:
    """Which divergence statistic drives the permutation test.

    ``trm`` and ``mean_agg`` run on the text distance matrix and need a
    metric; ``frechet`` and ``mmd`` run on embedding vectors directly and
    take no metric.  Larger values mean more divergence for every kind
    except ``mean_agg``, which is in score units (smaller = more divergent).
    """

    kind: str
    metric: MetricSpec | None = None
    tie_policy: str = "fractional"
    symmetrization: str = "average"

    def __post_init__(self):
        if self.kind not in STATISTIC_KINDS:
            raise ValueError(
                f"unknown statistic {self.kind!r} (choose from {STATISTIC_KINDS})"
            )
        if self.kind in ("frechet", "mmd") and self.metric is not None:
            raise ValueError(f"statistic {self.kind!r} takes no text metric")
        if self.tie_policy not in TIE_POLICIES:
            raise ValueError(f"tie_policy must be one of {TIE_POLICIES}")
        if self.symmetrization not in SYMMETRIZATIONS:
            raise ValueError(f"symmetrization must be one of {SYMMETRIZATIONS}")

    @property
    def smaller_is_more_divergent(self) -> bool:
        return self.kind == "mean_agg"


@dataclass
class PreparedInstance:
    """Shared per-instance precomputation reused by every partition."""

    instance_id: str
    kind: StatisticKind
    n: int
    m: int
    matrix: np.ndarray | None = None  # trm / mean_agg
    score_offset: float = 0.0  # mean_agg
    vectors: np.ndarray | None = None  # frechet / mmd
    gram: np.ndarray | None = None  # mmd
    gram_rowsum: np.ndarray | None = None
    gram_total: float = 0.0


@dataclass(frozen=True)
class InstanceSignificance:
    """Permutation test outcome for one instance."""

    instance_id: str
    observed: float
    p: float
    log10_p: float
    mode: str
    evaluations: int


@dataclass(frozen=True)
class CorpusSignificance:
    """Per-instance results plus their harmonic-mean combination."""

    instances: tuple[InstanceSignificance, ...]
    hmp: float
    log10_hmp: float


@dataclass(frozen=True)
class SignificanceConfig:
    """How to run the permutation test."""

    mode: str = "exact"
    samples: int = 10_000
    seed: int = 0
    exact_limit: int = DEFAULT_EXACT_LIMIT
    threads: int = 1

    def __post_init__(self):
        if self.mode not in ("exact", "montecarlo"):
            raise ValueError(f"mode must be 'exact' or 'montecarlo', got {self.mode!r}")
        if self.mode == "montecarlo" and self.samples < 100:
            raise ValueError(f"montecarlo needs at least 100 samples, got {self.samples}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.exact_limit < 1:
            raise ValueError("exact_limit must be >= 1")


def prepare_instance(
    instance: EvalInstance,
    kind: StatisticKind,
    embeddings: EmbeddingTable | None = None,
) -> PreparedInstance:
    """Build the partition-independent state for one instance.

    For mmd the kernel width comes from the observed joint set and is held
    fixed across partitions (it is a property of the pooled texts, not of
    the role assignment).
    """
    prep = PreparedInstance(
        instance_id=instance.instance_id, kind=kind, n=instance.n, m=instance.m
    )
    if kind.kind in ("trm", "mean_agg"):
        if kind.metric is None:
            raise ValueError(f"statistic {kind.kind!r} needs a metric")
        prep.matrix = pairwise_matrix(instance, kind.metric, embeddings).values
        if kind.kind == "mean_agg":
            prep.score_offset = _MEAN_AGG_OFFSET[kind.metric.kind]
        elif triangle_count(instance.n, instance.m) == 0:
            raise InsufficientSamplesError(
                f"instance {instance.instance_id!r}: no two-one triangles "
                f"for n={instance.n}, m={instance.m}"
            )
    else:
        if embeddings is None:
            raise ValueError(f"statistic {kind.kind!r} needs an embedding table")
        prep.vectors = np.stack(
            [embeddings.vector_for_text(u.raw) for u in instance.joint()]
        )
        if kind.kind == "frechet":
            if instance.n < 2 or instance.m < 2:
                raise InsufficientSamplesError(
                    f"instance {instance.instance_id!r}: frechet needs n >= 2 "
                    f"and m >= 2, got n={instance.n}, m={instance.m}"
                )
        else:
            sigma = median_heuristic(prep.vectors)
            prep.gram = rbf_kernel(prep.vectors, prep.vectors, sigma)
            prep.gram_rowsum = prep.gram.sum(axis=1)
            prep.gram_total = float(prep.gram.sum())
    return prep


def prepare_from_matrix(
    matrix: DistanceMatrix, kind: StatisticKind, instance_id: str = "synthetic"
) -> PreparedInstance:
    """Partition-ready state from an explicit distance matrix.

    For trm and mean_agg on matrices that did not come from a text metric
    (point clouds in tests, external distances).  With no metric attached,
    mean_agg reports the negated mean-of-best distance, preserving the
    smaller-is-more-divergent orientation.
    """
    if kind.kind not in ("trm", "mean_agg"):
        raise ValueError(f"statistic {kind.kind!r} does not run on a distance matrix")
    offset = 0.0
    if kind.kind == "mean_agg" and kind.metric is not None:
        offset = _MEAN_AGG_OFFSET[kind.metric.kind]
    if kind.kind == "trm" and triangle_count(matrix.n, matrix.m) == 0:
        raise InsufficientSamplesError(
            f"no two-one triangles for n={matrix.n}, m={matrix.m}"
        )
    return PreparedInstance(
        instance_id=instance_id,
        kind=kind,
        n=matrix.n,
        m=matrix.m,
        matrix=matrix.values,
        score_offset=offset,
    )


def prepare_from_vectors(
    candidates: np.ndarray,
    references: np.ndarray,
    kind: StatisticKind,
    instance_id: str = "synthetic",
) -> PreparedInstance:
    """Partition-ready state from explicit embedding vectors."""
    if kind.kind not in ("frechet", "mmd"):
        raise ValueError(f"statistic {kind.kind!r} does not run on raw vectors")
    cand = np.asarray(candidates, dtype=np.float64)
    ref = np.asarray(references, dtype=np.float64)
    if cand.ndim != 2 or ref.ndim != 2 or cand.shape[1] != ref.shape[1]:
        raise ValueError(
            f"expected (n, d) and (m, d) arrays, got {cand.shape} and {ref.shape}"
        )
    n, m = cand.shape[0], ref.shape[0]
    if kind.kind == "frechet" and (n < 2 or m < 2):
        raise InsufficientSamplesError(
            f"frechet needs n >= 2 and m >= 2, got n={n}, m={m}"
        )
    prep = PreparedInstance(
        instance_id=instance_id,
        kind=kind,
        n=n,
        m=m,
        vectors=np.vstack([cand, ref]),
    )
    if kind.kind == "mmd":
        sigma = median_heuristic(prep.vectors)
        prep.gram = rbf_kernel(prep.vectors, prep.vectors, sigma)
        prep.gram_rowsum = prep.gram.sum(axis=1)
        prep.gram_total = float(prep.gram.sum())
    return prep


def _batch_statistics(prep: PreparedInstance, combos: np.ndarray) -> np.ndarray:
    """Statistic values for a batch of candidate index sets."""
    kind = prep.kind
    n = combos.shape[1]
    m = (prep.n + prep.m) - n
    if kind.kind == "trm":
        masses = masses_for_combos(
            prep.matrix, combos, kind.tie_policy, kind.symmetrization
        )
        return q_from_masses(masses, n, m, kind.symmetrization)
    if kind.kind == "mean_agg":
        dist = np.ascontiguousarray(prep.matrix)
        return prep.score_offset - backend.min_mean_batch(dist, combos)
    if kind.kind == "mmd":
        k = prep.gram
        within = k[combos[:, :, None], combos[:, None, :]].sum(axis=(1, 2))
        rows = prep.gram_rowsum[combos].sum(axis=1)
        total = prep.gram_total
        value = (
            within / (n * n)
            + (total - 2.0 * rows + within) / (m * m)
            - 2.0 * (rows - within) / (n * m)
        )
        return np.maximum(value, 0.0)
    # frechet: no batch kernel; the eigendecompositions dominate anyway
    out = np.empty(len(combos))
    size = prep.n + prep.m
    for idx in range(len(combos)):
        mask = np.zeros(size, dtype=bool)
        mask[combos[idx]] = True
        out[idx] = frechet_distance(
            summarize(prep.vectors[mask]), summarize(prep.vectors[~mask])
        )
    return out


def _evaluate(prep: PreparedInstance, combos: np.ndarray, threads: int) -> np.ndarray:
    """Chunked evaluation; chunk boundaries never affect per-row values."""
    if len(combos) <= _CHUNK or threads <= 1:
        if len(combos) <= _CHUNK:
            return _batch_statistics(prep, combos)
        return np.concatenate(
            [
                _batch_statistics(prep, combos[i : i + _CHUNK])
                for i in range(0, len(combos), _CHUNK)
            ]
        )
    chunks = [combos[i : i + _CHUNK] for i in range(0, len(combos), _CHUNK)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: _batch_statistics(prep, c), chunks))
    return np.concatenate(parts)


def statistic_for_partition(prep: PreparedInstance, partition: Partition) -> float:
    """The configured statistic for one explicit role assignment.

    For mean_agg this is the matrix-derived score form: the mean over
    candidate-side texts of their best (closest-reference) score, which for
    single-reference scoring matches the direct computation; multi-reference
    kinds (bleu, cider_d) pool references natively in
    :func:`mean_aggregate_score` instead.
    """
    if partition.size != prep.n + prep.m:
        raise ValueError(
            f"partition covers {partition.size} indices, instance has {prep.n + prep.m}"
        )
    combos = np.asarray([partition.candidate_indices], dtype=np.int32)
    return float(_batch_statistics(prep, combos)[0])


def _all_partitions(size: int, n: int) -> np.ndarray:
    """Every size-n candidate set, lexicographic; row 0 is the observed one."""
    combos = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(size), n)),
        dtype=np.int32,
        count=math.comb(size, n) * n,
    )
    return combos.reshape(-1, n)


def _count_extreme(stats: np.ndarray, observed: float, smaller: bool) -> int:
    if smaller:
        return int((stats <= observed).sum())
    return int((stats >= observed).sum())


def exact_pvalue(
    prep: PreparedInstance,
    exact_limit: int = DEFAULT_EXACT_LIMIT,
    threads: int = 1,
) -> InstanceSignificance:
    """Exact permutation p-value by full enumeration.

    The observed split is one of the enumerated partitions, so p >= 1 / C
    and p * C is an integer count, with C = comb(n + m, n).
    """
    n, m = prep.n, prep.m
    total = math.comb(n + m, n)
    if total > exact_limit:
        raise ExactLimitExceededError(total, exact_limit)
    combos = _all_partitions(n + m, n)
    stats = _evaluate(prep, combos, threads)
    observed = float(stats[0])
    count = _count_extreme(stats, observed, prep.kind.smaller_is_more_divergent)
    p = count / total
    return InstanceSignificance(
        instance_id=prep.instance_id,
        observed=observed,
        p=p,
        log10_p=math.log10(p),
        mode="exact",
        evaluations=total,
    )


def montecarlo_pvalue(
    prep: PreparedInstance,
    samples: int,
    seed: int,
    threads: int = 1,
) -> InstanceSignificance:
    """Sampled permutation p-value with the add-one correction.

    Draws ``samples`` uniform role assignments (the observed one is not
    force-included); p = (1 + #as-extreme) / (1 + samples), so p is never 0.
    """
    if samples < 100:
        raise ValueError(f"montecarlo needs at least 100 samples, got {samples}")
    n = prep.n
    size = prep.n + prep.m
    rng = np.random.default_rng(seed)
    keys = rng.random((samples, size))
    combos = np.sort(np.argsort(keys, axis=1)[:, :n], axis=1).astype(np.int32)
    observed = float(
        _batch_statistics(prep, np.arange(n, dtype=np.int32).reshape(1, n))[0]
    )
    stats = _evaluate(prep, combos, threads)
    count = _count_extreme(stats, observed, prep.kind.smaller_is_more_divergent)
    p = (1 + count) / (1 + samples)
    return InstanceSignificance(
        instance_id=prep.instance_id,
        observed=observed,
        p=p,
        log10_p=math.log10(p),
        mode="montecarlo",
        evaluations=samples,
    )


def _instance_seed(seed: int, instance_id: str) -> int:
    """Stable per-instance stream: the run seed mixed with the id hash."""
    digest = hashlib.sha256(instance_id.encode("utf-8")).digest()
    mixed = np.random.SeedSequence([seed, int.from_bytes(digest[:8], "big")])
    return int(mixed.generate_state(1, np.uint64)[0])


def instance_significance(
    instance: EvalInstance,
    kind: StatisticKind,
    config: SignificanceConfig,
    embeddings: EmbeddingTable | None = None,
) -> InstanceSignificance:
    """Prepare one instance and run the configured test mode on it."""
    prep = prepare_instance(instance, kind, embeddings)
    if config.mode == "exact":
        return exact_pvalue(prep, config.exact_limit, config.threads)
    return montecarlo_pvalue(
        prep,
        config.samples,
        _instance_seed(config.seed, instance.instance_id),
        config.threads,
    )


def harmonic_mean_p(pvalues) -> float:
    """Harmonic mean of p-values: L / sum(1/p)."""
    ps = list(pvalues)
    if not ps:
        raise ValueError("need at least one p-value")
    for p in ps:
        if not 0.0 < p <= 1.0:
            raise ValueError(f"p-values must lie in (0, 1], got {p}")
    return len(ps) / sum(1.0 / p for p in ps)


def corpus_significance(
    corpus: Corpus,
    kind: StatisticKind,
    config: SignificanceConfig,
    embeddings: EmbeddingTable | None = None,
) -> CorpusSignificance:
    """Run the test on every instance and combine by harmonic mean."""
    results = tuple(
        instance_significance(inst, kind, config, embeddings) for inst in corpus
    )
    hmp = harmonic_mean_p([r.p for r in results])
    return CorpusSignificance(
        instances=results, hmp=hmp, log10_hmp=math.log10(hmp)
    )


def mean_aggregate_score(
    instance: EvalInstance,
    spec: MetricSpec,
    embeddings: EmbeddingTable | None = None,
) -> float:
    """Mean over candidates of each candidate's multi-reference score.

    This is the conventional headline number for these metrics: bleu and
    cider_d pool the reference set natively; rouge_l, meteor_lite, and
    embedding similarity take the best single reference.
    """
    kind = spec.kind
    refs = instance.references
    scores = []
    for cand in instance.candidates:
        if kind == "bleu":
            s = bleu_score(cand, refs, spec.max_n, spec.smoothing_eps)
        elif kind == "cider_d":
            s = cider_d_score(cand, refs, spec.idf, spec.max_n, spec.sigma_len)
        elif kind == "rouge_l":
            s = max(rouge_l_score(cand, r, spec.lcs_beta) for r in refs)
        elif kind == "meteor_lite":
            s = max(meteor_lite_score(cand, r) for r in refs)
        else:
            if embeddings is None:
                raise ValueError("embedding_cosine needs an embedding table")
            cvec = embeddings.vector_for_text(cand.raw)
            s = max(
                1.0 - embedding_cosine_distance(cvec, embeddings.vector_for_text(r.raw))
                for r in refs
            )
        scores.append(s)
    return sum(scores) / len(scores)


@dataclass(frozen=True)
class CurvePoint:
    """One row of a sensitivity curve."""

    k: int
    hmp: float
    log10_hmp: float


def sensitivity_curve(
    corpus: Corpus,
    kind: StatisticKind,
    k_max: int,
    config: SignificanceConfig,
    embeddings: EmbeddingTable | None = None,
) -> list[CurvePoint]:
    """Harmonic-mean p as a function of candidate-set size.

    For each k in 1..k_max every instance keeps its first k candidates
    (truncation, never resampling) and the corpus test reruns.  Every
    instance must have at least k_max candidates.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    short = [inst.instance_id for inst in corpus if inst.n < k_max]
    if short:
        raise ValueError(
            f"instances with fewer than k_max={k_max} candidates: {', '.join(short)}"
        )
    points = []
    for k in range(1, k_max + 1):
        truncated = Corpus(
            [
                EvalInstance(
                    instance_id=inst.instance_id,
                    candidates=inst.candidates[:k],
                    references=inst.references,
                )
                for inst in corpus
            ]
        )
        result = corpus_significance(truncated, kind, config, embeddings)
        points.append(CurvePoint(k=k, hmp=result.hmp, log10_hmp=result.log10_hmp))
    return points

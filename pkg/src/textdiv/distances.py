"""Pairwise text distances.

Five interchangeable distance kinds over the same token stream: four n-gram
or alignment based scores (bleu, rouge_l, meteor_lite, cider_d) and a cosine
distance on precomputed sentence embeddings.  Scores are similarity-valued;
:func:`score_to_distance` flips each onto a distance scale where 0 means
"same text".  Equal raw strings always map to distance exactly 0, which the
downstream rank statistics rely on.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import TYPE_CHECKING, Sequence

import numpy as np

from ._kernels import backend
from ._kernels._python import _meteor_pair
from .core import Corpus, EvalInstance, Utterance
from .stemmer import stem

if TYPE_CHECKING:
    from .kbm import EmbeddingTable

KINDS = ("bleu", "rouge_l", "meteor_lite", "cider_d", "embedding_cosine")

#: Score range per kind; the distance transform is hi - score except for
#: embedding_cosine, which is already a distance in [0, 2].
SCORE_RANGE = {
    "bleu": (0.0, 1.0),
    "rouge_l": (0.0, 1.0),
    "meteor_lite": (0.0, 1.0),
    "cider_d": (0.0, 10.0),
    "embedding_cosine": (0.0, 2.0),
}


@dataclass
class IdfTable:
    """Corpus-level inverse document frequencies per n-gram order.

    A document is one instance's reference set; grams are never formed
    across reference boundaries.
    """

    doc_count: int
    tables: dict[int, dict[tuple[str, ...], float]]
    # lazily built packed-key view for the batched kernel; False = not yet
    # attempted, None = table not packable
    _encoded: object = field(default=False, init=False, repr=False, compare=False)

    def idf(self, gram: tuple[str, ...]) -> float:
        """ln(doc_count / df); grams never seen get df = 1."""
        table = self.tables.get(len(gram))
        if table is None:
            return math.log(self.doc_count)
        return table.get(gram, math.log(self.doc_count))


def build_idf(corpus: Corpus, max_n: int = 4) -> IdfTable:
    """Count, per order, how many instances' reference sets contain each gram.

    Args:
        corpus: Corpus whose reference sets define the document collection.
        max_n: Highest n-gram order to tabulate.

    Returns:
        An :class:`IdfTable` with idf = ln(instances / df).
    """
    if len(corpus) == 0:
        raise ValueError("idf needs a non-empty corpus")
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    df: dict[int, Counter] = {k: Counter() for k in range(1, max_n + 1)}
    for inst in corpus:
        seen: set[tuple[str, ...]] = set()
        for ref in inst.references:
            toks = ref.tokens
            for k in range(1, max_n + 1):
                for i in range(len(toks) - k + 1):
                    seen.add(toks[i : i + k])
        for gram in seen:
            df[len(gram)][gram] += 1
    n_docs = len(corpus)
    tables = {
        k: {g: math.log(n_docs / c) for g, c in counts.items()}
        for k, counts in df.items()
    }
    table = IdfTable(doc_count=n_docs, tables=tables)
    table._encoded = _encode_idf(table)
    return table


@dataclass(frozen=True)
class MetricSpec:
    """One distance kind plus its fixed parameters.

    Attributes:
        kind: One of :data:`KINDS`.
        max_n: Highest n-gram order (bleu, cider_d).
        smoothing_eps: Numerator floor for zero bleu match counts.
        lcs_beta: Recall weight in the rouge_l F score.
        sigma_len: Width of the cider_d length penalty.
        idf: Corpus idf table; required for cider_d.
    """

    kind: str
    max_n: int = 4
    smoothing_eps: float = 1e-9
    lcs_beta: float = 1.2
    sigma_len: float = 6.0
    idf: IdfTable | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r} (choose from {KINDS})")
        if self.max_n < 1:
            raise ValueError(f"max_n must be >= 1, got {self.max_n}")
        if not self.smoothing_eps > 0:
            raise ValueError("smoothing_eps must be > 0")
        if not self.lcs_beta > 0:
            raise ValueError("lcs_beta must be > 0")
        if not self.sigma_len > 0:
            raise ValueError("sigma_len must be > 0")


@lru_cache(maxsize=65536)
def _gram_counts(tokens: tuple[str, ...], k: int) -> Counter:
    # Cached; callers must treat the result as read-only.
    return Counter(tokens[i : i + k] for i in range(len(tokens) - k + 1))


def bleu_score(
    candidate: Utterance,
    references: Sequence[Utterance],
    max_n: int = 4,
    smoothing_eps: float = 1e-9,
) -> float:
    """Sentence-level BLEU with clipped counts and an epsilon floor.

    Geometric mean of modified n-gram precisions over the orders the
    candidate is long enough to support, times the brevity penalty against
    the closest-length reference (ties go to the shorter reference).  Orders
    with zero matches contribute ``smoothing_eps`` instead of 0 so the
    product never collapses.
    """
    if not references:
        raise ValueError("bleu needs at least one reference")
    lc = len(candidate)
    if lc == 0:
        return 0.0
    r = min((abs(len(ref) - lc), len(ref)) for ref in references)[1]
    bp = 1.0 if lc >= r else math.exp(1.0 - r / lc)
    log_sum = 0.0
    orders = 0
    for k in range(1, max_n + 1):
        total = lc - k + 1
        if total < 1:
            break
        orders += 1
        cand_counts = _gram_counts(candidate.tokens, k)
        clip: Counter = Counter()
        for ref in references:
            for g, c in _gram_counts(ref.tokens, k).items():
                if c > clip[g]:
                    clip[g] = c
        matched = sum(min(c, clip[g]) for g, c in cand_counts.items())
        numer = matched if matched > 0 else smoothing_eps
        log_sum += math.log(numer / total)
    return bp * math.exp(log_sum / orders)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, 1):
            if x == y:
                curr.append(prev[j - 1] + 1)
            else:
                curr.append(max(curr[-1], prev[j]))
        prev = curr
    return prev[-1]


def rouge_l_score(candidate: Utterance, reference: Utterance, lcs_beta: float = 1.2) -> float:
    """Longest-common-subsequence F score with recall weighted by beta."""
    a, b = candidate.tokens, reference.tokens
    if not a or not b:
        return 0.0
    lcs = _lcs_length(a, b)
    if lcs == 0:
        return 0.0
    prec = lcs / len(a)
    rec = lcs / len(b)
    b2 = lcs_beta * lcs_beta
    return (1.0 + b2) * prec * rec / (rec + b2 * prec)


def meteor_lite_score(candidate: Utterance, reference: Utterance) -> float:
    """Greedy unigram alignment score with a fragmentation penalty.

    Tokens align one-to-one, exact surface matches first and Porter-stem
    matches second, each stage scanning candidate tokens left to right and
    taking the first free reference token.  Equal raw strings short-circuit
    to 1.0.
    """
    if candidate.raw == reference.raw:
        return 1.0
    ids: dict[str, int] = {}
    ct = [ids.setdefault(t, len(ids)) for t in candidate.tokens]
    rt = [ids.setdefault(t, len(ids)) for t in reference.tokens]
    cs = [ids.setdefault(stem(t), len(ids)) for t in candidate.tokens]
    rs = [ids.setdefault(stem(t), len(ids)) for t in reference.tokens]
    return _meteor_pair(ct, rt, cs, rs)


def _tfidf_vec(
    tokens: tuple[str, ...], k: int, idf: IdfTable
) -> tuple[dict[tuple[str, ...], float], float]:
    vec = {g: c * idf.idf(g) for g, c in _gram_counts(tokens, k).items()}
    norm = math.sqrt(sum(w * w for w in vec.values()))
    return vec, norm


def _cider_pair(cand_vecs, lc: int, ref_vecs, lr: int, sigma_len: float, max_n: int) -> float:
    """Unscaled per-reference similarity, in [0, 1]."""
    delta = lc - lr
    pen = math.exp(-(delta * delta) / (2.0 * sigma_len * sigma_len))
    sim_sum = 0.0
    for k in range(max_n):
        cvec, cnorm = cand_vecs[k]
        rvec, rnorm = ref_vecs[k]
        if cnorm == 0.0 or rnorm == 0.0:
            continue
        num = 0.0
        for g, w in cvec.items():
            rw = rvec.get(g)
            if rw is not None:
                num += min(w, rw) * rw
        sim_sum += pen * num / (cnorm * rnorm)
    return sim_sum / max_n


def cider_d_score(
    candidate: Utterance,
    references: Sequence[Utterance],
    idf: IdfTable,
    max_n: int = 4,
    sigma_len: float = 6.0,
) -> float:
    """Consensus tf-idf n-gram similarity, scaled to [0, 10].

    Per reference and order: cosine of idf-weighted count vectors with the
    candidate counts clipped at the reference counts, damped by a Gaussian
    penalty on the length gap; orders average, references average, and the
    result scales by 10.  A candidate whose raw string equals a reference
    takes that reference's maximum similarity outright.
    """
    if not references:
        raise ValueError("cider_d needs at least one reference")
    if idf is None:
        raise ValueError("cider_d needs an idf table")
    cand_vecs = [_tfidf_vec(candidate.tokens, k, idf) for k in range(1, max_n + 1)]
    lc = len(candidate)
    acc = 0.0
    for ref in references:
        if candidate.raw == ref.raw:
            acc += 1.0
            continue
        ref_vecs = [_tfidf_vec(ref.tokens, k, idf) for k in range(1, max_n + 1)]
        acc += _cider_pair(cand_vecs, lc, ref_vecs, len(ref), sigma_len, max_n)
    return 10.0 * acc / len(references)


def embedding_cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - cosine similarity for unit-norm vectors; range [0, 2]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"vectors must share one dimension, got {a.shape} and {b.shape}")
    for v in (a, b):
        if abs(float(np.linalg.norm(v)) - 1.0) > 1e-4:
            raise ValueError("vectors must be unit length (within 1e-4)")
    d = 1.0 - float(a @ b)
    return min(max(d, 0.0), 2.0)


def score_to_distance(kind: str, score: float) -> float:
    """Map a score onto its kind's distance scale (0 = identical).

    bleu, rouge_l, and meteor_lite use 1 - score; cider_d uses 10 - score;
    embedding_cosine is passed through unchanged.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown metric kind {kind!r}")
    lo, hi = SCORE_RANGE[kind]
    if score < lo - 1e-9 or score > hi + 1e-9:
        raise ValueError(f"{kind} score {score} outside [{lo}, {hi}]")
    d = score if kind == "embedding_cosine" else hi - score
    return min(max(d, 0.0), hi - lo)


@dataclass
class DistanceMatrix:
    """Joint pairwise distance matrix for one instance.

    Rows and columns follow the joint order, candidates then references;
    ``values[i, j]`` is the directed distance from text i to text j (the
    text metrics are not symmetric).
    """

    n: int
    m: int
    values: np.ndarray
    labels: tuple[Utterance, ...] | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if self.n < 1 or self.m < 1:
            raise ValueError(f"need n >= 1 and m >= 1, got n={self.n}, m={self.m}")
        size = self.n + self.m
        if v.shape != (size, size):
            raise ValueError(f"expected a {size}x{size} matrix, got {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("distances must be finite")
        if (v < 0.0).any():
            raise ValueError("distances must be nonnegative")
        if (np.diagonal(v) != 0.0).any():
            raise ValueError("self-distances must be exactly zero")
        if self.labels is not None and len(self.labels) != size:
            raise ValueError("labels must cover the joint set")
        self.values = v

    @property
    def size(self) -> int:
        return self.n + self.m


#: Packed gram keys give each token id 15 bits, four slots in an int64.
_SLOT_BITS = 15
_MAX_TOKEN_ID = (1 << _SLOT_BITS) - 1


@dataclass
class _EncodedIdf:
    """Idf table recast for the packed-key kernel.

    ``token_ids`` is 1-based (0 marks an empty slot), built from the sorted
    unigram vocabulary so the view is deterministic however the table was
    assembled.
    """

    token_ids: dict[str, int]
    keys: np.ndarray
    vals: np.ndarray
    default: float


def _encode_idf(idf: IdfTable) -> "_EncodedIdf | None":
    """Packed view of ``idf``, or None when its grams cannot be packed."""
    vocab = sorted(t for (t,) in idf.tables.get(1, {}))
    if len(vocab) > 30000:  # headroom under the 15-bit id cap
        return None
    token_ids = {t: i + 1 for i, t in enumerate(vocab)}
    entries = []
    for k, table in idf.tables.items():
        if not 1 <= k <= 4:
            continue
        for g, v in table.items():
            key = 0
            for d, t in enumerate(g):
                tid = token_ids.get(t)
                if tid is None:
                    # a higher-order gram uses a token absent from the
                    # unigram table; such a table cannot round-trip
                    return None
                key |= tid << (_SLOT_BITS * d)
            entries.append((key, v))
    entries.sort()
    return _EncodedIdf(
        token_ids=token_ids,
        keys=np.fromiter((e[0] for e in entries), dtype=np.int64, count=len(entries)),
        vals=np.fromiter((e[1] for e in entries), dtype=np.float64, count=len(entries)),
        default=math.log(idf.doc_count),
    )


def _cider_matrix(
    joint: tuple[Utterance, ...], pair_arr: np.ndarray, spec: MetricSpec
) -> np.ndarray:
    """Batched similarities for the (i, j) rows of ``pair_arr``, joint-indexed.

    Tokens map to small integer ids so the kernel can form, count, and weigh
    grams itself; instances whose ids outgrow the packing (or metric orders
    past four) take the gram-tuple path instead.
    """
    idf = spec.idf
    if spec.max_n <= 4:
        enc = idf._encoded
        if enc is False:
            enc = _encode_idf(idf)
            idf._encoded = enc
    else:
        enc = None
    if enc is None:
        return _cider_matrix_grams(joint, pair_arr, spec)
    canon = enc.token_ids
    base = len(canon)
    extras: dict[str, int] = {}
    ids_flat: list[int] = []
    offsets = [0]
    for u in joint:
        for t in u.tokens:
            tid = canon.get(t)
            if tid is None:
                tid = extras.get(t)
                if tid is None:
                    tid = base + 1 + len(extras)
                    extras[t] = tid
            ids_flat.append(tid)
        offsets.append(len(ids_flat))
    if base + len(extras) > _MAX_TOKEN_ID:
        return _cider_matrix_grams(joint, pair_arr, spec)
    return backend.cider_sim_from_tokens(
        np.asarray(ids_flat or [0], dtype=np.int32),
        np.asarray(offsets, dtype=np.int64),
        enc.keys,
        enc.vals,
        enc.default,
        pair_arr,
        spec.max_n,
        spec.sigma_len,
    )


def _cider_matrix_grams(
    joint: tuple[Utterance, ...], pair_arr: np.ndarray, spec: MetricSpec
) -> np.ndarray:
    """Gram-tuple fallback for :func:`_cider_matrix`.

    Grams get instance-local integer ids; each (utterance, order) slice is
    emitted with ids ascending so the kernel can merge sorted sparse vectors.
    """
    idf = spec.idf
    max_n = spec.max_n
    default = math.log(idf.doc_count)
    tables = [idf.tables.get(k, {}) for k in range(1, max_n + 1)]
    gram_ids: dict[tuple[str, ...], int] = {}
    idf_by_id: list[float] = []
    ids_flat: list[int] = []
    w_flat: list[float] = []
    offsets = [0]
    for u in joint:
        toks = u.tokens
        for k in range(1, max_n + 1):
            table = tables[k - 1]
            entries = []
            for g, c in Counter(zip(*(toks[d:] for d in range(k)))).items():
                gid = gram_ids.get(g)
                if gid is None:
                    gid = len(idf_by_id)
                    gram_ids[g] = gid
                    idf_by_id.append(table.get(g, default))
                entries.append((gid, c * idf_by_id[gid]))
            entries.sort()
            for gid, w in entries:
                ids_flat.append(gid)
                w_flat.append(w)
            offsets.append(len(ids_flat))
    lengths = np.asarray([len(u) for u in joint], dtype=np.int32)
    return backend.cider_sim_pairs(
        np.asarray(ids_flat or [0], dtype=np.int64),
        np.asarray(w_flat or [0.0], dtype=np.float64),
        np.asarray(offsets, dtype=np.int64),
        lengths,
        pair_arr,
        max_n,
        spec.sigma_len,
    )


def _meteor_matrix(joint: tuple[Utterance, ...], pair_arr: np.ndarray) -> np.ndarray:
    """Batched scores for the (i, j) rows of ``pair_arr``, joint-indexed."""
    ids: dict[str, int] = {}
    tok_flat: list[int] = []
    stem_flat: list[int] = []
    offsets = [0]
    for u in joint:
        tok_flat.extend(ids.setdefault(t, len(ids)) for t in u.tokens)
        stem_flat.extend(ids.setdefault(stem(t), len(ids)) for t in u.tokens)
        offsets.append(len(tok_flat))
    tok_off = np.asarray(offsets, dtype=np.int64)
    toks = np.asarray(tok_flat or [0], dtype=np.int32)
    stems = np.asarray(stem_flat or [0], dtype=np.int32)
    return backend.meteor_score_pairs(toks, tok_off, stems, tok_off, pair_arr)


def pairwise_matrix(
    instance: EvalInstance,
    spec: MetricSpec,
    embeddings: "EmbeddingTable | None" = None,
) -> DistanceMatrix:
    """Transformed distances between every ordered pair of joint texts.

    Pairs with equal raw strings get distance exactly 0 for every kind, so
    the zero-diagonal precondition holds even for metrics whose top score
    is otherwise unreachable.

    Args:
        instance: Texts to compare; joint order is candidates then references.
        spec: Distance kind and parameters; cider_d requires ``spec.idf``.
        embeddings: Lookup table, required for embedding_cosine.

    Returns:
        A :class:`DistanceMatrix` labeled with the joint utterances.
    """
    joint = instance.joint()
    size = len(joint)
    kind = spec.kind
    # raw-equality mask; equal texts stay at distance 0 for every kind
    text_ids: dict[str, int] = {}
    tids = np.fromiter(
        (text_ids.setdefault(u.raw, len(text_ids)) for u in joint),
        dtype=np.int32,
        count=size,
    )
    equal = tids[:, None] == tids[None, :]
    if kind == "embedding_cosine":
        if embeddings is None:
            raise ValueError("embedding_cosine needs an embedding table")
        vecs = np.stack([embeddings.vector_for_text(u.raw) for u in joint])
        values = 1.0 - vecs @ vecs.T
        np.clip(values, 0.0, 2.0, out=values)
    else:
        if kind == "cider_d" and spec.idf is None:
            raise ValueError("cider_d needs an idf table (see build_idf)")
        values = np.zeros((size, size))
        pair_arr = np.argwhere(~equal).astype(np.int32, order="C")
        if kind == "meteor_lite":
            if len(pair_arr):
                scores = _meteor_matrix(joint, pair_arr)
                values[pair_arr[:, 0], pair_arr[:, 1]] = 1.0 - scores
        elif kind == "bleu":
            for i, j in pair_arr.tolist():
                s = bleu_score(joint[i], [joint[j]], spec.max_n, spec.smoothing_eps)
                values[i, j] = 1.0 - s
        elif kind == "rouge_l":
            for i, j in pair_arr.tolist():
                values[i, j] = 1.0 - rouge_l_score(joint[i], joint[j], spec.lcs_beta)
        else:  # cider_d
            if len(pair_arr):
                sims = _cider_matrix(joint, pair_arr, spec)
                values[pair_arr[:, 0], pair_arr[:, 1]] = 10.0 * (1.0 - sims)
    values[equal] = 0.0
    np.maximum(values, 0.0, out=values)
    return DistanceMatrix(n=instance.n, m=instance.m, values=values, labels=joint)

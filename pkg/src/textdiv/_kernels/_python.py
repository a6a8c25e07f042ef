"""Numpy fallback kernels.

Mirrors the compiled extension in ``_speedups.pyx``.  Triangle-rank masses
are integer counts in units of 1/6, so both backends produce bit-identical
results there; the remaining kernels keep summation order aligned with the
compiled loops (sequential over set members) for the same reason.
"""

from __future__ import annotations

import math
from bisect import bisect_left

import numpy as np

# METEOR-style scorer constants, duplicated in _speedups.pyx.
_ALPHA = 0.9
_ONE_MINUS_ALPHA = 0.1
_GAMMA = 0.5


def _complements(combos: np.ndarray, n_total: int) -> np.ndarray:
    """Per-row complements of the index sets in ``combos``, ascending."""
    p, n = combos.shape
    mask = np.ones((p, n_total), dtype=bool)
    mask[np.arange(p)[:, None], combos] = False
    return np.nonzero(mask)[1].reshape(p, n_total - n).astype(combos.dtype)


def trm_masses_batch(
    edge: np.ndarray, combos: np.ndarray, inclusive_ties: bool
) -> np.ndarray:
    """Accumulate rank-slot masses for every partition in ``combos``.

    Args:
        edge: (N, N) edge-length matrix.
        combos: (P, n) candidate index sets, each row ascending.
        inclusive_ties: True applies the inclusive tie rule (a tied triangle
            adds full mass to every rank it satisfies); False splits one unit
            of mass equally over the tied rank span.

    Returns:
        (P, 3) int64 masses in units of 1/6.
    """
    p, n = combos.shape
    comp = _complements(combos, edge.shape[0])
    out = np.zeros((p, 3), dtype=np.int64)

    def accumulate(same: np.ndarray, cross: np.ndarray) -> None:
        s = same.shape[1]
        for a in range(s - 1):
            ia = same[:, a]
            for b in range(a + 1, s):
                ib = same[:, b]
                d_in = edge[ia, ib][:, None]
                e0 = edge[ia[:, None], cross]
                e1 = edge[ib[:, None], cross]
                if inclusive_ties:
                    low = (d_in <= e0) & (d_in <= e1)
                    mid = ((e0 <= d_in) & (d_in <= e1)) | ((e1 <= d_in) & (d_in <= e0))
                    high = (e0 <= d_in) & (e1 <= d_in)
                    out[:, 0] += 6 * low.sum(axis=1, dtype=np.int64)
                    out[:, 1] += 6 * mid.sum(axis=1, dtype=np.int64)
                    out[:, 2] += 6 * high.sum(axis=1, dtype=np.int64)
                else:
                    lo = (e0 < d_in).astype(np.int8) + (e1 < d_in)
                    hi = (e0 <= d_in).astype(np.int8) + (e1 <= d_in)
                    unit = 6 // (hi - lo + 1)
                    for slot in range(3):
                        sel = (lo <= slot) & (slot <= hi)
                        out[:, slot] += (unit * sel).sum(axis=1, dtype=np.int64)

    accumulate(combos, comp)
    accumulate(comp, combos)
    return out


def min_mean_batch(dist: np.ndarray, combos: np.ndarray) -> np.ndarray:
    """Mean over each combo row of the min distance into its complement.

    Args:
        dist: (N, N) directed distance matrix, read as dist[row, column].
        combos: (P, n) candidate index sets.

    Returns:
        (P,) float64 statistic values.
    """
    p, n = combos.shape
    n_total = dist.shape[0]
    mask = np.ones((p, n_total), dtype=bool)
    mask[np.arange(p)[:, None], combos] = False
    rows = dist[combos]  # (P, n, N)
    rows = np.where(mask[:, None, :], rows, np.inf)
    mins = rows.min(axis=2)
    acc = np.zeros(p)
    for i in range(n):  # fixed order, matches the compiled loop
        acc = acc + mins[:, i]
    return acc / n


def cider_sim_pairs(
    gram_ids: np.ndarray,
    weights: np.ndarray,
    off: np.ndarray,
    lengths: np.ndarray,
    pairs: np.ndarray,
    max_n: int,
    sigma_len: float,
) -> np.ndarray:
    """Batch CIDEr-style similarities for (candidate, reference) index pairs.

    Sparse idf-weighted gram vectors are flattened per (utterance, order)
    slice with ids ascending inside each slice; slice s = u * max_n + k.
    """
    gids = gram_ids.tolist()
    ws = weights.tolist()
    offs = off.tolist()
    lens = lengths.tolist()
    n_slices = len(offs) - 1
    norms = [0.0] * n_slices
    for s in range(n_slices):
        acc = 0.0
        for t in range(offs[s], offs[s + 1]):
            w = ws[t]
            acc += w * w
        norms[s] = math.sqrt(acc)
    return _cider_merge(gids, ws, offs, norms, lens, pairs, max_n, sigma_len)


def cider_sim_from_tokens(
    tok_ids: np.ndarray,
    tok_off: np.ndarray,
    idf_keys: np.ndarray,
    idf_vals: np.ndarray,
    default_idf: float,
    pairs: np.ndarray,
    max_n: int,
    sigma_len: float,
) -> np.ndarray:
    """Batch CIDEr-style similarities straight from packed token ids.

    Token ids are 1-based and below 2**15, so a gram of up to four tokens
    packs into one int key (15 bits per slot); slot occupancy then encodes
    gram length, keeping orders collision-free.  ``idf_keys`` holds the
    corpus grams as sorted packed keys with ``idf_vals`` aligned; keys not
    found fall back to ``default_idf``.
    """
    tids = tok_ids.tolist()
    toff = tok_off.tolist()
    keys_sorted = idf_keys.tolist()
    vals = idf_vals.tolist()
    n_keys = len(keys_sorted)
    n_utt = len(toff) - 1
    gkeys: list[int] = []
    gw: list[float] = []
    goff = [0]
    norms: list[float] = []
    for u in range(n_utt):
        base = toff[u]
        length = toff[u + 1] - base
        for k in range(1, max_n + 1):
            cnt = length - k + 1
            buf = []
            for i in range(max(cnt, 0)):
                key = 0
                for d in range(k):
                    key |= tids[base + i + d] << (15 * d)
                buf.append(key)
            buf.sort()
            i = 0
            acc = 0.0
            while i < len(buf):
                key = buf[i]
                run = 1
                i += 1
                while i < len(buf) and buf[i] == key:
                    run += 1
                    i += 1
                j = bisect_left(keys_sorted, key)
                idfv = (
                    vals[j]
                    if j < n_keys and keys_sorted[j] == key
                    else default_idf
                )
                w = run * idfv
                gkeys.append(key)
                gw.append(w)
                acc += w * w
            goff.append(len(gkeys))
            norms.append(math.sqrt(acc))
    lens = [toff[u + 1] - toff[u] for u in range(n_utt)]
    return _cider_merge(
        gkeys, gw, goff, norms, lens, pairs, max_n, sigma_len
    )


def _cider_merge(
    gkeys: list,
    gw: list,
    goff: list,
    norms: list,
    lens: list,
    pairs: np.ndarray,
    max_n: int,
    sigma_len: float,
) -> np.ndarray:
    """Sorted sparse-vector merges shared by the two cider entry points."""
    denom = 2.0 * sigma_len * sigma_len
    out = np.empty(len(pairs))
    for p in range(len(pairs)):
        ci = int(pairs[p, 0])
        ri = int(pairs[p, 1])
        delta = lens[ci] - lens[ri]
        pen = math.exp(float(-(delta * delta)) / denom)
        sim_sum = 0.0
        for k in range(max_n):
            sa = ci * max_n + k
            sb = ri * max_n + k
            cn = norms[sa]
            rn = norms[sb]
            if cn == 0.0 or rn == 0.0:
                continue
            a = goff[sa]
            a1 = goff[sa + 1]
            b = goff[sb]
            b1 = goff[sb + 1]
            num = 0.0
            while a < a1 and b < b1:
                if gkeys[a] < gkeys[b]:
                    a += 1
                elif gkeys[b] < gkeys[a]:
                    b += 1
                else:
                    wa = gw[a]
                    wb = gw[b]
                    num += (wa if wa < wb else wb) * wb
                    a += 1
                    b += 1
            sim_sum += pen * num / (cn * rn)
        out[p] = sim_sum / max_n
    return out


def _meteor_pair(ct: list, rt: list, cs: list, rs: list) -> float:
    """Score one candidate/reference token-id pair.

    Two greedy one-to-one alignment stages (surface ids, then stem ids),
    then the harmonic-mean-with-fragmentation formula.
    """
    lc = len(ct)
    lr = len(rt)
    if lc == 0 or lr == 0:
        return 0.0
    used = [False] * lr
    align = [-1] * lc
    for i in range(lc):
        t = ct[i]
        for j in range(lr):
            if not used[j] and rt[j] == t:
                align[i] = j
                used[j] = True
                break
    for i in range(lc):
        if align[i] >= 0:
            continue
        s = cs[i]
        for j in range(lr):
            if not used[j] and rs[j] == s:
                align[i] = j
                used[j] = True
                break
    matches = sum(1 for j in align if j >= 0)
    if matches == 0:
        return 0.0
    prec = matches / lc
    rec = matches / lr
    fmean = prec * rec / (_ALPHA * prec + _ONE_MINUS_ALPHA * rec)
    chunks = 0
    prev_i = -2
    prev_j = -2
    for i in range(lc):
        j = align[i]
        if j < 0:
            continue
        if i != prev_i + 1 or j != prev_j + 1:
            chunks += 1
        prev_i = i
        prev_j = j
    frag = chunks / matches
    penalty = _GAMMA * frag * frag * frag
    return fmean * (1.0 - penalty)


def meteor_score_pairs(
    tok_flat: np.ndarray,
    tok_off: np.ndarray,
    stem_flat: np.ndarray,
    stem_off: np.ndarray,
    pairs: np.ndarray,
) -> np.ndarray:
    """Batch METEOR-style scores for (candidate, reference) index pairs.

    Token and stem streams are flattened id arrays with offsets, one slice
    per utterance; ``pairs[k] = (ci, ri)`` selects slices to score.
    """
    toks = [
        tok_flat[tok_off[i] : tok_off[i + 1]].tolist()
        for i in range(len(tok_off) - 1)
    ]
    stems = [
        stem_flat[stem_off[i] : stem_off[i + 1]].tolist()
        for i in range(len(stem_off) - 1)
    ]
    out = np.empty(len(pairs))
    for k in range(len(pairs)):
        ci, ri = int(pairs[k, 0]), int(pairs[k, 1])
        out[k] = _meteor_pair(toks[ci], toks[ri], stems[ci], stems[ri])
    return out

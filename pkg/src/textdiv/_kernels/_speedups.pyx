# cython: language_level=3
"""Compiled kernels.  Reference implementations live in _python.py; the two
backends must agree bit-for-bit (integer masses for triangle ranks, matched
summation order elsewhere)."""

from libc.math cimport INFINITY, exp, sqrt
from libc.stdlib cimport free, malloc, qsort

import numpy as np

cdef double _ALPHA = 0.9
cdef double _ONE_MINUS_ALPHA = 0.1
cdef double _GAMMA = 0.5


cdef inline void _classify(double d_in, double e0, double e1, bint inclusive,
                           long long *m0, long long *m1, long long *m2) noexcept nogil:
    cdef int lo, hi, unit, s
    if inclusive:
        if d_in <= e0 and d_in <= e1:
            m0[0] += 6
        if (e0 <= d_in and d_in <= e1) or (e1 <= d_in and d_in <= e0):
            m1[0] += 6
        if e0 <= d_in and e1 <= d_in:
            m2[0] += 6
        return
    lo = 0
    hi = 0
    if e0 < d_in:
        lo += 1
    if e1 < d_in:
        lo += 1
    if e0 <= d_in:
        hi += 1
    if e1 <= d_in:
        hi += 1
    unit = 6 / (hi - lo + 1)
    for s in range(lo, hi + 1):
        if s == 0:
            m0[0] += unit
        elif s == 1:
            m1[0] += unit
        else:
            m2[0] += unit


def trm_masses_batch(double[:, ::1] edge, int[:, ::1] combos, bint inclusive_ties):
    """(P, 3) int64 rank masses in units of 1/6, one row per partition."""
    cdef Py_ssize_t n_total = edge.shape[0]
    cdef Py_ssize_t p_count = combos.shape[0]
    cdef Py_ssize_t n = combos.shape[1]
    cdef Py_ssize_t m = n_total - n
    cdef Py_ssize_t p, i, j, a, b, k
    cdef long long m0, m1, m2
    cdef double d_in

    out = np.zeros((p_count, 3), dtype=np.int64)
    cdef long long[:, ::1] ov = out
    cdef int *cand = <int *> malloc((n if n > 0 else 1) * sizeof(int))
    cdef int *ref = <int *> malloc((m if m > 0 else 1) * sizeof(int))
    cdef unsigned char *flags = <unsigned char *> malloc(n_total if n_total > 0 else 1)
    if cand == NULL or ref == NULL or flags == NULL:
        free(cand)
        free(ref)
        free(flags)
        raise MemoryError()
    try:
        with nogil:
            for p in range(p_count):
                for i in range(n_total):
                    flags[i] = 0
                for i in range(n):
                    cand[i] = combos[p, i]
                    flags[cand[i]] = 1
                j = 0
                for i in range(n_total):
                    if flags[i] == 0:
                        ref[j] = <int> i
                        j += 1
                m0 = 0
                m1 = 0
                m2 = 0
                for a in range(n - 1):
                    for b in range(a + 1, n):
                        d_in = edge[cand[a], cand[b]]
                        for k in range(m):
                            _classify(d_in, edge[cand[a], ref[k]],
                                      edge[cand[b], ref[k]], inclusive_ties,
                                      &m0, &m1, &m2)
                for a in range(m - 1):
                    for b in range(a + 1, m):
                        d_in = edge[ref[a], ref[b]]
                        for k in range(n):
                            _classify(d_in, edge[ref[a], cand[k]],
                                      edge[ref[b], cand[k]], inclusive_ties,
                                      &m0, &m1, &m2)
                ov[p, 0] = m0
                ov[p, 1] = m1
                ov[p, 2] = m2
    finally:
        free(cand)
        free(ref)
        free(flags)
    return out


def min_mean_batch(double[:, ::1] dist, int[:, ::1] combos):
    """Mean over each combo row of the min distance into its complement."""
    cdef Py_ssize_t n_total = dist.shape[0]
    cdef Py_ssize_t p_count = combos.shape[0]
    cdef Py_ssize_t n = combos.shape[1]
    cdef Py_ssize_t m = n_total - n
    cdef Py_ssize_t p, i, j, k
    cdef double acc, best, v

    out = np.empty(p_count)
    cdef double[::1] ov = out
    cdef int *ref = <int *> malloc((m if m > 0 else 1) * sizeof(int))
    cdef unsigned char *flags = <unsigned char *> malloc(n_total if n_total > 0 else 1)
    if ref == NULL or flags == NULL:
        free(ref)
        free(flags)
        raise MemoryError()
    try:
        with nogil:
            for p in range(p_count):
                for i in range(n_total):
                    flags[i] = 0
                for i in range(n):
                    flags[combos[p, i]] = 1
                j = 0
                for i in range(n_total):
                    if flags[i] == 0:
                        ref[j] = <int> i
                        j += 1
                acc = 0.0
                for i in range(n):
                    best = INFINITY
                    for k in range(m):
                        v = dist[combos[p, i], ref[k]]
                        if v < best:
                            best = v
                    acc += best
                ov[p] = acc / n
    finally:
        free(ref)
        free(flags)
    return out


cdef inline double _meteor_pair(const int *ct, Py_ssize_t lc,
                                const int *rt, Py_ssize_t lr,
                                const int *cs, const int *rs,
                                int *align, unsigned char *used) noexcept nogil:
    cdef Py_ssize_t i, j, prev_i
    cdef long long matches = 0
    cdef long long chunks = 0
    cdef int prev_j
    cdef double prec, rec, fmean, frag, penalty

    if lc == 0 or lr == 0:
        return 0.0
    for j in range(lr):
        used[j] = 0
    for i in range(lc):
        align[i] = -1
    for i in range(lc):
        for j in range(lr):
            if used[j] == 0 and rt[j] == ct[i]:
                align[i] = <int> j
                used[j] = 1
                break
    for i in range(lc):
        if align[i] >= 0:
            continue
        for j in range(lr):
            if used[j] == 0 and rs[j] == cs[i]:
                align[i] = <int> j
                used[j] = 1
                break
    for i in range(lc):
        if align[i] >= 0:
            matches += 1
    if matches == 0:
        return 0.0
    prec = <double> matches / lc
    rec = <double> matches / lr
    fmean = prec * rec / (_ALPHA * prec + _ONE_MINUS_ALPHA * rec)
    prev_i = -2
    prev_j = -2
    for i in range(lc):
        if align[i] < 0:
            continue
        if i != prev_i + 1 or align[i] != prev_j + 1:
            chunks += 1
        prev_i = i
        prev_j = align[i]
    frag = <double> chunks / matches
    penalty = _GAMMA * frag * frag * frag
    return fmean * (1.0 - penalty)


cdef int _cmp_i64(const void *a, const void *b) noexcept nogil:
    cdef long long x = (<const long long *> a)[0]
    cdef long long y = (<const long long *> b)[0]
    if x < y:
        return -1
    if x > y:
        return 1
    return 0


cdef inline double _idf_lookup(const long long *keys, const double *vals,
                               Py_ssize_t nk, long long key,
                               double dflt) noexcept nogil:
    cdef Py_ssize_t lo = 0
    cdef Py_ssize_t hi = nk
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    if lo < nk and keys[lo] == key:
        return vals[lo]
    return dflt


cdef inline double _cider_pair_sim(const long long *gids, const double *ws,
                                   const Py_ssize_t *off, const double *norms,
                                   Py_ssize_t ci, Py_ssize_t ri,
                                   long long len_c, long long len_r,
                                   Py_ssize_t max_n,
                                   double sigma_len) noexcept nogil:
    cdef Py_ssize_t k, sa, sb, a, a1, b, b1
    cdef long long dl = len_c - len_r
    cdef double pen, num, cn, rn, wa, wb
    cdef double sim_sum = 0.0

    pen = exp((<double> -(dl * dl)) / (2.0 * sigma_len * sigma_len))
    for k in range(max_n):
        sa = ci * max_n + k
        sb = ri * max_n + k
        cn = norms[sa]
        rn = norms[sb]
        if cn == 0.0 or rn == 0.0:
            continue
        a = off[sa]
        a1 = off[sa + 1]
        b = off[sb]
        b1 = off[sb + 1]
        num = 0.0
        while a < a1 and b < b1:
            if gids[a] < gids[b]:
                a += 1
            elif gids[b] < gids[a]:
                b += 1
            else:
                wa = ws[a]
                wb = ws[b]
                num += (wa if wa < wb else wb) * wb
                a += 1
                b += 1
        sim_sum += pen * num / (cn * rn)
    return sim_sum / max_n


def cider_sim_pairs(long long[::1] gram_ids, double[::1] weights,
                    long long[::1] off, int[::1] lengths, int[:, ::1] pairs,
                    Py_ssize_t max_n, double sigma_len):
    """Batch CIDEr-style similarities for (candidate, reference) index pairs.

    Sparse idf-weighted gram vectors are flattened per (utterance, order)
    slice with ids ascending inside each slice; slice s = u * max_n + k.
    """
    cdef Py_ssize_t p_count = pairs.shape[0]
    cdef Py_ssize_t n_slices = off.shape[0] - 1
    cdef Py_ssize_t s, t, p
    cdef double acc, w
    cdef const long long *gbase = NULL
    cdef const double *wbase = NULL

    out = np.empty(p_count)
    cdef double[::1] ov = out
    if gram_ids.shape[0] > 0:
        gbase = &gram_ids[0]
    if weights.shape[0] > 0:
        wbase = &weights[0]
    cdef double *norms = <double *> malloc(
        (n_slices if n_slices > 0 else 1) * sizeof(double))
    cdef Py_ssize_t *offs = <Py_ssize_t *> malloc(
        (n_slices + 1) * sizeof(Py_ssize_t))
    if norms == NULL or offs == NULL:
        free(norms)
        free(offs)
        raise MemoryError()
    try:
        with nogil:
            for s in range(n_slices + 1):
                offs[s] = off[s]
            for s in range(n_slices):
                acc = 0.0
                for t in range(offs[s], offs[s + 1]):
                    w = wbase[t]
                    acc += w * w
                norms[s] = sqrt(acc)
            for p in range(p_count):
                ov[p] = _cider_pair_sim(
                    gbase, wbase, offs, norms, pairs[p, 0], pairs[p, 1],
                    lengths[pairs[p, 0]], lengths[pairs[p, 1]],
                    max_n, sigma_len)
    finally:
        free(norms)
        free(offs)
    return out


def cider_sim_from_tokens(int[::1] tok_ids, long long[::1] tok_off,
                          long long[::1] idf_keys, double[::1] idf_vals,
                          double default_idf, int[:, ::1] pairs,
                          Py_ssize_t max_n, double sigma_len):
    """Batch CIDEr-style similarities straight from packed token ids.

    Token ids are 1-based and below 2**15, so a gram of up to four tokens
    packs into one int64 key (15 bits per slot); slot occupancy then encodes
    gram length, keeping orders collision-free.  ``idf_keys`` holds the
    corpus grams as sorted packed keys with ``idf_vals`` aligned; keys not
    found fall back to ``default_idf``.
    """
    cdef Py_ssize_t n_utt = tok_off.shape[0] - 1
    cdef Py_ssize_t p_count = pairs.shape[0]
    cdef Py_ssize_t n_slices = n_utt * max_n
    cdef Py_ssize_t n_keys = idf_keys.shape[0]
    cdef Py_ssize_t cap = tok_ids.shape[0] * max_n
    cdef Py_ssize_t u, k, s, i, cnt, pos, w_pos, run, d, p
    cdef long long key, cval
    cdef double idfv, w, acc
    cdef const int *tp
    cdef const int *tok_base = NULL
    cdef const long long *kbase = NULL
    cdef const double *vbase = NULL

    if cap < 1:
        cap = 1
    out = np.empty(p_count)
    cdef double[::1] ov = out
    if tok_ids.shape[0] > 0:
        tok_base = &tok_ids[0]
    if n_keys > 0:
        kbase = &idf_keys[0]
        vbase = &idf_vals[0]
    cdef long long *gkeys = <long long *> malloc(cap * sizeof(long long))
    cdef double *gw = <double *> malloc(cap * sizeof(double))
    cdef Py_ssize_t *goff = <Py_ssize_t *> malloc(
        (n_slices + 1) * sizeof(Py_ssize_t))
    cdef double *norms = <double *> malloc(
        (n_slices if n_slices > 0 else 1) * sizeof(double))
    if gkeys == NULL or gw == NULL or goff == NULL or norms == NULL:
        free(gkeys)
        free(gw)
        free(goff)
        free(norms)
        raise MemoryError()
    try:
        with nogil:
            pos = 0
            goff[0] = 0
            for u in range(n_utt):
                tp = tok_base + tok_off[u]
                for k in range(1, max_n + 1):
                    s = u * max_n + (k - 1)
                    cnt = tok_off[u + 1] - tok_off[u] - k + 1
                    if cnt < 0:
                        cnt = 0
                    for i in range(cnt):
                        key = 0
                        for d in range(k):
                            key |= (<long long> tp[i + d]) << (15 * d)
                        gkeys[pos + i] = key
                    qsort(gkeys + pos, cnt, sizeof(long long), _cmp_i64)
                    w_pos = pos
                    i = 0
                    acc = 0.0
                    while i < cnt:
                        key = gkeys[pos + i]
                        run = 1
                        i += 1
                        while i < cnt and gkeys[pos + i] == key:
                            run += 1
                            i += 1
                        idfv = _idf_lookup(kbase, vbase, n_keys, key,
                                           default_idf)
                        cval = run
                        w = cval * idfv
                        gkeys[w_pos] = key
                        gw[w_pos] = w
                        acc += w * w
                        w_pos += 1
                    pos = w_pos
                    goff[s + 1] = pos
                    norms[s] = sqrt(acc)
            for p in range(p_count):
                ov[p] = _cider_pair_sim(
                    gkeys, gw, goff, norms, pairs[p, 0], pairs[p, 1],
                    tok_off[pairs[p, 0] + 1] - tok_off[pairs[p, 0]],
                    tok_off[pairs[p, 1] + 1] - tok_off[pairs[p, 1]],
                    max_n, sigma_len)
    finally:
        free(gkeys)
        free(gw)
        free(goff)
        free(norms)
    return out


def meteor_score_pairs(int[::1] tok_flat, long long[::1] tok_off,
                       int[::1] stem_flat, long long[::1] stem_off,
                       int[:, ::1] pairs):
    """Batch METEOR-style scores for (candidate, reference) index pairs."""
    cdef Py_ssize_t p_count = pairs.shape[0]
    cdef Py_ssize_t n_utt = tok_off.shape[0] - 1
    cdef Py_ssize_t i, k, ci, ri, maxlen
    cdef const int *tbase = NULL
    cdef const int *sbase = NULL

    out = np.empty(p_count)
    cdef double[::1] ov = out
    if tok_flat.shape[0] > 0:
        tbase = &tok_flat[0]
    if stem_flat.shape[0] > 0:
        sbase = &stem_flat[0]
    maxlen = 1
    for i in range(n_utt):
        if tok_off[i + 1] - tok_off[i] > maxlen:
            maxlen = tok_off[i + 1] - tok_off[i]
    cdef int *align = <int *> malloc(maxlen * sizeof(int))
    cdef unsigned char *used = <unsigned char *> malloc(maxlen)
    if align == NULL or used == NULL:
        free(align)
        free(used)
        raise MemoryError()
    try:
        with nogil:
            for k in range(p_count):
                ci = pairs[k, 0]
                ri = pairs[k, 1]
                ov[k] = _meteor_pair(
                    tbase + tok_off[ci], tok_off[ci + 1] - tok_off[ci],
                    tbase + tok_off[ri], tok_off[ri + 1] - tok_off[ri],
                    sbase + stem_off[ci], sbase + stem_off[ri],
                    align, used)
    finally:
        free(align)
        free(used)
    return out

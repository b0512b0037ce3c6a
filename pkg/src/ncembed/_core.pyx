# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: HNSW graph build/search and the training loop.

A pure-Python mirror with the same call surface lives in ``_purepy.py``;
``backend.py`` picks whichever is available.  Both consume the counter-based
RNG protocol documented in ``_rng.py``, so seeded runs are reproducible and
worker streams never overlap.

All functions release the GIL around their inner loops.  ``train_chunk`` in
particular is designed to be called from several Python threads at once on a
shared coordinate array: updates are applied without locks, and the rare
colliding writes on sparse-touch updates are tolerated by design.
"""

from libc.math cimport exp, log1p, pow
from libc.stdint cimport int32_t, int64_t, uint64_t

import numpy as np

BACKEND = "compiled"

cdef uint64_t GAMMA = (<uint64_t>0x9E3779B9 << 32) | <uint64_t>0x7F4A7C15
cdef uint64_t MIX_A = (<uint64_t>0xBF58476D << 32) | <uint64_t>0x1CE4E5B9
cdef uint64_t MIX_B = (<uint64_t>0x94D049BB << 32) | <uint64_t>0x133111EB
cdef double INV_2POW53 = 1.0 / 9007199254740992.0


# ---------------------------------------------------------------------------
# counter RNG (see _rng.py for the protocol)

cdef inline uint64_t rng_mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * MIX_A
    z = (z ^ (z >> 27)) * MIX_B
    return z ^ (z >> 31)


cdef inline uint64_t rand_u64(uint64_t key, uint64_t counter) noexcept nogil:
    return rng_mix(key + (counter + 1) * GAMMA)


cdef inline double rand_unit(uint64_t key, uint64_t counter) noexcept nogil:
    return <double>((rand_u64(key, counter) >> 11) + 1) * INV_2POW53


cdef inline int64_t rand_bounded(uint64_t key, uint64_t counter, uint64_t n) noexcept nogil:
    return <int64_t>(((rand_u64(key, counter) >> 32) * n) >> 32)


cdef inline int64_t alias_pick(uint64_t key, uint64_t counter, int64_t n_entries,
                               const double* prob, const int32_t* alias) noexcept nogil:
    cdef int64_t slot = rand_bounded(key, counter, <uint64_t>n_entries)
    cdef double u = rand_unit(key, counter + 1)
    if u <= prob[slot]:
        return slot
    return alias[slot]


# ---------------------------------------------------------------------------
# binary heaps on parallel (distance, id) arrays; min-heap by distance

cdef inline void hpush(double* hd, int32_t* hv, int* n, double d, int32_t v) noexcept nogil:
    cdef int i = n[0]
    cdef int p
    cdef double td
    cdef int32_t tv
    hd[i] = d
    hv[i] = v
    n[0] = i + 1
    while i > 0:
        p = (i - 1) >> 1
        if hd[p] <= hd[i]:
            break
        td = hd[p]; hd[p] = hd[i]; hd[i] = td
        tv = hv[p]; hv[p] = hv[i]; hv[i] = tv
        i = p


cdef inline void hpop(double* hd, int32_t* hv, int* n) noexcept nogil:
    cdef int m = n[0] - 1
    cdef int i = 0
    cdef int c
    cdef double td
    cdef int32_t tv
    n[0] = m
    hd[0] = hd[m]
    hv[0] = hv[m]
    while True:
        c = 2 * i + 1
        if c >= m:
            break
        if c + 1 < m and hd[c + 1] < hd[c]:
            c += 1
        if hd[i] <= hd[c]:
            break
        td = hd[i]; hd[i] = hd[c]; hd[c] = td
        tv = hv[i]; hv[i] = hv[c]; hv[c] = tv
        i = c


# ---------------------------------------------------------------------------
# HNSW

cdef struct Hnsw:
    const double* data
    int n
    int dim
    int metric          # 0 = squared euclidean, 1 = cosine on unit rows
    const int32_t* level
    int32_t* deg0
    int32_t* adj0
    int cap0
    int32_t* degU
    int32_t* adjU
    int capU
    const int64_t* upoff
    int entry
    int maxlevel


cdef inline double hdist(const Hnsw* h, const double* q, int32_t j) noexcept nogil:
    cdef const double* p = h.data + <int64_t>j * h.dim
    cdef double acc = 0.0
    cdef double diff
    cdef int t
    if h.metric == 0:
        for t in range(h.dim):
            diff = q[t] - p[t]
            acc += diff * diff
        return acc
    for t in range(h.dim):
        acc += q[t] * p[t]
    acc = 1.0 - acc
    if acc < 0.0:
        acc = 0.0
    return acc


cdef inline int32_t* nbr_list(const Hnsw* h, int32_t node, int layer, int* deg) noexcept nogil:
    cdef int64_t blk
    if layer == 0:
        deg[0] = h.deg0[node]
        return h.adj0 + <int64_t>node * h.cap0
    blk = h.upoff[node] + (layer - 1)
    deg[0] = h.degU[blk]
    return h.adjU + blk * h.capU


cdef inline void set_deg(Hnsw* h, int32_t node, int layer, int d) noexcept nogil:
    if layer == 0:
        h.deg0[node] = d
    else:
        h.degU[h.upoff[node] + (layer - 1)] = d


cdef void search_ef1(const Hnsw* h, const double* q, int layer,
                     int32_t* ep, double* epd) noexcept nogil:
    cdef bint improved = True
    cdef int deg, t
    cdef int32_t* lst
    cdef int32_t nb
    cdef double d
    while improved:
        improved = False
        lst = nbr_list(h, ep[0], layer, &deg)
        for t in range(deg):
            nb = lst[t]
            d = hdist(h, q, nb)
            if d < epd[0]:
                epd[0] = d
                ep[0] = nb
                improved = True


cdef int search_layer(const Hnsw* h, const double* q, int layer, int ef,
                      const int32_t* eps_v, const double* eps_d, int n_eps,
                      double* res_d, int32_t* res_v,      # max-heap: stores -d
                      double* cand_d, int32_t* cand_v,    # min-heap: stores d
                      int32_t* visited, int32_t tag) noexcept nogil:
    cdef int nres = 0
    cdef int ncand = 0
    cdef int i, deg, t
    cdef double d, dn, worst
    cdef int32_t c, nb
    cdef int32_t* lst
    for i in range(n_eps):
        visited[eps_v[i]] = tag
        hpush(cand_d, cand_v, &ncand, eps_d[i], eps_v[i])
        hpush(res_d, res_v, &nres, -eps_d[i], eps_v[i])
    while ncand > 0:
        d = cand_d[0]
        c = cand_v[0]
        hpop(cand_d, cand_v, &ncand)
        if nres >= ef and d > -res_d[0]:
            break
        lst = nbr_list(h, c, layer, &deg)
        for t in range(deg):
            nb = lst[t]
            if visited[nb] == tag:
                continue
            visited[nb] = tag
            dn = hdist(h, q, nb)
            if nres < ef:
                hpush(cand_d, cand_v, &ncand, dn, nb)
                hpush(res_d, res_v, &nres, -dn, nb)
            else:
                worst = -res_d[0]
                if dn < worst:
                    hpush(cand_d, cand_v, &ncand, dn, nb)
                    hpop(res_d, res_v, &nres)
                    hpush(res_d, res_v, &nres, -dn, nb)
    return nres


cdef void heap_to_sorted(double* res_d, int32_t* res_v, int nres,
                         double* out_d, int32_t* out_v) noexcept nogil:
    # drains the max-heap into ascending (distance, id) arrays
    cdef int i
    cdef int n = nres
    for i in range(nres - 1, -1, -1):
        out_d[i] = -res_d[0]
        out_v[i] = res_v[0]
        hpop(res_d, res_v, &n)


cdef int select_heuristic(const Hnsw* h, const double* cd, const int32_t* cv,
                          int ncand, int m_max,
                          int32_t* out_v, double* out_d) noexcept nogil:
    # keep a candidate only if it is closer to the query than to every
    # neighbor kept so far; candidates must arrive sorted by distance
    cdef int cnt = 0
    cdef int i, j
    cdef bint good
    cdef double dq
    cdef const double* pv
    for i in range(ncand):
        if cnt >= m_max:
            break
        dq = cd[i]
        pv = h.data + <int64_t>cv[i] * h.dim
        good = True
        for j in range(cnt):
            if hdist(h, pv, out_v[j]) < dq:
                good = False
                break
        if good:
            out_v[cnt] = cv[i]
            out_d[cnt] = dq
            cnt += 1
    return cnt


cdef void add_backlink(Hnsw* h, int32_t nb, int32_t new_node, double d_new,
                       int layer, int m_max,
                       double* scratch_d, int32_t* scratch_v,
                       double* sel_d, int32_t* sel_v) noexcept nogil:
    cdef int deg
    cdef int32_t* lst = nbr_list(h, nb, layer, &deg)
    cdef int t, a, bpos, cnt
    cdef double kd
    cdef int32_t kv
    cdef const double* pnb
    if deg < m_max:
        lst[deg] = new_node
        set_deg(h, nb, layer, deg + 1)
        return
    # full: re-select among existing links plus the new one
    pnb = h.data + <int64_t>nb * h.dim
    for t in range(deg):
        scratch_d[t] = hdist(h, pnb, lst[t])
        scratch_v[t] = lst[t]
    scratch_d[deg] = d_new
    scratch_v[deg] = new_node
    for a in range(1, deg + 1):
        kd = scratch_d[a]
        kv = scratch_v[a]
        bpos = a - 1
        while bpos >= 0 and scratch_d[bpos] > kd:
            scratch_d[bpos + 1] = scratch_d[bpos]
            scratch_v[bpos + 1] = scratch_v[bpos]
            bpos -= 1
        scratch_d[bpos + 1] = kd
        scratch_v[bpos + 1] = kv
    cnt = select_heuristic(h, scratch_d, scratch_v, deg + 1, m_max, sel_v, sel_d)
    for t in range(cnt):
        lst[t] = sel_v[t]
    set_deg(h, nb, layer, cnt)


def hnsw_build(double[:, ::1] data, int metric, int m_conn, int ef_construction,
               int32_t[::1] level,
               int32_t[::1] deg0, int32_t[:, ::1] adj0,
               int32_t[::1] degU, int32_t[:, ::1] adjU,
               int64_t[::1] upoff):
    """Fill the preallocated adjacency arrays; returns (entry, max_level).

    Points are inserted in index order, so the structure is a deterministic
    function of the data and the precomputed level assignment.
    """
    cdef Hnsw h
    cdef int n = data.shape[0]
    h.data = &data[0, 0]
    h.n = n
    h.dim = data.shape[1]
    h.metric = metric
    h.level = &level[0]
    h.deg0 = &deg0[0]
    h.adj0 = &adj0[0, 0]
    h.cap0 = adj0.shape[1]
    h.capU = adjU.shape[1]
    if degU.shape[0] > 0:
        h.degU = &degU[0]
        h.adjU = &adjU[0, 0]
    else:
        h.degU = NULL
        h.adjU = NULL
    h.upoff = &upoff[0]
    h.entry = 0
    h.maxlevel = level[0]

    cdef int ef = ef_construction if ef_construction > m_conn + 1 else m_conn + 1
    cdef int heap_cap = n + ef + 8

    visited_arr = np.zeros(n, dtype=np.int32)
    cand_d_arr = np.empty(heap_cap, dtype=np.float64)
    cand_v_arr = np.empty(heap_cap, dtype=np.int32)
    res_d_arr = np.empty(ef + 8, dtype=np.float64)
    res_v_arr = np.empty(ef + 8, dtype=np.int32)
    srt_d_arr = np.empty(ef + 8, dtype=np.float64)
    srt_v_arr = np.empty(ef + 8, dtype=np.int32)
    eps_d_arr = np.empty(ef + 8, dtype=np.float64)
    eps_v_arr = np.empty(ef + 8, dtype=np.int32)
    sel_d_arr = np.empty(h.cap0 + 2, dtype=np.float64)
    sel_v_arr = np.empty(h.cap0 + 2, dtype=np.int32)
    bs_d_arr = np.empty(h.cap0 + 2, dtype=np.float64)
    bs_v_arr = np.empty(h.cap0 + 2, dtype=np.int32)
    bsel_d_arr = np.empty(h.cap0 + 2, dtype=np.float64)
    bsel_v_arr = np.empty(h.cap0 + 2, dtype=np.int32)

    cdef int32_t[::1] visited = visited_arr
    cdef double[::1] cand_d = cand_d_arr
    cdef int32_t[::1] cand_v = cand_v_arr
    cdef double[::1] res_d = res_d_arr
    cdef int32_t[::1] res_v = res_v_arr
    cdef double[::1] srt_d = srt_d_arr
    cdef int32_t[::1] srt_v = srt_v_arr
    cdef double[::1] eps_d = eps_d_arr
    cdef int32_t[::1] eps_v = eps_v_arr
    cdef double[::1] sel_d = sel_d_arr
    cdef int32_t[::1] sel_v = sel_v_arr
    cdef double[::1] bs_d = bs_d_arr
    cdef int32_t[::1] bs_v = bs_v_arr
    cdef double[::1] bsel_d = bsel_d_arr
    cdef int32_t[::1] bsel_v = bsel_v_arr

    cdef int32_t tag = 0
    cdef int i, l, lc, toplc, n_eps, nres, nsel, m_max, t
    cdef int32_t ep
    cdef double epd
    cdef const double* q

    if n <= 1:
        return h.entry, h.maxlevel

    with nogil:
        for i in range(1, n):
            l = h.level[i]
            q = h.data + <int64_t>i * h.dim
            ep = h.entry
            epd = hdist(&h, q, ep)
            for lc in range(h.maxlevel, l, -1):
                search_ef1(&h, q, lc, &ep, &epd)
            eps_v[0] = ep
            eps_d[0] = epd
            n_eps = 1
            toplc = l if l < h.maxlevel else h.maxlevel
            for lc in range(toplc, -1, -1):
                tag += 1
                nres = search_layer(&h, q, lc, ef, &eps_v[0], &eps_d[0], n_eps,
                                    &res_d[0], &res_v[0], &cand_d[0], &cand_v[0],
                                    &visited[0], tag)
                heap_to_sorted(&res_d[0], &res_v[0], nres, &srt_d[0], &srt_v[0])
                m_max = h.cap0 if lc == 0 else h.capU
                nsel = select_heuristic(&h, &srt_d[0], &srt_v[0], nres, m_conn,
                                        &sel_v[0], &sel_d[0])
                for t in range(nsel):
                    if lc == 0:
                        h.adj0[<int64_t>i * h.cap0 + t] = sel_v[t]
                    else:
                        h.adjU[(h.upoff[i] + (lc - 1)) * h.capU + t] = sel_v[t]
                set_deg(&h, i, lc, nsel)
                for t in range(nsel):
                    add_backlink(&h, sel_v[t], i, sel_d[t], lc, m_max,
                                 &bs_d[0], &bs_v[0], &bsel_d[0], &bsel_v[0])
                for t in range(nres):
                    eps_d[t] = srt_d[t]
                    eps_v[t] = srt_v[t]
                n_eps = nres
            if l > h.maxlevel:
                h.maxlevel = l
                h.entry = i
    return h.entry, h.maxlevel


def hnsw_query_chunk(double[:, ::1] data, int metric,
                     int32_t[::1] level,
                     int32_t[::1] deg0, int32_t[:, ::1] adj0,
                     int32_t[::1] degU, int32_t[:, ::1] adjU,
                     int64_t[::1] upoff,
                     int entry, int maxlevel,
                     int k, int ef,
                     int32_t[:, ::1] out_nb, double[:, ::1] out_d,
                     int row0, int row1):
    """Self-kNN for rows [row0, row1): query each row, excluding itself.

    Rows where fewer than k neighbors were reachable get -1 padding; the
    caller repairs them by brute force.  Safe to call concurrently on
    disjoint row ranges, the index is read-only here.
    """
    cdef Hnsw h
    cdef int n = data.shape[0]
    h.data = &data[0, 0]
    h.n = n
    h.dim = data.shape[1]
    h.metric = metric
    h.level = &level[0]
    h.deg0 = &deg0[0]
    h.adj0 = &adj0[0, 0]
    h.cap0 = adj0.shape[1]
    h.capU = adjU.shape[1]
    if degU.shape[0] > 0:
        h.degU = &degU[0]
        h.adjU = &adjU[0, 0]
    else:
        h.degU = NULL
        h.adjU = NULL
    h.upoff = &upoff[0]
    h.entry = entry
    h.maxlevel = maxlevel

    cdef int ef_eff = ef if ef > k + 1 else k + 1
    cdef int heap_cap = n + ef_eff + 8

    visited_arr = np.zeros(n, dtype=np.int32)
    cand_d_arr = np.empty(heap_cap, dtype=np.float64)
    cand_v_arr = np.empty(heap_cap, dtype=np.int32)
    res_d_arr = np.empty(ef_eff + 8, dtype=np.float64)
    res_v_arr = np.empty(ef_eff + 8, dtype=np.int32)
    srt_d_arr = np.empty(ef_eff + 8, dtype=np.float64)
    srt_v_arr = np.empty(ef_eff + 8, dtype=np.int32)

    cdef int32_t[::1] visited = visited_arr
    cdef double[::1] cand_d = cand_d_arr
    cdef int32_t[::1] cand_v = cand_v_arr
    cdef double[::1] res_d = res_d_arr
    cdef int32_t[::1] res_v = res_v_arr
    cdef double[::1] srt_d = srt_d_arr
    cdef int32_t[::1] srt_v = srt_v_arr

    cdef int32_t tag = 0
    cdef int i, lc, nres, t, cnt
    cdef int32_t ep
    cdef double epd
    cdef const double* q

    with nogil:
        for i in range(row0, row1):
            q = h.data + <int64_t>i * h.dim
            ep = h.entry
            epd = hdist(&h, q, ep)
            for lc in range(h.maxlevel, 0, -1):
                search_ef1(&h, q, lc, &ep, &epd)
            tag += 1
            nres = search_layer(&h, q, 0, ef_eff, &ep, &epd, 1,
                                &res_d[0], &res_v[0], &cand_d[0], &cand_v[0],
                                &visited[0], tag)
            heap_to_sorted(&res_d[0], &res_v[0], nres, &srt_d[0], &srt_v[0])
            cnt = 0
            for t in range(nres):
                if srt_v[t] == i:
                    continue
                out_nb[i, cnt] = srt_v[t]
                out_d[i, cnt] = srt_d[t]
                cnt += 1
                if cnt == k:
                    break
            for t in range(cnt, k):
                out_nb[i, t] = -1
                out_d[i, t] = 0.0


# ---------------------------------------------------------------------------
# training kernel

cdef inline double softplus(double x) noexcept nogil:
    if x > 0.0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline double update_pair(double* z, int m, double* qloc,
                               int64_t i, int64_t j, double lnupn,
                               double a, double b, bint b_is_one,
                               double lr, double clipv, int sign) noexcept nogil:
    # qloc[0] is the last snapshot of the shared normalizer, qloc[1] this
    # worker's unflushed delta; keeping the delta thread-local avoids
    # hammering one shared cacheline on every update
    cdef double* zi = z + i * m
    cdef double* zj = z + j * m
    cdef double s = 0.0
    cdef double diff, spow, asb, logqhat, tt, w, term, coeff, g
    cdef int d
    for d in range(m):
        diff = zi[d] - zj[d]
        s += diff * diff
    if b_is_one:
        spow = 1.0
        asb = a * s
    else:
        # keeps the kernel gradient finite on (near-)duplicate points
        if s < 1e-24:
            s = 1e-24
        spow = pow(s, b - 1.0)
        asb = a * s * spow
    logqhat = -log1p(asb)
    tt = logqhat - (qloc[0] + qloc[1]) - lnupn
    if sign > 0:
        w = 1.0 / (1.0 + exp(tt))
        term = -softplus(-tt)
    else:
        w = -1.0 / (1.0 + exp(-tt))
        term = -softplus(tt)
    coeff = w * (-2.0 * a * b * spow / (1.0 + asb))
    if coeff != coeff:
        coeff = 0.0
    for d in range(m):
        g = coeff * (zi[d] - zj[d])
        if g > clipv:
            g = clipv
        elif g < -clipv:
            g = -clipv
        zi[d] += lr * g
        zj[d] -= lr * g
    g = -w
    if g > clipv:
        g = clipv
    elif g < -clipv:
        g = -clipv
    qloc[1] += lr * g
    return term


def train_chunk(double[:, ::1] coords, double[::1] qbox,
                int32_t[::1] esrc, int32_t[::1] edst,
                double[::1] aprob, int32_t[::1] aalias,
                double[::1] lognupn,
                double a, double b, long long nu,
                double lr, double clipv,
                long long n_samples, unsigned long long key,
                bint in_place=True):
    """Run n_samples inner iterations; returns the summed objective terms.

    Each iteration draws one data edge and nu noise pairs, then applies the
    clipped per-sample gradient to the shared coordinates and normalizer.
    ``in_place`` exists for signature parity with the pure backend.
    """
    cdef double* z = &coords[0, 0]
    cdef double* qp = &qbox[0]
    cdef int m = coords.shape[1]
    cdef int64_t n = coords.shape[0]
    cdef int64_t n_edges = esrc.shape[0]
    cdef const double* prob = &aprob[0]
    cdef const int32_t* alias = &aalias[0]
    cdef bint b_is_one = (b == 1.0)
    cdef double jsum = 0.0
    cdef double[2] qloc
    cdef uint64_t base, base2
    cdef uint64_t cpe = 3 * (<uint64_t>nu + 1)
    cdef int64_t s, e, i, j, kk
    cdef long long t
    with nogil:
        qloc[0] = qp[0]
        qloc[1] = 0.0
        for s in range(n_samples):
            base = (<uint64_t>s) * cpe
            e = alias_pick(key, base, n_edges, prob, alias)
            i = esrc[e]
            j = edst[e]
            jsum += update_pair(z, m, qloc, i, j, lognupn[i], a, b, b_is_one,
                                lr, clipv, 1)
            for t in range(nu):
                base2 = base + 3 * (<uint64_t>t + 1)
                e = alias_pick(key, base2, n_edges, prob, alias)
                i = esrc[e]
                kk = rand_bounded(key, base2 + 2, <uint64_t>(n - 1))
                if kk >= i:
                    kk += 1
                jsum += update_pair(z, m, qloc, i, kk, lognupn[i], a, b,
                                    b_is_one, lr, clipv, -1)
            if (s & 63) == 63:
                qp[0] += qloc[1]
                qloc[0] = qp[0]
                qloc[1] = 0.0
        qp[0] += qloc[1]
    return jsum

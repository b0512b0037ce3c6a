"""Pure-Python fallback for the compiled kernels in ``_core``.

Same call surface, same RNG protocol, same algorithms.  Distance evaluations
are vectorized with numpy where the access pattern allows it; the training
loop stays sequential per sample because each update feeds the next.  Expect
one to two orders of magnitude less throughput than the compiled core
(``benchmarks/bench_backends.py`` quantifies this on your machine).
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from ._rng import rand_bounded_array, rand_u64, rand_unit_array

BACKEND = "pure"


# ---------------------------------------------------------------------------
# HNSW

def _dist_one(data, metric, q, j):
    if metric == 0:
        d = q - data[j]
        return float(np.dot(d, d))
    return max(0.0, 1.0 - float(np.dot(q, data[j])))


def _dist_many(data, metric, q, idx):
    rows = data[idx]
    if metric == 0:
        d = rows - q
        return np.einsum("ij,ij->i", d, d)
    return np.maximum(0.0, 1.0 - rows @ q)


class _Graph:
    """Array-backed layered adjacency, mirroring the compiled layout."""

    __slots__ = ("data", "metric", "level", "deg0", "adj0", "cap0",
                 "degU", "adjU", "capU", "upoff", "entry", "maxlevel")

    def neighbors(self, node, layer):
        if layer == 0:
            return self.adj0[node, : self.deg0[node]]
        blk = self.upoff[node] + (layer - 1)
        return self.adjU[blk, : self.degU[blk]]

    def set_neighbors(self, node, layer, ids):
        k = len(ids)
        if layer == 0:
            self.adj0[node, :k] = ids
            self.deg0[node] = k
        else:
            blk = self.upoff[node] + (layer - 1)
            self.adjU[blk, :k] = ids
            self.degU[blk] = k


def _search_ef1(g, q, layer, ep, epd):
    improved = True
    while improved:
        improved = False
        nbrs = g.neighbors(ep, layer)
        if len(nbrs) == 0:
            break
        ds = _dist_many(g.data, g.metric, q, nbrs)
        for t in range(len(nbrs)):
            if ds[t] < epd:
                epd = float(ds[t])
                ep = int(nbrs[t])
                improved = True
    return ep, epd


def _search_layer(g, q, layer, ef, eps, visited, tag):
    """eps: list of (dist, id) entry points. Returns ascending [(d, id)]."""
    cand = list(eps)
    heapq.heapify(cand)
    res = [(-d, v) for d, v in eps]
    heapq.heapify(res)
    for _, v in eps:
        visited[v] = tag
    while cand:
        d, c = heapq.heappop(cand)
        if len(res) >= ef and d > -res[0][0]:
            break
        nbrs = g.neighbors(c, layer)
        fresh = [int(nb) for nb in nbrs if visited[nb] != tag]
        if not fresh:
            continue
        for nb in fresh:
            visited[nb] = tag
        ds = _dist_many(g.data, g.metric, q, fresh)
        for nb, dn in zip(fresh, ds):
            dn = float(dn)
            if len(res) < ef:
                heapq.heappush(cand, (dn, nb))
                heapq.heappush(res, (-dn, nb))
            elif dn < -res[0][0]:
                heapq.heappush(cand, (dn, nb))
                heapq.heapreplace(res, (-dn, nb))
    out = sorted((-md, v) for md, v in res)
    return out


def _select_heuristic(g, cands, m_max):
    """cands: ascending [(d, id)]; returns kept [(d, id)]."""
    kept = []
    for dq, v in cands:
        if len(kept) >= m_max:
            break
        pv = g.data[v]
        good = True
        for _, u in kept:
            if _dist_one(g.data, g.metric, pv, u) < dq:
                good = False
                break
        if good:
            kept.append((dq, v))
    return kept


def _add_backlink(g, nb, new_node, d_new, layer, m_max):
    lst = g.neighbors(nb, layer)
    if len(lst) < m_max:
        g.set_neighbors(nb, layer, list(lst) + [new_node])
        return
    pnb = g.data[nb]
    ds = _dist_many(g.data, g.metric, pnb, lst)
    cands = [(float(ds[t]), int(lst[t])) for t in range(len(lst))]
    cands.append((d_new, new_node))
    cands.sort()
    kept = _select_heuristic(g, cands, m_max)
    g.set_neighbors(nb, layer, [v for _, v in kept])


def hnsw_build(data, metric, m_conn, ef_construction,
               level, deg0, adj0, degU, adjU, upoff):
    g = _Graph()
    g.data = np.asarray(data)
    g.metric = metric
    g.level = level
    g.deg0 = deg0
    g.adj0 = adj0
    g.cap0 = adj0.shape[1]
    g.degU = degU
    g.adjU = adjU
    g.capU = adjU.shape[1]
    g.upoff = upoff
    g.entry = 0
    g.maxlevel = int(level[0])

    n = g.data.shape[0]
    if n <= 1:
        return g.entry, g.maxlevel
    ef = max(ef_construction, m_conn + 1)
    visited = np.zeros(n, dtype=np.int64)
    tag = 0
    for i in range(1, n):
        l = int(level[i])
        q = g.data[i]
        ep = g.entry
        epd = _dist_one(g.data, g.metric, q, ep)
        for lc in range(g.maxlevel, l, -1):
            ep, epd = _search_ef1(g, q, lc, ep, epd)
        eps = [(epd, ep)]
        for lc in range(min(l, g.maxlevel), -1, -1):
            tag += 1
            found = _search_layer(g, q, lc, ef, eps, visited, tag)
            m_max = g.cap0 if lc == 0 else g.capU
            kept = _select_heuristic(g, found, m_conn)
            g.set_neighbors(i, lc, [v for _, v in kept])
            for d_new, v in kept:
                _add_backlink(g, v, i, d_new, lc, m_max)
            eps = found
        if l > g.maxlevel:
            g.maxlevel = l
            g.entry = i
    return g.entry, g.maxlevel


def hnsw_query_chunk(data, metric, level, deg0, adj0, degU, adjU, upoff,
                     entry, maxlevel, k, ef, out_nb, out_d, row0, row1):
    g = _Graph()
    g.data = np.asarray(data)
    g.metric = metric
    g.level = level
    g.deg0 = deg0
    g.adj0 = adj0
    g.cap0 = adj0.shape[1]
    g.degU = degU
    g.adjU = adjU
    g.capU = adjU.shape[1]
    g.upoff = upoff
    g.entry = entry
    g.maxlevel = maxlevel

    n = g.data.shape[0]
    ef_eff = max(ef, k + 1)
    visited = np.zeros(n, dtype=np.int64)
    tag = 0
    for i in range(row0, row1):
        q = g.data[i]
        ep = g.entry
        epd = _dist_one(g.data, g.metric, q, ep)
        for lc in range(g.maxlevel, 0, -1):
            ep, epd = _search_ef1(g, q, lc, ep, epd)
        tag += 1
        found = _search_layer(g, q, 0, ef_eff, [(epd, ep)], visited, tag)
        cnt = 0
        for d, v in found:
            if v == i:
                continue
            out_nb[i, cnt] = v
            out_d[i, cnt] = d
            cnt += 1
            if cnt == k:
                break
        out_nb[i, cnt:k] = -1
        out_d[i, cnt:k] = 0.0


# ---------------------------------------------------------------------------
# training

def _softplus(x):
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def _exp(x):
    # C exp() saturates to inf; math.exp raises instead
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _pow(x, y):
    try:
        return math.pow(x, y)
    except OverflowError:
        return math.inf


def _draw_epoch(key, n_samples, nu, n_points, n_edges, aprob, aalias):
    """Vectorized reproduction of the kernel's per-sample RNG consumption."""
    cpe = np.uint64(3 * (nu + 1))
    base = np.arange(n_samples, dtype=np.uint64) * cpe

    def alias_pick(ctr):
        slot = rand_bounded_array(key, ctr, n_edges)
        u = rand_unit_array(key, ctr + np.uint64(1))
        return np.where(u <= aprob[slot], slot, aalias[slot])

    data_edge = alias_pick(base)
    noise_src = np.empty((n_samples, nu), dtype=np.int64)
    noise_dst = np.empty((n_samples, nu), dtype=np.int64)
    for t in range(nu):
        b2 = base + np.uint64(3 * (t + 1))
        e = alias_pick(b2)
        noise_src[:, t] = e
        kk = rand_bounded_array(key, b2 + np.uint64(2), n_points - 1)
        noise_dst[:, t] = kk
    return data_edge, noise_src, noise_dst


def train_chunk(coords, qbox, esrc, edst, aprob, aalias, lognupn,
                a, b, nu, lr, clipv, n_samples, key, in_place=False):
    """Pure-Python mirror of the compiled training kernel.

    With ``in_place=False`` the coordinates are copied into a flat list for
    speed and written back at the end; use ``in_place=True`` whenever several
    threads share the array within one epoch.
    """
    n, m = coords.shape
    n_edges = esrc.shape[0]
    data_edge, noise_e, noise_k = _draw_epoch(
        key, n_samples, nu, n, n_edges, aprob, aalias
    )
    src = esrc.tolist()
    dst = edst.tolist()
    lnp = lognupn.tolist()
    if in_place:
        z = coords.ravel()
    else:
        z = coords.ravel().tolist()

    b_is_one = b == 1.0
    jsum = 0.0
    # local normalizer snapshot plus unflushed delta, matching the compiled
    # kernel's thread-local batching of Q writes
    qloc = [float(qbox[0]), 0.0]
    exp_ = math.exp
    log1p_ = math.log1p

    def update(i, j, sign):
        nonlocal jsum
        oi = i * m
        oj = j * m
        s = 0.0
        for d in range(m):
            diff = z[oi + d] - z[oj + d]
            s += diff * diff
        if b_is_one:
            spow = 1.0
            asb = a * s
        else:
            if s < 1e-24:
                s = 1e-24
            spow = math.pow(s, b - 1.0)
            asb = a * s * spow
        tt = -log1p_(asb) - (qloc[0] + qloc[1]) - lnp[i]
        if sign > 0:
            w = 1.0 / (1.0 + exp_(tt))
            term = -_softplus(-tt)
        else:
            w = -1.0 / (1.0 + exp_(-tt))
            term = -_softplus(tt)
        coeff = w * (-2.0 * a * b * spow / (1.0 + asb))
        if coeff != coeff:
            coeff = 0.0
        for d in range(m):
            g = coeff * (z[oi + d] - z[oj + d])
            if g > clipv:
                g = clipv
            elif g < -clipv:
                g = -clipv
            z[oi + d] += lr * g
            z[oj + d] -= lr * g
        g = -w
        if g > clipv:
            g = clipv
        elif g < -clipv:
            g = -clipv
        qloc[1] += lr * g
        jsum += term

    de = data_edge.tolist()
    ne = noise_e.tolist()
    nk = noise_k.tolist()
    for s_idx in range(n_samples):
        e = de[s_idx]
        update(src[e], dst[e], 1)
        row_e = ne[s_idx]
        row_k = nk[s_idx]
        for t in range(nu):
            i = src[row_e[t]]
            kk = row_k[t]
            if kk >= i:
                kk += 1
            update(i, kk, -1)
        if (s_idx & 63) == 63:
            qbox[0] += qloc[1]
            qloc[0] = float(qbox[0])
            qloc[1] = 0.0
    qbox[0] += qloc[1]

    if not in_place:
        coords[:] = np.asarray(z, dtype=np.float64).reshape(n, m)
    return jsum

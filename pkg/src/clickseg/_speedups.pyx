# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: exact Euclidean distance transform and grid max-flow.

`_fallback` provides pure-Python twins with identical traversal order, so
results (including min-cut labelings) are bit-identical across backends.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

# Larger than any pixel distance on supported grids; BIG**2 stays exact in f64.
DEF BIG = 1048576
DEF ZINF = 1e30


def edt_sq(src):
    """Exact squared Euclidean distance to the nearest nonzero pixel of `src`.

    Separable two-pass transform: per-row nearest-source scan, then a
    per-column lower-envelope pass over the squared row distances. With no
    sources the result is >= BIG**2 everywhere.
    """
    src = np.ascontiguousarray(src, dtype=np.uint8)
    cdef const unsigned char[:, ::1] s = src
    cdef Py_ssize_t H = s.shape[0]
    cdef Py_ssize_t W = s.shape[1]
    f_arr = np.empty((H, W), dtype=np.float64)
    out_arr = np.empty((H, W), dtype=np.float64)
    v_arr = np.empty(H, dtype=np.int64)
    z_arr = np.empty(H + 1, dtype=np.float64)
    cdef double[:, ::1] f = f_arr
    cdef double[:, ::1] out = out_arr
    cdef long[::1] v = v_arr
    cdef double[::1] z = z_arr
    cdef Py_ssize_t r, c, q
    cdef long d, k
    cdef double sect

    with nogil:
        for r in range(H):
            d = BIG
            for c in range(W):
                if s[r, c]:
                    d = 0
                elif d < BIG:
                    d += 1
                f[r, c] = d
            d = BIG
            for c in range(W - 1, -1, -1):
                if s[r, c]:
                    d = 0
                elif d < BIG:
                    d += 1
                if d < f[r, c]:
                    f[r, c] = d
            for c in range(W):
                f[r, c] = f[r, c] * f[r, c]

        for c in range(W):
            k = 0
            v[0] = 0
            z[0] = -ZINF
            z[1] = ZINF
            for q in range(1, H):
                sect = ((f[q, c] + q * q) - (f[v[k], c] + v[k] * v[k])) \
                    / (2.0 * q - 2.0 * v[k])
                while sect <= z[k]:
                    k -= 1
                    sect = ((f[q, c] + q * q) - (f[v[k], c] + v[k] * v[k])) \
                        / (2.0 * q - 2.0 * v[k])
                k += 1
                v[k] = q
                z[k] = sect
                z[k + 1] = ZINF
            k = 0
            for q in range(H):
                while z[k + 1] < q:
                    k += 1
                out[q, c] = (q - v[k]) * (q - v[k]) + f[v[k], c]

    return out_arr


def grid_maxflow(src_cap, sink_cap, offsets, pair_cap):
    """Min s-t cut of a pixel-grid graph via Dinic blocking flows.

    src_cap[p] is the terminal capacity charged when p lands on the sink
    side, sink_cap[p] when it lands on the source side. pair_cap[k] holds the
    symmetric capacity of the edge between (r, c) and (r + dr, c + dc) for
    offsets[k] = (dr, dc); entries whose second endpoint falls outside the
    grid are ignored.

    Returns (labels, flow, augmentations). labels is uint8 with 1 on the
    source side of the canonical (source-side-maximal) minimum cut.
    """
    src_cap = np.ascontiguousarray(src_cap, dtype=np.float64)
    sink_cap = np.ascontiguousarray(sink_cap, dtype=np.float64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    pair_cap = np.ascontiguousarray(pair_cap, dtype=np.float64)
    cdef double[:, ::1] a = src_cap
    cdef double[:, ::1] b = sink_cap
    cdef long[:, ::1] off = offsets
    cdef double[:, :, ::1] w = pair_cap

    cdef Py_ssize_t H = a.shape[0]
    cdef Py_ssize_t W = a.shape[1]
    cdef Py_ssize_t K = off.shape[0]
    cdef long n = H * W
    cdef long s = n
    cdef long t = n + 1
    cdef long N = n + 2

    # Arc count: two directed arcs per neighbor pair, four per pixel terminal.
    cdef long m_pairs = 0
    cdef Py_ssize_t k, r, c
    cdef long dr, dc, rr, cc
    for k in range(K):
        dr = off[k, 0]
        dc = off[k, 1]
        for r in range(H):
            rr = r + dr
            if rr < 0 or rr >= H:
                continue
            for c in range(W):
                cc = c + dc
                if 0 <= cc < W:
                    m_pairs += 1
    cdef long M = 2 * m_pairs + 4 * n

    first_arr = np.zeros(N + 1, dtype=np.int64)
    cdef long[::1] first = first_arr
    cdef long p, q2, u
    for k in range(K):
        dr = off[k, 0]
        dc = off[k, 1]
        for r in range(H):
            rr = r + dr
            if rr < 0 or rr >= H:
                continue
            for c in range(W):
                cc = c + dc
                if 0 <= cc < W:
                    first[r * W + c + 1] += 1
                    first[rr * W + cc + 1] += 1
    for p in range(n):
        first[p + 1] += 2  # reverse of s->p, forward p->t
    first[s + 1] += n
    first[t + 1] += n
    for p in range(N):
        first[p + 1] += first[p]

    to_arr = np.empty(M, dtype=np.int64)
    redge_arr = np.empty(M, dtype=np.int64)
    cap_arr = np.empty(M, dtype=np.float64)
    pos_arr = first_arr[:N].copy()
    cdef long[::1] to = to_arr
    cdef long[::1] redge = redge_arr
    cdef double[::1] cap = cap_arr
    cdef long[::1] pos = pos_arr

    cdef long e1, e2
    cdef double cuv, m
    cdef double flow = 0.0
    with nogil:
        for k in range(K):
            dr = off[k, 0]
            dc = off[k, 1]
            for r in range(H):
                rr = r + dr
                if rr < 0 or rr >= H:
                    continue
                for c in range(W):
                    cc = c + dc
                    if cc < 0 or cc >= W:
                        continue
                    p = r * W + c
                    q2 = rr * W + cc
                    cuv = w[k, r, c]
                    e1 = pos[p]
                    pos[p] += 1
                    e2 = pos[q2]
                    pos[q2] += 1
                    to[e1] = q2
                    to[e2] = p
                    cap[e1] = cuv
                    cap[e2] = cuv
                    redge[e1] = e2
                    redge[e2] = e1
        # Terminal arcs, folded: min(src, sink) routes directly s->p->t.
        for r in range(H):
            for c in range(W):
                p = r * W + c
                m = a[r, c]
                if b[r, c] < m:
                    m = b[r, c]
                flow += m
                e1 = pos[s]
                pos[s] += 1
                e2 = pos[p]
                pos[p] += 1
                to[e1] = p
                to[e2] = s
                cap[e1] = a[r, c] - m
                cap[e2] = 0.0
                redge[e1] = e2
                redge[e2] = e1
                e1 = pos[p]
                pos[p] += 1
                e2 = pos[t]
                pos[t] += 1
                to[e1] = t
                to[e2] = p
                cap[e1] = b[r, c] - m
                cap[e2] = 0.0
                redge[e1] = e2
                redge[e2] = e1

    level_arr = np.empty(N, dtype=np.int64)
    queue_arr = np.empty(N, dtype=np.int64)
    it_arr = np.empty(N, dtype=np.int64)
    pnode_arr = np.empty(N + 1, dtype=np.int64)
    parc_arr = np.empty(N, dtype=np.int64)
    cdef long[::1] level = level_arr
    cdef long[::1] queue = queue_arr
    cdef long[::1] it = it_arr
    cdef long[::1] pnode = pnode_arr
    cdef long[::1] parc = parc_arr

    cdef long head, tail, e, vtx, top, i, n_aug = 0
    cdef double bn
    cdef bint advanced

    with nogil:
        while True:
            # BFS level graph from s.
            for p in range(N):
                level[p] = -1
            level[s] = 0
            queue[0] = s
            head = 0
            tail = 1
            while head < tail:
                u = queue[head]
                head += 1
                for e in range(first[u], first[u + 1]):
                    vtx = to[e]
                    if cap[e] > 0.0 and level[vtx] < 0:
                        level[vtx] = level[u] + 1
                        queue[tail] = vtx
                        tail += 1
            if level[t] < 0:
                break
            # Blocking flow, iterative DFS with current-arc pointers.
            for p in range(N):
                it[p] = first[p]
            top = 0
            pnode[0] = s
            while True:
                u = pnode[top]
                if u == t:
                    bn = ZINF
                    for i in range(top):
                        if cap[parc[i]] < bn:
                            bn = cap[parc[i]]
                    for i in range(top):
                        e = parc[i]
                        cap[e] -= bn
                        cap[redge[e]] += bn
                    flow += bn
                    n_aug += 1
                    i = 0
                    while i < top and cap[parc[i]] > 0.0:
                        i += 1
                    top = i
                    continue
                advanced = False
                while it[u] < first[u + 1]:
                    e = it[u]
                    vtx = to[e]
                    if cap[e] > 0.0 and level[vtx] == level[u] + 1:
                        parc[top] = e
                        top += 1
                        pnode[top] = vtx
                        advanced = True
                        break
                    it[u] += 1
                if not advanced:
                    if top == 0:
                        break
                    level[u] = -1
                    top -= 1
                    it[pnode[top]] += 1

    # Canonical cut: background = nodes that still reach t in the residual.
    labels_arr = np.empty(H * W, dtype=np.uint8)
    cdef unsigned char[::1] labels = labels_arr
    cdef unsigned char[::1] seen
    seen_arr = np.zeros(N, dtype=np.uint8)
    seen = seen_arr
    with nogil:
        seen[t] = 1
        queue[0] = t
        head = 0
        tail = 1
        while head < tail:
            vtx = queue[head]
            head += 1
            for e in range(first[vtx], first[vtx + 1]):
                u = to[e]
                if not seen[u] and cap[redge[e]] > 0.0:
                    seen[u] = 1
                    queue[tail] = u
                    tail += 1
        for p in range(n):
            labels[p] = 0 if seen[p] else 1

    return labels_arr.reshape(H, W), flow, n_aug

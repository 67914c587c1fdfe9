"""Pure-Python twins of the compiled kernels.

Same algorithms, same traversal order as ``_speedups``; outputs are
bit-identical, only slower. Selected automatically when the extension is
unavailable or ``CLICKSEG_PURE=1``.
"""

import numpy as np

BIG = 1 << 20  # larger than any pixel distance; BIG**2 is exact in f64
_ZINF = 1e30


def edt_sq(src):
    """Exact squared Euclidean distance to the nearest nonzero pixel of `src`."""
    src = np.asarray(src, dtype=bool)
    H, W = src.shape

    # Per-row nearest-source distance, vectorized sweeps.
    cols = np.arange(W, dtype=np.int64)
    src_col = np.where(src, cols, -BIG)
    left = np.maximum.accumulate(src_col, axis=1)
    d_left = cols - left
    src_col = np.where(src, cols, 2 * BIG)
    right = np.minimum.accumulate(src_col[:, ::-1], axis=1)[:, ::-1]
    d_right = right - cols
    f = np.minimum(np.minimum(d_left, d_right), BIG).astype(np.float64)
    f *= f

    # Per-column lower envelope of parabolas (r - i)^2 + f[i].
    out = np.empty((H, W), dtype=np.float64)
    v = np.empty(H, dtype=np.int64)
    z = np.empty(H + 1, dtype=np.float64)
    for c in range(W):
        fc = f[:, c]
        k = 0
        v[0] = 0
        z[0] = -_ZINF
        z[1] = _ZINF
        for q in range(1, H):
            sect = ((fc[q] + q * q) - (fc[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
            while sect <= z[k]:
                k -= 1
                sect = ((fc[q] + q * q) - (fc[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
            k += 1
            v[k] = q
            z[k] = sect
            z[k + 1] = _ZINF
        k = 0
        for q in range(H):
            while z[k + 1] < q:
                k += 1
            out[q, c] = (q - v[k]) * (q - v[k]) + fc[v[k]]
    return out


def grid_maxflow(src_cap, sink_cap, offsets, pair_cap):
    """Min s-t cut of a pixel-grid graph via Dinic blocking flows.

    See the compiled twin for the capacity conventions. Returns
    (labels, flow, augmentations) with labels uint8, 1 = source side of the
    canonical source-side-maximal minimum cut.
    """
    a = np.ascontiguousarray(src_cap, dtype=np.float64)
    b = np.ascontiguousarray(sink_cap, dtype=np.float64)
    off = np.ascontiguousarray(offsets, dtype=np.int64)
    w = np.ascontiguousarray(pair_cap, dtype=np.float64)
    H, W = a.shape
    K = off.shape[0]
    n = H * W
    s = n
    t = n + 1
    N = n + 2

    pairs = []  # (p, q, cap) in the canonical offset-major, row-major order
    for k in range(K):
        dr, dc = int(off[k, 0]), int(off[k, 1])
        for r in range(H):
            rr = r + dr
            if rr < 0 or rr >= H:
                continue
            for c in range(W):
                cc = c + dc
                if 0 <= cc < W:
                    pairs.append((r * W + c, rr * W + cc, w[k, r, c]))
    M = 2 * len(pairs) + 4 * n

    first = np.zeros(N + 1, dtype=np.int64)
    for p, q2, _ in pairs:
        first[p + 1] += 1
        first[q2 + 1] += 1
    first[1 : n + 1] += 2
    first[s + 1] += n
    first[t + 1] += n
    np.cumsum(first, out=first)

    to = np.empty(M, dtype=np.int64)
    redge = np.empty(M, dtype=np.int64)
    cap = np.empty(M, dtype=np.float64)
    pos = first[:N].copy()

    def add_edge(u, v, cuv, cvu):
        e1 = pos[u]
        pos[u] += 1
        e2 = pos[v]
        pos[v] += 1
        to[e1] = v
        to[e2] = u
        cap[e1] = cuv
        cap[e2] = cvu
        redge[e1] = e2
        redge[e2] = e1

    for p, q2, cuv in pairs:
        add_edge(p, q2, cuv, cuv)
    flow = 0.0
    af = a.ravel()
    bf = b.ravel()
    for p in range(n):
        m = min(af[p], bf[p])
        flow += m
        add_edge(s, p, af[p] - m, 0.0)
        add_edge(p, t, bf[p] - m, 0.0)

    level = np.empty(N, dtype=np.int64)
    queue = np.empty(N, dtype=np.int64)
    it = np.empty(N, dtype=np.int64)
    pnode = np.empty(N + 1, dtype=np.int64)
    parc = np.empty(N, dtype=np.int64)
    n_aug = 0

    while True:
        level[:] = -1
        level[s] = 0
        queue[0] = s
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            lu = level[u] + 1
            for e in range(first[u], first[u + 1]):
                vtx = to[e]
                if cap[e] > 0.0 and level[vtx] < 0:
                    level[vtx] = lu
                    queue[tail] = vtx
                    tail += 1
        if level[t] < 0:
            break
        it[:N] = first[:N]
        top = 0
        pnode[0] = s
        while True:
            u = pnode[top]
            if u == t:
                bn = _ZINF
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

    seen = np.zeros(N, dtype=bool)
    seen[t] = True
    queue[0] = t
    head, tail = 0, 1
    while head < tail:
        vtx = queue[head]
        head += 1
        for e in range(first[vtx], first[vtx + 1]):
            u = to[e]
            if not seen[u] and cap[redge[e]] > 0.0:
                seen[u] = True
                queue[tail] = u
                tail += 1
    labels = (~seen[:n]).astype(np.uint8).reshape(H, W)
    return labels, float(flow), int(n_aug)

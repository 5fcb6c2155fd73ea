"""Hot numeric kernels.

Every kernel exists twice: an explicit-loop version compiled with numba and a
vectorized numpy version.  Both produce identical results (the arithmetic is
written in the same order), so the public modules can switch between them
through :data:`shclust._accel.NUMBA_ENABLED` without changing any output.
"""
import math

import numpy as np

from ._accel import NUMBA_ENABLED, njit

COMPLETE = 0
AVERAGE = 1
WARD = 2

LINKAGE_CODES = {"complete": COMPLETE, "average": AVERAGE, "ward": WARD}

# log(W) floor for zero dispersion
_LOG_FLOOR = 1e-300


# ---------------------------------------------------------------------------
# pairwise dissimilarity
# ---------------------------------------------------------------------------

def _dissim_loop(x, absolute):
    n, p = x.shape
    out = np.zeros((n, n))
    for i in range(n):
        for k in range(i + 1, n):
            acc = 0.0
            for j in range(p):
                diff = x[i, j] - x[k, j]
                if absolute:
                    acc += abs(diff)
                else:
                    acc += diff * diff
            out[i, k] = acc
            out[k, i] = acc
    return out


def dissim_np(x, absolute):
    n, p = x.shape
    out = np.zeros((n, n))
    # chunked to bound the n*n*chunk temporary
    step = max(1, 2_000_000 // max(n * n, 1))
    for start in range(0, p, step):
        block = x[:, start:start + step]
        diff = block[:, None, :] - block[None, :, :]
        if absolute:
            out += np.abs(diff).sum(axis=2)
        else:
            out += (diff * diff).sum(axis=2)
    return out


dissim_nb = njit(_dissim_loop)


# ---------------------------------------------------------------------------
# agglomeration (Lance-Williams, naive O(n^3))
# ---------------------------------------------------------------------------

def _agglomerate_loop(d, method):
    n = d.shape[0]
    dist = d.copy()
    active = np.ones(n, dtype=np.bool_)
    node = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    children = np.empty((n - 1, 2), dtype=np.int64)
    heights = np.empty(n - 1)
    sizes = np.empty(n - 1, dtype=np.int64)
    big = 2 * n
    for step in range(n - 1):
        best = np.inf
        bi = -1
        bj = -1
        ba = big
        bb = big
        for i in range(n):
            if not active[i]:
                continue
            for j in range(i + 1, n):
                if not active[j]:
                    continue
                v = dist[i, j]
                a = node[i]
                b = node[j]
                if a > b:
                    a, b = b, a
                if v < best or (v == best and (a < ba or (a == ba and b < bb))):
                    best = v
                    bi = i
                    bj = j
                    ba = a
                    bb = b
        ni = size[bi]
        nj = size[bj]
        for k in range(n):
            if not active[k] or k == bi or k == bj:
                continue
            dik = dist[bi, k]
            djk = dist[bj, k]
            if method == 0:
                new = dik if dik > djk else djk
            elif method == 1:
                new = (ni * dik + nj * djk) / (ni + nj)
            else:
                nk = size[k]
                new = ((ni + nk) * dik + (nj + nk) * djk - nk * best) / (ni + nj + nk)
            dist[bi, k] = new
            dist[k, bi] = new
        active[bj] = False
        node[bi] = n + step
        size[bi] = ni + nj
        children[step, 0] = ba
        children[step, 1] = bb
        if method == 2:
            heights[step] = math.sqrt(best if best > 0.0 else 0.0)
        else:
            heights[step] = best
        sizes[step] = ni + nj
    return children, heights, sizes


def agglomerate_np(d, method):
    n = d.shape[0]
    dist = np.array(d, dtype=float, copy=True)
    np.fill_diagonal(dist, np.inf)
    active = np.ones(n, dtype=bool)
    node = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    children = np.empty((n - 1, 2), dtype=np.int64)
    heights = np.empty(n - 1)
    sizes = np.empty(n - 1, dtype=np.int64)
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    for step in range(n - 1):
        best = dist.min()
        ii, jj = np.nonzero((dist == best) & upper)
        a = np.minimum(node[ii], node[jj])
        b = np.maximum(node[ii], node[jj])
        pick = np.lexsort((b, a))[0]
        bi, bj = ii[pick], jj[pick]
        ni, nj = size[bi], size[bj]
        others = active.copy()
        others[[bi, bj]] = False
        dik = dist[bi, others]
        djk = dist[bj, others]
        if method == COMPLETE:
            new = np.maximum(dik, djk)
        elif method == AVERAGE:
            new = (ni * dik + nj * djk) / (ni + nj)
        else:
            nk = size[others]
            new = ((ni + nk) * dik + (nj + nk) * djk - nk * best) / (ni + nj + nk)
        dist[bi, others] = new
        dist[others, bi] = new
        dist[bj, :] = np.inf
        dist[:, bj] = np.inf
        active[bj] = False
        node[bi] = n + step
        size[bi] = ni + nj
        children[step] = (a[pick], b[pick])
        heights[step] = math.sqrt(max(best, 0.0)) if method == WARD else best
        sizes[step] = ni + nj
    return children, heights, sizes


agglomerate_nb = njit(_agglomerate_loop)


# ---------------------------------------------------------------------------
# dendrogram cut
# ---------------------------------------------------------------------------

def _cut_loop(children, n, k):
    """Labels 1..k after applying the first n-k merges; numbered by smallest member."""
    parent = np.arange(2 * n - 1)
    for step in range(n - k):
        new = n + step
        parent[children[step, 0]] = new
        parent[children[step, 1]] = new
    root_label = np.zeros(2 * n - 1, dtype=np.int64)
    labels = np.empty(n, dtype=np.int64)
    nxt = 1
    for i in range(n):
        r = i
        while parent[r] != r:
            r = parent[r]
        if root_label[r] == 0:
            root_label[r] = nxt
            nxt += 1
        labels[i] = root_label[r]
    return labels


cut_py = _cut_loop
cut_nb = njit(_cut_loop)


# ---------------------------------------------------------------------------
# within-cluster dispersion and the gap reference batch
# ---------------------------------------------------------------------------

def _dispersion_loop(d, labels, k):
    """W = sum over clusters of (sum of ordered-pair dissimilarities) / (2 * size)."""
    n = d.shape[0]
    sums = np.zeros(k + 1)
    counts = np.zeros(k + 1)
    for i in range(n):
        counts[labels[i]] += 1.0
        for j in range(n):
            if labels[i] == labels[j]:
                sums[labels[i]] += d[i, j]
    w = 0.0
    for c in range(1, k + 1):
        if counts[c] > 0:
            w += sums[c] / (2.0 * counts[c])
    return w


def dispersion_np(d, labels, k):
    w = 0.0
    for c in range(1, k + 1):
        members = labels == c
        cnt = members.sum()
        if cnt:
            w += d[np.ix_(members, members)].sum() / (2.0 * cnt)
    return w


dispersion_nb = njit(_dispersion_loop)

if dissim_nb is not None:
    _d_nb, _a_nb, _c_nb, _w_nb = dissim_nb, agglomerate_nb, cut_nb, dispersion_nb

    @njit
    def reference_logw_nb(ref, method, absolute):
        b = ref.shape[0]
        m = ref.shape[1]
        out = np.empty((b, 2))
        for r in range(b):
            d = _d_nb(ref[r], absolute)
            children, _, _ = _a_nb(d, method)
            ones = np.ones(m, dtype=np.int64)
            two = _c_nb(children, m, 2)
            w1 = _w_nb(d, ones, 1)
            w2 = _w_nb(d, two, 2)
            out[r, 0] = math.log(w1 if w1 > 1e-300 else 1e-300)
            out[r, 1] = math.log(w2 if w2 > 1e-300 else 1e-300)
        return out
else:  # pragma: no cover
    reference_logw_nb = None


def reference_logw_np(ref, method, absolute):
    b, m, _ = ref.shape
    out = np.empty((b, 2))
    ones = np.ones(m, dtype=np.int64)
    for r in range(b):
        d = dissim_np(ref[r], absolute)
        children, _, _ = agglomerate_np(d, method)
        two = cut_py(children, m, 2)
        out[r, 0] = math.log(max(dispersion_np(d, ones, 1), _LOG_FLOOR))
        out[r, 1] = math.log(max(dispersion_np(d, two, 2), _LOG_FLOOR))
    return out


# ---------------------------------------------------------------------------
# L1-constrained unit vector and the rank-one PMD iteration
# ---------------------------------------------------------------------------

def _l1_threshold_loop(a, c):
    """Smallest soft threshold t >= 0 with ||S(a,t)||_1 / ||S(a,t)||_2 <= c.

    Closed form on the piece of the sorted magnitudes that contains the
    solution, so the constraint is met to rounding error.
    """
    p = a.shape[0]
    s = np.sort(np.abs(a))[::-1]
    l1 = 0.0
    l2 = 0.0
    for i in range(p):
        l1 += s[i]
        l2 += s[i] * s[i]
    if l2 == 0.0 or l1 <= c * math.sqrt(l2):
        return 0.0
    cs = 0.0
    cq = 0.0
    for m in range(1, p + 1):
        cs += s[m - 1]
        cq += s[m - 1] * s[m - 1]
        t = s[m] if m < p else 0.0
        # centred form keeps s2 exact on a single leading magnitude
        mean = cs / m
        m2 = cq - cs * mean
        if m2 < 0.0:
            m2 = 0.0
        s1 = cs - m * t
        s2 = m2 + m * (mean - t) * (mean - t)
        if s2 > 0.0 and s1 >= c * math.sqrt(s2):
            alpha = m - c * c
            if s1 == c * math.sqrt(s2) or alpha <= 0.0:
                return t
            rad = m * m2 / alpha
            if rad < 0.0:
                rad = 0.0
            delta = (cs - c * math.sqrt(rad)) / m
            hi = s[m - 1]
            if delta < t:
                delta = t
            if delta > hi:
                delta = hi
            return delta
    return 0.0


def l1_threshold_np(a, c):
    s = np.sort(np.abs(a))[::-1]
    l2 = float(s @ s)
    if l2 == 0.0 or s.sum() <= c * math.sqrt(l2):
        return 0.0
    p = s.shape[0]
    m = np.arange(1, p + 1)
    cs = np.cumsum(s)
    cq = np.cumsum(s * s)
    t = np.append(s[1:], 0.0)
    mean = cs / m
    m2 = np.maximum(cq - cs * mean, 0.0)
    s1 = cs - m * t
    s2 = m2 + m * (mean - t) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        ok = (s2 > 0.0) & (s1 >= c * np.sqrt(np.maximum(s2, 0.0)))
    idx = int(np.argmax(ok))
    if not ok[idx]:
        return 0.0
    mm = idx + 1
    csm, tm = float(cs[idx]), float(t[idx])
    if s1[idx] == c * math.sqrt(s2[idx]) or mm - c * c <= 0.0:
        return tm
    rad = mm * float(m2[idx]) / (mm - c * c)
    delta = (csm - c * math.sqrt(rad)) / mm
    return min(max(delta, tm), float(s[idx]))


l1_threshold_nb = njit(_l1_threshold_loop)


def _make_hinted(base):
    # When the threshold is known to be at least ``hint`` only magnitudes
    # above ``hint`` can reach the solution, so sort just those.
    def hinted(a, c, hint):
        if hint > 0.0:
            s1 = 0.0
            s2 = 0.0
            cnt = 0
            for i in range(a.shape[0]):
                e = abs(a[i]) - hint
                if e > 0.0:
                    s1 += e
                    s2 += e * e
                    cnt += 1
            # strict: at equality the threshold may lie below the hint
            if s2 > 0.0 and s1 > c * math.sqrt(s2):
                b = np.empty(cnt)
                j = 0
                for i in range(a.shape[0]):
                    if abs(a[i]) > hint:
                        b[j] = abs(a[i])
                        j += 1
                return max(base(b, c), hint)
        return base(a, c)

    return hinted


def l1_threshold_hinted_np(a, c, hint):
    if hint > 0.0:
        e = np.abs(a) - hint
        e = e[e > 0.0]
        s2 = float(e @ e)
        if s2 > 0.0 and e.sum() > c * math.sqrt(s2):
            return max(l1_threshold_np(e + hint, c), hint)
    return l1_threshold_np(a, c)


l1_threshold_hinted_nb = njit(_make_hinted(l1_threshold_nb)) if l1_threshold_nb is not None else None


def _power_loop(m, u, n_iter):
    for _ in range(n_iter):
        v = np.dot(u, m)
        w = np.dot(m, v)
        nrm = math.sqrt(np.dot(w, w))
        if nrm == 0.0:
            return u
        u = w / nrm
    return u


def power_np(m, u, n_iter):
    for _ in range(n_iter):
        w = m @ (u @ m)
        nrm = math.sqrt(w @ w)
        if nrm == 0.0:
            return u
        u = w / nrm
    return u


power_nb = njit(_power_loop)


def _make_pmd(threshold):
    # ``threshold(a, c, hint)``; the hint is a fraction of the previous
    # iterate's threshold and only speeds up the sort
    def pmd(m, lam, u, max_iter, tol):
        p = m.shape[1]
        v = np.zeros(p)
        trace = np.zeros(max_iter)
        n_iter = 0
        t = 0.0
        for it in range(max_iter):
            a = np.dot(u, m)
            t = threshold(a, lam, 0.5 * t)
            v_new = np.sign(a) * np.maximum(np.abs(a) - t, 0.0)
            nv = math.sqrt(np.dot(v_new, v_new))
            if nv == 0.0:
                break
            v_new = v_new / nv
            idx = np.flatnonzero(v_new)
            mv = np.dot(m[:, idx], v_new[idx])
            nmv = math.sqrt(np.dot(mv, mv))
            diff = np.abs(v_new - v).sum()  # L1 change, stricter than L2
            v = v_new
            n_iter = it + 1
            if nmv == 0.0:
                break
            u = mv / nmv
            trace[it] = nmv
            if diff < tol:
                break
        idx = np.flatnonzero(v)
        sigma = np.dot(u, np.dot(m[:, idx], v[idx])) if idx.size else 0.0
        return u, v, sigma, n_iter, trace[:n_iter]

    return pmd


pmd_np = _make_pmd(l1_threshold_hinted_np)


def _make_pmd_loop(threshold):
    # fused-loop form of the same iteration, without per-step temporaries
    def pmd(m, lam, u, max_iter, tol):
        n, p = m.shape
        v = np.zeros(p)
        vn = np.zeros(p)
        idx = np.empty(p, dtype=np.int64)
        mv = np.empty(n)
        trace = np.zeros(max_iter)
        n_iter = 0
        t = 0.0
        n_sup = 0
        for it in range(max_iter):
            a = np.dot(u, m)
            t = threshold(a, lam, 0.5 * t)
            nv2 = 0.0
            cnt = 0
            for j in range(p):
                e = abs(a[j]) - t
                if e > 0.0:
                    vn[j] = e if a[j] > 0.0 else -e
                    nv2 += e * e
                    idx[cnt] = j
                    cnt += 1
                else:
                    vn[j] = 0.0
            if nv2 == 0.0:
                break
            inv = 1.0 / math.sqrt(nv2)
            diff1 = 0.0
            for j in range(p):
                vn[j] *= inv
                d = vn[j] - v[j]
                diff1 += abs(d)
            nmv2 = 0.0
            for i in range(n):
                acc = 0.0
                for k in range(cnt):
                    acc += m[i, idx[k]] * vn[idx[k]]
                mv[i] = acc
                nmv2 += acc * acc
            v, vn = vn, v
            n_sup = cnt
            n_iter = it + 1
            if nmv2 == 0.0:
                break
            nmv = math.sqrt(nmv2)
            u = mv / nmv
            trace[it] = nmv
            if diff1 < tol:
                break
        sigma = 0.0
        for j in range(p):
            if v[j] != 0.0:
                col = 0.0
                for i in range(n):
                    col += u[i] * m[i, j]
                sigma += col * v[j]
        return u, v, sigma, n_iter, trace[:n_iter]

    return pmd


if l1_threshold_nb is not None:
    pmd_nb = njit(_make_pmd_loop(l1_threshold_hinted_nb))
else:  # pragma: no cover
    pmd_nb = None


# ---------------------------------------------------------------------------
# active backend
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:
    dissim = dissim_nb
    agglomerate = agglomerate_nb
    cut = cut_nb
    reference_logw = reference_logw_nb
    l1_threshold = l1_threshold_nb
    power = power_nb
    pmd = pmd_nb
else:
    dissim = dissim_np
    agglomerate = agglomerate_np
    cut = cut_py
    reference_logw = reference_logw_np
    l1_threshold = l1_threshold_np
    power = power_np
    pmd = pmd_np

"""JIT-compiled collision kernels.

The single primitive everything reduces to is the signed distance from the
origin to the convex hull of up to four disks:

    sd = max_{|u|=1} min_i ( -u . c_i - r_i )

The inner minimum is the negated support function of the hull; its maximum
over the circle is attained either at the peak of one sinusoid term or at a
crossing of two terms, so a finite candidate set gives the exact value.
Negative values are penetration depth, positive values Euclidean clearance.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _eval_min(hx, hy, hr, k, c, s):
    m = 1e300
    for i in range(k):
        t = -(c * hx[i] + s * hy[i]) - hr[i]
        if t < m:
            m = t
    return m


@njit(cache=True, nogil=True)
def _hull_sd(hx, hy, hr, k):
    best = -1e300
    # peak of each term
    for i in range(k):
        ax = -hx[i]
        ay = -hy[i]
        n = np.hypot(ax, ay)
        if n > 0.0:
            c = ax / n
            s = ay / n
        else:
            c = 1.0
            s = 0.0
        v = _eval_min(hx, hy, hr, k, c, s)
        if v > best:
            best = v
    # crossings of term pairs
    for i in range(k):
        for j in range(i + 1, k):
            px = hx[j] - hx[i]
            py = hy[j] - hy[i]
            rr = hr[i] - hr[j]
            big_r = np.hypot(px, py)
            if big_r <= 0.0:
                continue
            q = rr / big_r
            if q > 1.0 or q < -1.0:
                continue
            psi = np.arctan2(py, px)
            delta = np.arccos(q)
            for sgn in (-1.0, 1.0):
                ang = psi + sgn * delta
                v = _eval_min(hx, hy, hr, k, np.cos(ang), np.sin(ang))
                if v > best:
                    best = v
    return best


@njit(cache=True, nogil=True)
def hull_signed_dist(disks):
    k = disks.shape[0]
    hx = np.empty(4)
    hy = np.empty(4)
    hr = np.empty(4)
    for i in range(k):
        hx[i] = disks[i, 0]
        hy[i] = disks[i, 1]
        hr[i] = disks[i, 2]
    return _hull_sd(hx, hy, hr, k)


@njit(cache=True, nogil=True)
def _hull_separated(hx, hy, hr, k, margin):
    """True iff the hull is strictly farther than `margin` from the origin."""
    # cheap screens: best single disk is an upper bound on the distance,
    # centroid spread gives a lower bound
    rmin = 1e300
    gx = 0.0
    gy = 0.0
    rmax = 0.0
    for i in range(k):
        d = np.hypot(hx[i], hy[i]) - hr[i]
        if d < rmin:
            rmin = d
        gx += hx[i]
        gy += hy[i]
        if hr[i] > rmax:
            rmax = hr[i]
    if rmin <= margin:
        return False
    gx /= k
    gy /= k
    spread = 0.0
    for i in range(k):
        d = np.hypot(hx[i] - gx, hy[i] - gy)
        if d > spread:
            spread = d
    if np.hypot(gx, gy) - spread - rmax > margin:
        return True
    return _hull_sd(hx, hy, hr, k) > margin


@njit(cache=True, nogil=True)
def _load_pair(hx, hy, hr, a, i0, i1, b, j0, j1):
    m = 0
    for ii in (i0, i1):
        for jj in (j0, j1):
            hx[m] = b[jj, 0] - a[ii, 0]
            hy[m] = b[jj, 1] - a[ii, 1]
            hr[m] = b[jj, 2] + a[ii, 2]
            m += 1


@njit(cache=True, nogil=True)
def pair_signed_dist(a, b):
    """Signed distance of the origin to the sum shape (-A) + B.

    Equals the separation distance between placed shapes A and B when
    positive and the deepest single-piece penetration when negative.
    """
    na = a.shape[0]
    nb = b.shape[0]
    pa = na - 1 if na > 1 else 1
    pb = nb - 1 if nb > 1 else 1
    hx = np.empty(4)
    hy = np.empty(4)
    hr = np.empty(4)
    best = 1e300
    for i in range(pa):
        i1 = i + 1 if na > 1 else i
        for j in range(pb):
            j1 = j + 1 if nb > 1 else j
            _load_pair(hx, hy, hr, a, i, i1, b, j, j1)
            d = _hull_sd(hx, hy, hr, 4)
            if d < best:
                best = d
    return best


@njit(cache=True, nogil=True)
def point_shape_dist(px, py, disks):
    """Signed distance from a point to a disk-chain shape (union of pieces)."""
    n = disks.shape[0]
    p = n - 1 if n > 1 else 1
    hx = np.empty(4)
    hy = np.empty(4)
    hr = np.empty(4)
    best = 1e300
    for i in range(p):
        i1 = i + 1 if n > 1 else i
        hx[0] = disks[i, 0] - px
        hy[0] = disks[i, 1] - py
        hr[0] = disks[i, 2]
        hx[1] = disks[i1, 0] - px
        hy[1] = disks[i1, 1] - py
        hr[1] = disks[i1, 2]
        d = _hull_sd(hx, hy, hr, 2)
        if d < best:
            best = d
    return best


@njit(cache=True, nogil=True)
def _pair_overlaps(aw, nwc, d0, d1, margin, hx, hy, hr):
    na = aw.shape[0]
    nn = d1 - d0
    pa = na - 1 if na > 1 else 1
    pb = nn - 1 if nn > 1 else 1
    for i in range(pa):
        i1 = i + 1 if na > 1 else i
        for j in range(pb):
            jj = d0 + j
            jj1 = jj + 1 if nn > 1 else jj
            _load_pair(hx, hy, hr, aw, i, i1, nwc, jj, jj1)
            if not _hull_separated(hx, hy, hr, 4, margin):
                return True
    return False


@njit(cache=True, nogil=True)
def _pair_min_dist(aw, nwc, d0, d1, hx, hy, hr):
    na = aw.shape[0]
    nn = d1 - d0
    pa = na - 1 if na > 1 else 1
    pb = nn - 1 if nn > 1 else 1
    best = 1e300
    for i in range(pa):
        i1 = i + 1 if na > 1 else i
        for j in range(pb):
            jj = d0 + j
            jj1 = jj + 1 if nn > 1 else jj
            _load_pair(hx, hy, hr, aw, i, i1, nwc, jj, jj1)
            d = _hull_sd(hx, hy, hr, 4)
            if d < best:
                best = d
    return best


@njit(cache=True, nogil=True)
def batch_plan_eval(adisks, aposes, ndisks, noff, nposes, margin):
    """Collision-filter a batch of candidate motions against predicted neighbors.

    adisks  : (na, 3) agent disks in its local frame
    aposes  : (S, C, 3) agent local-frame pose (x, y, theta) per sample and
              collision checkpoint
    ndisks  : (sum nb, 3) neighbor disks in their local frames, concatenated
    noff    : (N + 1,) slice offsets into ndisks per neighbor
    nposes  : (N, C, 3) neighbor local-frame pose per checkpoint
    margin  : clearance below which a configuration counts as colliding

    Returns (free, end_dist): free[s] is True when sample s stays clear of
    every neighbor at every checkpoint; end_dist[s, n] is the signed
    separation from neighbor n at the final checkpoint (NaN when the sample
    was rejected before reaching it).
    """
    ns = aposes.shape[0]
    nc = aposes.shape[1]
    nn = noff.shape[0] - 1
    na = adisks.shape[0]
    nd = ndisks.shape[0]

    nw = np.empty((nc, nd, 3))
    for n in range(nn):
        for c in range(nc):
            x = nposes[n, c, 0]
            y = nposes[n, c, 1]
            ct = np.cos(nposes[n, c, 2])
            st = np.sin(nposes[n, c, 2])
            for d in range(noff[n], noff[n + 1]):
                nw[c, d, 0] = x + ndisks[d, 0] * ct - ndisks[d, 1] * st
                nw[c, d, 1] = y + ndisks[d, 0] * st + ndisks[d, 1] * ct
                nw[c, d, 2] = ndisks[d, 2]

    aw = np.empty((na, 3))
    hx = np.empty(4)
    hy = np.empty(4)
    hr = np.empty(4)
    free = np.ones(ns, np.bool_)
    end_dist = np.full((ns, nn), np.nan)

    for s in range(ns):
        ok = True
        for c in range(nc):
            x = aposes[s, c, 0]
            y = aposes[s, c, 1]
            ct = np.cos(aposes[s, c, 2])
            st = np.sin(aposes[s, c, 2])
            for i in range(na):
                aw[i, 0] = x + adisks[i, 0] * ct - adisks[i, 1] * st
                aw[i, 1] = y + adisks[i, 0] * st + adisks[i, 1] * ct
                aw[i, 2] = adisks[i, 2]
            if c == nc - 1:
                for n in range(nn):
                    d = _pair_min_dist(aw, nw[c], noff[n], noff[n + 1], hx, hy, hr)
                    end_dist[s, n] = d
                    if d <= margin:
                        ok = False
            else:
                hit = False
                for n in range(nn):
                    if _pair_overlaps(aw, nw[c], noff[n], noff[n + 1], margin, hx, hy, hr):
                        hit = True
                        break
                if hit:
                    ok = False
                    break
        free[s] = ok
    return free, end_dist

"""Pure-numpy collision kernels, API-identical to the JIT module.

Same candidate-angle construction as the JIT path, broadcast over whole
batches of hulls instead of looped. Used when AUTORVO_BACKEND=numpy or when
numba is unavailable; also the comparison arm of the kernel benchmark.
"""

import numpy as np

_CHUNK = 128  # samples per batch slab, keeps temporaries small


def _hull_sd_batch(h):
    """Signed origin distance for a batch of 4-disk hulls.

    h : (..., 4, 3) array of [x, y, r] rows. Duplicate rows are allowed
    (degenerate pieces); the envelope is unaffected.
    """
    hx = h[..., 0]
    hy = h[..., 1]
    hr = h[..., 2]

    # candidate angles: 4 per-term peaks + 2 * C(4,2) crossings
    peaks = np.arctan2(-hy, -hx)  # (..., 4)

    ii, jj = np.triu_indices(4, k=1)
    px = hx[..., jj] - hx[..., ii]
    py = hy[..., jj] - hy[..., ii]
    rr = hr[..., ii] - hr[..., jj]
    big_r = np.hypot(px, py)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(big_r > 0.0, rr / np.where(big_r > 0.0, big_r, 1.0), 2.0)
    valid = np.abs(q) <= 1.0
    psi = np.arctan2(py, px)
    delta = np.arccos(np.clip(q, -1.0, 1.0))
    cross = np.concatenate([psi + delta, psi - delta], axis=-1)  # (..., 12)
    cross_valid = np.concatenate([valid, valid], axis=-1)

    ang = np.concatenate([peaks, cross], axis=-1)  # (..., 16)
    ok = np.concatenate([np.ones(peaks.shape, bool), cross_valid], axis=-1)

    c = np.cos(ang)[..., :, None]
    s = np.sin(ang)[..., :, None]
    vals = -(c * hx[..., None, :] + s * hy[..., None, :]) - hr[..., None, :]
    m = vals.min(axis=-1)  # (..., 16) lower envelope at each candidate
    m = np.where(ok, m, -np.inf)
    return m.max(axis=-1)


def _piece_pairs(n):
    if n > 1:
        i0 = np.arange(n - 1)
        return i0, i0 + 1
    return np.zeros(1, np.intp), np.zeros(1, np.intp)


def _pair_hulls(a, b):
    """(pa*pb, 4, 3) hull disks of (-A piece) + (B piece) for all piece pairs."""
    ai0, ai1 = _piece_pairs(a.shape[0])
    bj0, bj1 = _piece_pairs(b.shape[0])
    aend = np.stack([a[ai0], a[ai1]], axis=1)  # (pa, 2, 3)
    bend = np.stack([b[bj0], b[bj1]], axis=1)  # (pb, 2, 3)
    h = np.empty((aend.shape[0], bend.shape[0], 2, 2, 3))
    h[..., :2] = bend[None, :, None, :, :2] - aend[:, None, :, None, :2]
    h[..., 2] = bend[None, :, None, :, 2] + aend[:, None, :, None, 2]
    return h.reshape(-1, 4, 3)


def hull_signed_dist(disks):
    k = disks.shape[0]
    h = np.empty((4, 3))
    h[:k] = disks
    h[k:] = disks[0]
    return float(_hull_sd_batch(h[None])[0])


def pair_signed_dist(a, b):
    return float(_hull_sd_batch(_pair_hulls(a, b)).min())


def point_shape_dist(px, py, disks):
    i0, i1 = _piece_pairs(disks.shape[0])
    h = np.empty((i0.shape[0], 4, 3))
    h[:, 0] = disks[i0]
    h[:, 1] = disks[i1]
    h[:, :2, 0] -= px
    h[:, :2, 1] -= py
    h[:, 2:] = h[:, :2]
    return float(_hull_sd_batch(h).min())


def _place(disks, poses):
    """disks (n, 3) local, poses (..., 3) -> world disks (..., n, 3)."""
    ct = np.cos(poses[..., 2])[..., None]
    st = np.sin(poses[..., 2])[..., None]
    out = np.empty(poses.shape[:-1] + disks.shape)
    out[..., 0] = poses[..., 0][..., None] + disks[:, 0] * ct - disks[:, 1] * st
    out[..., 1] = poses[..., 1][..., None] + disks[:, 0] * st + disks[:, 1] * ct
    out[..., 2] = disks[:, 2]
    return out


def batch_plan_eval(adisks, aposes, ndisks, noff, nposes, margin):
    ns, nc = aposes.shape[0], aposes.shape[1]
    nn = noff.shape[0] - 1

    free = np.ones(ns, bool)
    end_dist = np.full((ns, nn), np.nan)
    if nn == 0:
        return free, end_dist

    nworld = np.empty((nc, ndisks.shape[0], 3))
    for n in range(nn):
        sl = slice(noff[n], noff[n + 1])
        nworld[:, sl] = _place(ndisks[sl], nposes[n])

    ai0, ai1 = _piece_pairs(adisks.shape[0])
    pa = ai0.shape[0]

    # per-neighbor piece endpoint indices into the concatenated disk array
    bj0_parts, bj1_parts, counts = [], [], []
    for n in range(nn):
        j0, j1 = _piece_pairs(noff[n + 1] - noff[n])
        bj0_parts.append(j0 + noff[n])
        bj1_parts.append(j1 + noff[n])
        counts.append(j0.shape[0])
    bj0 = np.concatenate(bj0_parts)
    bj1 = np.concatenate(bj1_parts)
    seg_starts = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.intp)
    pt = bj0.shape[0]

    bend = np.stack([nworld[:, bj0], nworld[:, bj1]], axis=2)  # (C, pt, 2, 3)

    for lo in range(0, ns, _CHUNK):
        hi = min(lo + _CHUNK, ns)
        aworld = _place(adisks, aposes[lo:hi])  # (s, C, na, 3)
        aend = np.stack([aworld[..., ai0, :], aworld[..., ai1, :]], axis=-2)
        # hull disks for every (sample, checkpoint, agent piece, nbr piece)
        h = np.empty((hi - lo, nc, pa, pt, 2, 2, 3))
        h[..., :2] = (
            bend[None, :, None, :, None, :, :2]
            - aend[:, :, :, None, :, None, :2]
        )
        h[..., 2] = (
            bend[None, :, None, :, None, :, 2]
            + aend[:, :, :, None, :, None, 2]
        )
        sd = _hull_sd_batch(h.reshape(hi - lo, nc, pa, pt, 4, 3))
        sd = sd.min(axis=2)  # over agent pieces -> (s, C, pt)
        per_n = np.minimum.reduceat(sd, seg_starts, axis=-1)  # (s, C, N)
        free[lo:hi] = (per_n > margin).all(axis=(1, 2))
        end_dist[lo:hi] = per_n[:, -1]
        rejected_early = (per_n[:, :-1] <= margin).any(axis=(1, 2))
        end_dist[lo:hi][rejected_early] = np.nan
    return free, end_dist

"""The numba and numpy kernel backends must agree to floating-point noise."""

import numpy as np
import pytest

from autorvo import _kernels
from autorvo import _kernels_jit as jit_k
from autorvo import _kernels_np as np_k

from oracles import random_shape


@pytest.fixture(autouse=True)
def restore_backend():
    before = _kernels.active_backend()
    yield
    _kernels.select_backend(before)


def test_select_backend_roundtrip():
    _kernels.select_backend("numpy")
    assert _kernels.active_backend() == "numpy"
    assert _kernels.hull_signed_dist is np_k.hull_signed_dist
    _kernels.select_backend("numba")
    assert _kernels.active_backend() == "numba"
    with pytest.raises(ValueError):
        _kernels.select_backend("cuda")


def test_hull_signed_dist_backends_agree():
    rng = np.random.default_rng(1)
    for _ in range(500):
        k = int(rng.integers(1, 5))
        disks = np.column_stack(
            [rng.uniform(-5, 5, k), rng.uniform(-5, 5, k), rng.uniform(0, 2, k)])
        a = jit_k.hull_signed_dist(disks)
        b = np_k.hull_signed_dist(disks)
        assert a == pytest.approx(b, abs=1e-12)


def test_pair_and_point_backends_agree():
    rng = np.random.default_rng(2)
    for _ in range(300):
        a = random_shape(rng)
        b = random_shape(rng)
        assert jit_k.pair_signed_dist(a, b) == pytest.approx(
            np_k.pair_signed_dist(a, b), abs=1e-12)
        x, y = rng.uniform(-6, 6, 2)
        assert jit_k.point_shape_dist(x, y, a) == pytest.approx(
            np_k.point_shape_dist(x, y, a), abs=1e-12)


def test_batch_plan_eval_backends_agree():
    rng = np.random.default_rng(3)
    for _ in range(25):
        adisks = random_shape(rng)
        s, c, n = int(rng.integers(1, 30)), int(rng.integers(1, 6)), int(rng.integers(0, 4))
        aposes = np.ascontiguousarray(rng.uniform(-6, 6, (s, c, 3)))
        blocks, noff = [], [0]
        for _ in range(n):
            blk = random_shape(rng)
            blocks.append(blk)
            noff.append(noff[-1] + len(blk))
        ndisks = np.ascontiguousarray(np.vstack(blocks)) if blocks else np.zeros((0, 3))
        noff = np.array(noff, dtype=np.int64)
        nposes = np.ascontiguousarray(rng.uniform(-6, 6, (n, c, 3)))
        fj, ej = jit_k.batch_plan_eval(adisks, aposes, ndisks, noff, nposes, 0.05)
        fn, en = np_k.batch_plan_eval(adisks, aposes, ndisks, noff, nposes, 0.05)
        assert (fj == fn).all()
        assert (np.isnan(ej) == np.isnan(en)).all()
        mask = ~np.isnan(ej)
        assert np.allclose(ej[mask], en[mask], atol=1e-10)


def test_batch_plan_eval_empty_world():
    adisks = np.array([[0.0, 0.0, 0.5]])
    aposes = np.zeros((3, 2, 3))
    for impl in (jit_k, np_k):
        free, end_d = impl.batch_plan_eval(
            adisks, aposes, np.zeros((0, 3)), np.zeros(1, np.int64),
            np.zeros((0, 2, 3)), 0.05)
        assert free.all()
        assert end_d.shape == (3, 0)

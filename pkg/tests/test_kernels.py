import os

import numpy as np
import pytest

from glyset import _pykernels, kernels

ck = pytest.importorskip("glyset._ckernels")


def test_backend_selection():
    # compiled when built, unless the fallback is forced
    expected = "python" if os.environ.get("GLYSET_PURE", "") in ("1", "true", "yes") else "cython"
    assert kernels.BACKEND == expected


@pytest.mark.parametrize("n,d", [(1, 1), (10, 5), (200, 37)])
def test_logistic_loss_grad_backends_agree(n, d):
    rng = np.random.default_rng(n * 100 + d)
    X = rng.normal(size=(n, d))
    ys = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    w = rng.normal(size=d) * 3
    for C in (0.01, 1.0, 1000.0):
        fc, gc, bc = ck.logistic_loss_grad(X, ys, w, 0.7, C)
        fp, gp, bp = _pykernels.logistic_loss_grad(X, ys, w, 0.7, C)
        assert fc == pytest.approx(fp, rel=1e-12)
        np.testing.assert_allclose(gc, gp, rtol=1e-10, atol=1e-10)
        assert bc == pytest.approx(bp, rel=1e-10, abs=1e-10)


def test_logistic_loss_extreme_margins_finite():
    X = np.array([[1000.0], [-1000.0]])
    ys = np.array([1.0, 1.0])
    w = np.array([5.0])
    for impl in (ck, _pykernels):
        f, g, b = impl.logistic_loss_grad(X, ys, w, 0.0, 1.0)
        assert np.isfinite(f) and np.all(np.isfinite(g)) and np.isfinite(b)
        assert f == pytest.approx(12.5 + 5000.0)


def _ds_inputs(seed):
    rng = np.random.default_rng(seed)
    J, n_items, n_workers, K = 60, 15, 4, 6
    item = rng.integers(0, n_items, J).astype(np.intp)
    worker = rng.integers(0, n_workers, J).astype(np.intp)
    obs = rng.integers(0, K, J).astype(np.intp)
    theta = rng.dirichlet(np.ones(K), size=(n_workers, K))
    post = rng.dirichlet(np.ones(K), size=n_items)
    return item, worker, obs, theta, post, n_items, n_workers


@pytest.mark.parametrize("seed", range(3))
def test_ds_kernels_agree(seed):
    item, worker, obs, theta, post, n_items, n_workers = _ds_inputs(seed)
    log_theta = np.ascontiguousarray(np.log(theta))
    np.testing.assert_allclose(
        ck.ds_log_terms(item, worker, obs, log_theta, n_items),
        _pykernels.ds_log_terms(item, worker, obs, log_theta, n_items),
        rtol=1e-12,
    )
    np.testing.assert_allclose(
        ck.ds_confusion_counts(item, worker, obs, post, n_workers),
        _pykernels.ds_confusion_counts(item, worker, obs, post, n_workers),
        rtol=1e-12,
    )


def test_ds_confusion_counts_by_loop():
    item, worker, obs, theta, post, n_items, n_workers = _ds_inputs(7)
    expected = np.zeros((n_workers, 6, 6))
    for i, w, l in zip(item, worker, obs):
        expected[w, :, l] += post[i]
    for impl in (ck, _pykernels):
        np.testing.assert_allclose(impl.ds_confusion_counts(item, worker, obs, post, n_workers), expected, rtol=1e-12)


def test_coincidence_backends_agree():
    rng = np.random.default_rng(3)
    unit = rng.integers(0, 12, 40).astype(np.intp)
    value = rng.integers(0, 5, 40).astype(np.intp)
    a = ck.coincidence_matrix(unit, value, 12, 5)
    b = _pykernels.coincidence_matrix(unit, value, 12, 5)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(a, a.T)

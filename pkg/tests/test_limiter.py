import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bgkfr import kernels
from bgkfr.fr1d import build_basis
from bgkfr.limiter import MeanNegativityError, element_mean, squeeze, squeeze_field


@pytest.fixture(params=kernels.available())
def backend(request):
    previous = kernels.backend().NAME
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


def test_element_mean_examples():
    b1 = build_basis(1)
    assert element_mean([0.0, 2.0], b1) == 1.0
    b3 = build_basis(3)
    assert element_mean(np.full(4, 2.5), b3) == pytest.approx(2.5)
    # odd about the element center
    assert abs(element_mean(b3.xi ** 3 - 0.5 * b3.xi, b3)) < 1e-15


def test_squeeze_examples(backend):
    b1 = build_basis(1)
    np.testing.assert_allclose(squeeze([-1.0, 3.0], b1), [0.0, 2.0], atol=1e-15)
    b2 = build_basis(2)
    assert squeeze([1.0, 2.0, 3.0], b2).tolist() == [1.0, 2.0, 3.0]
    assert squeeze([0.0, 0.0, 0.0], b2).tolist() == [0.0, 0.0, 0.0]


def test_squeeze_negative_mean_raises(backend):
    with pytest.raises(MeanNegativityError):
        squeeze([-1.0, -1.0], build_basis(1))


def test_squeeze_rejects_wrong_length():
    with pytest.raises(ValueError):
        squeeze([1.0, 2.0, 3.0], build_basis(1))


def test_tolerance_scaled_by_element_max(backend):
    # a column with a round-off negative mean next to O(1) columns is tolerated
    b = build_basis(1)
    f = np.zeros((1, 2, 2))
    f[0, :, 0] = [1.0, 1.0]
    f[0, :, 1] = [-3e-13, 1e-13]
    squeeze_field(f, b)
    f[0, :, 1] = [-3e-9, 1e-9]
    with pytest.raises(MeanNegativityError):
        squeeze_field(f, b)


def _field(p, seed, n_e=10_000, n_q=1):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=(n_e, p + 1, n_q))
    b = build_basis(p)
    # shift each column so its mean is nonnegative
    mean = np.einsum("i,eiq->eq", b.mean_weights, f)
    f += np.maximum(-mean, 0.0)[:, None, :] + rng.uniform(0, 0.1, size=(n_e, 1, n_q))
    return f, b


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_limiter_properties_many_elements(p, seed):
    for name in kernels.available():
        kernels.use_backend(name)
        f, b = _field(p, seed)
        before = np.einsum("i,eiq->eq", b.mean_weights, f)
        g = f.copy()
        squeeze_field(g, b)
        after = np.einsum("i,eiq->eq", b.mean_weights, g)
        assert np.all(np.abs(after - before) <= 1e-13 * (1 + np.abs(before)))
        scale = np.abs(f).max(axis=1)
        assert np.all(g.min(axis=1) >= -1e-13 * scale)
        h = g.copy()
        squeeze_field(h, b)
        assert np.array_equal(h, g)
        # untouched where nothing was negative
        pos = f.min(axis=1) >= 0.0
        assert np.array_equal(g.transpose(0, 2, 1)[pos], f.transpose(0, 2, 1)[pos])
    kernels.use_backend("cython" if "cython" in kernels.available() else "python")


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, 4, elements=st.floats(0.0, 1e6)))
def test_identity_on_nonnegative(vals):
    b = build_basis(3)
    assert np.array_equal(squeeze(vals, b), vals)

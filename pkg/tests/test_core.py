import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from hsad import HsiCube, ScoreMap, normalize_minmax
from hsad.exceptions import DataError, ParameterError, ShapeError
from hsad.pca import pca_fit, pca_transform

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_cube_invariants():
    with pytest.raises(ShapeError):
        HsiCube(np.zeros((2, 2, 1)))
    with pytest.raises(DataError):
        HsiCube(np.array([[[0.0, np.inf]]]))
    with pytest.raises(ShapeError):
        HsiCube(np.zeros((1, 1, 3)), wavelengths=[1.0, 2.0])
    cube = HsiCube(np.zeros((2, 3, 4)))
    assert (cube.height, cube.width, cube.bands) == (2, 3, 4)
    assert not cube.data.flags.writeable


def test_normalize_examples():
    assert normalize_minmax([2, 4, 6]).tolist() == [0, 0.5, 1]
    assert normalize_minmax([7, 7, 7]).tolist() == [0, 0, 0]
    with pytest.raises(DataError):
        normalize_minmax([1.0, np.nan])


def test_normalize_preserves_order(rng):
    v = rng.normal(size=100)
    assert np.array_equal(np.argsort(normalize_minmax(v), kind="stable"), np.argsort(v, kind="stable"))


@given(arrays(np.float64, st.integers(2, 50), elements=finite))
def test_normalize_idempotent(v):
    out = normalize_minmax(v)
    if v.min() != v.max():
        assert out.min() == 0.0 and out.max() == 1.0
        np.testing.assert_allclose(normalize_minmax(out), out, atol=1e-12)
        assert np.argmax(out) == np.argmax(v) and np.argmin(out) == np.argmin(v)
    else:
        assert not out.any()


def test_scoremap_normalize_exact_extremes(rng):
    m = ScoreMap(rng.normal(size=(4, 5))).normalize()
    assert m.normalized and m.scores.min() == 0.0 and m.scores.max() == 1.0


def test_pca_rank_one():
    t = np.linspace(-3, 3, 200)
    X = np.outer(t, [1, 1]) / np.sqrt(2)
    m = pca_fit(X, 2)
    assert m.eigenvalues[0] == pytest.approx(np.var(t, ddof=1))
    assert abs(m.eigenvalues[1]) < 1e-9
    np.testing.assert_allclose(m.components[0], [np.sqrt(0.5)] * 2, atol=1e-12)


def test_pca_known_covariance():
    # analytic eigenvalues of [[2,1],[1,2]] are 3 and 1
    rng = np.random.default_rng(3)
    X = rng.multivariate_normal([0, 0], [[2, 1], [1, 2]], size=20000)
    ev = pca_fit(X, 2).eigenvalues
    np.testing.assert_allclose(ev, [3, 1], rtol=0.05)


def test_pca_full_basis_reconstruction(rng):
    X = rng.normal(size=(50, 6)) * [5, 4, 3, 2, 1, 0.5]
    m = pca_fit(X, 6)
    rec = m.inverse_transform(m.transform(X))
    assert np.max(np.linalg.norm(rec - X, axis=1) / np.linalg.norm(X, axis=1)) <= 1e-6


def test_pca_transform_examples(rng):
    cube = HsiCube(rng.normal(size=(8, 8, 5)))
    m = pca_fit(cube, 3)
    data = cube.data.copy()
    data[0, 0] = m.mean
    data[0, 1] = m.mean + 2 * m.components[0]
    comps = pca_transform(m, data)
    np.testing.assert_allclose(comps[:, 0, 0], 0, atol=1e-9)
    np.testing.assert_allclose(comps[:, 0, 1], [2, 0, 0], atol=1e-9)
    z = pca_transform(m, cube)
    assert z[0].var() >= z[1].var()
    with pytest.raises(ShapeError):
        pca_transform(m, np.zeros((2, 2, 4)))


def test_pca_k_range(rng):
    with pytest.raises(ParameterError):
        pca_fit(rng.normal(size=(10, 3)), 4)
    with pytest.raises(ParameterError):
        pca_fit(rng.normal(size=(10, 3)), 0)


@given(st.integers(0, 10_000), st.integers(2, 7))
def test_pca_properties(seed, b):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, b)) @ rng.normal(size=(b, b))
    m = pca_fit(X, b)
    np.testing.assert_allclose(m.components @ m.components.T, np.eye(b), atol=1e-8)
    assert np.all(np.diff(m.eigenvalues) <= 1e-12) and np.all(m.eigenvalues >= 0)
    tr = np.trace(np.cov(X, rowvar=False))
    assert m.eigenvalues.sum() == pytest.approx(tr, rel=1e-6)
    idx = np.argmax(np.abs(m.components), axis=1)
    assert np.all(m.components[np.arange(b), idx] > 0)

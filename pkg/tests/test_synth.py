import numpy as np
import pytest
from scipy.spatial.distance import cdist

from hsad import SceneSpec, gen_scene
from hsad.detectors import detect_rx
from hsad.evaluation import roc_auc
from hsad.exceptions import GenerationError, ParameterError


def test_no_anomalies():
    cube, mask = gen_scene(SceneSpec(width=20, height=20, anomaly_count=0))
    assert not mask.labels.any()
    assert cube.data.shape == (20, 20, 30)


def test_popcount():
    _, mask = gen_scene(SceneSpec(width=32, height=32, anomaly_count=4, anomaly_size=2))
    assert mask.labels.sum() == 16


def test_determinism():
    spec = SceneSpec(width=24, height=20, seed=7)
    a, ma = gen_scene(spec)
    b, mb = gen_scene(spec)
    assert a.data.tobytes() == b.data.tobytes() and np.array_equal(ma.labels, mb.labels)
    c, _ = gen_scene(SceneSpec(width=24, height=20, seed=8))
    assert not np.array_equal(a.data, c.data)


def test_sigma_zero_distinct():
    cube, mask = gen_scene(SceneSpec(width=30, height=30, noise_sigma=0.0, anomaly_contrast=0.05, seed=2))
    P, lab = cube.pixels(), mask.labels.ravel()
    assert cdist(P[lab], P[~lab]).min() > 0


def test_contrast_zero_is_chance():
    aucs = []
    for seed in range(5):
        cube, mask = gen_scene(SceneSpec(width=48, height=48, bands=20, anomaly_count=20,
                                         anomaly_contrast=0.0, seed=seed))
        aucs.append(roc_auc(detect_rx(cube), mask))
    assert abs(np.mean(aucs) - 0.5) <= 0.05


def test_calibrated_contrast_detectable():
    sigma, bands = 0.01, 20
    for seed in range(3):
        c = 10 * sigma * np.sqrt(bands)
        cube, mask = gen_scene(SceneSpec(width=48, height=48, bands=bands, noise_sigma=sigma,
                                         anomaly_contrast=c, seed=seed))
        assert roc_auc(detect_rx(cube), mask) >= 0.95


def test_split_layout_uses_disjoint_endmembers():
    cube, _ = gen_scene(SceneSpec(width=30, height=30, bands=12, endmembers=4, noise_sigma=0.0,
                                  anomaly_count=0, layout="split"))
    left, right = cube.data[:, :15].reshape(-1, 12), cube.data[:, 15:].reshape(-1, 12)
    # each half spans its own 2-D affine set, so the halves' pixel clouds do not mix
    assert np.linalg.matrix_rank(left - left.mean(0), tol=1e-9) <= 2
    assert cdist(left, right).min() > 0


def test_placement_failure():
    with pytest.raises(GenerationError, match="smaller"):
        gen_scene(SceneSpec(width=100, height=1, anomaly_count=1, anomaly_size=2))


@pytest.mark.parametrize("kw", [dict(anomaly_count=100), dict(noise_sigma=-1.0), dict(endmembers=0),
                                dict(layout="grid"), dict(endmembers=40)])
def test_spec_validation(kw):
    with pytest.raises(ParameterError):
        gen_scene(SceneSpec(width=20, height=20, **kw))

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import spearmanr

from hsad import HsiCube
from hsad.detectors import (AED, CBAD, CSD, DETECTOR_IDS, FCBAD, GMRX, KIFD, LSUNRSORAD, MDRX, REGISTRY,
                            RX, SSRX, DetectorSpec, WinRX, canonical_id, detect, detect_rx)
from hsad.evaluation import roc_auc
from hsad.exceptions import ParameterError, ShapeError

from conftest import small_scene


def flat_with_outlier(h=12, w=12, b=4, seed=0, where=(5, 6), noise=0.01):
    rng = np.random.default_rng(seed)
    X = np.ones((h, w, b)) + noise * rng.normal(size=(h, w, b))
    X[where] += 3.0 * np.linspace(1, -1, b)
    return HsiCube(X)


def is_argmax(scores, where):
    return np.unravel_index(np.argmax(scores), scores.shape) == where


# --- registry --------------------------------------------------------------------

def test_registry_complete():
    assert set(DETECTOR_IDS) == {"RX", "MD_RX", "WIN_RX", "SSRX", "CSD", "GM_RX", "CBAD", "FCBAD",
                                 "AED", "KIFD", "LSUNRSORAD"}
    assert canonical_id("win-rx") == "WIN_RX" and canonical_id("mdrx") == "MD_RX"
    with pytest.raises(ParameterError, match="RX"):
        canonical_id("krx")


def test_spec_rejects_unknown_param():
    with pytest.raises(ParameterError, match="window"):
        DetectorSpec("RX", {"window": 3}).build()


def test_spec_round_trip():
    spec = DetectorSpec("LSUNRSORAD", {"scales": ((1, 3),), "lam": 0.1}, seed=9)
    assert DetectorSpec.from_dict(spec.to_dict()) == spec


# --- RX family -------------------------------------------------------------------

def test_rx_single_outlier():
    X = np.ones((6, 6, 3))
    X[2, 3] = [4.0, 0.0, 1.0]
    s = detect_rx(HsiCube(X)).scores
    assert s[2, 3] > np.delete(s.ravel(), 2 * 6 + 3).max()


def test_rx_square_symmetry():
    cube = HsiCube(np.array([[[0.0, 0.0], [2, 0]], [[0, 2], [2, 2]]]))
    np.testing.assert_allclose(RX(ridge=0.0).detect(cube).scores, 1.5, atol=1e-12)


def test_rx_warns_when_underdetermined(caplog):
    with caplog.at_level("WARNING"):
        s = RX().detect(HsiCube(np.random.default_rng(0).normal(size=(2, 2, 6)))).scores
    assert "ridge dominates" in caplog.text
    assert np.all(np.isfinite(s))


def test_rx_band_mismatch():
    est = RX().fit(np.zeros((3, 3, 2)) + np.arange(18).reshape(3, 3, 2))
    with pytest.raises(ShapeError):
        est.transform(np.zeros((3, 3, 3)))


def test_mdrx_median_center():
    X = np.random.default_rng(1).normal(size=(5, 5, 3))
    est = MDRX().fit(X)
    np.testing.assert_allclose(est.stats_.center, np.median(X.reshape(-1, 3), axis=0))


# --- WIN-RX ----------------------------------------------------------------------

def test_winrx_local_outlier():
    cube = flat_with_outlier()
    assert is_argmax(WinRX(window=5, guard=1).detect(cube).scores, (5, 6))


def test_winrx_annulus_oracle():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(9, 9, 2))
    s = WinRX(window=5, guard=1, ridge=1e-6).detect(HsiCube(X)).scores
    ann = [X[4 + dy, 4 + dx] for dy in range(-2, 3) for dx in range(-2, 3) if (dy, dx) != (0, 0)]
    ann = np.asarray(ann)
    assert ann.shape[0] == 24
    P = X.reshape(-1, 2)
    eps = 1e-6 * P.var(axis=0, ddof=1).mean()
    cov = np.cov(ann, rowvar=False) + eps * np.eye(2)
    d = X[4, 4] - ann.mean(axis=0)
    assert s[4, 4] == pytest.approx(d @ np.linalg.inv(cov) @ d, rel=1e-9)


def test_winrx_two_region_local_anomaly():
    rng = np.random.default_rng(3)
    h, w = 30, 30
    a, b = np.array([1.0, 0.2, 0.5]), np.array([0.2, 1.0, 0.7])
    X = np.where(np.arange(w)[None, :, None] < w // 2, a, b) + 0.02 * rng.normal(size=(h, w, 3))
    X[15, 7] = b  # the other region's material: typical globally, foreign locally
    win = WinRX(window=9, guard=3).detect(HsiCube(X)).scores
    glob = RX().detect(HsiCube(X)).scores
    assert (win < win[15, 7]).mean() > 0.95
    assert (glob < glob[15, 7]).mean() < 0.80


@pytest.mark.parametrize("kw", [dict(window=4), dict(guard=2), dict(window=5, guard=5)])
def test_winrx_geometry(kw):
    with pytest.raises(ParameterError):
        WinRX(**kw).fit(np.zeros((10, 10, 2)))


def test_winrx_window_too_large():
    with pytest.raises(ParameterError):
        WinRX(window=15, guard=5).detect(HsiCube(np.random.default_rng(0).normal(size=(10, 10, 2))))


# --- subspace detectors ----------------------------------------------------------

def test_ssrx_clutter_only():
    rng = np.random.default_rng(4)
    basis = rng.normal(size=(2, 6))
    X = (rng.normal(size=(100, 2)) @ basis).reshape(10, 10, 6)
    s = SSRX(remove_top_k=2, ridge=1e-6).detect(HsiCube(X)).scores
    assert np.ptp(s) <= 1e-6 * max(1.0, abs(s).max())


def test_ssrx_orthogonal_implant():
    rng = np.random.default_rng(5)
    basis = np.linalg.qr(rng.normal(size=(6, 6)))[0]
    coeff = rng.normal(size=(100, 6)) * [10, 8, 0.1, 0.1, 0.1, 0.1]
    X = coeff @ basis.T
    X[37] += 1.5 * basis[:, 4]
    X[11] += 30 * basis[:, 0]   # big but in-clutter excursion outranks the implant under plain RX
    X = X.reshape(10, 10, 6)
    s = SSRX().detect(HsiCube(X)).scores.ravel()
    assert np.argmax(s) == 37


def test_ssrx_k_range():
    with pytest.raises(ParameterError):
        SSRX(remove_top_k=3).fit(np.random.default_rng(0).normal(size=(4, 4, 3)))


def test_csd_signs():
    rng = np.random.default_rng(6)
    basis = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    coeff = rng.normal(size=(400, 3)) * [5.0, 0.05, 0.05]
    X = coeff @ basis.T
    X[0] = 0.0
    X -= X.mean(axis=0)
    cube = HsiCube(X.reshape(20, 20, 3))
    est = CSD(background_variance_fraction=0.9).fit(cube)
    mean_px = cube.pixels().mean(axis=0)
    probe = np.stack([mean_px, mean_px + 3.0 * basis[:, 0], mean_px + 0.6 * basis[:, 2]])
    s = est.transform(probe.reshape(1, 3, 3)).ravel()
    assert s[0] == pytest.approx(0.0, abs=1e-12)
    assert s[1] <= 0
    assert s[2] > est.transform(cube).max()


def test_csd_fraction_range():
    with pytest.raises(ParameterError):
        CSD(background_variance_fraction=1.0).fit(np.zeros((2, 2, 3)))


# --- clustering detectors --------------------------------------------------------

def test_gmrx_k1_matches_rx():
    rng = np.random.default_rng(7)
    cube = HsiCube(rng.multivariate_normal(np.zeros(4), np.diag([4, 3, 2, 1]), size=(15, 15)))
    g = GMRX(n_components=1).detect(cube).scores.ravel()
    r = RX().detect(cube).scores.ravel()
    assert spearmanr(g, r).statistic >= 0.999


def two_material_scene(seed=8, implant=True):
    rng = np.random.default_rng(seed)
    a, b = np.array([1.0, 0.0, 0.3, 0.6]), np.array([0.0, 1.0, 0.6, 0.3])
    lab = rng.random((20, 20)) < 0.5
    X = np.where(lab[..., None], a, b) + 0.03 * rng.normal(size=(20, 20, 4))
    if implant:
        X[10, 10] = 0.5 * (a + b) + np.array([0.0, 0.0, 0.4, -0.4])
    return HsiCube(X)


def test_gmrx_two_material_implant():
    assert is_argmax(GMRX(n_components=2, random_state=0).detect(two_material_scene()).scores, (10, 10))


def test_cbad_k1_equals_rx(rng):
    cube = HsiCube(rng.normal(size=(10, 10, 3)))
    c = CBAD(n_clusters=1).detect(cube).scores
    np.testing.assert_allclose(c, RX().detect(cube).scores, rtol=1e-9)


def blobs_with_midpoint():
    rng = np.random.default_rng(9)
    P = np.vstack([rng.normal([0, 0], 0.2, (50, 2)), rng.normal([4, 4], 0.2, (49, 2)), [[2.0, 2.0]]])
    return HsiCube(P.reshape(10, 10, 2))


def test_cbad_midpoint_and_determinism():
    cube = blobs_with_midpoint()
    a = CBAD(n_clusters=2, random_state=1).detect(cube).scores
    assert is_argmax(a, (9, 9))
    assert CBAD(n_clusters=2, random_state=1).detect(cube).scores.tobytes() == a.tobytes()


def test_fcbad_midpoint():
    assert is_argmax(FCBAD(n_clusters=2).detect(blobs_with_midpoint()).scores, (9, 9))


def test_fcbad_centroid_scores_zero_and_bound(rng):
    cube = HsiCube(rng.normal(size=(12, 12, 3)))
    est = FCBAD(n_clusters=3).fit(cube)
    c = est.clustering_.centroids
    assert np.all(est.transform(c[None]) == 0.0)
    P = cube.pixels()
    s = est.transform(cube).ravel()
    assert np.all(s <= est.cluster_distances(P).max(axis=1) + 1e-12)


# --- AED -------------------------------------------------------------------------

def test_aed_blank_image():
    assert not AED().detect(HsiCube(np.ones((16, 16, 3)))).scores.any()


def _aed_cube(block):
    rng = np.random.default_rng(10)
    base = np.linspace(0, 1, 32)[None, :] * np.ones((32, 1))
    X = np.stack([base, 0.5 * base, 0.01 * rng.normal(size=(32, 32))], axis=-1)
    X[10:10 + block, 20:20 + block, 2] += 2.0
    return HsiCube(X)


def test_aed_small_implant_top4():
    s = AED(area_fraction=0.006).detect(_aed_cube(2)).scores  # threshold ceil(6.1) = 7 pixels
    top4 = set(zip(*np.unravel_index(np.argsort(s.ravel())[-4:], s.shape)))
    assert top4 == {(10, 20), (10, 21), (11, 20), (11, 21)}


def test_aed_large_implant_survives_opening():
    # unsmoothed residual, so the guided-filter halo from the edges does not leak in
    s = AED(area_fraction=0.006, smooth_radius=0).detect(_aed_cube(6)).scores
    block = s[11:15, 21:25]  # interior; edge columns carry level-quantization steps
    assert np.abs(block).max() < 1e-12
    assert np.median(block) <= np.percentile(s, 50) + 1e-12


def test_aed_param_range():
    for kw in (dict(levels=4), dict(area_fraction=0.0), dict(pc_count=0)):
        with pytest.raises(ParameterError):
            AED(**kw).fit(np.zeros((4, 4, 3)))


# --- KIFD ------------------------------------------------------------------------

def test_kifd_outlier_and_range():
    s = KIFD(landmark_count=100, kpca_components=10).detect(flat_with_outlier()).scores
    assert is_argmax(s, (5, 6))
    assert np.all((s > 0) & (s < 1))


def test_kifd_landmarks_exceed_pixels():
    with pytest.raises(ParameterError):
        KIFD(landmark_count=300).fit(np.random.default_rng(0).normal(size=(10, 10, 3)))


# --- LSUNRSORAD ------------------------------------------------------------------

def test_lsun_representable_vs_unique():
    X = np.tile(np.array([1.0, 2.0, 0.5]), (9, 9, 1))
    X[4, 4] = [0.2, -1.0, 3.0]
    X[1, 1] = X[1, 1]  # identical to its neighbors
    s = LSUNRSORAD(scales=((1, 3),), outlier_frac=0.0).detect(HsiCube(X)).scores
    assert s[6, 6] < s[4, 4]
    assert s[6, 6] < 1e-3


def test_lsun_dense_oracle():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(7, 7, 2))
    lam = 0.01
    s = LSUNRSORAD(scales=((1, 3),), lam=lam, outlier_frac=0.0).detect(HsiCube(X)).scores
    A = np.array([X[3 + dy, 3 + dx] for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]).T
    y = X[3, 3]
    wts = np.linalg.solve(A.T @ A + lam * np.eye(8), A.T @ y)
    assert s[3, 3] == pytest.approx(np.sum((y - A @ wts) ** 2), rel=1e-9)


def test_lsun_outlier_removal_excludes_contaminant():
    rng = np.random.default_rng(12)
    X = np.array([1.0, 0.5, 0.2]) + 0.01 * rng.normal(size=(9, 9, 3))
    b, e = np.array([1.0, 0.5, 0.2]), np.array([0.2, 0.0, -1.0])
    e -= (e @ b) / (b @ b) * b
    # bright contaminant next to the probe (4, 4): cheap under the ridge, slightly off-axis
    X[3, 4] = 10.0 * (b + 0.05 * e / np.linalg.norm(e))
    kw = dict(scales=((1, 3),), lam=0.01)
    with_removal = LSUNRSORAD(outlier_frac=0.45, **kw).detect(HsiCube(X)).scores
    without = LSUNRSORAD(outlier_frac=0.0, **kw).detect(HsiCube(X)).scores
    assert with_removal[4, 4] < without[4, 4]


@pytest.mark.parametrize("kw", [dict(scales=((5, 3),)), dict(scales=((1, 4),)), dict(lam=0.0),
                                dict(outlier_frac=0.5)])
def test_lsun_params(kw):
    with pytest.raises(ParameterError):
        LSUNRSORAD(**kw).fit(np.zeros((9, 9, 2)))


# --- properties ------------------------------------------------------------------

FAST = dict(KIFD=dict(landmark_count=50, kpca_components=5, n_trees=20),
            WIN_RX=dict(window=5, guard=1), LSUNRSORAD=dict(scales=((1, 3),)))


@pytest.mark.parametrize("det_id", DETECTOR_IDS)
def test_shape_finite_deterministic(det_id):
    sc = small_scene(width=16, height=14, bands=6, n=3, endmembers=2)
    spec = DetectorSpec(det_id, FAST.get(det_id, {}), seed=3)
    a = detect(sc.cube, spec).scores
    assert a.shape == (14, 16) and np.all(np.isfinite(a))
    assert detect(sc.cube, spec).scores.tobytes() == a.tobytes()


@pytest.mark.parametrize("det_id", ["RX", "MD_RX", "SSRX", "CSD", "GM_RX", "CBAD", "FCBAD"])
def test_band_permutation_invariance(det_id):
    sc = small_scene(width=16, height=16, bands=6, n=3, endmembers=2)
    perm = np.random.default_rng(0).permutation(6)
    spec = DetectorSpec(det_id, seed=1)
    a = detect(sc.cube, spec).scores
    b = detect(HsiCube(sc.cube.data[:, :, perm]), spec).scores
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-9 * np.abs(a).max())


@given(st.lists(st.floats(0.0, 5.0), min_size=2, max_size=6))
def test_rx_monotone_contrast(offsets):
    rng = np.random.default_rng(13)
    base = rng.normal(size=(10, 10, 4)) * 0.1
    direction = np.array([0.5, -0.5, 0.5, 0.5])
    prev = -np.inf
    for c in sorted(offsets):
        X = base.copy()
        X[4, 4] += c * direction
        s = RX().detect(HsiCube(X)).scores[4, 4]
        assert s >= prev - 1e-9
        prev = s


def test_detectors_beat_chance_on_synthetic():
    sc = small_scene(seed=2, width=36, height=36, bands=12, n=8, contrast=0.4)
    for det_id in ("RX", "SSRX", "CSD", "CBAD"):
        assert roc_auc(detect(sc.cube, det_id), sc.truth) > 0.9, det_id


def test_registry_ids_match_classes():
    for k, cls in REGISTRY.items():
        assert cls.detector_id == k

import shutil
import subprocess

import numpy as np
import pytest

from hsad import Scene, ScoreMap
from hsad.cli import main
from hsad.ensemble import StackModel, average_fuse
from hsad.io import load_envi, load_mask, load_scoremap, save_scoremap


@pytest.fixture
def synth_dir(tmp_path):
    rows = []
    for i in range(4):
        stem = tmp_path / f"scene{i}"
        assert main(["synth", "--width", "24", "--height", "24", "--bands", "12", "--anomalies", "4",
                     "--seed", str(i), "--out", str(stem)]) == 0
        rows.append(f"scene{i}.hdr scene{i}_mask.hdr {'AB'[i % 2]}")
    (tmp_path / "scenes.txt").write_text("# synthetic\n" + "\n".join(rows) + "\n")
    return tmp_path


def test_synth_writes_cube_and_mask(synth_dir):
    cube = load_envi(synth_dir / "scene0.hdr")
    mask = load_mask(synth_dir / "scene0_mask.hdr")
    assert cube.data.shape == (24, 24, 12) and mask.labels.sum() == 4


def test_detect_happy_path_and_reproducible(synth_dir, capsys):
    out = synth_dir / "rx.f64"
    assert main(["detect", "--input", str(synth_dir / "scene0.hdr"), "--detector", "rx",
                 "--output", str(out)]) == 0
    assert "min=" in capsys.readouterr().out
    first = out.read_bytes()
    assert load_scoremap(out).scores.shape == (24, 24)
    assert main(["detect", "--input", str(synth_dir / "scene0.hdr"), "--detector", "RX",
                 "--output", str(out), "--threads", "4"]) == 0
    assert out.read_bytes() == first
    assert '"seed": 42' in (synth_dir / "rx.f64.json").read_text()


def test_detect_usage_errors(synth_dir, capsys):
    hdr = str(synth_dir / "scene0.hdr")
    assert main(["detect", "--input", hdr, "--detector", "nope", "--output", "x"]) == 2
    assert "LSUNRSORAD" in capsys.readouterr().err
    assert main(["detect", "--input", hdr, "--detector", "win_rx", "--window", "4", "--output", "x"]) == 2
    assert "odd" in capsys.readouterr().err
    assert main(["detect"]) == 2


def test_detect_data_error(tmp_path, capsys):
    (tmp_path / "bad.hdr").write_text("ENVI\nsamples = 2\n")
    assert main(["detect", "--input", str(tmp_path / "bad.hdr"), "--detector", "rx",
                 "--output", str(tmp_path / "o")]) == 3
    assert main(["detect", "--input", str(tmp_path / "missing.hdr"), "--detector", "rx",
                 "--output", str(tmp_path / "o")]) == 3


def test_fuse_average_matches_library(tmp_path, rng):
    paths, maps = [], []
    for i in range(3):
        m = ScoreMap(rng.random((5, 7)) * (i + 1))
        p = tmp_path / f"m{i}.f64"
        save_scoremap(m, p)
        paths.append(str(p))
        maps.append(m)
    out = tmp_path / "avg.f64"
    assert main(["fuse", "--mode", "average", "--maps", *paths, "--output", str(out)]) == 0
    assert load_scoremap(out).scores.tobytes() == average_fuse(maps).scores.tobytes()
    assert main(["fuse", "--mode", "vote", "--maps", *paths, "--output", str(tmp_path / "v.f64")]) == 0
    assert set(np.unique(load_scoremap(tmp_path / "v.f64").scores)) <= {0.0, 1.0}


def test_evaluate_perfect_maps(synth_dir):
    paths = []
    for i in range(4):
        p = synth_dir / f"perfect{i}.f64"
        save_scoremap(ScoreMap(load_mask(synth_dir / f"scene{i}_mask.hdr").labels.astype(float)), p)
        paths.append(str(p))
    assert main(["evaluate", "--scenes", str(synth_dir / "scenes.txt"), "--maps", *paths,
                 "--out", str(synth_dir / "rep")]) == 0
    assert '"auc_mean": 1.000000' in (synth_dir / "rep.json").read_text()
    row = (synth_dir / "rep.csv").read_text().splitlines()[1].split(",")
    assert row[:4] == ["scene0", "A", "1.000000", "1.000000"] and 0 < float(row[4]) < 1


def test_evaluate_detector_cv(synth_dir):
    assert main(["evaluate", "--scenes", str(synth_dir / "scenes.txt"), "--detector", "rx", "--repeats", "2",
                 "--out", str(synth_dir / "cv")]) == 0
    assert main(["evaluate", "--scenes", str(synth_dir / "scenes.txt"), "--detector", "rx",
                 "--folds", "5", "--out", str(synth_dir / "cv")]) == 2


def test_stack_train_then_apply(synth_dir):
    manifest = synth_dir / "one.txt"
    manifest.write_text("scene1.hdr scene1_mask.hdr\n")
    model_path = synth_dir / "uge.json"
    assert main(["stack-train", "--scenes", str(manifest), "--bases", "rx,csd", "--pcs", "4",
                 "--out", str(model_path)]) == 0
    out = synth_dir / "uge.f64"
    assert main(["stack-apply", "--model", str(model_path), "--input", str(synth_dir / "scene1.hdr"),
                 "--output", str(out)]) == 0
    model = StackModel.load(model_path)
    cube = load_envi(synth_dir / "scene1.hdr")
    assert load_scoremap(out).scores.tobytes() == model.apply(Scene(cube)).scores.tobytes()


def test_stack_train_mge_needs_enough_bands(synth_dir):
    assert main(["stack-train", "--scenes", str(synth_dir / "scenes.txt"), "--kind", "mge",
                 "--bases", "rx", "--out", str(synth_dir / "m.json")]) == 2


def test_greedy_smoke(synth_dir, capsys):
    out = synth_dir / "greedy.json"
    args = ["greedy", "--scenes", str(synth_dir / "scenes.txt"), "--candidates", "rx,csd",
            "--builder", "average", "--repeats", "2", "--out", str(out)]
    assert main(args) == 0
    assert "selected: " in capsys.readouterr().out
    first = out.read_bytes()
    assert main(args + ["--threads", "3"]) == 0
    assert out.read_bytes() == first
    assert main(args[:-2] + ["--folds", "9", "--out", str(out)]) == 2


@pytest.mark.skipif(shutil.which("hsad") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["hsad", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "greedy" in res.stdout

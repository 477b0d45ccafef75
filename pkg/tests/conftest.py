import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hsad import HsiCube, Scene, SceneSpec, gen_scene

settings.register_profile("hsad", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("hsad")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def small_scene(seed=0, width=32, height=32, bands=12, n=6, contrast=0.4, **kw) -> Scene:
    cube, mask = gen_scene(SceneSpec(width=width, height=height, bands=bands, anomaly_count=n,
                                     anomaly_contrast=contrast, seed=seed, **kw))
    return Scene(cube, mask)


@pytest.fixture
def scene():
    return small_scene()


def random_cube(rng, h=8, w=8, b=4) -> HsiCube:
    return HsiCube(rng.normal(size=(h, w, b)))


def dataset_dir():
    d = os.environ.get("HSAD_DATA_DIR")
    return Path(d) if d else None


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

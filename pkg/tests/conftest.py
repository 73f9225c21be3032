import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def clean_scene():
    from litmap.synth import SceneSpec, generate_scene
    return generate_scene(SceneSpec())


@pytest.fixture(scope="session")
def scene_dir(tmp_path_factory, clean_scene):
    from litmap.synth import write_scene
    return write_scene(clean_scene, tmp_path_factory.mktemp("scene"))

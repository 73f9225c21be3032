import numpy as np
import pytest

from litmap.config import PipelineConfig
from litmap.core import pearson_correlation
from litmap.errors import EmptyClass, PreconditionError
from litmap.pipeline import StageFailure, name_candidates, run_pipeline
from litmap.synth import SceneSpec, generate_scene


@pytest.fixture(scope="module")
def clean_result(clean_scene):
    return run_pipeline(clean_scene.cube, clean_scene.lab_signature, PipelineConfig(soil_class="soil"),
                        clean_scene.references)


def test_elbow_finds_three_classes(clean_result):
    assert clean_result.k == 3
    assert sorted(clean_result.class_map.class_names.values()) == ["soil", "vegetation", "water"]


def test_classes_match_truth(clean_result, clean_scene):
    cm = clean_result.class_map
    for tid, name in {0: "water", 1: "vegetation", 2: "soil"}.items():
        cid = cm.resolve(name)
        assert np.all(cm.labels[clean_scene.truth_classes == tid] == cid)


def test_noiseless_alpha_recovered(clean_result, clean_scene):
    truth = clean_scene.truth_alpha
    est = clean_result.alpha_map
    soil = np.isfinite(truth)
    assert np.array_equal(soil, np.isfinite(est))
    assert np.sqrt(np.mean((est[soil] - truth[soil]) ** 2)) < 1e-6
    assert pearson_correlation(clean_result.ra_map[soil], truth[soil]) > 0.9


def test_subclasses_populated(clean_result):
    c = clean_result.subclasses.counts()
    assert c["mineral"] > 0 and c["impurity"] > 0
    assert clean_result.thresholds.lower <= clean_result.thresholds.upper


def test_noisy_scene_correlates():
    s = generate_scene(SceneSpec(noise_snr_db=30, seed=1))
    res = run_pipeline(s.cube, s.lab_signature, PipelineConfig(soil_class="soil", k_override=3), s.references)
    soil = np.isfinite(s.truth_alpha) & np.isfinite(res.alpha_map)
    assert pearson_correlation(res.alpha_map[soil], s.truth_alpha[soil]) >= 0.99


def test_soil_class_required(clean_scene):
    with pytest.raises(StageFailure) as err:
        run_pipeline(clean_scene.cube, clean_scene.lab_signature, PipelineConfig(k_override=3),
                     clean_scene.references)
    assert err.value.stage == "soil" and isinstance(err.value.error, PreconditionError)


def test_unknown_soil_class(clean_scene):
    with pytest.raises(StageFailure) as err:
        run_pipeline(clean_scene.cube, clean_scene.lab_signature,
                     PipelineConfig(soil_class="basalt", k_override=3), clean_scene.references)
    assert err.value.exit_code in (2, 3)


def test_deterministic_across_threads(clean_scene):
    cfgs = [PipelineConfig(soil_class="soil", k_override=3, threads=t) for t in (1, 1, 4)]
    maps = [run_pipeline(clean_scene.cube, clean_scene.lab_signature, c, clean_scene.references).alpha_map
            for c in cfgs]
    assert maps[0].tobytes() == maps[1].tobytes() == maps[2].tobytes()


def test_name_candidates_suffixes():
    from litmap.core import SpectralSignature
    wl = np.array([1.0, 2.0, 3.0])
    refs = [SpectralSignature(wl, [1.0, 0, 0], "a"), SpectralSignature(wl, [0, 1.0, 0], "b")]
    names = name_candidates(np.array([[1.0, 0.1, 0], [0.9, 0, 0.1], [0, 1, 0]]), wl, refs)
    assert names == {0: "a", 1: "a_2", 2: "b"}
    assert name_candidates(np.zeros((2, 3)), wl, None) == {0: "class_0", 1: "class_1"}

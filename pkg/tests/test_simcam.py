import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmsci import imgcore, simcam
from pmsci.denoise import extract_residue
from pmsci.errors import DataError
from pmsci.fingerprint import estimate_fingerprint
from pmsci.pce import ncc_surface, pce


def test_camera_deterministic_and_validated():
    a = simcam.make_camera(32, 48, seed=4)
    b = simcam.make_camera(32, 48, seed=4)
    assert a.prnu.tobytes() == b.prnu.tobytes()
    assert a.shape == (32, 48)
    assert abs(a.prnu.mean()) < 1e-12
    with pytest.raises(DataError):
        simcam.make_camera(32, 32, strength=0)
    with pytest.raises(DataError):
        simcam.make_camera(32, 32, noise_std=0)


def test_independent_patterns():
    vals = [pce(simcam.make_camera(128, 128, seed=s).prnu,
                simcam.make_camera(128, 128, seed=s + 100).prnu).pce for s in range(20)]
    assert max(abs(v) for v in vals) < 50


@settings(max_examples=20, deadline=None)
@given(st.integers(8, 80), st.integers(8, 80), st.integers(0, 2 ** 31))
def test_scene_range_and_determinism(rows, cols, seed):
    s = simcam.synth_scene(rows, cols, seed=seed)
    assert s.shape == (rows, cols)
    assert s.min() >= 20 and s.max() <= 235
    assert s.tobytes() == simcam.synth_scene(rows, cols, seed=seed).tobytes()


def test_scenes_differ():
    corr = [ncc_surface(simcam.synth_scene(96, 96, seed=s),
                        simcam.synth_scene(96, 96, seed=s + 1))[0, 0] for s in range(10)]
    assert max(abs(c) for c in corr) < 0.5


def test_capture_identity_limit():
    cam = simcam.make_camera(40, 40, strength=1e-12, noise_std=1e-12, seed=1)
    scene = simcam.synth_scene(40, 40, seed=2)
    np.testing.assert_array_equal(simcam.capture(cam, scene, seed=0), imgcore.quantize(scene))


def test_capture_shape_check():
    cam = simcam.make_camera(40, 40)
    with pytest.raises(DataError):
        simcam.capture(cam, np.zeros((40, 41)))


def test_end_to_end_oracle():
    cam = simcam.make_camera(128, 128, seed=7)
    other = simcam.make_camera(128, 128, seed=8)
    shots = [simcam.capture(cam, simcam.synth_scene(128, 128, seed=i), seed=i) for i in range(26)]
    fp = estimate_fingerprint(shots[:25])
    probe = shots[25]
    assert pce(extract_residue(probe), fp, probe).pce > 200
    foreign = simcam.capture(other, simcam.synth_scene(128, 128, seed=99), seed=0)
    assert abs(pce(extract_residue(foreign), fp, foreign).pce) < 50


def test_estimate_approaches_true_pattern():
    cam = simcam.make_camera(96, 96, seed=31)
    shots = [simcam.capture(cam, simcam.synth_scene(96, 96, seed=i), seed=i) for i in range(24)]
    corr = [ncc_surface(estimate_fingerprint(shots[:k]).data, cam.prnu)[0, 0] for k in (2, 6, 24)]
    assert corr[0] < corr[1] < corr[2]
    assert pce(estimate_fingerprint(shots).data, cam.prnu).pce > 50

import numpy as np
import pytest
from sklearn.base import clone

from pmsci import simcam
from pmsci.denoise import extract_residue
from pmsci.errors import DataError, DimensionMismatchError
from pmsci.estimators import (
    CameraFingerprint, PatchMatchAnonymizer, ResidueExtractor, SubsetFusionAttributor,
)
from pmsci.fingerprint import estimate_fingerprint


@pytest.fixture(scope="module")
def shots():
    cam = simcam.make_camera(64, 64, strength=0.05, noise_std=1.0, seed=21)
    other = simcam.make_camera(64, 64, strength=0.05, noise_std=1.0, seed=22)
    own = np.stack([simcam.capture(cam, simcam.synth_scene(64, 64, seed=i), seed=i)
                    for i in range(16)])
    foreign = np.stack([simcam.capture(other, simcam.synth_scene(64, 64, seed=50 + i), seed=i)
                        for i in range(6)])
    return own, foreign


@pytest.mark.parametrize("est", [
    ResidueExtractor(sigma0=2.0), CameraFingerprint(tau=40.0, label="x"),
    PatchMatchAnonymizer(patch_size=6, seed=3), SubsetFusionAttributor(n=4, K=7),
])
def test_params_roundtrip_and_clone(est):
    params = est.get_params()
    twin = clone(est)
    assert twin.get_params() == params
    assert type(est)(**params).get_params() == params


def test_residue_extractor(shots):
    own, _ = shots
    out = ResidueExtractor().fit_transform(own[:3])
    np.testing.assert_array_equal(out[1], extract_residue(own[1]))
    with pytest.raises(DataError):
        ResidueExtractor(sigma0=-1).fit(own[:2])


def test_camera_fingerprint(shots):
    own, foreign = shots
    est = CameraFingerprint().fit(list(own[:10]))
    assert est.n_images_ == 10
    assert est.fingerprint_ == estimate_fingerprint(own[:10])
    scores = est.decision_function(np.concatenate([own[10:], foreign]))
    pred = est.predict(np.concatenate([own[10:], foreign]))
    np.testing.assert_array_equal(pred, scores >= 50)
    assert pred[:6].all() and not pred[6:].any()
    assert est.score_set(own[10:]) > est.score_set(foreign)
    again = CameraFingerprint.from_fingerprint(est.fingerprint_)
    np.testing.assert_allclose(again.decision_function(own[10:12]), scores[:2])
    with pytest.raises(DimensionMismatchError):
        est.fit([own[0], own[1][:40]])


def test_anonymizer_streams(shots):
    own, _ = shots
    est = PatchMatchAnonymizer(patch_size=6, seed=1)
    out = est.fit_transform(own[:2])
    assert out.shape == (2, 54, 54)
    assert len(est.reports_) == 2
    again = PatchMatchAnonymizer(patch_size=6, seed=1).fit_transform(own[:2])
    assert out.tobytes() == again.tobytes()


def test_subset_fusion_attributor(shots):
    own, foreign = shots
    ref = estimate_fingerprint(own[:10])
    X = np.concatenate([own[10:], foreign])
    y = np.array([1] * 6 + [0] * 6)
    est = SubsetFusionAttributor(reference=ref, n=3, K=40, seed=0).fit(X, y)
    assert len(est.records_) == 40
    assert est.labels_.shape == (12,)
    assert est.labels_[:6].sum() > 0
    assert est.metrics_.fused_size == est.labels_.sum()
    assert est.fused_pce_ is not None and est.fused_pce_ >= 50
    unlabeled = SubsetFusionAttributor(reference=ref, n=3, K=40, seed=0).fit(X)
    np.testing.assert_array_equal(unlabeled.labels_, est.labels_)
    assert unlabeled.metrics_ is None
    with pytest.raises(ValueError):
        SubsetFusionAttributor().fit(X)
    with pytest.raises(ValueError):
        SubsetFusionAttributor(reference=ref).fit(X, y[:5])

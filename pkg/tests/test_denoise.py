import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmsci.denoise import extract_residue, wiener_shrink
from pmsci.errors import DataError, ImageTooSmallError


def _ncc(a, b):
    a = a - a.mean()
    b = b - b.mean()
    return float((a * b).sum() / np.sqrt((a * a).sum() * (b * b).sum()))


@pytest.mark.parametrize("shape", [(32, 32), (64, 80), (45, 77)])
def test_constant_image_has_zero_residue(shape):
    res = extract_residue(np.full(shape, 117.0))
    assert res.shape == shape
    assert np.max(np.abs(res)) < 1e-9


def test_residue_tracks_added_noise(rng):
    y, x = np.mgrid[0:128, 0:128]
    smooth = 100 + 40 * np.sin(x / 20.0) * np.cos(y / 25.0)
    noise = rng.standard_normal(smooth.shape) * 3.0
    res = extract_residue(smooth + noise)
    assert _ncc(res, noise) > 0.5


def test_independent_noise_gives_uncorrelated_residues(rng):
    a = extract_residue(128 + 3 * rng.standard_normal((128, 128)))
    b = extract_residue(128 + 3 * rng.standard_normal((128, 128)))
    assert abs(_ncc(a, b)) < 0.05


def test_deterministic(rng):
    img = rng.uniform(0, 255, (64, 64))
    assert extract_residue(img).tobytes() == extract_residue(img.copy()).tobytes()


def test_residue_of_offset_image_is_unchanged(rng):
    img = rng.uniform(20, 200, (64, 64))
    np.testing.assert_allclose(extract_residue(img + 30.0), extract_residue(img), atol=1e-8)


def test_size_and_input_errors():
    with pytest.raises(ImageTooSmallError):
        extract_residue(np.zeros((31, 64)))
    with pytest.raises(DataError):
        extract_residue(np.zeros((64, 64, 3)))
    with pytest.raises(DataError):
        extract_residue(np.zeros((64, 64)), sigma0=0)


@settings(max_examples=25, deadline=None)
@given(st.integers(32, 70), st.integers(32, 70), st.integers(0, 2 ** 31))
def test_residue_shape_and_finite(rows, cols, seed):
    img = np.random.default_rng(seed).uniform(0, 255, (rows, cols))
    res = extract_residue(img)
    assert res.shape == (rows, cols)
    assert np.all(np.isfinite(res))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.1, 50))
def test_shrinkage_never_amplifies(seed, var):
    c = np.random.default_rng(seed).standard_normal((16, 16)) * 5
    d = wiener_shrink(c, var)
    assert np.all(np.abs(d) <= np.abs(c) + 1e-12)
    assert np.all(d * c >= 0)


@pytest.mark.parametrize("std", [1.0, 3.0])
def test_denoising_removes_energy(rng, std):
    # noise at the level the denoiser assumes
    img = 128 + std * rng.standard_normal((96, 96))
    res = extract_residue(img)
    denoised = img - res
    assert np.sum(res ** 2) > np.sum(extract_residue(denoised) ** 2)


def test_residue_mean_small_on_natural_fixtures():
    from pathlib import Path

    from pmsci.imgcore import load_image

    for path in sorted((Path(__file__).parent / "fixtures" / "natural").glob("*.png")):
        res = extract_residue(load_image(path))
        assert abs(res.mean()) < 1.0, path.name

"""Synthetic camera oracle.

Captures follow ``L = L0 + L0 * F + noise``: a smooth scene ``L0``, a fixed
zero-mean multiplicative pattern ``F`` and i.i.d. Gaussian shot/read noise,
clamped and quantized to 8 bits like a real file.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DataError
from .imgcore import quantize
from .validation import check_image, check_same_shape

SCENE_RANGE = (20.0, 235.0)
DEFAULT_STRENGTH = 0.006
DEFAULT_NOISE_STD = 1.5
DEFAULT_TEXTURE = 10.0
DEFAULT_TEXTURE_SCALE = 0.9


def rng_for(seed, *stream) -> np.random.Generator:
    """PCG64 generator for ``seed`` and an optional sub-stream path."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, stream)])))


@dataclass(frozen=True)
class SynthCamera:
    prnu: np.ndarray
    strength: float
    noise_std: float
    seed: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.prnu.shape


def make_camera(rows: int, cols: int, strength: float = DEFAULT_STRENGTH,
                noise_std: float = DEFAULT_NOISE_STD,
                seed: int = 0) -> SynthCamera:
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise DataError(f"degenerate camera size {rows}x{cols}")
    if not 0 < strength <= 0.1:
        raise DataError(f"strength must be in (0, 0.1], got {strength}")
    if not noise_std > 0:
        raise DataError(f"noise_std must be positive, got {noise_std}")
    f = rng_for(seed, 0).standard_normal((rows, cols)) * strength
    f -= f.mean()
    return SynthCamera(prnu=f, strength=float(strength), noise_std=float(noise_std), seed=int(seed))


def synth_scene(rows: int, cols: int, seed: int = 0, n_waves: int = 6,
                texture: float = DEFAULT_TEXTURE,
                texture_scale: float = DEFAULT_TEXTURE_SCALE) -> np.ndarray:
    """Natural-image surrogate with values in [20, 235].

    A sum of ``n_waves`` random low-frequency plane waves, stretched to leave
    three texture standard deviations of headroom, plus Gaussian-blurred
    pixel-scale texture of standard deviation ``texture`` gray levels.
    Fine texture is what makes patch matching content-driven, as in real
    photographs; without it the attack copies noise and leaks the PRNU.
    """
    if rows < 1 or cols < 1:
        raise DataError(f"degenerate scene size {rows}x{cols}")
    lo_out, hi_out = SCENE_RANGE
    rng = rng_for(seed, 1)
    y, x = np.mgrid[0:rows, 0:cols].astype(np.float64)
    base = np.zeros((rows, cols))
    for _ in range(n_waves):
        fy, fx = rng.uniform(-3.0, 3.0, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.uniform(0.5, 1.0)
        base += amp * np.sin(2 * np.pi * (fy * y / rows + fx * x / cols) + phase)
    margin = min(3.0 * texture, 0.4 * (hi_out - lo_out))
    lo, hi = base.min(), base.max()
    if hi > lo:
        base = lo_out + margin + (base - lo) * (hi_out - lo_out - 2 * margin) / (hi - lo)
    else:
        base = np.full((rows, cols), 0.5 * (lo_out + hi_out))
    if texture > 0:
        tex = gaussian_filter(rng.standard_normal((rows, cols)), texture_scale, mode="wrap")
        base = base + texture * tex / (tex.std() or 1.0)
    return np.clip(base, lo_out, hi_out)


def capture(cam: SynthCamera, scene: np.ndarray, seed: int = 0) -> np.ndarray:
    """One 8-bit exposure of ``scene`` through ``cam``."""
    scene = check_image(scene, name="scene")
    check_same_shape(scene, cam.prnu, "scene and camera")
    noise = rng_for(cam.seed, 2, seed).standard_normal(scene.shape) * cam.noise_std
    return quantize(scene + scene * cam.prnu + noise).astype(np.float64)

"""Normalized cross-correlation and peak-to-correlation energy (PCE)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConstantInputError
from .fingerprint import Fingerprint, generate_fingerprint
from .validation import check_image, check_same_shape

DEFAULT_TAU = 50.0
EXCLUSION = 11


@dataclass(frozen=True)
class PceResult:
    pce: float
    peak_row: int
    peak_col: int
    peak_corr: float
    energy: float


def ncc_surface(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Circular normalized cross-correlation over all cyclic shifts.

    ``out[dr, dc] = sum(a0[(i + dr) % R, (j + dc) % C] * b0[i, j]) / (|a0| |b0|)``
    with ``a0``, ``b0`` the mean-subtracted inputs, so ``out[0, 0]`` is the
    plain normalized correlation.
    """
    a = check_image(a, name="a")
    b = check_image(b, name="b")
    check_same_shape(a, b, "correlation inputs")
    a0 = a - a.mean()
    b0 = b - b.mean()
    na = np.sqrt(np.sum(a0 * a0))
    nb = np.sqrt(np.sum(b0 * b0))
    if na == 0 or nb == 0:
        raise ConstantInputError("cannot correlate a constant matrix")
    spec = np.fft.rfft2(a0) * np.conj(np.fft.rfft2(b0))
    return np.fft.irfft2(spec, s=a.shape) / (na * nb)


def pce_from_surface(surface: np.ndarray, exclusion: int = EXCLUSION,
                     peak: Literal["aligned", "global"] = "aligned") -> PceResult:
    """PCE of a correlation surface.

    ``peak="aligned"`` reads the peak at zero shift (images known to be
    geometrically aligned); ``peak="global"`` takes the cell of maximum
    absolute value. Energy is the mean squared correlation outside an
    ``exclusion`` x ``exclusion`` window centred (cyclically) on the peak.
    """
    rows, cols = surface.shape
    if peak == "aligned":
        pr, pc = 0, 0
    elif peak == "global":
        pr, pc = np.unravel_index(int(np.argmax(np.abs(surface))), surface.shape)
    else:
        raise ValueError(f"unknown peak mode {peak!r}")
    half = exclusion // 2
    mask = np.ones(surface.shape, dtype=bool)
    rr = np.arange(pr - half, pr + half + 1) % rows
    cc = np.arange(pc - half, pc + half + 1) % cols
    mask[np.ix_(rr, cc)] = False
    if not mask.any():
        raise ValueError("exclusion window covers the whole surface")
    energy = float(np.mean(surface[mask] ** 2))
    value = float(surface[pr, pc])
    return PceResult(pce=float(np.sign(value) * value * value / energy), peak_row=int(pr),
                     peak_col=int(pc), peak_corr=value, energy=energy)


def pce(residue: np.ndarray, reference, image: np.ndarray | None = None,
        exclusion: int = EXCLUSION, peak: Literal["aligned", "global"] = "aligned") -> PceResult:
    """PCE between a residue (or fingerprint) and a reference fingerprint.

    With ``image`` given, the residue is correlated with ``image * reference``
    (the expected PRNU term of that image); otherwise with the reference itself.
    """
    ref = reference.data if isinstance(reference, Fingerprint) else reference
    if isinstance(residue, Fingerprint):
        residue = residue.data
    ref = check_image(ref, name="reference")
    if image is not None:
        img = check_image(image)
        check_same_shape(img, ref, "image and reference")
        ref = img * ref
    return pce_from_surface(ncc_surface(residue, ref), exclusion, peak)


def pce_of_set(paths, reference: Fingerprint, sigma0: float | None = None, trim: int = 0,
               **kw) -> float:
    """PCE between the joint fingerprint of ``paths`` and ``reference``."""
    sigma0 = reference.sigma0 if sigma0 is None else sigma0
    fs = generate_fingerprint(paths, sigma0=sigma0, trim=trim)
    return pce(reference, fs, **kw).pce

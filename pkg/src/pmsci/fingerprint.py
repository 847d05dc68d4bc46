"""PRNU fingerprint estimation, post-processing and persistence.

The estimate is the maximum-likelihood aggregate

    F = sum_i(W_i * L_i) / sum_i(L_i ** 2)        (elementwise)

followed by zero-meaning every row and then every column. Because both sums
are associative, a fingerprint of any image list can be assembled from
per-image partial sums (:class:`FingerprintAccumulator`); subset analysis
relies on this to avoid re-extracting residues.
"""
from __future__ import annotations

import hashlib
import struct
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import imgcore
from .denoise import DEFAULT_SIGMA0, extract_residue
from .errors import DataError, DimensionMismatchError, FingerprintFormatError
from .validation import check_image, check_image_stack, check_positive

MAGIC = b"PRNUFP01"
FLAG_ZERO_MEAN = 1 << 0
_HEADER = struct.Struct("<IIIdI")


@dataclass
class Fingerprint:
    """A PRNU estimate plus the metadata needed to reproduce it."""

    data: np.ndarray
    n: int
    sigma0: float
    flags: int = FLAG_ZERO_MEAN
    label: str = ""
    # not part of the on-disk format
    created: str | None = field(default=None, compare=False)
    zero_denominator: int = field(default=0, compare=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def zero_mean(self) -> bool:
        return bool(self.flags & FLAG_ZERO_MEAN)

    def __eq__(self, other):
        if not isinstance(other, Fingerprint):
            return NotImplemented
        return (
            self.n == other.n
            and self.flags == other.flags
            and self.label == other.label
            and np.float64(self.sigma0).tobytes() == np.float64(other.sigma0).tobytes()
            and self.data.shape == other.data.shape
            and self.data.tobytes() == other.data.tobytes()
        )


def zero_mean(x: np.ndarray) -> np.ndarray:
    """Subtract every row mean, then every column mean."""
    x = np.asarray(x, dtype=np.float64)
    x = x - x.mean(axis=1, keepdims=True)
    return x - x.mean(axis=0, keepdims=True)


class FingerprintAccumulator:
    """Running numerator / denominator sums of the MLE estimator."""

    def __init__(self, shape: tuple[int, int] | None = None):
        self.shape = shape
        self.numerator = None if shape is None else np.zeros(shape)
        self.denominator = None if shape is None else np.zeros(shape)
        self.count = 0

    def _check(self, shape):
        if self.shape is None:
            self.shape = shape
            self.numerator = np.zeros(shape)
            self.denominator = np.zeros(shape)
        elif shape != self.shape:
            raise DimensionMismatchError(
                f"image is {shape[0]}x{shape[1]} but fingerprint is "
                f"{self.shape[0]}x{self.shape[1]}"
            )

    def add_terms(self, wl: np.ndarray, ll: np.ndarray) -> "FingerprintAccumulator":
        self._check(wl.shape)
        self.numerator += wl
        self.denominator += ll
        self.count += 1
        return self

    def add(self, img: np.ndarray, sigma0: float = DEFAULT_SIGMA0) -> "FingerprintAccumulator":
        img = check_image(img)
        self._check(img.shape)
        wl, ll = partial_terms(img, sigma0)
        return self.add_terms(wl, ll)

    def merge(self, other: "FingerprintAccumulator") -> "FingerprintAccumulator":
        if other.count == 0:
            return self
        self._check(other.shape)
        self.numerator += other.numerator
        self.denominator += other.denominator
        self.count += other.count
        return self

    def finalize(self, sigma0: float, postprocess: bool = True, label: str = "") -> Fingerprint:
        if self.count == 0:
            raise DataError("no images accumulated")
        return _finish(self.numerator, self.denominator, self.count, sigma0, postprocess, label)


def partial_terms(img: np.ndarray, sigma0: float = DEFAULT_SIGMA0) -> tuple[np.ndarray, np.ndarray]:
    """Per-image contributions ``(W * L, L ** 2)`` to the estimator sums."""
    w = extract_residue(img, sigma0)
    return w * img, img * img


def _finish(num, den, n, sigma0, postprocess, label) -> Fingerprint:
    zero = den == 0
    n_zero = int(np.count_nonzero(zero))
    with np.errstate(divide="ignore", invalid="ignore"):
        data = np.where(zero, 0.0, num / np.where(zero, 1.0, den))
    if n_zero:
        warnings.warn(f"{n_zero} pixel(s) with zero intensity in every image set to 0",
                      RuntimeWarning, stacklevel=3)
    flags = 0
    if postprocess:
        data = zero_mean(data)
        flags |= FLAG_ZERO_MEAN
    return Fingerprint(
        data=np.ascontiguousarray(data), n=int(n), sigma0=float(sigma0), flags=flags,
        label=label, created=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        zero_denominator=n_zero,
    )


def content_key(img: np.ndarray) -> bytes:
    """Sort key fixing the summation order of the estimator."""
    return hashlib.sha256(np.ascontiguousarray(img, dtype=np.float64).tobytes()).digest()


def combine_terms(terms: Sequence[tuple[np.ndarray, np.ndarray]], sigma0: float,
                  postprocess: bool = True, label: str = "") -> Fingerprint:
    """Fingerprint from precomputed :func:`partial_terms`, summed in order."""
    if not terms:
        raise DataError("at least one image is required")
    num = np.zeros_like(terms[0][0])
    den = np.zeros_like(terms[0][1])
    for wl, ll in terms:
        if wl.shape != num.shape:
            raise DimensionMismatchError(
                f"image is {wl.shape[0]}x{wl.shape[1]} but others are {num.shape[0]}x{num.shape[1]}"
            )
        num += wl
        den += ll
    return _finish(num, den, len(terms), sigma0, postprocess, label)


def estimate_fingerprint(images, sigma0: float = DEFAULT_SIGMA0, postprocess: bool = True,
                         label: str = "") -> Fingerprint:
    """MLE fingerprint of equally sized gray images.

    The result does not depend on image order; sums are formed in a
    canonical order so permutations give bit-identical output.
    """
    images = check_image_stack(images)
    sigma0 = check_positive(sigma0, "sigma0")
    # canonical order so any permutation sums identically
    images = sorted(images, key=content_key)
    terms = [partial_terms(im, sigma0) for im in images]
    return combine_terms(terms, sigma0, postprocess, label)


def load_images(paths: Iterable, trim: int = 0) -> list[np.ndarray]:
    """Load gray images, trimming ``trim`` pixels per side, checking sizes agree."""
    out = []
    first_path = None
    for p in paths:
        try:
            img = imgcore.load_image(p)
        except FileNotFoundError as exc:
            raise DataError(f"{p}: file not found") from exc
        if trim:
            img = imgcore.trim_border(img, trim)
        if out and img.shape != out[0].shape:
            raise DimensionMismatchError(
                f"{p} is {img.shape[0]}x{img.shape[1]} but {first_path} is "
                f"{out[0].shape[0]}x{out[0].shape[1]}"
            )
        if not out:
            first_path = p
        out.append(img)
    return out


def generate_fingerprint(paths: Sequence, sigma0: float = DEFAULT_SIGMA0, trim: int = 0,
                         postprocess: bool = True, label: str = "") -> Fingerprint:
    """Load image files and estimate their joint fingerprint."""
    paths = list(paths)
    if not paths:
        raise DataError("empty image list")
    return estimate_fingerprint(load_images(paths, trim), sigma0, postprocess, label)


def save_fingerprint(fp: Fingerprint, path) -> None:
    data = np.ascontiguousarray(fp.data, dtype="<f8")
    rows, cols = data.shape
    label = fp.label.encode("utf-8")
    blob = b"".join([
        MAGIC,
        _HEADER.pack(rows, cols, fp.n, fp.sigma0, fp.flags),
        struct.pack("<I", len(label)),
        label,
        data.tobytes(order="C"),
    ])
    Path(path).write_bytes(blob)


def load_fingerprint(path) -> Fingerprint:
    blob = Path(path).read_bytes()
    if len(blob) < len(MAGIC) or blob[:len(MAGIC)] != MAGIC:
        if blob[:6] == MAGIC[:6]:
            raise FingerprintFormatError(f"{path}: unsupported fingerprint version {blob[:8]!r}")
        raise FingerprintFormatError(f"{path}: not a fingerprint file")
    pos = len(MAGIC)
    if len(blob) < pos + _HEADER.size + 4:
        raise FingerprintFormatError(f"{path}: truncated header")
    rows, cols, n, sigma0, flags = _HEADER.unpack_from(blob, pos)
    pos += _HEADER.size
    (label_len,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    if len(blob) < pos + label_len:
        raise FingerprintFormatError(f"{path}: truncated label")
    label = blob[pos:pos + label_len].decode("utf-8")
    pos += label_len
    expected = rows * cols * 8
    if len(blob) - pos != expected:
        raise FingerprintFormatError(
            f"{path}: expected {expected} data bytes for {rows}x{cols}, found {len(blob) - pos}"
        )
    data = np.frombuffer(blob, dtype="<f8", offset=pos).reshape(rows, cols).astype(np.float64)
    return Fingerprint(data=data, n=n, sigma0=sigma0, flags=flags, label=label)

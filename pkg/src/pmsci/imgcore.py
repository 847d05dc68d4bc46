"""Image representation, file IO and quality metrics.

Images are plain 2-D ``float64`` arrays of luminance in [0, 255]. Colour
files are converted with BT.601 luma weights on load; values are rounded to
8 bits only when writing a file and inside :func:`mpr`.
"""
from __future__ import annotations

import math
import os
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from .errors import ImageFormatError, ImageTooSmallError
from .validation import check_image, check_same_shape

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
GRAY_CONVERSION = "bt601"

# Pillow reports binary PGM as "PPM".
_READ_FORMATS = {"PNG", "PPM", "JPEG"}
_WRITE_FORMATS = {".png": "PNG", ".pgm": "PPM"}


def to_gray(arr: np.ndarray) -> np.ndarray:
    """Convert an (R, C), (R, C, 3) or (R, C, 4) array to BT.601 luma."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 2:
        return arr.copy()
    if arr.ndim == 3 and arr.shape[2] in (3, 4):
        r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
        return LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b
    raise ImageFormatError(f"cannot convert array of shape {arr.shape} to gray")


def load_image(path) -> np.ndarray:
    """Read a PNG, binary PGM (or JPEG) file as a gray float64 image."""
    path = Path(path)
    try:
        with PILImage.open(path) as im:
            fmt = im.format
            if fmt not in _READ_FORMATS:
                raise ImageFormatError(f"{path}: unsupported format {fmt}")
            if im.mode in ("P", "PA", "LA", "1", "CMYK", "YCbCr"):
                im = im.convert("RGBA" if im.mode in ("P", "PA", "LA") else "RGB")
            if im.mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im, dtype=np.float64) / 257.0
            elif im.mode in ("L", "RGB", "RGBA"):
                arr = np.asarray(im, dtype=np.float64)
            else:
                raise ImageFormatError(f"{path}: unsupported pixel mode {im.mode}")
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageFormatError(f"{path}: unreadable image ({exc})") from exc
    if arr.size == 0 or 0 in arr.shape[:2]:
        raise ImageFormatError(f"{path}: zero-size image")
    gray = to_gray(arr[..., :3] if arr.ndim == 3 else arr)
    return np.clip(gray, 0.0, 255.0)


def quantize(img: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half away from zero; returns uint8."""
    arr = np.clip(np.asarray(img, dtype=np.float64), 0.0, 255.0)
    return np.floor(arr + 0.5).astype(np.uint8)


def save_image(img: np.ndarray, path) -> None:
    """Write an 8-bit gray PNG or binary PGM, chosen by file suffix."""
    path = Path(path)
    fmt = _WRITE_FORMATS.get(path.suffix.lower())
    if fmt is None:
        raise ImageFormatError(f"{path}: can only write .png or .pgm")
    data = quantize(check_image(img))
    tmp = path.with_name(path.name + ".part")
    PILImage.fromarray(data, mode="L").save(tmp, format=fmt)
    os.replace(tmp, path)


def trim_border(img: np.ndarray, b: int) -> np.ndarray:
    """Return the centred sub-image with ``b`` pixels removed from each side."""
    img = check_image(img)
    b = int(b)
    if b < 0:
        raise ValueError("border must be non-negative")
    rows, cols = img.shape
    if rows <= 2 * b or cols <= 2 * b:
        raise ImageTooSmallError(f"cannot trim {b} px from each side of a {rows}x{cols} image")
    if b == 0:
        return img.copy()
    return img[b:rows - b, b:cols - b].copy()


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for 8-bit peak; ``inf`` when identical."""
    a, b = check_image(a, name="a"), check_image(b, name="b")
    check_same_shape(a, b, "images")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


def mpr(a: np.ndarray, b: np.ndarray) -> float:
    """Manipulated pixel rate: percentage of pixels whose 8-bit values differ."""
    a, b = check_image(a, name="a"), check_image(b, name="b")
    check_same_shape(a, b, "images")
    changed = np.count_nonzero(quantize(a) != quantize(b))
    return 100.0 * changed / a.size

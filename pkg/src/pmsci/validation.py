"""Input validation helpers shared by the functional API and the estimators."""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, DimensionMismatchError, ImageTooSmallError


def check_image(img, min_size: int = 1, name: str = "image") -> np.ndarray:
    """Return ``img`` as a C-contiguous 2-D float64 array, validating it.

    Raises :class:`DataError` for non 2-D or non-finite input and
    :class:`ImageTooSmallError` when either side is below ``min_size``.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"{name} must be a 2-D luminance matrix, got shape {arr.shape}")
    if arr.size == 0:
        raise DataError(f"{name} is empty")
    if arr.shape[0] < min_size or arr.shape[1] < min_size:
        raise ImageTooSmallError(
            f"{name} is {arr.shape[0]}x{arr.shape[1]}, needs at least {min_size}x{min_size}"
        )
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return np.ascontiguousarray(arr)


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "inputs") -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(
            f"{what} differ in size: {a.shape[0]}x{a.shape[1]} vs {b.shape[0]}x{b.shape[1]}"
        )


def check_image_stack(X, min_size: int = 1) -> list[np.ndarray]:
    """Validate a non-empty collection of equally sized images.

    Accepts a 3-D array (stacked along axis 0) or any iterable of 2-D arrays.
    """
    if isinstance(X, np.ndarray) and X.ndim == 3:
        items: Sequence = list(X)
    elif isinstance(X, np.ndarray) and X.ndim == 2:
        items = [X]
    else:
        items = list(X)
    if not items:
        raise DataError("at least one image is required")
    out = [check_image(x, min_size, name=f"image {i}") for i, x in enumerate(items)]
    first = out[0]
    for i, x in enumerate(out[1:], start=1):
        if x.shape != first.shape:
            raise DimensionMismatchError(
                f"image {i} is {x.shape[0]}x{x.shape[1]} but image 0 is "
                f"{first.shape[0]}x{first.shape[1]}"
            )
    return out


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise DataError(f"{name} must be positive, got {value}")
    return value


def unique_ids(ids: Iterable[str]) -> list[str]:
    ids = list(ids)
    seen = set()
    for i in ids:
        if i in seen:
            raise DataError(f"duplicate image id {i!r}")
        seen.add(i)
    return ids

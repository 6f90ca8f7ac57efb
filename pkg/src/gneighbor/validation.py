"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .image_core import Image

__all__ = ["check_image", "check_images", "check_theta"]


def check_theta(theta, name: str = "theta") -> float:
    """Validate a similarity threshold in normalized intensity units."""
    if isinstance(theta, bool) or not isinstance(theta, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {type(theta).__name__}")
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {theta}")
    return theta


def _check_range(arr: np.ndarray) -> np.ndarray:
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("intensities must lie in [0, 1]; rescale 8-bit data by 1/255 first")
    return arr


def check_image(X) -> np.ndarray:
    """Return ``X`` as a 2-D float64 array of intensities in [0, 1]."""
    if isinstance(X, Image):
        return X.pixels
    arr = check_array(X, dtype=np.float64, ensure_2d=True, ensure_min_samples=1, ensure_min_features=1)
    return _check_range(arr)


def check_images(X) -> tuple[np.ndarray, bool]:
    """Validate a single image ``(H, W)`` or a batch ``(N, H, W)``.

    Returns the data as a 3-D float64 array and whether the input was a
    single image.
    """
    if isinstance(X, Image):
        return X.pixels[np.newaxis], True
    arr = np.asarray(X)
    if arr.ndim == 2:
        return check_image(arr)[np.newaxis], True
    if arr.ndim != 3:
        raise ValueError(f"expected an image (H, W) or a batch (N, H, W), got shape {arr.shape}")
    arr = check_array(arr, dtype=np.float64, allow_nd=True, ensure_min_samples=1)
    if arr.shape[1] < 1 or arr.shape[2] < 1:
        raise ValueError(f"images must be non-empty, got shape {arr.shape}")
    return _check_range(arr), False

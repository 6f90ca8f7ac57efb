"""Seeded Gaussian noise and the MSE / PSNR image-quality scores."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image_core import Image
from .validation import check_image

__all__ = ["NoiseSpec", "QualityScore", "add_gaussian_noise", "mse", "psnr", "score"]


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian noise in normalized intensity units.

    ``variance`` is the variance of the noise (a "rate" of 0.02 means
    sigma = sqrt(0.02) on the [0, 1] scale).
    """

    variance: float
    mean: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.variance) and self.variance >= 0):
            raise ValueError(f"variance must be finite and >= 0, got {self.variance}")
        if not math.isfinite(self.mean):
            raise ValueError("mean must be finite")


def add_gaussian_noise(img, spec: NoiseSpec, clip: bool = True) -> Image:
    """Perturb every pixel with an independent ``N(mean, variance)`` sample.

    The draws depend only on ``spec.seed`` and the image shape. With
    ``clip`` (the default) the result is clamped to [0, 1]; without it the
    raw noisy array is returned, which is only useful for checking the
    generator.
    """
    pixels = check_image(img)
    if spec.variance == 0 and spec.mean == 0:
        return Image(pixels)
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed & (2**64 - 1)))
    noisy = pixels + spec.mean + math.sqrt(spec.variance) * rng.standard_normal(pixels.shape)
    if not clip:
        return noisy
    return Image(np.clip(noisy, 0.0, 1.0))


def _pair(a, b):
    a = check_image(a)
    b = check_image(b)
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape[::-1]} vs {b.shape[::-1]}")
    return a, b


def mse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a, b, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical images."""
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


@dataclass(frozen=True)
class QualityScore:
    mse: float
    psnr_db: float


def score(reference, test) -> QualityScore:
    err = mse(reference, test)
    return QualityScore(err, math.inf if err == 0.0 else 10.0 * math.log10(1.0 / err))

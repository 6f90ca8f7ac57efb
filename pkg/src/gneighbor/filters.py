"""Similarity-gated (G-neighbor) mean filter and the conventional baselines.

Every filter works on 3x3 windows. The adaptive mean keeps only the window
pixels whose absolute difference from the center is at most ``theta`` and
averages them with equal weights; excluded pixels take no part at all.

All means are evaluated as ``center + sum(value - center) / n`` with the
deviations added in row-major window order. Two consequences are relied on
elsewhere: a window whose active pixels all equal the center returns the
center bit-for-bit, and the scalar, vectorized and hardware-model paths
produce identical floating-point results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .image_core import BorderPolicy, Image, Window3x3, neighborhood_stack
from .validation import check_image, check_images, check_theta

__all__ = [
    "AdaptiveMeanFilter",
    "FilterKind",
    "MeanFilter",
    "MedianFilter",
    "SimilarityMask",
    "adaptive_mean",
    "filter_image",
    "make_filter",
    "similarity_mask",
]


@dataclass(frozen=True)
class SimilarityMask:
    """Binary gates for the 9 window cells, row-major; 1 keeps a pixel, 0 drops it."""

    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if len(bits) != 9 or any(b not in (0, 1) for b in bits):
            raise ValueError(f"mask needs 9 binary values, got {self.bits!r}")
        if bits[4] != 1:
            raise ValueError("center bit of a similarity mask must be set")
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return sum(self.bits)

    def __str__(self):
        return "".join(str(b) for b in self.bits)


def similarity_mask(window: Window3x3, theta: float) -> SimilarityMask:
    """Mark window cells within ``theta`` (inclusive) of the center."""
    theta = check_theta(theta)
    c = window.center
    return SimilarityMask(tuple(int(abs(v - c) <= theta) for v in window.values))


def _gated_mean(values, bits) -> float:
    c = values[4]
    acc = 0.0
    n = 0
    for v, b in zip(values, bits):
        if b:
            acc += v - c
            n += 1
    if n == 0:
        raise ValueError("cannot average an empty selection")
    return c + acc / n


def adaptive_mean(window: Window3x3, mask: SimilarityMask) -> float:
    """Average of the window pixels enabled by ``mask``."""
    return _gated_mean(window.values, mask.bits)


def _stack_mean(stack: np.ndarray, gates: Optional[np.ndarray] = None) -> np.ndarray:
    center = stack[4]
    acc = np.zeros_like(center)
    for k in range(9):
        dev = stack[k] - center
        acc += dev if gates is None else np.where(gates[k], dev, 0.0)
    n = 9 if gates is None else gates.sum(axis=0)
    return center + acc / n


def _mean_kernel(pixels, border, theta=None):
    return _stack_mean(neighborhood_stack(pixels, border))


def _median_kernel(pixels, border, theta=None):
    return np.sort(neighborhood_stack(pixels, border), axis=0)[4]


def _adaptive_kernel(pixels, border, theta):
    stack = neighborhood_stack(pixels, border)
    gates = np.abs(stack - stack[4]) <= theta
    return _stack_mean(stack, gates)


_KERNELS = {"mean": _mean_kernel, "median": _median_kernel, "adaptive": _adaptive_kernel}


class _WindowFilter(TransformerMixin, BaseEstimator):
    """Stateless 3x3 filter applied to one image ``(H, W)`` or a batch ``(N, H, W)``.

    ``fit`` only validates its input; the filters learn nothing.
    """

    _kind = None

    def fit(self, X, y=None):
        check_images(X)
        BorderPolicy.coerce(self.border)
        return self

    def __sklearn_is_fitted__(self):
        return True

    def _theta(self):
        return None

    def transform(self, X):
        batch, single = check_images(X)
        border = BorderPolicy.coerce(self.border)
        theta = self._theta()
        kernel = _KERNELS[self._kind]
        out = np.stack([np.clip(kernel(img, border, theta), 0.0, 1.0) for img in batch])
        return out[0] if single else out


class MeanFilter(_WindowFilter):
    """Conventional 3x3 box mean.

    Parameters
    ----------
    border : {"replicate", "mirror", "skip"}
        How neighbors outside the image are filled in.
    """

    _kind = "mean"

    def __init__(self, border="replicate"):
        self.border = border


class MedianFilter(_WindowFilter):
    """Conventional 3x3 median (5th order statistic of the window)."""

    _kind = "median"

    def __init__(self, border="replicate"):
        self.border = border


class AdaptiveMeanFilter(_WindowFilter):
    """Edge-preserving G-neighbor mean.

    Each output pixel is the mean of the window pixels whose absolute
    difference from the center is at most ``theta``. Pixels across an edge
    taller than ``theta`` are left out, so the edge is not smeared.

    Parameters
    ----------
    theta : float, default=0.3
        Similarity threshold in normalized intensity units, ``0 <= theta <= 1``.
        ``theta=1`` reproduces :class:`MeanFilter` exactly.
    border : {"replicate", "mirror", "skip"}
        How neighbors outside the image are filled in.

    Examples
    --------
    >>> import numpy as np
    >>> step = np.repeat([[0.2] * 4 + [0.8] * 4], 8, axis=0)
    >>> bool(np.array_equal(AdaptiveMeanFilter(theta=0.3).fit_transform(step), step))
    True
    """

    _kind = "adaptive"

    def __init__(self, theta=0.3, border="replicate"):
        self.theta = theta
        self.border = border

    def _theta(self):
        return check_theta(self.theta)

    def fit(self, X, y=None):
        check_theta(self.theta)
        return super().fit(X, y)


@dataclass(frozen=True)
class FilterKind:
    """Which filter to run: ``"mean"``, ``"median"`` or ``"adaptive"`` with a threshold."""

    name: str
    theta: Optional[float] = None

    def __post_init__(self):
        if self.name not in _KERNELS:
            raise ValueError(f"unknown filter {self.name!r}; expected mean, median or adaptive")
        if self.name == "adaptive":
            object.__setattr__(self, "theta", check_theta(self.theta))
        elif self.theta is not None:
            raise ValueError(f"{self.name} filter takes no threshold")

    @classmethod
    def mean(cls):
        return cls("mean")

    @classmethod
    def median(cls):
        return cls("median")

    @classmethod
    def adaptive(cls, theta):
        return cls("adaptive", theta)

    @property
    def label(self) -> str:
        return self.name if self.theta is None else f"{self.name}(theta={self.theta:g})"


def make_filter(kind: FilterKind, border: Union[str, BorderPolicy] = "replicate") -> _WindowFilter:
    """Instantiate the estimator for ``kind``."""
    border = BorderPolicy.coerce(border).value
    if kind.name == "mean":
        return MeanFilter(border=border)
    if kind.name == "median":
        return MedianFilter(border=border)
    return AdaptiveMeanFilter(theta=kind.theta, border=border)


def filter_image(img, kind: FilterKind, policy: Union[str, BorderPolicy] = BorderPolicy.REPLICATE) -> Image:
    """Filter one image and return a new :class:`Image` of the same size."""
    pixels = check_image(img)
    return Image(make_filter(kind, policy).transform(pixels))

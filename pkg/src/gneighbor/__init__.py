"""Edge-preserving G-neighbor mean filtering with a behavioral model of its neuron-based hardware."""

from .filters import (
    AdaptiveMeanFilter,
    FilterKind,
    MeanFilter,
    MedianFilter,
    SimilarityMask,
    adaptive_mean,
    filter_image,
    make_filter,
    similarity_mask,
)
from .image_core import BorderPolicy, Image, PGMError, Window3x3, load_pgm, read_pgm, save_pgm, window_at, write_pgm
from .neuromorphic import AnalogParams, CalibrationError, calibrate, run_window_pipeline
from .noise_metrics import NoiseSpec, QualityScore, add_gaussian_noise, mse, psnr, score

__version__ = "0.1.0"

__all__ = [
    "AdaptiveMeanFilter",
    "AnalogParams",
    "BorderPolicy",
    "CalibrationError",
    "FilterKind",
    "Image",
    "MeanFilter",
    "MedianFilter",
    "NoiseSpec",
    "PGMError",
    "QualityScore",
    "SimilarityMask",
    "Window3x3",
    "adaptive_mean",
    "add_gaussian_noise",
    "calibrate",
    "filter_image",
    "load_pgm",
    "make_filter",
    "mse",
    "psnr",
    "read_pgm",
    "run_window_pipeline",
    "save_pgm",
    "score",
    "similarity_mask",
    "window_at",
    "write_pgm",
]

"""Build the small benchmark corpus shipped in ``corpus/desk``.

Fifteen photographs bundled with scikit-image (converted to gray and
resized so the longer side is 256 px) plus five synthetic piecewise-smooth
scenes. Run ``python -m gneighbor.corpus OUT_DIR`` to regenerate it;
scikit-image is only needed here.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .image_core import Image, write_pgm

PHOTOS = (
    "astronaut", "brick", "camera", "cell", "chelsea", "clock", "coffee", "coins",
    "grass", "gravel", "immunohistochemistry", "moon", "page", "rocket", "text",
)
SIZE = 256


def _photo(name: str) -> np.ndarray:
    from skimage import color, data, transform

    img = getattr(data, name)()
    if img.ndim == 3:
        img = color.rgb2gray(img[..., :3])
    else:
        img = img.astype(np.float64) / 255.0
    h, w = img.shape
    scale = SIZE / max(h, w)
    shape = (max(1, round(h * scale)), max(1, round(w * scale)))
    return np.clip(transform.resize(img, shape, anti_aliasing=True), 0.0, 1.0)


def synthetic_scenes(size: int = SIZE) -> dict:
    y, x = np.mgrid[0:size, 0:size] / (size - 1)
    scenes = {}
    scenes["syn_step"] = np.where(x < 0.5, 0.2, 0.8)
    r = np.hypot(x - 0.5, y - 0.5)
    scenes["syn_rings"] = 0.15 + 0.7 * (np.floor(r * 8) % 2)
    scenes["syn_blocks"] = 0.1 + 0.25 * ((np.floor(x * 4) + 2 * np.floor(y * 4)) % 4)
    ramp = 0.2 + 0.5 * x
    rect = (x > 0.25) & (x < 0.75) & (y > 0.3) & (y < 0.7)
    scenes["syn_ramp_rect"] = np.where(rect, 0.9 - 0.3 * y, ramp)
    tri = y > 0.2 + 1.2 * np.abs(x - 0.5)
    scenes["syn_shapes"] = np.where(tri, 0.75, np.where(r < 0.15, 0.05, 0.4))
    return scenes


def make_desk_corpus(out_dir) -> list:
    """Write the corpus as 8-bit PGM files and return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    images = {name: _photo(name) for name in PHOTOS}
    images.update(synthetic_scenes())
    for name, pixels in images.items():
        path = out / f"{name}.pgm"
        write_pgm(path, Image(pixels))
        written.append(path)
    return written


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "corpus/desk"
    for p in make_desk_corpus(target):
        print(p)

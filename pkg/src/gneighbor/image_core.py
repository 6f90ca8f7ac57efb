"""Grayscale image container, 3x3 window access and PGM file I/O.

Intensities are float64 in [0, 1]; quantization happens only when reading
or writing files.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

__all__ = [
    "BorderPolicy",
    "Image",
    "PGMError",
    "WINDOW_OFFSETS",
    "Window3x3",
    "load_pgm",
    "neighborhood_stack",
    "read_pgm",
    "save_pgm",
    "window_at",
    "write_pgm",
]

# (dy, dx) for the 9 window cells, row-major; index 4 is the center.
WINDOW_OFFSETS = tuple((dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1))


class BorderPolicy(str, enum.Enum):
    """How out-of-bounds neighbors of border pixels are resolved."""

    REPLICATE = "replicate"
    MIRROR = "mirror"
    SKIP = "skip"

    @classmethod
    def coerce(cls, value: Union[str, "BorderPolicy"]) -> "BorderPolicy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            choices = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown border policy {value!r}; expected one of {choices}") from None


@dataclass(frozen=True, eq=False)
class Image:
    """Immutable grayscale image with intensities in [0, 1].

    ``pixels`` is indexed ``[y, x]`` and is stored read-only.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"image must be a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image contains non-finite intensities")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image intensities must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_flat(cls, width: int, height: int, data) -> "Image":
        """Build an image from a row-major sequence of ``width * height`` values."""
        flat = np.asarray(data, dtype=np.float64).ravel()
        if width < 1 or height < 1:
            raise ValueError("width and height must be positive")
        if flat.size != width * height:
            raise ValueError(f"expected {width * height} values, got {flat.size}")
        return cls(flat.reshape(height, width))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def data(self) -> np.ndarray:
        """Row-major flat view of the intensities."""
        return self.pixels.ravel()

    def at(self, x: int, y: int) -> float:
        return float(self.pixels[y, x])

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.pixels
        return self.pixels.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))

    def __repr__(self):
        return f"Image(width={self.width}, height={self.height})"


@dataclass(frozen=True)
class Window3x3:
    """The 9 intensities around ``center_xy`` in row-major order."""

    values: tuple
    center_xy: tuple = (0, 0)

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if len(values) != 9:
            raise ValueError(f"a 3x3 window holds exactly 9 values, got {len(values)}")
        object.__setattr__(self, "values", values)

    @property
    def center(self) -> float:
        return self.values[4]

    @classmethod
    def from_center(cls, center: float, neighbors) -> "Window3x3":
        """Assemble a window from a center value and its 8 neighbors in row-major order."""
        neighbors = list(neighbors)
        if len(neighbors) != 8:
            raise ValueError(f"expected 8 neighbor values, got {len(neighbors)}")
        return cls(tuple(neighbors[:4]) + (center,) + tuple(neighbors[4:]))


def _resolve(coord: np.ndarray, size: int, policy: BorderPolicy):
    """Map possibly out-of-range coordinates into ``[0, size)``.

    Returns the mapped coordinates and a boolean array that is False where
    the caller must substitute the center value (Skip policy only).
    """
    coord = np.asarray(coord)
    inside = (coord >= 0) & (coord < size)
    if policy is BorderPolicy.REPLICATE:
        return np.clip(coord, 0, size - 1), np.ones_like(inside)
    if policy is BorderPolicy.MIRROR:
        if size == 1:
            return np.zeros_like(coord), np.ones_like(inside)
        mirrored = np.where(coord < 0, -coord, coord)
        mirrored = np.where(mirrored >= size, 2 * (size - 1) - mirrored, mirrored)
        return mirrored, np.ones_like(inside)
    return np.clip(coord, 0, size - 1), inside


def window_at(img: Image, x: int, y: int, policy: Union[str, BorderPolicy] = BorderPolicy.REPLICATE) -> Window3x3:
    """Gather the 3x3 neighborhood of pixel ``(x, y)``.

    Raises:
        IndexError: if ``(x, y)`` lies outside the image.
    """
    policy = BorderPolicy.coerce(policy)
    if not (0 <= x < img.width and 0 <= y < img.height):
        raise IndexError(f"pixel ({x}, {y}) outside {img.width}x{img.height} image")
    center = img.pixels[y, x]
    values = []
    for dy, dx in WINDOW_OFFSETS:
        yy, y_ok = _resolve(np.array(y + dy), img.height, policy)
        xx, x_ok = _resolve(np.array(x + dx), img.width, policy)
        if y_ok and x_ok:
            values.append(img.pixels[int(yy), int(xx)])
        else:
            values.append(center)
    return Window3x3(tuple(values), (x, y))


def neighborhood_stack(pixels: np.ndarray, policy: Union[str, BorderPolicy] = BorderPolicy.REPLICATE) -> np.ndarray:
    """Return a ``(9, H, W)`` array whose slice ``k`` holds window cell ``k`` of every pixel.

    This is the vectorized counterpart of :func:`window_at`.
    """
    policy = BorderPolicy.coerce(policy)
    pixels = np.asarray(pixels, dtype=np.float64)
    h, w = pixels.shape
    rows = np.arange(h)
    cols = np.arange(w)
    stack = np.empty((9, h, w), dtype=np.float64)
    for k, (dy, dx) in enumerate(WINDOW_OFFSETS):
        yy, y_ok = _resolve(rows + dy, h, policy)
        xx, x_ok = _resolve(cols + dx, w, policy)
        cell = pixels[np.ix_(yy, xx)]
        if policy is BorderPolicy.SKIP:
            cell = np.where(np.outer(y_ok, x_ok), cell, pixels)
        stack[k] = cell
    return stack


class PGMError(ValueError):
    """Malformed or unsupported PGM data; ``offset`` is the failing byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


_TOKEN = re.compile(rb"\s*(?:#[^\n\r]*[\n\r]\s*)*(\S+)")


def _header_token(data: bytes, pos: int):
    # Comments run to end of line and may appear between any two tokens.
    m = _TOKEN.match(data, pos)
    if m is None or m.group(1).startswith(b"#"):
        raise PGMError("truncated header", len(data))
    return m.group(1), m.start(1), m.end(1)


def _header_int(data: bytes, pos: int, name: str):
    tok, start, end = _header_token(data, pos)
    if not tok.isdigit():
        raise PGMError(f"invalid {name} {tok[:16]!r}", start)
    return int(tok), start, end


def load_pgm(data: bytes) -> Image:
    """Decode a binary (P5) or ASCII (P2) PGM with maxval <= 255.

    Raises:
        PGMError: on a malformed header, unsupported maxval or truncated raster.
    """
    data = bytes(data)
    if len(data) < 2:
        raise PGMError("missing magic number", 0)
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise PGMError(f"unsupported magic number {magic!r}", 0)
    width, w_at, pos = _header_int(data, 2, "width")
    height, h_at, pos = _header_int(data, pos, "height")
    maxval, m_at, pos = _header_int(data, pos, "maxval")
    if width == 0:
        raise PGMError("width must be positive", w_at)
    if height == 0:
        raise PGMError("height must be positive", h_at)
    if maxval == 0 or maxval > 255:
        raise PGMError(f"maxval must be in 1..255, got {maxval}", m_at)
    count = width * height

    if magic == b"P5":
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise PGMError("expected a single whitespace byte before the raster", pos)
        start = pos + 1
        raster = data[start:start + count]
        if len(raster) < count:
            raise PGMError(f"truncated raster: expected {count} bytes, found {len(raster)}", len(data))
        values = np.frombuffer(raster, dtype=np.uint8)
        bad = np.flatnonzero(values > maxval)
    else:
        values = np.empty(count, dtype=np.int64)
        for i in range(count):
            m = _TOKEN.match(data, pos)
            if m is None or m.group(1).startswith(b"#"):
                raise PGMError(f"truncated raster: expected {count} samples, found {i}", len(data))
            tok, start, pos = m.group(1), m.start(1), m.end(1)
            if not tok.isdigit():
                raise PGMError(f"invalid sample {tok[:16]!r}", start)
            values[i] = int(tok)
            if values[i] > maxval:
                raise PGMError(f"sample {values[i]} exceeds maxval {maxval}", start)
        bad = ()
    if len(bad):
        raise PGMError(f"sample {values[bad[0]]} exceeds maxval {maxval}", start + int(bad[0]))
    return Image.from_flat(width, height, values.astype(np.float64) / maxval)


def _quantize(pixels: np.ndarray, maxval: int) -> np.ndarray:
    # Round half up, then clamp.
    q = np.floor(np.asarray(pixels, dtype=np.float64) * maxval + 0.5)
    return np.clip(q, 0, maxval).astype(np.uint8)


def save_pgm(img, maxval: int = 255) -> bytes:
    """Encode an image as binary P5 PGM, quantizing each intensity to ``round(i * maxval)``."""
    if not 1 <= int(maxval) <= 255:
        raise ValueError(f"maxval must be in 1..255, got {maxval}")
    pixels = img.pixels if isinstance(img, Image) else Image(img).pixels
    h, w = pixels.shape
    header = f"P5\n{w} {h}\n{int(maxval)}\n".encode("ascii")
    return header + _quantize(pixels, int(maxval)).tobytes()


def read_pgm(path: Union[str, Path]) -> Image:
    return load_pgm(Path(path).read_bytes())


def write_pgm(path: Union[str, Path], img, maxval: int = 255) -> None:
    Path(path).write_bytes(save_pgm(img, maxval))

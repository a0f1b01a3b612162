"""Color-wheel rendering of displacement fields into motion maps.

A displacement field is converted to polar form (direction, magnitude) and
painted with the standard flow-visualization color wheel: hue encodes the
motion direction, saturation encodes speed relative to the field's own
maximum. Still pixels render white.

Direction convention: the wheel's pure-red anchor sits at direction 0
(motion along +u). The angle unit throughout is pi-radians, i.e. theta is
atan2(v, u) / pi and lives in (-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

__all__ = ["PolarFlow", "MotionMap", "ColorWheel", "to_polar", "render_mim", "save_mims"]

# Normalization guard so still scenes do not divide by zero.
_MAX_EPS = 1e-9


@dataclass(frozen=True)
class PolarFlow:
    """Per-pixel direction (pi-radians) and magnitude (px) of a field."""

    theta: np.ndarray
    mag: np.ndarray

    def __post_init__(self):
        if self.theta.shape != self.mag.shape:
            raise ValueError("theta and mag must have identical shapes")
        if np.any(self.mag < 0):
            raise ValueError("magnitudes must be non-negative")


@dataclass(frozen=True)
class MotionMap:
    """Color-wheel rendering of one displacement field (h x w x 3, uint8)."""

    i: int
    pixels: np.ndarray

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@lru_cache(maxsize=4)
def _build_anchors(segments: tuple[int, ...]) -> np.ndarray:
    """RGB anchor table tiling the hue circle, anchor 0 = pure red."""
    ry, yg, gc, cb, bm, mr = segments
    ncols = sum(segments)
    wheel = np.zeros((ncols, 3))
    col = 0
    wheel[col:col + ry, 0] = 255
    wheel[col:col + ry, 1] = np.floor(255 * np.arange(ry) / ry)
    col += ry
    wheel[col:col + yg, 0] = 255 - np.floor(255 * np.arange(yg) / yg)
    wheel[col:col + yg, 1] = 255
    col += yg
    wheel[col:col + gc, 1] = 255
    wheel[col:col + gc, 2] = np.floor(255 * np.arange(gc) / gc)
    col += gc
    wheel[col:col + cb, 1] = 255 - np.floor(255 * np.arange(cb) / cb)
    wheel[col:col + cb, 2] = 255
    col += cb
    wheel[col:col + bm, 2] = 255
    wheel[col:col + bm, 0] = np.floor(255 * np.arange(bm) / bm)
    col += bm
    wheel[col:col + mr, 2] = 255 - np.floor(255 * np.arange(mr) / mr)
    wheel[col:col + mr, 0] = 255
    wheel.setflags(write=False)
    return wheel


@dataclass(frozen=True)
class ColorWheel:
    """Hue circle sampled at interpolation anchors.

    Segment lengths follow the classic flow-visualization wheel:
    red-yellow 15, yellow-green 6, green-cyan 4, cyan-blue 11,
    blue-magenta 13, magenta-red 6 (55 anchors total).
    """

    segments: tuple[int, int, int, int, int, int] = (15, 6, 4, 11, 13, 6)

    def __post_init__(self):
        if len(self.segments) != 6 or any(s < 1 for s in self.segments):
            raise ValueError("wheel needs six positive segment lengths")

    @property
    def ncols(self) -> int:
        return sum(self.segments)

    @property
    def anchors(self) -> np.ndarray:
        return _build_anchors(self.segments)


def to_polar(field) -> PolarFlow:
    """Convert a displacement field to direction/magnitude form.

    theta = atan2(v, u) / pi (full-quadrant), magnitude = sqrt(u^2 + v^2).
    A zero vector gets theta 0 by convention.
    """
    vectors = np.asarray(field.vectors, dtype=np.float64)
    if not np.all(np.isfinite(vectors)):
        raise ValueError("displacement field contains non-finite entries")
    u = vectors[..., 0]
    v = vectors[..., 1]
    theta = np.arctan2(v, u) / np.pi
    mag = np.hypot(u, v)
    return PolarFlow(theta=theta, mag=mag)


def render_mim(polar: PolarFlow, wheel: ColorWheel | None = None, *, i: int = 0) -> MotionMap:
    """Paint a polar flow with the color wheel.

    Magnitudes are normalized by the field's maximum (plus a small epsilon),
    so rendering is invariant under uniform scaling of the field. The hue
    index advances proportionally with direction around the wheel, anchor 0
    (pure red) at theta 0; adjacent anchors are linearly interpolated.
    Saturation scales with normalized magnitude: zero motion is white, full
    magnitude is the pure anchor color.
    """
    wheel = wheel or ColorWheel()
    anchors = wheel.anchors
    ncols = wheel.ncols

    norm = polar.mag / (polar.mag.max(initial=0.0) + _MAX_EPS)

    # theta in (-1, 1] -> wheel position in [0, 1), red at 0.
    pos = np.mod(polar.theta, 2.0) / 2.0
    fk = pos * (ncols - 1)
    k0 = np.floor(fk).astype(np.intp) % ncols
    k1 = (k0 + 1) % ncols
    frac = (fk - np.floor(fk))[..., None]
    col = (1.0 - frac) * anchors[k0] + frac * anchors[k1]

    rgb = 255.0 - norm[..., None] * (255.0 - col)
    return MotionMap(i=i, pixels=np.rint(rgb).astype(np.uint8))


def save_mims(maps, out_dir: str | Path) -> list[Path]:
    """Debug dump of motion maps as mim_{i:06}.png files."""
    import cv2

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for mim in maps:
        path = out / f"mim_{mim.i:06}.png"
        cv2.imwrite(str(path), mim.pixels[:, :, ::-1])  # RGB -> BGR on disk
        written.append(path)
    return written

"""Split motion maps into the n x m patch grid and map ordinals to rects.

Patches are numbered row-major, k = 1..n*m. Base cell size is
floor(w/m) x floor(h/n); the last column and row absorb any remainder so
the patches always tile the map exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from push_sentinel.errors import GridLargerThanImage, IndexOutOfRange
from push_sentinel.flowviz import MotionMap

__all__ = ["GridSpec", "MimPatch", "Rect", "patch_rect", "split", "check_ground_cell_size"]

Rect = tuple[int, int, int, int]  # (x0, y0, x1, y1), half-open


@dataclass(frozen=True)
class GridSpec:
    """Patch grid: n rows by m columns."""

    n: int
    m: int

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.n}x{self.m}")

    @property
    def cells(self) -> int:
        return self.n * self.m


@dataclass(frozen=True)
class MimPatch:
    """One grid cell of a motion map."""

    i: int
    k: int
    rect: Rect
    pixels: np.ndarray

    @property
    def width(self) -> int:
        return self.rect[2] - self.rect[0]

    @property
    def height(self) -> int:
        return self.rect[3] - self.rect[1]


def check_ground_cell_size(grid: GridSpec, dims: tuple[int, int], px_per_meter: float) -> bool:
    """Warn when a grid cell would cover less than one meter on the ground.

    Configuration-time sanity check only; a too-fine grid still runs, but a
    cell should be able to hold a group of pedestrians.
    """
    w, h = dims
    cell_w_m = (w // grid.m) / px_per_meter
    cell_h_m = (h // grid.n) / px_per_meter
    ok = cell_w_m > 1.0 and cell_h_m > 1.0
    if not ok:
        warnings.warn(
            f"grid {grid.n}x{grid.m} on {w}x{h} yields ground cells of "
            f"{cell_w_m:.2f}m x {cell_h_m:.2f}m; cells should exceed 1m per side",
            stacklevel=2,
        )
    return ok


def patch_rect(grid: GridSpec, dims: tuple[int, int], k: int) -> Rect:
    """Rectangle of patch k on a map of (width, height) pixels.

    Matches split() exactly: split(mim, grid)[k-1].rect == patch_rect(...).
    """
    w, h = dims
    if not 1 <= k <= grid.cells:
        raise IndexOutOfRange(f"k={k} outside 1..{grid.cells} for grid {grid.n}x{grid.m}")
    base_w = w // grid.m
    base_h = h // grid.n
    if base_w == 0 or base_h == 0:
        raise GridLargerThanImage(
            f"grid {grid.n}x{grid.m} would produce empty cells on a {w}x{h} map"
        )
    row, col = divmod(k - 1, grid.m)
    x0 = col * base_w
    y0 = row * base_h
    x1 = x0 + base_w if col < grid.m - 1 else w
    y1 = y0 + base_h if row < grid.n - 1 else h
    return (x0, y0, x1, y1)


def split(mim: MotionMap, grid: GridSpec) -> list[MimPatch]:
    """Cut a motion map into its n*m patches in row-major k order."""
    h, w = mim.pixels.shape[:2]
    if h == 0 or w == 0:
        raise ValueError("cannot split an empty motion map")
    patches = []
    for k in range(1, grid.cells + 1):
        x0, y0, x1, y1 = patch_rect(grid, (w, h), k)
        patches.append(
            MimPatch(i=mim.i, k=k, rect=(x0, y0, x1, y1), pixels=mim.pixels[y0:y1, x0:x1])
        )
    return patches

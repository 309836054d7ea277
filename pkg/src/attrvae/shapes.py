"""Procedural grayscale shapes on a small square canvas.

Shapes (disk, square, cross) are placed by continuous factors: scale is the
diameter of the shape's circumscribed circle as a fraction of the canvas
side, x/y place the center in [0, 1] canvas units, orientation rotates the
shape within [0, pi/2) (the shapes have 4-fold symmetry, so further rotation
repeats; a disk ignores it entirely).  Rendering is antialiased by uniform
subpixel supersampling, so pixel coverage varies smoothly with the factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

SHAPE_KINDS = ("disk", "square", "cross")

# bar thickness of the cross, as a fraction of the arm length
_CROSS_THICKNESS = 2.0 / 3.0


@dataclass(frozen=True)
class ShapeSpec:
    """Ground-truth factors for one rendered shape."""

    kind: str
    scale: float
    x: float
    y: float
    orientation: float = 0.0

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise ValueError(f"kind must be one of {SHAPE_KINDS}, got {self.kind!r}")
        if not 0.0 < self.scale <= 1.0:
            raise ValueError(f"scale must lie in (0, 1], got {self.scale}")
        if not 0.0 <= self.orientation < math.pi / 2:
            raise ValueError(f"orientation must lie in [0, pi/2), got {self.orientation}")

    def clamped(self) -> "ShapeSpec":
        """Pull the center inward so the whole shape fits on the canvas.

        The circumscribed circle has radius scale/2 in canvas units, so any
        center in [scale/2, 1 - scale/2] keeps every orientation inside.
        """
        r = self.scale / 2.0
        return replace(self, x=float(np.clip(self.x, r, 1.0 - r)),
                       y=float(np.clip(self.y, r, 1.0 - r)))


def render_shape(spec: ShapeSpec, side: int = 16, supersample: int = 4) -> np.ndarray:
    """Rasterize to a (side, side) coverage image in [0, 1].

    Row index is y (down), column index is x (right); the canvas spans
    [0, side] in both axes and the center lands at (x*side, y*side).  Each
    pixel averages supersample^2 uniformly spaced point samples, symmetric
    about the pixel center, so mirrored specs give exactly mirrored images.
    """
    spec = spec.clamped()
    k = supersample
    n = side * k
    # sample coordinates: pixel j covers [j, j+1], subcenters at j + (s+0.5)/k
    coords = (np.arange(n, dtype=np.float64) + 0.5) / k
    px = coords[None, :]  # x varies along columns
    py = coords[:, None]  # y varies along rows
    cx = spec.x * side
    cy = spec.y * side
    rho = spec.scale * side / 2.0  # circumscribed radius in pixels

    dx = px - cx
    dy = py - cy
    if spec.kind == "disk":
        inside = dx * dx + dy * dy <= rho * rho
    else:
        cos_t = math.cos(spec.orientation)
        sin_t = math.sin(spec.orientation)
        u = cos_t * dx + sin_t * dy
        v = -sin_t * dx + cos_t * dy
        if spec.kind == "square":
            h = rho / math.sqrt(2.0)  # half-side with corners on the circle
            inside = (np.abs(u) <= h) & (np.abs(v) <= h)
        else:
            # cross: two orthogonal bars, corners on the circumscribed circle
            arm = rho / math.sqrt(1.0 + (_CROSS_THICKNESS / 2.0) ** 2)
            half_t = arm * _CROSS_THICKNESS / 2.0
            bar1 = (np.abs(u) <= arm) & (np.abs(v) <= half_t)
            bar2 = (np.abs(v) <= arm) & (np.abs(u) <= half_t)
            inside = bar1 | bar2
    cover = inside.astype(np.float64).reshape(side, k, side, k).mean(axis=(1, 3))
    return cover


def image_measures(image: np.ndarray) -> dict:
    """Attributes computable from pixels alone: mass and intensity centroid.

    area is the mean pixel value; x/y are the intensity-weighted centroid in
    [0, 1] canvas units (0.5 for an empty image).
    """
    image = np.asarray(image, dtype=np.float64)
    side_y, side_x = image.shape
    mass = image.sum()
    if mass <= 0.0:
        return {"area": 0.0, "x": 0.5, "y": 0.5}
    cols = np.arange(side_x, dtype=np.float64) + 0.5
    rows = np.arange(side_y, dtype=np.float64) + 0.5
    x = float((image.sum(axis=0) * cols).sum() / mass / side_x)
    y = float((image.sum(axis=1) * rows).sum() / mass / side_y)
    return {"area": float(image.mean()), "x": x, "y": y}


IMAGE_MEASURE_NAMES = ("area", "x", "y")


def image_attributes(spec: ShapeSpec, image: np.ndarray) -> dict:
    """Ground-truth factors of the (clamped) spec plus the rendered pixel mass."""
    spec = spec.clamped()
    return {
        "scale": spec.scale,
        "x": spec.x,
        "y": spec.y,
        "orientation": spec.orientation,
        "shape": float(SHAPE_KINDS.index(spec.kind)),
        "area": float(np.asarray(image, dtype=np.float64).mean()),
    }

"""Moment-matched box fitting and box geometry in image coordinates.

A component's box is the axis-aligned rectangle whose uniform distribution
has the same weighted mean and variance as the component: center at the
weighted centroid, width ``sqrt(12 * var_x)`` and height ``sqrt(12 * var_y)``
(a uniform distribution of width w has variance w^2 / 12). Pixels are treated
as point masses at their centers; the optional unit-square correction adds
1/12 per axis to the variance, which makes rectangle recovery exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DegenerateBox, EmptyComponent
from .region import Component


@dataclass(frozen=True)
class PseudoBox:
    """A scored, class-labeled box in image pixel coordinates (center form)."""

    x_c: float
    y_c: float
    w: float
    h: float
    score: float
    class_id: int
    image_id: str = ""
    source_tau: float = 0.0

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def corner(self) -> tuple[float, float, float, float]:
        return (self.x_c - self.w / 2.0, self.y_c - self.h / 2.0, self.w, self.h)


def fit_box(c: Component, moment_correction: bool = False) -> tuple[float, float, float, float]:
    """Fit (x_c, y_c, w, h) to a component by weighted moment matching.

    Variances are computed in centered form (two passes) to avoid the
    cancellation in E[x^2] - mu^2.
    """
    mass = c.weights.sum()
    if c.area == 0 or mass <= 0:
        raise EmptyComponent("component has no positive-weight pixels")
    x = c.xs.astype(float)
    y = c.ys.astype(float)
    w = c.weights
    x_c = float((w * x).sum() / mass)
    y_c = float((w * y).sum() / mass)
    var_x = float((w * (x - x_c) ** 2).sum() / mass)
    var_y = float((w * (y - y_c) ** 2).sum() / mass)
    if moment_correction:
        var_x += 1.0 / 12.0
        var_y += 1.0 / 12.0
    return x_c, y_c, math.sqrt(12.0 * var_x), math.sqrt(12.0 * var_y)


def score_box(c: Component) -> float:
    """Mean thresholded activation over the component, in (0, 1]."""
    if c.area == 0:
        raise EmptyComponent("cannot score an empty component")
    mass = c.mass
    if mass <= 0:
        raise EmptyComponent("component has zero mass")
    return mass / c.area


def to_corner(box: PseudoBox) -> tuple[float, float, float, float]:
    """(x_c, y_c, w, h) -> (x_min, y_min, w, h)."""
    return box.corner


def clamp_to_image(box: PseudoBox, image_w: int, image_h: int) -> PseudoBox:
    """Intersect a box with the image extent and re-derive center and size.

    Under the pixel-center convention the image spans
    [-0.5, W - 0.5] x [-0.5, H - 0.5].
    """
    x_min = max(box.x_c - box.w / 2.0, -0.5)
    x_max = min(box.x_c + box.w / 2.0, image_w - 0.5)
    y_min = max(box.y_c - box.h / 2.0, -0.5)
    y_max = min(box.y_c + box.h / 2.0, image_h - 0.5)
    if x_max <= x_min or y_max <= y_min:
        raise DegenerateBox(
            f"box {box.corner} has empty intersection with {image_w}x{image_h} image"
        )
    return replace(
        box,
        x_c=(x_min + x_max) / 2.0,
        y_c=(y_min + y_max) / 2.0,
        w=x_max - x_min,
        h=y_max - y_min,
    )


def enforce_min_size(box: PseudoBox, min_box_size: float, image_w: int, image_h: int) -> PseudoBox:
    """Grow degenerate dimensions up to ``min_box_size``, staying inside the image.

    1-pixel-thick components fit to zero height or width; zero-area boxes
    break IoU and downstream consumers, so each dimension is bumped to the
    minimum and the center shifted just enough to keep the box in the extent.
    """
    w, h, x_c, y_c = box.w, box.h, box.x_c, box.y_c
    if w < min_box_size:
        w = min(min_box_size, float(image_w))
        x_c = min(max(x_c, -0.5 + w / 2.0), image_w - 0.5 - w / 2.0)
    if h < min_box_size:
        h = min(min_box_size, float(image_h))
        y_c = min(max(y_c, -0.5 + h / 2.0), image_h - 0.5 - h / 2.0)
    if (w, h, x_c, y_c) == (box.w, box.h, box.x_c, box.y_c):
        return box
    return replace(box, x_c=x_c, y_c=y_c, w=w, h=h)

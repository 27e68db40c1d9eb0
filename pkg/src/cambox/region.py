"""Connected components of a thresholded map and the relative-area filter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .cam import ThresholdedMap

_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCTURE_8 = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class Component:
    """A connected set of nonzero cells with their thresholded activations."""

    xs: np.ndarray
    ys: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.xs.size == 0:
            raise ValueError("component must contain at least one pixel")

    @property
    def area(self) -> int:
        return int(self.xs.size)

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def pixel_set(self) -> set:
        return set(zip(self.xs.tolist(), self.ys.tolist()))


def label_components(m: ThresholdedMap, connectivity: int = 8) -> list[Component]:
    """Partition the nonzero cells of ``m`` into connected components.

    Components are returned ordered by (min y, min x), which makes the result
    independent of scan order. An all-zero map yields an empty list.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    structure = _STRUCTURE_4 if connectivity == 4 else _STRUCTURE_8
    mask = m.values > 0
    labeled, count = ndimage.label(mask, structure=structure)
    if count == 0:
        return []

    ys, xs = np.nonzero(mask)
    labels = labeled[ys, xs]
    order = np.argsort(labels, kind="stable")
    xs, ys, labels = xs[order], ys[order], labels[order]
    weights = m.values[ys, xs]
    bounds = np.searchsorted(labels, np.arange(1, count + 2))

    components = []
    for i in range(count):
        sl = slice(bounds[i], bounds[i + 1])
        components.append(Component(xs[sl].copy(), ys[sl].copy(), weights[sl].copy()))
    components.sort(key=lambda c: (int(c.ys.min()), int(c.xs.min())))
    return components


def filter_by_area(components: list[Component], min_area_ratio: float = 0.5) -> list[Component]:
    """Drop components smaller than ``min_area_ratio`` times the largest area.

    The boundary case is inclusive (a component exactly at the cutoff is
    kept), so the largest component always survives and a non-empty input
    yields a non-empty output. Order is preserved.
    """
    if not components:
        return []
    cutoff = min_area_ratio * max(c.area for c in components)
    return [c for c in components if c.area >= cutoff]

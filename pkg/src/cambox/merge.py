"""Box geometry, per-class NMS, and the end-to-end mining pipeline.

For each class of an image stack: average the augmented maps, normalize,
threshold at every configured tau, extract and area-filter connected
components, fit a scored box per component, then pool the boxes over all
thresholds and merge them per class with greedy NMS. Using several
thresholds raises recall: a low threshold may fuse nearby objects into one
component while a high one separates them but shrinks their extent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .boxfit import PseudoBox, clamp_to_image, enforce_min_size, fit_box, score_box
from .cam import CamStack, average_stack, normalize, threshold
from .errors import DegenerateMap, InvalidTau, ZeroArea
from .region import filter_by_area, label_components

DEFAULT_TAUS = (0.2, 0.3, 0.4, 0.5)


@dataclass(frozen=True)
class MiningConfig:
    taus: tuple = DEFAULT_TAUS
    nms_iou: float = 0.8
    connectivity: int = 8
    min_box_size: float = 1.0
    moment_correction: bool = False
    min_area_ratio: float = 0.5
    keep_duplicates: bool = False

    def __post_init__(self):
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
        if not self.taus:
            raise InvalidTau("taus must be non-empty")
        if any(not (0.0 < t < 1.0) for t in self.taus):
            raise InvalidTau(f"every tau must lie in (0, 1), got {self.taus}")
        if any(b <= a for a, b in zip(self.taus, self.taus[1:])):
            raise InvalidTau(f"taus must be strictly increasing, got {self.taus}")
        if not (0.0 < self.nms_iou <= 1.0):
            raise ValueError(f"nms_iou must lie in (0, 1], got {self.nms_iou}")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.min_box_size <= 0:
            raise ValueError("min_box_size must be positive")
        if not (0.0 <= self.min_area_ratio <= 1.0):
            raise ValueError("min_area_ratio must lie in [0, 1]")


@dataclass
class MiningStats:
    degenerate_classes: int = 0
    boxes_before_nms: int = 0


def iou(a: tuple, b: tuple) -> float:
    """Intersection over union of two (x_min, y_min, w, h) boxes."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    if aw <= 0 or ah <= 0 or bw <= 0 or bh <= 0:
        raise ZeroArea(f"boxes must have positive area, got {a} and {b}")
    ix = min(ax + aw, bx + bw) - max(ax, bx)
    iy = min(ay + ah, by + bh) - max(ay, by)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (aw * ah + bw * bh - inter)


def _nms_key(box: PseudoBox):
    # Score descending; ties broken by larger area, then corner coordinates.
    x_min, y_min, w, h = box.corner
    return (-box.score, -box.area, x_min, y_min, w, h)


def nms(boxes: list[PseudoBox], iou_thresh: float, keep_duplicates: bool = False) -> list[PseudoBox]:
    """Greedy non-maximum suppression over boxes of one image and class.

    A candidate is suppressed when its IoU with an already-kept box strictly
    exceeds ``iou_thresh``, so a threshold of 1.0 disables suppression.
    Geometric duplicates of kept boxes are still collapsed in that case
    unless ``keep_duplicates`` is set.
    """
    kept: list[PseudoBox] = []
    for box in sorted(boxes, key=_nms_key):
        corner = box.corner
        suppressed = False
        for other in kept:
            other_corner = other.corner
            if not keep_duplicates and corner == other_corner:
                suppressed = True
                break
            if iou(corner, other_corner) > iou_thresh:
                suppressed = True
                break
        if not suppressed:
            kept.append(box)
    return kept


def mine_boxes_with_stats(stack: CamStack, config: MiningConfig) -> tuple[list[PseudoBox], MiningStats]:
    """Run the full per-image mining pipeline, reporting degenerate classes."""
    stats = MiningStats()
    out: list[PseudoBox] = []
    for class_id in stack.class_ids():
        averaged = average_stack(stack, class_id)
        try:
            normalized = normalize(averaged)
        except DegenerateMap:
            stats.degenerate_classes += 1
            continue
        pooled: list[PseudoBox] = []
        for tau in config.taus:
            thresholded = threshold(normalized, tau)
            components = label_components(thresholded, config.connectivity)
            components = filter_by_area(components, config.min_area_ratio)
            for component in components:
                x_c, y_c, w, h = fit_box(component, config.moment_correction)
                box = PseudoBox(
                    x_c=x_c,
                    y_c=y_c,
                    w=w,
                    h=h,
                    score=score_box(component),
                    class_id=class_id,
                    image_id=stack.image_id,
                    source_tau=tau,
                )
                box = enforce_min_size(box, config.min_box_size, stack.image_width, stack.image_height)
                box = clamp_to_image(box, stack.image_width, stack.image_height)
                box = enforce_min_size(box, config.min_box_size, stack.image_width, stack.image_height)
                pooled.append(box)
        stats.boxes_before_nms += len(pooled)
        out.extend(nms(pooled, config.nms_iou, config.keep_duplicates))
    return out, stats


def mine_boxes(stack: CamStack, config: MiningConfig | None = None) -> list[PseudoBox]:
    """Mine pseudo boxes for every class of one image.

    Classes whose averaged map is constant contribute nothing. The result is
    sorted by (class_id, score descending).
    """
    boxes, _ = mine_boxes_with_stats(stack, config or MiningConfig())
    return boxes

"""Score mined boxes against ground truth and summarize box statistics.

Matching follows the PASCAL protocol: predictions are visited in descending
score order and each one greedily consumes the highest-IoU unmatched ground
truth of its class in its image. AP comes in two flavors: the area under the
precision envelope (precision at each recall replaced by the maximum
precision at any recall at least as large) and the 11-point variant that
averages the interpolated precision at recalls 0, 0.1, ..., 1.0.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dataset_io import AnnotationSet
from .merge import iou

AP_IOU_GRID = tuple((50 + 5 * k) / 100 for k in range(10))  # 0.5, 0.55, ..., 0.95


@dataclass(frozen=True)
class PrCurve:
    """Precision-recall points ordered by descending score threshold."""

    points: tuple  # ((recall, precision), ...)
    num_gt: int


@dataclass(frozen=True)
class BoxStats:
    avg_boxes_per_image: float
    avg_width: float
    avg_height: float
    count: int


def _det_key(det):
    # Same tie rule as NMS: score desc, larger area, lexicographic corners.
    _, _, (x, y, w, h), score = det
    return (-score, -(w * h), x, y, w, h)


def _dets_of(aset: AnnotationSet) -> list:
    return [
        (a.image_id, a.category_id, a.bbox, a.score if a.score is not None else 0.0)
        for a in aset.annotations
    ]


def _gts_of(aset: AnnotationSet) -> list:
    return [(a.image_id, a.category_id, a.bbox) for a in aset.annotations]


def match_greedy(preds: list, gts: list, iou_thresh: float) -> list[bool]:
    """Mark each prediction TP or FP.

    ``preds`` are (image_key, class_id, bbox, score) tuples already sorted by
    descending score; ``gts`` are (image_key, class_id, bbox). A prediction is
    a TP when it claims the highest-IoU not-yet-matched ground truth of its
    class in its image with IoU >= iou_thresh; each ground truth is consumed
    at most once.
    """
    pools: dict = {}
    for img, cls, bbox in gts:
        pools.setdefault((img, cls), []).append([bbox, False])
    flags = []
    for img, cls, bbox, _score in preds:
        best_iou = 0.0
        best = None
        for slot in pools.get((img, cls), ()):
            if slot[1]:
                continue
            overlap = iou(bbox, slot[0])
            if overlap > best_iou:
                best_iou = overlap
                best = slot
        if best is not None and best_iou >= iou_thresh:
            best[1] = True
            flags.append(True)
        else:
            flags.append(False)
    return flags


def pr_curve(preds: list, gts: list, iou_thresh: float) -> PrCurve:
    """Build the PR curve for one class from raw detection/GT tuples."""
    ordered = sorted(preds, key=_det_key)
    flags = match_greedy(ordered, gts, iou_thresh)
    num_gt = len(gts)
    points = []
    tp = 0
    for i, flag in enumerate(flags, start=1):
        if flag:
            tp += 1
        recall = tp / num_gt if num_gt else 0.0
        points.append((recall, tp / i))
    return PrCurve(tuple(points), num_gt)


def ap_integral(curve: PrCurve) -> float:
    """Area under the precision envelope of the curve."""
    if not curve.points or curve.num_gt == 0:
        return 0.0
    n = len(curve.points)
    envelope = [0.0] * n
    best = 0.0
    for i in range(n - 1, -1, -1):
        best = max(best, curve.points[i][1])
        envelope[i] = best
    ap = 0.0
    prev_recall = 0.0
    for i in range(n):
        recall = curve.points[i][0]
        ap += (recall - prev_recall) * envelope[i]
        prev_recall = recall
    return ap


def ap_11point(curve: PrCurve) -> float:
    """Mean interpolated precision over recalls 0, 0.1, ..., 1.0."""
    if not curve.points or curve.num_gt == 0:
        return 0.0
    total = 0.0
    for k in range(11):
        r = k / 10
        best = 0.0
        for recall, precision in curve.points:
            if recall >= r and precision > best:
                best = precision
        total += best
    return total / 11.0


def _per_class(preds: AnnotationSet, gts: AnnotationSet):
    dets = _dets_of(preds)
    gt = _gts_of(gts)
    classes = sorted({g[1] for g in gt})
    for cls in classes:
        yield cls, [d for d in dets if d[1] == cls], [g for g in gt if g[1] == cls]


def mean_ap(preds: AnnotationSet, gts: AnnotationSet, iou_thresh: float = 0.5, point11: bool = False) -> float:
    """Per-class AP averaged with equal weight; zero-GT classes excluded."""
    aps = []
    for _cls, cls_dets, cls_gts in _per_class(preds, gts):
        curve = pr_curve(cls_dets, cls_gts, iou_thresh)
        aps.append(ap_11point(curve) if point11 else ap_integral(curve))
    return sum(aps) / len(aps) if aps else 0.0


def ap_averaged(preds: AnnotationSet, gts: AnnotationSet, iou_grid=AP_IOU_GRID) -> float:
    """Mean AP over an IoU grid (default 0.5, 0.55, ..., 0.95)."""
    aps = []
    for _cls, cls_dets, cls_gts in _per_class(preds, gts):
        curves = [pr_curve(cls_dets, cls_gts, t) for t in iou_grid]
        aps.append(sum(ap_integral(c) for c in curves) / len(curves))
    return sum(aps) / len(aps) if aps else 0.0


def recall_at(preds: AnnotationSet, gts: AnnotationSet, iou_thresh: float) -> float:
    """Fraction of ground-truth boxes claimed by some prediction."""
    dets = sorted(_dets_of(preds), key=_det_key)
    gt = _gts_of(gts)
    if not gt:
        return 0.0
    flags = match_greedy(dets, gt, iou_thresh)
    return sum(flags) / len(gt)


def corloc(preds: AnnotationSet, gts: AnnotationSet, iou_thresh: float = 0.5) -> float:
    """Fraction of (image, labeled class) pairs hit by some prediction."""
    gt = _gts_of(gts)
    pairs = {(img, cls) for img, cls, _ in gt}
    if not pairs:
        return 0.0
    dets = _dets_of(preds)
    hits = 0
    for img, cls in pairs:
        boxes = [g[2] for g in gt if (g[0], g[1]) == (img, cls)]
        found = any(
            iou(d[2], b) >= iou_thresh
            for d in dets
            if (d[0], d[1]) == (img, cls)
            for b in boxes
        )
        hits += found
    return hits / len(pairs)


def box_stats(aset: AnnotationSet) -> BoxStats:
    """Per-corpus box statistics: counts and mean box dimensions."""
    count = len(aset.annotations)
    n_images = len(aset.images)
    if count == 0:
        return BoxStats(0.0, 0.0, 0.0, 0)
    widths = [a.bbox[2] for a in aset.annotations]
    heights = [a.bbox[3] for a in aset.annotations]
    return BoxStats(
        avg_boxes_per_image=count / n_images if n_images else 0.0,
        avg_width=sum(widths) / count,
        avg_height=sum(heights) / count,
        count=count,
    )

"""cambox: mine detection-style pseudo boxes from class activation maps."""

from .boxfit import PseudoBox, clamp_to_image, fit_box, score_box, to_corner
from .cam import (
    CamEntry,
    CamMap,
    CamStack,
    ThresholdedMap,
    average_stack,
    hflip,
    normalize,
    resample_bilinear,
    threshold,
)
from .dataset_io import (
    Annotation,
    AnnotationSet,
    Category,
    ImageInfo,
    ManifestEntry,
    build_annotation_set,
    read_annotations,
    read_camb,
    read_manifest,
    write_annotations,
    write_camb,
    write_manifest,
)
from .eval_stats import (
    BoxStats,
    PrCurve,
    ap_11point,
    ap_averaged,
    ap_integral,
    box_stats,
    corloc,
    match_greedy,
    mean_ap,
    pr_curve,
    recall_at,
)
from .merge import MiningConfig, iou, mine_boxes, nms
from .region import Component, filter_by_area, label_components
from .synth import GaussInstance, RectInstance, SynthSpec, generate

__version__ = "0.1.0"

"""Deterministic synthetic activation maps with known ground truth.

All randomness flows through numpy's PCG64 generator seeded per corpus, so a
(seed, spec) pair reproduces byte-identical fixtures on any platform. Three
map kinds are supported:

* ``rect``: indicator maps (1 inside each rectangle). Ground truth is the
  rectangle's pixel extent.
* ``gauss``: sums of unit-amplitude Gaussians ``exp(-d^2 / 2 sigma^2)``.
  Ground truth is the axis-aligned box of the +-2 sigma extent.
* ``mixture``: sums of Gaussians with free amplitudes, clipped to [0, 1].
  Clipping produces plateaus, which is how the two-blob "merge at a low
  threshold, separate at a high one" fixtures are built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cam import AUG_IDENTITY, CamEntry, CamMap, CamStack
from .dataset_io import (
    Annotation,
    AnnotationSet,
    Category,
    ImageInfo,
    ManifestEntry,
    write_camb,
    write_manifest,
    write_annotations,
)
from .errors import SpecOutOfBounds

KINDS = ("rect", "gauss", "mixture")


@dataclass(frozen=True)
class RectInstance:
    """Inclusive pixel-corner rectangle; pixels x0..x1, y0..y1 light up."""

    x0: int
    y0: int
    x1: int
    y1: int


@dataclass(frozen=True)
class GaussInstance:
    cx: float
    cy: float
    sigma: float
    amplitude: float = 1.0


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    kind: str
    width: int
    height: int
    rects: tuple = ()
    gaussians: tuple = ()
    noise: float = 0.0
    class_id: int = 1
    image_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "rects", tuple(self.rects))
        object.__setattr__(self, "gaussians", tuple(self.gaussians))
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not (0.0 <= self.noise <= 0.2):
            raise ValueError(f"noise amplitude must lie in [0, 0.2], got {self.noise}")
        if not self.image_id:
            object.__setattr__(self, "image_id", f"synth_{self.seed:08d}")


def gt_boxes(spec: SynthSpec) -> list[tuple[int, tuple[float, float, float, float]]]:
    """Ground-truth (class_id, corner bbox) pairs implied by a SynthSpec.

    Raises SpecOutOfBounds when an instance does not fit the image extent
    [-0.5, dim - 0.5].
    """
    boxes = []
    if spec.kind == "rect":
        for r in spec.rects:
            if not (0 <= r.x0 <= r.x1 < spec.width and 0 <= r.y0 <= r.y1 < spec.height):
                raise SpecOutOfBounds(f"rect {r} outside {spec.width}x{spec.height} grid")
            boxes.append(
                (spec.class_id, (r.x0 - 0.5, r.y0 - 0.5, r.x1 - r.x0 + 1.0, r.y1 - r.y0 + 1.0))
            )
    else:
        for g in spec.gaussians:
            if g.sigma <= 0:
                raise SpecOutOfBounds(f"sigma must be positive, got {g.sigma}")
            x_min, y_min = g.cx - 2 * g.sigma, g.cy - 2 * g.sigma
            side = 4 * g.sigma
            if (
                x_min < -0.5
                or y_min < -0.5
                or x_min + side > spec.width - 0.5
                or y_min + side > spec.height - 0.5
            ):
                raise SpecOutOfBounds(f"gaussian {g} +-2 sigma box outside image")
            boxes.append((spec.class_id, (x_min, y_min, side, side)))
    return boxes


def render_grid(spec: SynthSpec) -> np.ndarray:
    """Evaluate a SynthSpec's activation map as a float64 (height, width) grid."""
    gt_boxes(spec)  # bounds check
    grid = np.zeros((spec.height, spec.width), dtype=np.float64)
    if spec.kind == "rect":
        for r in spec.rects:
            grid[r.y0 : r.y1 + 1, r.x0 : r.x1 + 1] = 1.0
    else:
        xs = np.arange(spec.width, dtype=np.float64)
        ys = np.arange(spec.height, dtype=np.float64)[:, None]
        for g in spec.gaussians:
            d2 = (xs - g.cx) ** 2 + (ys - g.cy) ** 2
            grid += g.amplitude * np.exp(-d2 / (2.0 * g.sigma**2))
        if spec.kind == "mixture":
            np.clip(grid, 0.0, 1.0, out=grid)
    if spec.noise > 0:
        rng = np.random.Generator(np.random.PCG64(spec.seed))
        grid += spec.noise * rng.random(grid.shape)
        np.clip(grid, 0.0, 1.0, out=grid)
    return grid


def generate(spec: SynthSpec) -> tuple[CamStack, AnnotationSet]:
    """Produce one image's stack and its single-image ground-truth set."""
    grid = render_grid(spec)
    stack = CamStack(
        image_id=spec.image_id,
        image_width=spec.width,
        image_height=spec.height,
        entries=(CamEntry(spec.class_id, AUG_IDENTITY, CamMap(grid, spec.class_id, spec.image_id)),),
    )
    annotations = [
        Annotation(id=i, image_id=1, category_id=cls, bbox=bbox, area=bbox[2] * bbox[3])
        for i, (cls, bbox) in enumerate(gt_boxes(spec), start=1)
    ]
    gt = AnnotationSet(
        images=[ImageInfo(1, f"{spec.image_id}.png", spec.width, spec.height)],
        categories=[Category(spec.class_id, f"class_{spec.class_id}")],
        annotations=annotations,
    )
    return stack, gt


# ---------------------------------------------------------------------------
# Corpus factories


def rect_corpus(n: int, seed: int, size: int = 256, side_range=(8, 200), class_id: int = 1) -> list[SynthSpec]:
    """Noise-free single-rectangle specs with sides drawn from side_range."""
    rng = np.random.Generator(np.random.PCG64(seed))
    lo, hi = side_range
    hi = min(hi, size - 2)
    specs = []
    for i in range(n):
        w = int(rng.integers(lo, hi + 1))
        h = int(rng.integers(lo, hi + 1))
        x0 = int(rng.integers(0, size - w + 1))
        y0 = int(rng.integers(0, size - h + 1))
        specs.append(
            SynthSpec(
                seed=int(rng.integers(2**31)),
                kind="rect",
                width=size,
                height=size,
                rects=(RectInstance(x0, y0, x0 + w - 1, y0 + h - 1),),
                class_id=class_id,
                image_id=f"rect_{i:05d}",
            )
        )
    return specs


def gauss_corpus(n: int, seed: int, size: int = 128, sigma_range=None, class_id: int = 1) -> list[SynthSpec]:
    """Single smooth unimodal blob per image.

    Centers snap to integer pixels and keep a 2.5 sigma margin from the
    borders so the thresholded support at every default tau is symmetric and
    untruncated; fitted boxes are then exactly concentric across thresholds.
    """
    if sigma_range is None:
        sigma_range = (size / 16.0, size / 8.0)
    rng = np.random.Generator(np.random.PCG64(seed))
    specs = []
    for i in range(n):
        sigma = float(rng.uniform(*sigma_range))
        margin = int(math.ceil(2.5 * sigma))
        cx = int(rng.integers(margin, size - margin))
        cy = int(rng.integers(margin, size - margin))
        specs.append(
            SynthSpec(
                seed=int(rng.integers(2**31)),
                kind="gauss",
                width=size,
                height=size,
                gaussians=(GaussInstance(cx, cy, sigma),),
                class_id=class_id,
                image_id=f"gauss_{i:05d}",
            )
        )
    return specs


def kite_corpus(n: int, seed: int, size: int = 160, class_id: int = 1) -> list[SynthSpec]:
    """Two-blob mixtures that merge at tau 0.2 and separate at tau 0.5.

    Each blob is a clipped Gaussian (amplitude ~3, plateau at 1.0). The
    center distance d is solved from the saddle value s between the blobs,
    2A exp(-d^2 / 8 sigma^2) = s, with s drawn from [0.30, 0.36]: the bridge
    survives thresholding at 0.2 (one merged component) and breaks by 0.5
    (two components whose fitted boxes overlap their +-2 sigma ground truth
    above IoU 0.5).
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    specs = []
    for i in range(n):
        sigma = float(rng.uniform(4.5, 6.5))
        amplitude = float(rng.uniform(2.6, 3.4))
        saddle = float(rng.uniform(0.30, 0.36))
        d = sigma * math.sqrt(8.0 * math.log(2.0 * amplitude / saddle))
        theta = float(rng.uniform(0.0, 2.0 * math.pi))
        reach = d / 2.0 + 2.6 * sigma
        cx = float(rng.uniform(reach, size - 1 - reach))
        cy = float(rng.uniform(reach, size - 1 - reach))
        dx, dy = (d / 2.0) * math.cos(theta), (d / 2.0) * math.sin(theta)
        specs.append(
            SynthSpec(
                seed=int(rng.integers(2**31)),
                kind="mixture",
                width=size,
                height=size,
                gaussians=(
                    GaussInstance(cx - dx, cy - dy, sigma, amplitude),
                    GaussInstance(cx + dx, cy + dy, sigma, amplitude),
                ),
                class_id=class_id,
                image_id=f"kite_{i:05d}",
            )
        )
    return specs


def corpus_specs(kind: str, n: int, seed: int, size: int) -> list[SynthSpec]:
    if kind == "rect":
        return rect_corpus(n, seed, size=size)
    if kind == "gauss":
        return gauss_corpus(n, seed, size=size)
    if kind == "mixture":
        return kite_corpus(n, seed, size=size)
    raise ValueError(f"unknown corpus kind {kind!r}")


def corpus_gt(specs: list[SynthSpec]) -> AnnotationSet:
    """Corpus-level ground truth with canonical image ordering and dense ids."""
    ordered = sorted(specs, key=lambda s: s.image_id)
    images = []
    annotations = []
    class_ids = set()
    next_ann = 1
    for idx, spec in enumerate(ordered, start=1):
        images.append(ImageInfo(idx, f"{spec.image_id}.png", spec.width, spec.height))
        for cls, bbox in gt_boxes(spec):
            class_ids.add(cls)
            annotations.append(
                Annotation(id=next_ann, image_id=idx, category_id=cls, bbox=bbox, area=bbox[2] * bbox[3])
            )
            next_ann += 1
    categories = [Category(c, f"class_{c}") for c in sorted(class_ids)]
    return AnnotationSet(images=images, categories=categories, annotations=annotations)


def write_corpus(specs: list[SynthSpec], out_dir) -> None:
    """Write cams/<image_id>.camb, manifest.jsonl, and gt.json under out_dir."""
    import os

    cams = os.path.join(os.fspath(out_dir), "cams")
    os.makedirs(cams, exist_ok=True)
    manifest = []
    for spec in sorted(specs, key=lambda s: s.image_id):
        stack, _ = generate(spec)
        write_camb(stack, os.path.join(cams, f"{spec.image_id}.camb"))
        manifest.append(
            ManifestEntry(
                image_id=spec.image_id,
                file=f"{spec.image_id}.png",
                width=spec.width,
                height=spec.height,
                labels=(spec.class_id,),
            )
        )
    write_manifest(manifest, os.path.join(os.fspath(out_dir), "manifest.jsonl"))
    write_annotations(corpus_gt(specs), os.path.join(os.fspath(out_dir), "gt.json"))

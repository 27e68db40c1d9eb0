"""Dense 2-D activation maps and their preprocessing operations.

A map is a row-major ``(height, width)`` grid of finite reals. Coordinates
follow the pixel-center convention: pixel ``(x, y)`` represents the point
``(x, y)``, with ``x`` horizontal in ``[0, width - 1]`` and ``y`` vertical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMap, InvalidSize, InvalidTau, UnknownClass

AUG_IDENTITY = "identity"
AUG_HFLIP = "hflip"


def _as_grid(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"map grid must be 2-D and non-empty, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("map contains NaN or Inf values")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class CamMap:
    """One class's activation map for one image."""

    values: np.ndarray
    class_id: int = 0
    image_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid(self.values))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ThresholdedMap:
    """Activation map after strict thresholding: every cell is 0 or > tau."""

    values: np.ndarray
    tau: float
    class_id: int = 0
    image_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid(self.values))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class CamEntry:
    """One stored map plus the augmentation that produced it.

    ``aug`` is "identity", "hflip", or "scale:<short-side>". Only the hflip
    tag changes processing; flipped maps are mirrored back before averaging.
    """

    class_id: int
    aug: str
    cam: CamMap


@dataclass(frozen=True)
class CamStack:
    """All maps extracted for one image, grouped by class and augmentation."""

    image_id: str
    image_width: int
    image_height: int
    entries: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.image_width < 1 or self.image_height < 1:
            raise ValueError("image dimensions must be >= 1")

    def class_ids(self) -> list:
        return sorted({e.class_id for e in self.entries})

    def entries_for(self, class_id: int) -> list:
        return [e for e in self.entries if e.class_id == class_id]


def _fresh(cls, values: np.ndarray, **fields):
    # Internal fast path: values is a freshly computed, finite, unaliased
    # grid, so the constructor's validation and defensive copy are skipped.
    obj = object.__new__(cls)
    object.__setattr__(obj, "values", values)
    for name, value in fields.items():
        object.__setattr__(obj, name, value)
    return obj


def normalize(m: CamMap) -> CamMap:
    """Affinely rescale a map so its minimum is 0 and its maximum is 1.

    Raises DegenerateMap for a constant grid; callers treat that class as
    yielding no boxes.
    """
    lo = float(m.values.min())
    hi = float(m.values.max())
    if hi == lo:
        raise DegenerateMap(f"constant map (value {lo}) for class {m.class_id}")
    out = (m.values - lo) / (hi - lo)
    return _fresh(CamMap, out, class_id=m.class_id, image_id=m.image_id)


def threshold(m: CamMap, tau: float) -> ThresholdedMap:
    """Zero out cells not strictly above tau, keeping surviving values.

    The input is expected to be normalized to [0, 1]. A cell equal to tau is
    excluded (strict inequality).
    """
    if not (0.0 < tau < 1.0):
        raise InvalidTau(f"tau must lie in (0, 1), got {tau}")
    out = np.where(m.values > tau, m.values, 0.0)
    return _fresh(ThresholdedMap, out, tau=tau, class_id=m.class_id, image_id=m.image_id)


def hflip(m: CamMap) -> CamMap:
    """Reverse column order (left-right mirror)."""
    return CamMap(m.values[:, ::-1], m.class_id, m.image_id)


def _resample_grid(values: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resample with pixel-center alignment and border clamping.

    The sample point for output pixel i along an axis of input length n_in and
    output length n_out is ``(i + 0.5) * n_in / n_out - 0.5``, clamped to
    ``[0, n_in - 1]``. Interpolation is separable and never produces values
    outside the input range.
    """
    in_h, in_w = values.shape
    if out_w == in_w and out_h == in_h:
        return values

    def axis_coords(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        pos = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        pos = np.clip(pos, 0.0, n_in - 1.0)
        lo = np.floor(pos).astype(np.intp)
        hi = np.minimum(lo + 1, n_in - 1)
        frac = pos - lo
        return lo, hi, frac

    x0, x1, fx = axis_coords(in_w, out_w)
    y0, y1, fy = axis_coords(in_h, out_h)

    # Interpolate rows first, then columns.
    rows = values[:, x0] * (1.0 - fx) + values[:, x1] * fx
    out = rows[y0, :] * (1.0 - fy)[:, None] + rows[y1, :] * fy[:, None]
    return out


def resample_bilinear(m: CamMap, out_w: int, out_h: int) -> CamMap:
    """Resample a map to (out_w, out_h) pixels."""
    if out_w < 1 or out_h < 1:
        raise InvalidSize(f"output size must be >= 1, got {out_w}x{out_h}")
    return CamMap(_resample_grid(m.values, out_w, out_h), m.class_id, m.image_id)


def average_stack(stack: CamStack, class_id: int) -> CamMap:
    """Combine one class's augmented maps into a single image-resolution map.

    hflip-tagged maps are mirrored back, every map is resampled to the source
    image's pixel grid, and the result is the per-pixel arithmetic mean.
    """
    entries = stack.entries_for(class_id)
    if not entries:
        raise UnknownClass(f"no entries for class {class_id} in image {stack.image_id!r}")
    acc = np.zeros((stack.image_height, stack.image_width), dtype=np.float64)
    for entry in entries:
        grid = entry.cam.values
        if entry.aug == AUG_HFLIP:
            grid = grid[:, ::-1]
        acc += _resample_grid(grid, stack.image_width, stack.image_height)
    acc /= len(entries)
    return _fresh(CamMap, acc, class_id=class_id, image_id=stack.image_id)

"""Bit-exact file formats: CAMB containers, manifests, COCO-style annotations.

CAMB v1 layout (all integers little-endian):

    magic "CAMB" (4 bytes) | version u16 = 1 | flags u16 = 0
    | image_id_len u32 | image_id UTF-8
    | image_width u32 | image_height u32 | entry_count u32
    | per entry: class_id u32 | aug_tag u8 (0 identity, 1 hflip, 2 scaled)
                 | scale_short_side u32 (0 unless aug_tag = 2)
                 | map_h u32 | map_w u32 | map_h * map_w f32 values (row-major)

The manifest is JSON-lines, one object per image:
``{"image_id": str, "file": str, "width": int, "height": int, "labels": [int]}``.

Annotation JSON is the COCO detection subset written canonically: keys
sorted, arrays ordered by id, reals rounded to 6 decimal digits and printed
with the shortest representation that round-trips.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .cam import AUG_HFLIP, AUG_IDENTITY, CamEntry, CamMap, CamStack, _fresh
from .errors import (
    BadMagic,
    BadVersion,
    CambFormatError,
    DuplicateImageId,
    MalformedLine,
    NonFiniteValue,
    SchemaError,
    TruncatedPayload,
)

_MAGIC = b"CAMB"
_VERSION = 1
_TAG_IDENTITY, _TAG_HFLIP, _TAG_SCALED = 0, 1, 2


# ---------------------------------------------------------------------------
# CAMB container


def _aug_to_wire(aug: str) -> tuple[int, int]:
    if aug == AUG_IDENTITY:
        return _TAG_IDENTITY, 0
    if aug == AUG_HFLIP:
        return _TAG_HFLIP, 0
    if aug.startswith("scale:"):
        return _TAG_SCALED, int(aug.split(":", 1)[1])
    raise ValueError(f"unknown augmentation tag {aug!r}")


def _aug_from_wire(tag: int, short_side: int) -> str:
    if tag == _TAG_IDENTITY:
        return AUG_IDENTITY
    if tag == _TAG_HFLIP:
        return AUG_HFLIP
    if tag == _TAG_SCALED:
        return f"scale:{short_side}"
    raise CambFormatError(f"unknown augmentation tag byte {tag}")


def write_camb(stack: CamStack, path) -> None:
    """Serialize a stack to the CAMB v1 byte layout (atomic replace)."""
    image_id = stack.image_id.encode("utf-8")
    parts = [
        _MAGIC,
        struct.pack("<HH", _VERSION, 0),
        struct.pack("<I", len(image_id)),
        image_id,
        struct.pack("<III", stack.image_width, stack.image_height, len(stack.entries)),
    ]
    for entry in stack.entries:
        tag, short_side = _aug_to_wire(entry.aug)
        grid = entry.cam.values
        parts.append(struct.pack("<IBIII", entry.class_id, tag, short_side, grid.shape[0], grid.shape[1]))
        parts.append(np.ascontiguousarray(grid, dtype="<f4").tobytes())
    _atomic_write_bytes(path, b"".join(parts))


class _Cursor:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedPayload(
                f"{self.path}: needed {n} bytes at offset {self.pos}, file has {len(self.data)}"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_camb(path) -> CamStack:
    """Parse and validate a CAMB v1 file."""
    with open(path, "rb") as fh:
        data = fh.read()
    cur = _Cursor(data, path)
    if cur.take(4) != _MAGIC:
        raise BadMagic(f"{path}: not a CAMB file")
    version, flags = cur.unpack("<HH")
    if version != _VERSION:
        raise BadVersion(f"{path}: unsupported CAMB version {version}")
    if flags != 0:
        raise BadVersion(f"{path}: unsupported flags {flags:#06x}")
    (id_len,) = cur.unpack("<I")
    image_id = cur.take(id_len).decode("utf-8")
    image_w, image_h, entry_count = cur.unpack("<III")
    if image_w < 1 or image_h < 1:
        raise CambFormatError(f"{path}: invalid image size {image_w}x{image_h}")

    entries = []
    for i in range(entry_count):
        class_id, tag, short_side, map_h, map_w = cur.unpack("<IBIII")
        aug = _aug_from_wire(tag, short_side)
        if tag != _TAG_SCALED and short_side != 0:
            raise CambFormatError(f"{path}: entry {i} has scale field {short_side} with tag {tag}")
        if map_h < 1 or map_w < 1:
            raise CambFormatError(f"{path}: entry {i} has empty map {map_w}x{map_h}")
        raw = cur.take(4 * map_h * map_w)
        grid = np.frombuffer(raw, dtype="<f4").reshape(map_h, map_w).astype(np.float64)
        if not np.isfinite(grid).all():
            raise NonFiniteValue(f"{path}: entry {i} contains NaN or Inf")
        cam = _fresh(CamMap, grid, class_id=class_id, image_id=image_id)
        entries.append(CamEntry(class_id, aug, cam))
    if cur.pos != len(data):
        raise TruncatedPayload(f"{path}: {len(data) - cur.pos} trailing bytes after last entry")
    return CamStack(image_id, image_w, image_h, tuple(entries))


# ---------------------------------------------------------------------------
# Manifest


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    file: str
    width: int
    height: int
    labels: tuple


def read_manifest(path) -> list[ManifestEntry]:
    entries = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(f"{path}:{lineno}: {exc}") from None
            if not isinstance(obj, dict):
                raise MalformedLine(f"{path}:{lineno}: expected a JSON object")
            try:
                entry = ManifestEntry(
                    image_id=obj["image_id"],
                    file=obj["file"],
                    width=obj["width"],
                    height=obj["height"],
                    labels=tuple(obj["labels"]),
                )
            except KeyError as exc:
                raise MalformedLine(f"{path}:{lineno}: missing field {exc}") from None
            if (
                not isinstance(entry.image_id, str)
                or not isinstance(entry.file, str)
                or not isinstance(entry.width, int)
                or not isinstance(entry.height, int)
                or isinstance(entry.width, bool)
                or isinstance(entry.height, bool)
                or not all(isinstance(c, int) and not isinstance(c, bool) for c in entry.labels)
            ):
                raise MalformedLine(f"{path}:{lineno}: field with wrong type")
            if entry.image_id in seen:
                raise DuplicateImageId(f"{path}:{lineno}: duplicate image_id {entry.image_id!r}")
            seen.add(entry.image_id)
            entries.append(entry)
    return entries


def write_manifest(entries, path) -> None:
    lines = []
    for e in entries:
        lines.append(
            json.dumps(
                {
                    "image_id": e.image_id,
                    "file": e.file,
                    "width": e.width,
                    "height": e.height,
                    "labels": list(e.labels),
                },
                sort_keys=True,
                separators=(",", ":"),
            )
        )
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))


# ---------------------------------------------------------------------------
# Annotation sets


@dataclass(frozen=True)
class ImageInfo:
    id: int
    file_name: str
    width: int
    height: int


@dataclass(frozen=True)
class Category:
    id: int
    name: str


@dataclass(frozen=True)
class Annotation:
    id: int
    image_id: int
    category_id: int
    bbox: tuple  # (x_min, y_min, w, h)
    area: float
    score: float | None = None
    iscrowd: int = 0


@dataclass
class AnnotationSet:
    images: list = field(default_factory=list)
    categories: list = field(default_factory=list)
    annotations: list = field(default_factory=list)


def _fmt_real(v: float) -> str:
    # Round to 6 decimals, then rely on repr for the shortest round-trip.
    v = round(float(v), 6)
    if v == 0.0:
        v = 0.0  # normalize -0.0
    return repr(v)


def _ann_json(a: Annotation) -> str:
    bbox = ",".join(_fmt_real(v) for v in a.bbox)
    parts = [
        f'"area":{_fmt_real(a.area)}',
        f'"bbox":[{bbox}]',
        f'"category_id":{a.category_id}',
        f'"id":{a.id}',
        f'"image_id":{a.image_id}',
        f'"iscrowd":{a.iscrowd}',
    ]
    if a.score is not None:
        parts.append(f'"score":{_fmt_real(a.score)}')
    return "{" + ",".join(parts) + "}"


def write_annotations(aset: AnnotationSet, path) -> None:
    """Write canonical COCO-style JSON; byte-stable across runs and platforms."""
    images = sorted(aset.images, key=lambda im: im.id)
    categories = sorted(aset.categories, key=lambda c: c.id)
    annotations = sorted(aset.annotations, key=lambda a: a.id)
    out = ["{"]
    out.append('"annotations":[')
    out.append(",".join(_ann_json(a) for a in annotations))
    out.append('],"categories":[')
    out.append(
        ",".join(
            "{" + f'"id":{c.id},"name":{json.dumps(c.name)}' + "}" for c in categories
        )
    )
    out.append('],"images":[')
    out.append(
        ",".join(
            "{"
            + f'"file_name":{json.dumps(im.file_name)},"height":{im.height},"id":{im.id},"width":{im.width}'
            + "}"
            for im in images
        )
    )
    out.append("]}")
    _atomic_write_bytes(path, ("".join(out) + "\n").encode("utf-8"))


def _expect(obj, typ, path: str):
    if typ is float:
        if isinstance(obj, (int, float)) and not isinstance(obj, bool):
            return float(obj)
        raise SchemaError(f"{path}: expected a number, got {type(obj).__name__}")
    if typ is int:
        if isinstance(obj, int) and not isinstance(obj, bool):
            return obj
        raise SchemaError(f"{path}: expected an integer, got {type(obj).__name__}")
    if not isinstance(obj, typ):
        raise SchemaError(f"{path}: expected {typ.__name__}, got {type(obj).__name__}")
    return obj


def _get(obj: dict, key: str, typ, path: str):
    if key not in obj:
        raise SchemaError(f"{path}.{key}: missing")
    return _expect(obj[key], typ, f"{path}.{key}")


def read_annotations(path) -> AnnotationSet:
    """Parse annotation JSON, reporting schema violations with their JSON path."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            root = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"$: invalid JSON ({exc})") from None
    root = _expect(root, dict, "$")
    images = []
    for i, obj in enumerate(_get(root, "images", list, "$")):
        p = f"$.images[{i}]"
        obj = _expect(obj, dict, p)
        images.append(
            ImageInfo(
                id=_get(obj, "id", int, p),
                file_name=_get(obj, "file_name", str, p),
                width=_get(obj, "width", int, p),
                height=_get(obj, "height", int, p),
            )
        )
    categories = []
    for i, obj in enumerate(_get(root, "categories", list, "$")):
        p = f"$.categories[{i}]"
        obj = _expect(obj, dict, p)
        categories.append(Category(id=_get(obj, "id", int, p), name=_get(obj, "name", str, p)))
    annotations = []
    for i, obj in enumerate(_get(root, "annotations", list, "$")):
        p = f"$.annotations[{i}]"
        obj = _expect(obj, dict, p)
        bbox = _get(obj, "bbox", list, p)
        if len(bbox) != 4:
            raise SchemaError(f"{p}.bbox: expected 4 entries, got {len(bbox)}")
        bbox = tuple(_expect(v, float, f"{p}.bbox[{j}]") for j, v in enumerate(bbox))
        if bbox[2] <= 0 or bbox[3] <= 0:
            raise SchemaError(f"{p}.bbox: width and height must be positive")
        score = None
        if "score" in obj:
            score = _expect(obj["score"], float, f"{p}.score")
        annotations.append(
            Annotation(
                id=_get(obj, "id", int, p),
                image_id=_get(obj, "image_id", int, p),
                category_id=_get(obj, "category_id", int, p),
                bbox=bbox,
                area=_get(obj, "area", float, p),
                score=score,
                iscrowd=_get(obj, "iscrowd", int, p) if "iscrowd" in obj else 0,
            )
        )

    image_ids = {im.id for im in images}
    category_ids = {c.id for c in categories}
    if len(image_ids) != len(images):
        raise SchemaError("$.images: duplicate image ids")
    if len(category_ids) != len(categories):
        raise SchemaError("$.categories: duplicate category ids")
    ann_ids = sorted(a.id for a in annotations)
    if ann_ids != list(range(1, len(annotations) + 1)):
        raise SchemaError("$.annotations: ids must be unique and dense from 1")
    for i, a in enumerate(annotations):
        if a.image_id not in image_ids:
            raise SchemaError(f"$.annotations[{i}].image_id: unresolved id {a.image_id}")
        if a.category_id not in category_ids:
            raise SchemaError(f"$.annotations[{i}].category_id: unresolved id {a.category_id}")
    return AnnotationSet(images=images, categories=categories, annotations=annotations)


def build_annotation_set(manifest, boxes_by_image, category_names=None) -> AnnotationSet:
    """Assemble an AnnotationSet from mined boxes keyed by string image id.

    Images are ordered canonically (lexicographic image_id) and assigned
    integer ids 1..N; annotation ids are dense in that order. Category ids
    are the class ids themselves.
    """
    entries = sorted(manifest, key=lambda e: e.image_id)
    images = []
    annotations = []
    class_ids = set()
    for e in entries:
        class_ids.update(e.labels)
    next_ann = 1
    for idx, e in enumerate(entries, start=1):
        images.append(ImageInfo(id=idx, file_name=e.file, width=e.width, height=e.height))
        for box in boxes_by_image.get(e.image_id, ()):
            x_min, y_min, w, h = box.corner
            class_ids.add(box.class_id)
            annotations.append(
                Annotation(
                    id=next_ann,
                    image_id=idx,
                    category_id=box.class_id,
                    bbox=(x_min, y_min, w, h),
                    area=w * h,
                    score=box.score,
                )
            )
            next_ann += 1
    names = category_names or {}
    categories = [Category(id=c, name=names.get(c, f"class_{c}")) for c in sorted(class_ids)]
    return AnnotationSet(images=images, categories=categories, annotations=annotations)


def _atomic_write_bytes(path, data: bytes) -> None:
    # No partial output file may remain after a failure.
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

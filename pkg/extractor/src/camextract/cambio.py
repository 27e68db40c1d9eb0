"""CAMB v1 and manifest writers.

The consumer contract is the byte layout, re-implemented here so the
extractor stays decoupled from the mining toolkit:

    magic "CAMB" | version u16=1 | flags u16=0
    | image_id_len u32 | image_id UTF-8
    | image_width u32 | image_height u32 | entry_count u32
    | per entry: class_id u32 | aug_tag u8 (0 identity, 1 hflip, 2 scaled)
                 | scale_short_side u32 (0 unless aug_tag=2)
                 | map_h u32 | map_w u32 | map_h*map_w float32, row-major

All integers little-endian. One file per image at <out>/cams/<image_id>.camb.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

TAG_IDENTITY = 0
TAG_HFLIP = 1
TAG_SCALED = 2


@dataclass(frozen=True)
class CamEntry:
    class_id: int
    aug_tag: int
    scale_short_side: int
    values: np.ndarray  # (h, w) float32


def write_camb(path, image_id: str, image_w: int, image_h: int, entries: list[CamEntry]) -> None:
    encoded = image_id.encode("utf-8")
    parts = [
        b"CAMB",
        struct.pack("<HH", 1, 0),
        struct.pack("<I", len(encoded)),
        encoded,
        struct.pack("<III", image_w, image_h, len(entries)),
    ]
    for e in entries:
        grid = np.ascontiguousarray(e.values, dtype="<f4")
        if not np.isfinite(grid).all():
            raise ValueError(f"{image_id}: non-finite activation for class {e.class_id}")
        scale = e.scale_short_side if e.aug_tag == TAG_SCALED else 0
        parts.append(struct.pack("<IBIII", e.class_id, e.aug_tag, scale, grid.shape[0], grid.shape[1]))
        parts.append(grid.tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def write_manifest(path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")


def output_layout(out_dir):
    cams = os.path.join(os.fspath(out_dir), "cams")
    os.makedirs(cams, exist_ok=True)
    return cams, os.path.join(os.fspath(out_dir), "manifest.jsonl")

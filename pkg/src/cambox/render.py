"""Heatmap + box overlay rendering (PNG)."""

from __future__ import annotations

import os

import numpy as np
from PIL import Image, ImageDraw

from .cam import average_stack, normalize
from .dataset_io import read_annotations, read_camb
from .errors import DegenerateMap

# Blue -> cyan -> yellow -> red gradient, 256 entries.
_ANCHORS = [(0.0, (0, 0, 96)), (0.25, (0, 64, 255)), (0.5, (0, 255, 255)), (0.75, (255, 255, 0)), (1.0, (255, 0, 0))]
_POS = [a[0] for a in _ANCHORS]
_LUT = np.stack(
    [np.interp(np.linspace(0, 1, 256), _POS, [a[1][ch] for a in _ANCHORS]) for ch in range(3)],
    axis=1,
).astype(np.uint8)

_BOX_COLORS = [(255, 255, 255), (0, 255, 0), (255, 0, 255), (255, 128, 0)]


def heat_image(grid: np.ndarray) -> Image.Image:
    """Map a [0, 1] grid through the gradient LUT."""
    idx = np.clip(grid * 255.0, 0, 255).astype(np.uint8)
    return Image.fromarray(_LUT[idx])


def render_overlays(cams_dir, anns_path, out_dir, images_dir=None) -> int:
    """Write one PNG per (image, class) with the class CAM and its boxes.

    When images_dir is given and holds the manifest's source file, the
    heatmap is alpha-blended onto it. Returns the number of files written.
    """
    aset = read_annotations(anns_path)
    by_stem = {os.path.splitext(im.file_name)[0]: im for im in aset.images}
    boxes_by_key = {}
    for a in aset.annotations:
        boxes_by_key.setdefault((a.image_id, a.category_id), []).append(a)

    os.makedirs(out_dir, exist_ok=True)
    written = 0
    for name in sorted(os.listdir(cams_dir)):
        if not name.endswith(".camb"):
            continue
        stack = read_camb(os.path.join(cams_dir, name))
        info = by_stem.get(stack.image_id)
        base = None
        if images_dir and info is not None:
            src = os.path.join(os.fspath(images_dir), info.file_name)
            if os.path.exists(src):
                base = Image.open(src).convert("RGB").resize((stack.image_width, stack.image_height))
        for class_id in stack.class_ids():
            try:
                grid = normalize(average_stack(stack, class_id)).values
            except DegenerateMap:
                grid = np.zeros((stack.image_height, stack.image_width))
            img = heat_image(grid)
            if base is not None:
                img = Image.blend(base, img, 0.5)
            draw = ImageDraw.Draw(img)
            anns = boxes_by_key.get((info.id, class_id), []) if info is not None else []
            for i, a in enumerate(sorted(anns, key=lambda a: -(a.score or 0.0))):
                x, y, w, h = a.bbox
                color = _BOX_COLORS[i % len(_BOX_COLORS)]
                draw.rectangle([x, y, x + w, y + h], outline=color, width=2)
                if a.score is not None:
                    draw.text((x + 3, y + 3), f"{a.score:.2f}", fill=color)
            img.save(os.path.join(os.fspath(out_dir), f"{stack.image_id}_{class_id}.png"))
            written += 1
    return written

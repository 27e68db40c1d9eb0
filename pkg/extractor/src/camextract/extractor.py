"""Run an image classifier and export per-class activation maps.

The classifier's final linear layer is applied as a 1x1 convolution over the
last convolutional feature map (global pooling removed, no activation
function), yielding one spatial map per class. Maps are extracted for each
configured scale (image resized so its short side matches) and, optionally,
for the left-right flipped image, and stored raw: normalization belongs to
the downstream mining pipeline, which also mirrors flipped maps back.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import torch
from PIL import Image
from torchvision import models
from torchvision.transforms import functional as TF

from .cambio import TAG_HFLIP, TAG_SCALED, CamEntry, output_layout, write_camb, write_manifest

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


class ModelLoadError(Exception):
    pass


class UnreadableImage(Exception):
    pass


@dataclass(frozen=True)
class ExtractConfig:
    model: str = "resnet18"
    weights: str = "pretrained"  # "pretrained", "random", or a checkpoint path
    scales: tuple = (288, 576)
    flip: bool = True
    top_k: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(int(s) for s in self.scales))
        if not self.scales:
            raise ValueError("scales must be non-empty")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")

    @property
    def entries_per_class(self) -> int:
        return len(self.scales) * (2 if self.flip else 1)


class CamExtractor:
    """Wraps a torchvision resnet-family classifier for CAM extraction."""

    def __init__(self, config: ExtractConfig):
        self.config = config
        torch.manual_seed(config.seed)
        try:
            if config.weights == "pretrained":
                weights = models.get_model_weights(config.model).DEFAULT
                model = models.get_model(config.model, weights=weights)
            elif config.weights == "random":
                model = models.get_model(config.model, weights=None)
            else:
                model = models.get_model(config.model, weights=None)
                state = torch.load(config.weights, map_location="cpu", weights_only=True)
                model.load_state_dict(state)
        except Exception as exc:  # torchvision raises ValueError, URLError, RuntimeError, ...
            raise ModelLoadError(f"cannot load {config.model} ({config.weights}): {exc}") from exc
        if not hasattr(model, "fc") or not isinstance(model.fc, torch.nn.Linear):
            raise ModelLoadError(f"{config.model}: expected a resnet-style model with a Linear fc head")
        model.eval()
        # Everything up to (excluding) global pooling and the classifier.
        self.trunk = torch.nn.Sequential(*list(model.children())[:-2])
        self.fc_weight = model.fc.weight.detach()  # (num_classes, C)
        self.fc_bias = model.fc.bias.detach()

    def _preprocess(self, image: Image.Image, short_side: int, flip: bool) -> torch.Tensor:
        w, h = image.size
        if w < h:
            new_w, new_h = short_side, max(32, round(h * short_side / w))
        else:
            new_w, new_h = max(32, round(w * short_side / h)), short_side
        resized = image.resize((new_w, new_h), Image.BILINEAR)
        if flip:
            resized = resized.transpose(Image.FLIP_LEFT_RIGHT)
        tensor = TF.to_tensor(resized)
        return TF.normalize(tensor, IMAGENET_MEAN, IMAGENET_STD).unsqueeze(0)

    @torch.no_grad()
    def _features(self, image: Image.Image, short_side: int, flip: bool) -> torch.Tensor:
        return self.trunk(self._preprocess(image, short_side, flip))[0]  # (C, h, w)

    @torch.no_grad()
    def predict_classes(self, image: Image.Image) -> list[int]:
        """Top-k class ids from the classifier's own pooled logits."""
        feat = self._features(image, self.config.scales[0], flip=False)
        logits = self.fc_weight @ feat.mean(dim=(1, 2)) + self.fc_bias
        return logits.topk(self.config.top_k).indices.tolist()

    @torch.no_grad()
    def cams(self, image: Image.Image, class_ids: list[int]) -> list[CamEntry]:
        """Raw activation maps for the requested classes, all augmentations."""
        entries = []
        flips = (False, True) if self.config.flip else (False,)
        for short_side in self.config.scales:
            for flipped in flips:
                feat = self._features(image, short_side, flipped)
                weight = self.fc_weight[class_ids]  # (k, C)
                maps = torch.einsum("kc,chw->khw", weight, feat).numpy().astype(np.float32)
                for cls, grid in zip(class_ids, maps):
                    if flipped:
                        entries.append(CamEntry(cls, TAG_HFLIP, 0, grid))
                    else:
                        entries.append(CamEntry(cls, TAG_SCALED, short_side, grid))
        # Group by class so every class's augmentations sit together.
        entries.sort(key=lambda e: (e.class_id, e.aug_tag, e.scale_short_side))
        return entries


def load_image(path) -> Image.Image:
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except (OSError, SyntaxError) as exc:
        raise UnreadableImage(f"{path}: {exc}") from exc


def extract(image_paths, config: ExtractConfig, out_dir, labels=None) -> dict:
    """Extract CAMs for every readable image into out_dir.

    labels maps a file name (or stem) to a list of class ids; without it the
    classifier's top-k predictions are used. Unreadable images are skipped
    with a warning and listed in <out_dir>/failures.txt.
    """
    extractor = CamExtractor(config)
    cams_dir, manifest_path = output_layout(out_dir)
    records = []
    failures = []
    seen = set()
    for path in sorted(os.fspath(p) for p in image_paths):
        name = os.path.basename(path)
        stem = os.path.splitext(name)[0]
        if stem in seen:
            raise ValueError(f"duplicate image id {stem!r} (from {name})")
        try:
            image = load_image(path)
        except UnreadableImage as exc:
            print(f"warning: skipping unreadable image: {exc}")
            failures.append(f"{path}\t{exc}")
            continue
        seen.add(stem)
        if labels and (name in labels or stem in labels):
            class_ids = [int(c) for c in labels.get(name, labels.get(stem))]
        else:
            class_ids = extractor.predict_classes(image)
        entries = extractor.cams(image, sorted(set(class_ids)))
        write_camb(os.path.join(cams_dir, f"{stem}.camb"), stem, image.width, image.height, entries)
        records.append(
            {
                "image_id": stem,
                "file": name,
                "width": image.width,
                "height": image.height,
                "labels": sorted(set(class_ids)),
            }
        )
    write_manifest(manifest_path, records)
    failures_path = os.path.join(os.fspath(out_dir), "failures.txt")
    if failures:
        with open(failures_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(failures) + "\n")
    return {
        "images": len(records),
        "failed": len(failures),
        "entries_per_class": config.entries_per_class,
        "manifest": manifest_path,
    }

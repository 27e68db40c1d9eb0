"""cam-extract command-line interface."""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys

from .extractor import ExtractConfig, ModelLoadError, extract

IMAGE_EXTENSIONS = (".jpg", ".jpeg", ".png", ".bmp", ".webp")


def _csv_ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cam-extract",
        description="Run a classifier over images and write CAMB activation files.",
    )
    parser.add_argument("--images", required=True, help="image directory or glob")
    parser.add_argument("--out", required=True, help="output directory (cams/ + manifest.jsonl)")
    parser.add_argument("--model", default="resnet18")
    parser.add_argument("--weights", default="pretrained",
                        help='"pretrained", "random", or a checkpoint path')
    parser.add_argument("--scales", type=_csv_ints, default=(288, 576), metavar="CSV")
    parser.add_argument("--no-flip", action="store_true")
    parser.add_argument("--top-k", type=int, default=1)
    parser.add_argument("--labels", default=None, help="JSON file mapping image name to class ids")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if os.path.isdir(args.images):
        paths = [
            os.path.join(args.images, n)
            for n in sorted(os.listdir(args.images))
            if n.lower().endswith(IMAGE_EXTENSIONS)
        ]
    else:
        paths = sorted(glob.glob(args.images))
    if not paths:
        print(f"cam-extract: no images found under {args.images}", file=sys.stderr)
        return 2

    labels = None
    if args.labels:
        try:
            with open(args.labels, "r", encoding="utf-8") as fh:
                labels = json.load(fh)
        except FileNotFoundError:
            print(f"cam-extract: I/O error: no such file: {args.labels}", file=sys.stderr)
            return 2

    config = ExtractConfig(
        model=args.model,
        weights=args.weights,
        scales=args.scales,
        flip=not args.no_flip,
        top_k=args.top_k,
        seed=args.seed,
    )
    os.makedirs(args.out, exist_ok=True)
    try:
        summary = extract(paths, config, args.out, labels=labels)
    except ModelLoadError as exc:
        print(f"cam-extract: {exc}", file=sys.stderr)
        return 1
    print(
        f"extracted {summary['images']} images "
        f"({summary['entries_per_class']} entries per class), {summary['failed']} failed"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())

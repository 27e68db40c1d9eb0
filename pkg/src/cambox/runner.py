"""Parallel batch executor for mining a corpus of CAMB files.

The work unit is one image. Workers receive immutable (path, config) tasks
and return plain values; the parent assembles results in canonical image-id
order, so the emitted annotation file is byte-identical regardless of the
worker count.
"""

from __future__ import annotations

import json
import multiprocessing
import os
import time
from dataclasses import asdict, dataclass, field

from .dataset_io import build_annotation_set, read_camb, read_manifest, write_annotations, _atomic_write_bytes
from .errors import CamboxError
from .merge import MiningConfig, mine_boxes_with_stats


@dataclass
class RunReport:
    images: int = 0
    boxes: int = 0
    wall_time_s: float = 0.0
    stage_seconds: dict = field(default_factory=dict)
    warnings: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "images": self.images,
                "boxes": self.boxes,
                "wall_time_s": round(self.wall_time_s, 4),
                "stage_seconds": {k: round(v, 4) for k, v in sorted(self.stage_seconds.items())},
                "warnings": self.warnings,
                "config": self.config,
            },
            indent=2,
            sort_keys=True,
        )


def _mine_one(task):
    path, image_id, width, height, config = task
    t0 = time.perf_counter()
    stack = read_camb(path)
    t1 = time.perf_counter()
    if stack.image_id != image_id:
        raise CamboxError(f"{path}: contains image_id {stack.image_id!r}, manifest says {image_id!r}")
    if (stack.image_width, stack.image_height) != (width, height):
        raise CamboxError(
            f"{path}: image size {stack.image_width}x{stack.image_height} "
            f"disagrees with manifest {width}x{height}"
        )
    boxes, stats = mine_boxes_with_stats(stack, config)
    t2 = time.perf_counter()
    return image_id, boxes, (t1 - t0, t2 - t1), stats.degenerate_classes


def mine_corpus(cams_dir, manifest_entries, config: MiningConfig, workers: int = 1):
    """Mine every manifest image; returns (AnnotationSet, RunReport)."""
    t_start = time.perf_counter()
    entries = sorted(manifest_entries, key=lambda e: e.image_id)
    tasks = []
    for e in entries:
        path = os.path.join(os.fspath(cams_dir), f"{e.image_id}.camb")
        if not os.path.exists(path):
            raise FileNotFoundError(2, "missing CAMB file", path)
        tasks.append((path, e.image_id, e.width, e.height, config))

    if workers <= 1 or len(tasks) < 2:
        results = [_mine_one(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (workers * 8))
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_mine_one, tasks, chunksize=chunk)

    boxes_by_image = {}
    read_s = mine_s = 0.0
    degenerate = 0
    for image_id, boxes, (dt_read, dt_mine), degen in results:
        boxes_by_image[image_id] = boxes
        read_s += dt_read
        mine_s += dt_mine
        degenerate += degen

    aset = build_annotation_set(entries, boxes_by_image)
    report = RunReport(
        images=len(entries),
        boxes=len(aset.annotations),
        wall_time_s=time.perf_counter() - t_start,
        stage_seconds={"read": read_s, "mine": mine_s},
        warnings={"degenerate_cams": degenerate},
        config=asdict(config),
    )
    return aset, report


def run_mining(cams_dir, manifest_path, out_path, config: MiningConfig, workers: int = 1, report_path=None) -> RunReport:
    """End-to-end mine command: manifest -> CAMB files -> annotation JSON."""
    entries = read_manifest(manifest_path)
    aset, report = mine_corpus(cams_dir, entries, config, workers)
    t0 = time.perf_counter()
    write_annotations(aset, out_path)
    report.stage_seconds["write"] = time.perf_counter() - t0
    report.wall_time_s += report.stage_seconds["write"]
    if report_path:
        _atomic_write_bytes(report_path, (report.to_json() + "\n").encode("utf-8"))
    return report

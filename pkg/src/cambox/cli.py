"""cambox command-line interface.

Exit codes: 0 success, 1 invalid inputs (bad flags or malformed files),
2 I/O error (missing or unreadable paths). Output files are written to a
temporary file and atomically renamed, so no partial output survives a
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
import time

from .dataset_io import read_annotations, read_manifest
from .errors import CamboxError
from .eval_stats import ap_averaged, box_stats, corloc, mean_ap, recall_at
from .merge import DEFAULT_TAUS, MiningConfig
from .runner import mine_corpus, run_mining
from .synth import corpus_specs, write_corpus

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


class _Parser(argparse.ArgumentParser):
    # Usage errors are input-validation failures (exit 1), not I/O errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _csv_floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _config_from(args) -> MiningConfig:
    return MiningConfig(
        taus=args.thresholds,
        nms_iou=args.nms_iou,
        connectivity=args.connectivity,
        min_box_size=args.min_box_size,
        moment_correction=args.moment_correction,
        min_area_ratio=args.min_area_ratio,
        keep_duplicates=args.keep_duplicates,
    )


def _add_mining_flags(p):
    p.add_argument("--cams", required=True, help="directory of <image_id>.camb files")
    p.add_argument("--manifest", required=True, help="JSON-lines corpus manifest")
    p.add_argument("--thresholds", type=_csv_floats, default=DEFAULT_TAUS, metavar="CSV")
    p.add_argument("--nms-iou", type=float, default=0.8)
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    p.add_argument("--min-area-ratio", type=float, default=0.5)
    p.add_argument("--min-box-size", type=float, default=1.0)
    p.add_argument("--moment-correction", action="store_true")
    p.add_argument("--keep-duplicates", action="store_true")
    p.add_argument("--workers", type=int, default=1)


def cmd_mine(args) -> int:
    report = run_mining(
        args.cams, args.manifest, args.out, _config_from(args), workers=args.workers, report_path=args.report
    )
    degen = report.warnings.get("degenerate_cams", 0)
    print(f"mined {report.images} images -> {report.boxes} boxes in {report.wall_time_s:.2f}s ({degen} degenerate maps)")
    return EXIT_OK


def cmd_eval(args) -> int:
    preds = read_annotations(args.pred)
    gts = read_annotations(args.gt)
    if args.metric == "ap":
        value = mean_ap(preds, gts, args.iou)
    elif args.metric == "ap11":
        value = mean_ap(preds, gts, args.iou, point11=True)
    elif args.metric == "ap-avg":
        value = ap_averaged(preds, gts)
    elif args.metric == "recall":
        value = recall_at(preds, gts, args.iou)
    else:
        value = corloc(preds, gts, args.iou)
    print(json.dumps({"metric": args.metric, "iou": args.iou, "value": round(value, 6)}))
    return EXIT_OK


_STAT_ROWS = (("Avg boxes / image", "avg_boxes_per_image"), ("Avg box width", "avg_width"), ("Avg box height", "avg_height"))


def cmd_stats(args) -> int:
    stats = box_stats(read_annotations(args.anns))
    for label, attr in _STAT_ROWS:
        print(f"{label:<18} {getattr(stats, attr):.3f}")
    print(f"{'Boxes total':<18} {stats.count}")
    return EXIT_OK


def _sweep_column(aset, gt) -> dict:
    stats = box_stats(aset)
    col = {
        "Avg boxes / image": stats.avg_boxes_per_image,
        "Avg box width": stats.avg_width,
        "Avg box height": stats.avg_height,
    }
    if gt is not None:
        col["Recall@0.5"] = recall_at(aset, gt, 0.5)
        col["CorLoc@0.5"] = corloc(aset, gt, 0.5)
        col["AP@0.5"] = mean_ap(aset, gt, 0.5)
    return col


def _print_table(title: str, headers: list, columns: list) -> None:
    print(title)
    rows = list(columns[0].keys())
    print(f"{'':<18}" + "".join(f"{h:>10}" for h in headers))
    for row in rows:
        print(f"{row:<18}" + "".join(f"{col[row]:>10.3f}" for col in columns))
    print()


def cmd_sweep(args) -> int:
    entries = read_manifest(args.manifest)
    gt = read_annotations(args.gt) if args.gt else None
    base = dict(
        connectivity=args.connectivity,
        min_box_size=args.min_box_size,
        moment_correction=args.moment_correction,
        min_area_ratio=args.min_area_ratio,
        keep_duplicates=args.keep_duplicates,
    )
    report = {"tau_sweep": {}, "nms_sweep": {}}

    tau_headers, tau_cols = [], []
    for tau in args.thresholds_grid:
        aset, _ = mine_corpus(args.cams, entries, MiningConfig(taus=(tau,), nms_iou=args.nms_iou, **base), args.workers)
        tau_headers.append(str(float(tau)))
        tau_cols.append(_sweep_column(aset, gt))
    aset, _ = mine_corpus(args.cams, entries, MiningConfig(taus=args.thresholds_grid, nms_iou=args.nms_iou, **base), args.workers)
    tau_headers.append("Multi")
    tau_cols.append(_sweep_column(aset, gt))
    report["tau_sweep"] = {h: c for h, c in zip(tau_headers, tau_cols)}
    _print_table(f"CAM threshold sweep (NMS IoU={args.nms_iou:g})", tau_headers, tau_cols)

    nms_headers, nms_cols = [], []
    for nms_iou in args.nms_grid:
        aset, _ = mine_corpus(args.cams, entries, MiningConfig(taus=args.thresholds_grid, nms_iou=nms_iou, **base), args.workers)
        nms_headers.append(str(float(nms_iou)))
        nms_cols.append(_sweep_column(aset, gt))
    report["nms_sweep"] = {h: c for h, c in zip(nms_headers, nms_cols)}
    _print_table("NMS IoU sweep (multi-threshold)", nms_headers, nms_cols)

    if args.report:
        from .dataset_io import _atomic_write_bytes

        _atomic_write_bytes(args.report, (json.dumps(report, indent=2, sort_keys=True) + "\n").encode("utf-8"))
    return EXIT_OK


def cmd_synth(args) -> int:
    specs = corpus_specs(args.kind, args.n, args.seed, args.size)
    write_corpus(specs, args.out)
    print(f"wrote {len(specs)} {args.kind} images under {args.out}")
    return EXIT_OK


def cmd_render(args) -> int:
    from .render import render_overlays

    n = render_overlays(args.cams, args.anns, args.out, args.images)
    print(f"wrote {n} overlays under {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    with tempfile.TemporaryDirectory(prefix="cambox-bench-") as tmp:
        specs = corpus_specs("gauss", args.n, seed=7, size=args.size)
        write_corpus(specs, tmp)
        entries = read_manifest(f"{tmp}/manifest.jsonl")
        config = MiningConfig()
        t0 = time.perf_counter()
        mine_corpus(f"{tmp}/cams", entries, config, workers=1)
        single = time.perf_counter() - t0
        t0 = time.perf_counter()
        mine_corpus(f"{tmp}/cams", entries, config, workers=args.workers)
        multi = time.perf_counter() - t0
    print(f"single worker : {args.n / single:8.1f} images/s ({single:.2f}s)")
    print(f"{args.workers:2d} workers    : {args.n / multi:8.1f} images/s ({multi:.2f}s)")
    print(f"speedup       : {single / multi:.2f}x")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="cambox", description="Mine, evaluate, and visualize pseudo boxes from activation maps.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", parents=[], help="mine pseudo boxes from a CAMB corpus")
    _add_mining_flags(p)
    p.add_argument("--out", required=True, help="annotation JSON output path")
    p.add_argument("--report", default=None, help="run report JSON path")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--metric", choices=("ap", "ap11", "ap-avg", "recall", "corloc"), default="ap")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="box statistics of an annotation file")
    p.add_argument("--anns", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sweep", help="threshold and NMS grid sweep tables")
    _add_mining_flags(p)
    p.add_argument("--gt", default=None)
    p.add_argument("--thresholds-grid", type=_csv_floats, default=DEFAULT_TAUS, metavar="CSV")
    p.add_argument("--nms-grid", type=_csv_floats, default=(0.5, 0.6, 0.7, 0.8, 0.9, 1.0), metavar="CSV")
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--kind", choices=("rect", "gauss", "mixture"), default="gauss")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("render", help="write heatmap + box overlay PNGs")
    p.add_argument("--cams", required=True)
    p.add_argument("--anns", required=True)
    p.add_argument("--images", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("bench", help="mining throughput benchmark")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--workers", type=int, default=8)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        name = exc.filename or str(exc)
        print(f"cambox: I/O error: no such file: {name}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"cambox: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (CamboxError, ValueError) as exc:
        print(f"cambox: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

"""Acceptance suite: each test implements one acceptance criterion at its
stated tolerance and prints a single pass/fail line (visible with -s).

Run: pytest tests/test_acceptance.py -v -s
"""

import time
from pathlib import Path

import numpy as np
import pytest

from cambox.boxfit import fit_box
from cambox.cam import CamMap, threshold
from cambox.cli import main as cli_main
from cambox.dataset_io import (
    build_annotation_set,
    ManifestEntry,
    read_annotations,
    read_camb,
    write_annotations,
    write_camb,
)
from cambox.eval_stats import ap_11point, ap_integral, match_greedy, pr_curve, recall_at
from cambox.merge import MiningConfig, iou, mine_boxes
from cambox.region import Component, label_components
from cambox.cam import ThresholdedMap
from cambox.synth import gauss_corpus, generate, gt_boxes, kite_corpus, rect_corpus, write_corpus

from .oracles import ap_11point_oracle, ap_integral_oracle, flood_fill_components, moment_box

DATA_DIR = Path(__file__).parent / "data"
GOLDEN = DATA_DIR / "golden_annotations.json"


def check(cid, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {cid}: {detail}")
    assert ok, f"{cid}: {detail}"


def mixed_specs():
    """Fixed 12-image corpus backing the determinism and golden-file checks."""
    return (
        rect_corpus(4, seed=71, size=96, side_range=(10, 60))
        + gauss_corpus(4, seed=72, size=96)
        + kite_corpus(4, seed=73, size=160)
    )


@pytest.fixture(scope="module")
def gauss500():
    """Criteria 4 and 5 share this 500-image smooth-blob corpus."""
    specs = gauss_corpus(500, seed=1004, size=128)
    stacks = [generate(s)[0] for s in specs]
    manifest = [
        ManifestEntry(s.image_id, f"{s.image_id}.png", s.width, s.height, (s.class_id,))
        for s in specs
    ]
    return specs, stacks, manifest


def mine_in_memory(stacks, manifest, config):
    boxes = {stack.image_id: mine_boxes(stack, config) for stack in stacks}
    return build_annotation_set(manifest, boxes)


def test_c01_moment_fit_oracle():
    rng = np.random.Generator(np.random.PCG64(1001))
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 201))
        cells = rng.choice(32 * 32, size=n, replace=False)
        xs = (cells % 32).astype(np.int64)
        ys = (cells // 32).astype(np.int64)
        ws = rng.random(n) * 0.99 + 0.01
        got = fit_box(Component(xs, ys, ws))
        want = moment_box(list(zip(xs.tolist(), ys.tolist(), ws.tolist())))
        for g, w in zip(got, want):
            err = abs(g - w) / abs(w) if w != 0 else abs(g)
            worst = max(worst, err)
    elapsed = time.perf_counter() - t0
    check(
        "C01 moment-fit oracle",
        worst < 1e-9 and elapsed < 5.0,
        f"1000 components, max rel err {worst:.2e}, {elapsed:.2f}s",
    )


def test_c02_rectangle_recovery():
    specs = rect_corpus(200, seed=1002, size=256, side_range=(8, 200))
    worst_iou = 1.0
    worst_wh = 0.0
    counts_ok = True
    for spec in specs:
        stack, _ = generate(spec)
        (_, gt), = gt_boxes(spec)
        boxes = mine_boxes(stack)
        counts_ok &= len(boxes) == 1
        worst_iou = min(worst_iou, iou(boxes[0].corner, gt))
        corrected = mine_boxes(stack, MiningConfig(moment_correction=True))
        counts_ok &= len(corrected) == 1
        worst_wh = max(worst_wh, abs(corrected[0].w - gt[2]), abs(corrected[0].h - gt[3]))
    check(
        "C02 rectangle recovery",
        counts_ok and worst_iou >= 0.9 and worst_wh <= 1e-6,
        f"200 rects (sides 8..200): one box each, min IoU {worst_iou:.4f}, "
        f"corrected max |w,h - GT| {worst_wh:.2e}",
    )


def test_c03_threshold_strictness():
    rng = np.random.Generator(np.random.PCG64(1003))
    cases = 0
    for _ in range(10000):
        h, w = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        values = rng.random((h, w))
        t1, t2 = sorted(rng.uniform(0.01, 0.99, size=2).tolist())
        m = CamMap(values)
        out1 = threshold(m, t1).values
        assert np.array_equal(out1 == 0.0, values <= t1)
        assert np.array_equal(out1[out1 > 0], values[values > t1])
        if t2 > t1:
            out2 = threshold(m, t2).values
            assert np.all((out1 > 0) | ~(out2 > 0)), "support not antitone"
        cases += 1
    check("C03 threshold strictness", cases == 10000, f"{cases} random maps, zero iff <= tau, support antitone")


def test_c04_threshold_size_trend(gauss500):
    _, stacks, manifest = gauss500
    taus = (0.2, 0.3, 0.4, 0.5)
    mean_areas = []
    counts = []
    for tau in taus:
        aset = mine_in_memory(stacks, manifest, MiningConfig(taus=(tau,)))
        areas = [a.bbox[2] * a.bbox[3] for a in aset.annotations]
        mean_areas.append(sum(areas) / len(areas))
        counts.append(len(aset.annotations) / len(aset.images))
    multi = mine_in_memory(stacks, manifest, MiningConfig())
    multi_count = len(multi.annotations) / len(multi.images)
    decreasing = all(a > b for a, b in zip(mean_areas, mean_areas[1:]))
    exceeds = all(multi_count > c for c in counts)
    check(
        "C04 threshold-size trend",
        decreasing and exceeds,
        f"mean area by tau {[f'{a:.0f}' for a in mean_areas]} decreasing; "
        f"multi {multi_count:.3f} boxes/img > singles {[f'{c:.3f}' for c in counts]}",
    )


def test_c05_nms_count_trend(gauss500):
    _, stacks, manifest = gauss500
    grid = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    counts = []
    for nms_iou in grid:
        aset = mine_in_memory(stacks, manifest, MiningConfig(nms_iou=nms_iou))
        counts.append(len(aset.annotations))
    monotone = all(a <= b for a, b in zip(counts, counts[1:]))
    check("C05 NMS-count trend", monotone, f"kept boxes over NMS IoU {grid}: {counts}")


def test_c06_multi_threshold_recall():
    specs = kite_corpus(200, seed=1006)
    stacks = [generate(s)[0] for s in specs]
    manifest = [
        ManifestEntry(s.image_id, f"{s.image_id}.png", s.width, s.height, (s.class_id,))
        for s in specs
    ]
    from cambox.synth import corpus_gt

    gt = corpus_gt(specs)
    multi = mine_in_memory(stacks, manifest, MiningConfig())
    fixed = mine_in_memory(stacks, manifest, MiningConfig(taus=(0.2,)))
    r_multi = recall_at(multi, gt, 0.5)
    r_fixed = recall_at(fixed, gt, 0.5)
    check(
        "C06 multi-threshold recall",
        r_multi == 1.0 and r_multi > r_fixed,
        f"200 two-blob mixtures: multi-threshold recall@0.5 = {r_multi}, fixed tau 0.2 = {r_fixed}",
    )


def test_c07_ap_oracle():
    rng = np.random.Generator(np.random.PCG64(1007))
    worst = 0.0
    for _ in range(1000):
        n_gt = int(rng.integers(0, 6))
        n_pred = int(rng.integers(0, 11))
        gts = [
            (1, 1, (float(rng.uniform(0, 60)), float(rng.uniform(0, 60)), 10.0, 10.0))
            for _ in range(n_gt)
        ]
        scores = (rng.permutation(n_pred) + 1.0) / (n_pred + 1.0)
        preds = sorted(
            (
                (1, 1, (float(rng.uniform(0, 60)), float(rng.uniform(0, 60)), 10.0, 10.0), float(s))
                for s in scores
            ),
            key=lambda d: -d[3],
        )
        curve = pr_curve(preds, gts, 0.5)
        flags = match_greedy(preds, gts, 0.5)
        det_scores = [d[3] for d in preds]
        worst = max(worst, abs(ap_integral(curve) - ap_integral_oracle(det_scores, flags, n_gt)))
        worst = max(worst, abs(ap_11point(curve) - ap_11point_oracle(det_scores, flags, n_gt)))
    from cambox.eval_stats import PrCurve

    hand = PrCurve(((0.5, 1.0), (0.5, 0.5)), num_gt=2)
    exact = ap_integral(hand) == 0.5 and ap_11point(hand) == 6 / 11
    check(
        "C07 AP oracle",
        worst <= 1e-12 and exact,
        f"1000 instances, max |impl - enumeration| = {worst:.2e}; hand cases 0.5 and 6/11 exact",
    )


def test_c08_connected_components_oracle():
    rng = np.random.Generator(np.random.PCG64(1008))
    checked = 0
    for _ in range(1000):
        h, w = int(rng.integers(1, 33)), int(rng.integers(1, 33))
        mask = rng.random((h, w)) < float(rng.uniform(0.2, 0.7))
        values = np.where(mask, 0.5, 0.0)
        for connectivity in (4, 8):
            comps = label_components(ThresholdedMap(values, 0.2), connectivity)
            ours = {frozenset(c.pixel_set()) for c in comps}
            assert ours == flood_fill_components(mask.tolist(), connectivity), connectivity
        checked += 1
    check("C08 connected-components oracle", checked == 1000, f"{checked} masks, 4- and 8-connectivity")


def test_c09_determinism_and_formats(tmp_path):
    corpus = tmp_path / "corpus"
    write_corpus(mixed_specs(), corpus)
    outs = {}
    for tag, workers in (("w1", 1), ("w8", 8), ("w1b", 1)):
        out = tmp_path / f"pred_{tag}.json"
        code = cli_main([
            "mine", "--cams", str(corpus / "cams"), "--manifest", str(corpus / "manifest.jsonl"),
            "--out", str(out), "--workers", str(workers),
        ])
        assert code == 0
        outs[tag] = out.read_bytes()
    identical = outs["w1"] == outs["w8"] == outs["w1b"]

    camb_ok = True
    for camb in sorted((corpus / "cams").glob("*.camb")):
        stack = read_camb(camb)
        write_camb(stack, tmp_path / "rt.camb")
        camb_ok &= (tmp_path / "rt.camb").read_bytes() == camb.read_bytes()

    aset = read_annotations(tmp_path / "pred_w1.json")
    write_annotations(aset, tmp_path / "rt.json")
    ann_ok = (tmp_path / "rt.json").read_bytes() == outs["w1"]

    golden_ok = outs["w1"] == GOLDEN.read_bytes()
    check(
        "C09 determinism & formats",
        identical and camb_ok and ann_ok and golden_ok,
        f"workers 1/8 and reruns byte-identical: {identical}; CAMB round-trip: {camb_ok}; "
        f"annotation round-trip: {ann_ok}; golden file: {golden_ok}",
    )


def test_c10_throughput(tmp_path):
    from cambox.runner import run_mining

    corpus = tmp_path / "corpus10k"
    write_corpus(gauss_corpus(10000, seed=1010, size=64), corpus)
    kwargs = dict(
        cams_dir=str(corpus / "cams"),
        manifest_path=str(corpus / "manifest.jsonl"),
        config=MiningConfig(),
    )
    t0 = time.perf_counter()
    run_mining(out_path=str(tmp_path / "pred1.json"), workers=1, **kwargs)
    single = time.perf_counter() - t0
    t0 = time.perf_counter()
    run_mining(out_path=str(tmp_path / "pred8.json"), workers=8, **kwargs)
    multi = time.perf_counter() - t0
    speedup = single / multi
    # Hard bound: 10 s single-worker. The 3x multi-worker speedup is a soft
    # target (reported only): this host may not expose 8 cores.
    import os

    cores = os.cpu_count()
    print(
        f"\n[REPORT] C10 workers: single {single:.2f}s ({10000 / single:.0f} img/s), "
        f"8 workers {multi:.2f}s, speedup {speedup:.2f}x (soft target 3x, host has {cores} core(s))"
    )
    check("C10 throughput", single < 10.0, f"10,000 images mined in {single:.2f}s single-worker (< 10 s)")

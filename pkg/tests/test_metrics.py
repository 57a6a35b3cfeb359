import json
import math

import pytest

from trackflow.io import Row
from trackflow.metrics import evaluate
from trackflow.synth import SCENARIOS, SynthConfig, generate


def track(tid, frames, x=0.0, cls=0):
    return [(t, tid, (x, 0.0, 10.0, 10.0), cls) for t in frames]


def test_perfect_prediction():
    gt = track(1, range(10)) + track(2, range(10), x=50.0)
    r = evaluate(gt, gt)
    assert (r.mota, r.motp, r.mt, r.ml) == (1.0, 1.0, 1.0, 0.0)
    assert (r.idsw, r.frag, r.fp, r.fn, r.gt_count) == (0, 0, 0, 0, 20)


def test_single_identity_swap():
    gt = track(1, range(10))
    pred = track(5, range(5)) + track(6, range(5, 10))
    r = evaluate(pred, gt)
    assert r.idsw == 1 and r.fp == r.fn == 0
    assert r.mota == 1 - 1 / 10


def test_two_misses_and_fragmentation():
    gt = track(1, range(10))
    r = evaluate(track(1, [t for t in range(10) if t not in (3, 7)]), gt)
    assert r.mota == pytest.approx(0.8) and r.fn == 2 and r.idsw == 0 and r.frag == 2
    r = evaluate(track(1, [t for t in range(10) if t not in (3, 4)]), gt)
    assert r.mota == pytest.approx(0.8) and r.frag == 1


def test_no_reacquisition_no_fragment():
    gt = track(1, range(10))
    r = evaluate(track(1, range(6)), gt)
    assert r.frag == 0 and r.fn == 4


def test_switch_back_counts_twice():
    gt = track(1, range(6))
    pred = track(1, [0, 1]) + track(2, [2, 3]) + track(1, [4, 5])
    assert evaluate(pred, gt).idsw == 2


def test_switch_after_gap_is_counted():
    gt = track(1, range(6))
    pred = track(1, [0, 1]) + track(2, [4, 5])
    r = evaluate(pred, gt)
    assert r.idsw == 1 and r.frag == 1 and r.fn == 2


def test_each_fp_costs_one_over_gt_count():
    gt = track(1, range(10)) + track(2, range(10), x=50.0)
    fps = [(t, 99 + t, (200.0, 200.0, 10.0, 10.0), 0) for t in range(5)]
    prev = 1.0
    for k in range(1, 6):
        r = evaluate(gt + fps[:k], gt)
        assert r.fp == k
        assert r.mota == pytest.approx(1 - k / 20, abs=1e-15)
        assert r.mota <= prev
        prev = r.mota


def test_low_overlap_is_miss_plus_fp():
    gt = track(1, [0])
    pred = [(0, 1, (6.0, 0.0, 10.0, 10.0), 0)]  # IoU 4/16 < 0.5
    r = evaluate(pred, gt)
    assert (r.fp, r.fn, r.mota) == (1, 1, -1.0)


def test_class_mismatch_never_matches():
    r = evaluate(track(1, [0], cls=1), track(1, [0], cls=0))
    assert (r.fp, r.fn) == (1, 1)


def test_persistence_beats_better_overlap():
    # gt 1 stays with pred 1 even though pred 2 overlaps better in frame 1
    gt = [(0, 1, (0.0, 0.0, 10.0, 10.0), 0), (1, 1, (0.0, 0.0, 10.0, 10.0), 0)]
    pred = [(0, 1, (0.0, 0.0, 10.0, 10.0), 0), (1, 1, (2.0, 0.0, 10.0, 10.0), 0), (1, 2, (0.0, 0.0, 10.0, 10.0), 0)]
    r = evaluate(pred, gt)
    assert r.idsw == 0 and r.fp == 1


def test_mostly_tracked_and_lost():
    gt = track(1, range(10)) + track(2, range(10), x=50.0) + track(3, range(10), x=100.0)
    pred = track(1, range(8)) + track(2, range(2), x=50.0) + track(3, range(5), x=100.0)
    r = evaluate(pred, gt)
    assert r.mt == pytest.approx(1 / 3) and r.ml == pytest.approx(1 / 3)


def test_empty_gt_is_undefined():
    r = evaluate(track(1, [0]), [])
    assert math.isnan(r.mota) and not r.defined
    data = json.loads(r.to_json())
    assert data["mota"] is None and data["mota_defined"] is False and data["fp"] == 1


def test_accepts_row_objects():
    rows = [Row(t, 1, (0.0, 0.0, 10.0, 10.0)) for t in range(3)]
    assert evaluate(rows, rows).mota == 1.0


@pytest.mark.parametrize("scenario", SCENARIOS)
def test_gt_against_itself(scenario):
    _, gt = generate(scenario, SynthConfig(n_frames=15, n_objects=3, seed=4))
    r = evaluate(gt, gt)
    assert r.mota == 1.0 and r.fp == r.fn == r.idsw == r.frag == 0


def test_deterministic():
    dets, gt = generate("clutter", SynthConfig(n_frames=10, clutter=2.0, noise=3.0, seed=1))
    pred = [Row(r.frame, k % 4, r.box, r.conf, r.class_id) for k, r in enumerate(dets)]
    assert evaluate(pred, gt).to_json() == evaluate(pred, gt).to_json()

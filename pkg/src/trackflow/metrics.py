"""CLEAR-MOT and track-quality metrics."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable

from .geometry import iou

MT_RATIO = 0.8
ML_RATIO = 0.2


@dataclass
class EvalReport:
    mota: float
    motp: float
    mt: float
    ml: float
    idsw: int
    frag: int
    fp: int
    fn: int
    gt_count: int
    matches: int = 0
    gt_tracks: int = 0

    @property
    def defined(self) -> bool:
        return self.gt_count > 0

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("mota", "motp"):
            if isinstance(d[k], float) and math.isnan(d[k]):
                d[k] = None
        d["mota_defined"] = self.defined
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def table(self) -> str:
        cols = [
            ("MOTA", _fmt(self.mota)),
            ("MOTP", _fmt(self.motp)),
            ("MT", _fmt(self.mt)),
            ("ML", _fmt(self.ml)),
            ("IDSW", str(self.idsw)),
            ("FRAG", str(self.frag)),
            ("FP", str(self.fp)),
            ("FN", str(self.fn)),
            ("GT", str(self.gt_count)),
        ]
        widths = [max(len(h), len(v)) for h, v in cols]
        head = "  ".join(h.rjust(w) for (h, _), w in zip(cols, widths))
        row = "  ".join(v.rjust(w) for (_, v), w in zip(cols, widths))
        return head + "\n" + row + "\n"


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.4f}"


def _rows(items) -> list[tuple[int, int, tuple, int]]:
    out = []
    for r in items:
        if isinstance(r, tuple):
            frame, tid, box = r[0], r[1], r[2]
            cls = r[3] if len(r) > 3 else 0
        else:
            frame, tid, box, cls = r.frame, r.track_id, r.box, getattr(r, "class_id", 0)
        out.append((int(frame), int(tid), tuple(box), int(cls)))
    return out


def evaluate(pred_tracks: Iterable, gt_tracks: Iterable, iou_match: float = 0.5) -> EvalReport:
    """Score predicted tracks against ground truth.

    Inputs are rows ``(frame, track_id, box[, class_id])`` or objects with those
    attributes.  Per frame, a ground-truth object keeps its previous partner when
    that prediction is still present with enough overlap; the rest are matched
    greedily by descending IoU.  Only same-class pairs can match.
    """
    pred = _rows(pred_tracks)
    gt = _rows(gt_tracks)
    pred_by_frame: dict[int, list] = {}
    gt_by_frame: dict[int, list] = {}
    for r in pred:
        pred_by_frame.setdefault(r[0], []).append(r)
    for r in gt:
        gt_by_frame.setdefault(r[0], []).append(r)

    last_match: dict[int, int] = {}  # gt id -> pred id of its latest match
    matched_frames: dict[int, int] = {}
    span: dict[int, int] = {}
    status: dict[int, list[bool]] = {}
    fp = fn = idsw = 0
    iou_sum = 0.0
    n_match = 0

    for frame in sorted(set(pred_by_frame) | set(gt_by_frame)):
        gts = sorted(gt_by_frame.get(frame, []), key=lambda r: r[1])
        preds = sorted(pred_by_frame.get(frame, []), key=lambda r: r[1])
        pred_pos = {r[1]: k for k, r in enumerate(preds)}
        used_pred: set[int] = set()
        pairs: dict[int, tuple[int, float]] = {}

        for gk, g in enumerate(gts):
            pid = last_match.get(g[1])
            if pid is None or pid not in pred_pos:
                continue
            p = preds[pred_pos[pid]]
            o = iou(g[2], p[2])
            if p[3] == g[3] and o >= iou_match and pred_pos[pid] not in used_pred:
                pairs[gk] = (pred_pos[pid], o)
                used_pred.add(pred_pos[pid])

        cands = []
        for gk, g in enumerate(gts):
            if gk in pairs:
                continue
            for pk, p in enumerate(preds):
                if pk in used_pred or p[3] != g[3]:
                    continue
                o = iou(g[2], p[2])
                if o >= iou_match:
                    cands.append((-o, gk, pk))
        cands.sort()
        for neg_o, gk, pk in cands:
            if gk in pairs or pk in used_pred:
                continue
            pairs[gk] = (pk, -neg_o)
            used_pred.add(pk)

        for gk, g in enumerate(gts):
            gid = g[1]
            span[gid] = span.get(gid, 0) + 1
            hit = gk in pairs
            status.setdefault(gid, []).append(hit)
            if not hit:
                fn += 1
                continue
            pk, o = pairs[gk]
            pid = preds[pk][1]
            if gid in last_match and last_match[gid] != pid:
                idsw += 1
            last_match[gid] = pid
            matched_frames[gid] = matched_frames.get(gid, 0) + 1
            iou_sum += o
            n_match += 1
        fp += len(preds) - len(used_pred)

    frag = 0
    for seq in status.values():
        seen_match = False
        prev = False
        for hit in seq:
            if hit and not prev and seen_match:
                frag += 1
            seen_match = seen_match or hit
            prev = hit

    gt_count = len(gt)
    n_tracks = len(span)
    ratios = [matched_frames.get(gid, 0) / span[gid] for gid in span]
    mt = sum(r >= MT_RATIO for r in ratios) / n_tracks if n_tracks else 0.0
    ml = sum(r <= ML_RATIO for r in ratios) / n_tracks if n_tracks else 0.0
    mota = 1.0 - (fp + fn + idsw) / gt_count if gt_count else math.nan
    motp = iou_sum / n_match if n_match else math.nan
    return EvalReport(
        mota=mota,
        motp=motp,
        mt=mt,
        ml=ml,
        idsw=idsw,
        frag=frag,
        fp=fp,
        fn=fn,
        gt_count=gt_count,
        matches=n_match,
        gt_tracks=n_tracks,
    )

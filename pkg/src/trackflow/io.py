"""MOT-style CSV sequences.

One row per box: ``frame,id,bb_left,bb_top,bb_width,bb_height,conf,class_id``.
Raw detections carry ``id = -1``.  Extra trailing columns are ignored on input and
a missing (or negative) class column means class 0.  In ground-truth files a row
with ``conf == 0`` is a "don't care" label.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .graph import Detection, FlowSolution, TrackingGraph, flows_to_tracks
from .learning import GTBox


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class Row:
    frame: int
    id: int
    box: tuple[float, float, float, float]
    conf: float = 1.0
    class_id: int = 0

    @property
    def track_id(self) -> int:
        return self.id


def _int(text: str, what: str, lineno: int) -> int:
    try:
        return int(text)
    except ValueError:
        try:
            v = float(text)
        except ValueError:
            raise DataError(f"line {lineno}: bad {what} {text!r}") from None
        if v != int(v):
            raise DataError(f"line {lineno}: {what} {text!r} is not an integer")
        return int(v)


def _float(text: str, what: str, lineno: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(f"line {lineno}: bad {what} {text!r}") from None


def parse_rows(text: str) -> list[Row]:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cols = [c.strip() for c in line.split(",")]
        if len(cols) < 6:
            raise DataError(f"line {lineno}: expected at least 6 columns, got {len(cols)}")
        frame = _int(cols[0], "frame", lineno)
        tid = _int(cols[1], "id", lineno)
        box = tuple(_float(c, "box coordinate", lineno) for c in cols[2:6])
        conf = _float(cols[6], "conf", lineno) if len(cols) > 6 else 1.0
        cls = _int(cols[7], "class", lineno) if len(cols) > 7 else 0
        if frame < 0:
            raise DataError(f"line {lineno}: negative frame")
        if not (box[2] > 0 and box[3] > 0):
            raise DataError(f"line {lineno}: box width and height must be positive")
        rows.append(Row(frame, tid, box, conf, max(cls, 0)))  # type: ignore[arg-type]
    return rows


def format_rows(rows: Iterable[Row]) -> str:
    out = []
    for r in rows:
        l, t, w, h = (repr(float(x)) for x in r.box)
        out.append(f"{r.frame},{r.id},{l},{t},{w},{h},{float(r.conf)!r},{r.class_id}\n")
    return "".join(out)


def read_rows(path) -> list[Row]:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"no such file: {p}")
    return parse_rows(p.read_text())


def write_rows(path, rows: Iterable[Row]) -> None:
    Path(path).write_text(format_rows(rows))


def rows_to_detections(rows: Sequence[Row]) -> list[Detection]:
    """Detections sorted by frame (stable); ids are positions in that order."""
    ordered = sorted(rows, key=lambda r: r.frame)
    return [Detection(id=k, frame=r.frame, box=r.box, class_id=r.class_id, score=r.conf) for k, r in enumerate(ordered)]


def rows_to_gt(rows: Sequence[Row]) -> list[GTBox]:
    return [GTBox(r.frame, r.id, r.box, r.class_id, ignore=(r.conf == 0)) for r in rows]


def gt_to_rows(gt: Sequence[GTBox]) -> list[Row]:
    return [Row(b.frame, b.track_id, b.box, 0.0 if b.ignore else 1.0, b.class_id) for b in gt]


def detections_to_rows(dets: Sequence[Detection]) -> list[Row]:
    return [Row(d.frame, -1, d.box, d.score, d.class_id) for d in dets]


def flow_to_rows(g: TrackingGraph, f: FlowSolution) -> list[Row]:
    """Predicted tracks as rows, ids 1..n in track order, sorted by (frame, id)."""
    rows = []
    for k, track in enumerate(flows_to_tracks(g, f), 1):
        for i in track:
            d = g.detections[i]
            rows.append(Row(d.frame, k, d.box, d.score, d.class_id))
    rows.sort(key=lambda r: (r.frame, r.id))
    return rows

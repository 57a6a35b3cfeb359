"""End-to-end helpers shared by the command-line tools and the acceptance tests."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

from .config import RunConfig
from .features import WeightVector, assign_costs
from .graph import FlowSolution, TrackingGraph, build_graph, objective
from .io import Row, flow_to_rows, rows_to_detections, rows_to_gt
from .learning import TrainLog, partition_subsequences, train
from .metrics import EvalReport, evaluate
from .solvers import solve

log = logging.getLogger(__name__)


@dataclass
class TrackResult:
    graph: TrackingGraph
    flow: FlowSolution
    rows: list[Row]
    objective: float


def track(det_rows: Sequence[Row], w: WeightVector, cfg: RunConfig, solver: str | None = None) -> TrackResult:
    solver = solver or cfg.solver
    if w.layout != cfg.layout:
        raise ValueError(f"weight layout {w.layout} does not match config layout {cfg.layout}")
    g = assign_costs(build_graph(rows_to_detections(det_rows), cfg.graph), w)
    if solver == "ssp" and g.has_quadratic():
        raise ValueError("ssp solver requires a model without pairwise weights")
    f = solve(g, solver, caching=cfg.caching)
    obj = objective(g, f)
    log.info("solver %s: objective %.6f, %d tracks", solver, obj, f.n_tracks())
    return TrackResult(g, f, flow_to_rows(g, f), obj)


def train_videos(videos: Sequence[tuple[Sequence[Row], Sequence[Row]]], cfg: RunConfig, tlog: TrainLog | None = None) -> WeightVector:
    """Train on ``(detection rows, ground-truth rows)`` pairs split into subsequences."""
    if not videos:
        raise ValueError("need at least one training video")
    samples = []
    for det_rows, gt_rows in videos:
        samples += partition_subsequences(
            rows_to_detections(det_rows), rows_to_gt(gt_rows), cfg.layout, cfg.train, cfg.graph
        )
    samples = [s for s in samples if s.graph.n_nodes > 0]
    if not samples:
        raise ValueError("training videos contain no detections")
    return train(samples, cfg.layout, cfg.train, tlog)


def evaluate_rows(pred: Sequence[Row], gt: Sequence[Row]) -> EvalReport:
    return evaluate(pred, [r for r in gt if r.conf != 0])


def cross_validate(
    videos: Sequence[tuple[Sequence[Row], Sequence[Row]]], cfg: RunConfig, grid: Sequence[float]
) -> tuple[float, dict]:
    """Leave-one-video-out selection of C by mean held-out MOTA (ties: smaller C)."""
    if len(videos) < 2:
        raise ValueError("cross-validation needs at least two videos")
    report: dict = {"grid": [float(c) for c in grid], "folds": {}}
    best_c, best_score = None, None
    for c in grid:
        run = replace(cfg, C=float(c))
        scores = []
        for k in range(len(videos)):
            w = train_videos([v for j, v in enumerate(videos) if j != k], run)
            res = track(videos[k][0], w, run)
            scores.append(evaluate_rows(res.rows, videos[k][1]).mota)
        mean = sum(scores) / len(scores)
        report["folds"][repr(float(c))] = {"mota": scores, "mean_mota": mean}
        if best_score is None or mean > best_score or (mean == best_score and c < best_c):
            best_c, best_score = float(c), mean
    report["selected_C"] = best_c
    return best_c, report

"""Seeded synthetic scenes with constant-velocity ground truth.

All randomness comes from ``numpy.random.Generator(PCG64(seed))`` so fixtures are
reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import Row

SCENARIOS = ("linear-tracks", "crossing", "co-occurrence", "mutual-exclusion", "clutter")

BOX_W, BOX_H = 40.0, 80.0


@dataclass
class SynthConfig:
    n_frames: int = 30
    n_objects: int = 3
    noise: float = 0.0  # std of box jitter, pixels
    drop: float = 0.0  # per-box miss probability
    clutter: float = 0.0  # expected false positives per frame
    score_true: float = 2.0
    score_false: float = 0.0
    score_std: float = 0.3
    seed: int = 0


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class _Object:
    track_id: int
    class_id: int
    x0: float
    y0: float
    vx: float
    vy: float
    truth: bool = True  # False: a persistent false track (appears in detections only)
    score_mean: float | None = None
    anchor: "_Object | None" = None
    offset: tuple[float, float] = (0.0, 0.0)

    def box(self, t: int) -> tuple[float, float, float, float]:
        if self.anchor is not None:
            bx, by, _, _ = self.anchor.box(t)
            return (bx + self.offset[0], by + self.offset[1], BOX_W, BOX_H)
        return (self.x0 + self.vx * t, self.y0 + self.vy * t, BOX_W, BOX_H)


def _objects(scenario: str, cfg: SynthConfig, rng: np.random.Generator) -> list[_Object]:
    n = cfg.n_objects
    objs: list[_Object] = []
    if scenario in ("linear-tracks", "clutter"):
        for k in range(n):
            objs.append(_Object(k + 1, 0, 60.0 + 140.0 * k, 80.0 + rng.uniform(-10, 10), rng.uniform(-1, 1), rng.uniform(0.5, 2.0)))
    elif scenario == "crossing":
        span = 8.0 * cfg.n_frames
        objs.append(_Object(1, 0, 100.0, 200.0, span / max(cfg.n_frames - 1, 1), 0.0))
        objs.append(_Object(2, 0, 100.0 + span, 200.0, -span / max(cfg.n_frames - 1, 1), 0.0))
    elif scenario == "co-occurrence":
        # class-0 anchors with a class-1 companion 200px to the right ("near");
        # equally scored class-1 false tracks far away on the right
        for k in range(n):
            a = _Object(2 * k + 1, 0, 80.0 + rng.uniform(-10, 10), 60.0 + 220.0 * k, rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
            objs.append(a)
            objs.append(_Object(2 * k + 2, 1, 0, 0, 0, 0, score_mean=cfg.score_true - 1.0, anchor=a, offset=(200.0, 0.0)))
        for k in range(n):
            objs.append(
                _Object(1000 + k, 1, 900.0 + rng.uniform(-10, 10), 60.0 + 220.0 * k, rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                        truth=False, score_mean=cfg.score_true - 1.0)
            )
    elif scenario == "mutual-exclusion":
        # class-0 objects each shadowed by an overlapping class-1 false detection;
        # genuine class-1 objects far away carry the same score distribution
        for k in range(n):
            a = _Object(2 * k + 1, 0, 80.0 + rng.uniform(-10, 10), 60.0 + 220.0 * k, rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
            objs.append(a)
            objs.append(_Object(1000 + k, 1, 0, 0, 0, 0, truth=False, score_mean=cfg.score_true - 1.0, anchor=a, offset=(8.0, 0.0)))
            objs.append(
                _Object(2 * k + 2, 1, 900.0 + rng.uniform(-10, 10), 60.0 + 220.0 * k, rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                        score_mean=cfg.score_true - 1.0)
            )
    else:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    return objs


def generate(scenario: str, cfg: SynthConfig = SynthConfig()) -> tuple[list[Row], list[Row]]:
    """Return ``(detections, ground_truth)`` rows for one synthetic video."""
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    rng = _rng(cfg.seed)
    objs = _objects(scenario, cfg, rng)
    dets: list[Row] = []
    gt: list[Row] = []
    for t in range(cfg.n_frames):
        for o in objs:
            box = o.box(t)
            if o.truth:
                gt.append(Row(t, o.track_id, box, 1.0, o.class_id))
            if cfg.drop > 0 and rng.random() < cfg.drop:
                continue
            jitter = rng.normal(0.0, cfg.noise, size=2) if cfg.noise > 0 else np.zeros(2)
            mean = o.score_mean if o.score_mean is not None else (cfg.score_true if o.truth else cfg.score_false)
            score = float(rng.normal(mean, cfg.score_std))
            dets.append(Row(t, -1, (float(box[0] + jitter[0]), float(box[1] + jitter[1]), BOX_W, BOX_H), round(score, 6), o.class_id))
        if cfg.clutter > 0:
            for _ in range(int(rng.poisson(cfg.clutter))):
                x = float(rng.uniform(0, 1200))
                y = float(rng.uniform(0, 640))
                score = float(rng.normal(cfg.score_false, cfg.score_std))
                dets.append(Row(t, -1, (round(x, 3), round(y, 3), BOX_W, BOX_H), round(score, 6), 0))
    dets = [Row(r.frame, r.id, tuple(round(v, 3) for v in r.box), r.conf, r.class_id) for r in dets]  # type: ignore[misc]
    gt = [Row(r.frame, r.id, tuple(round(v, 3) for v in r.box), r.conf, r.class_id) for r in gt]  # type: ignore[misc]
    return dets, gt


def n_classes(scenario: str) -> int:
    return 2 if scenario in ("co-occurrence", "mutual-exclusion") else 1

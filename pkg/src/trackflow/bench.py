"""Runtime and optimality-gap harness for the flow solvers."""

from __future__ import annotations

import time
from typing import Sequence

import numpy as np

from .features import FeatureLayout, WeightVector, assign_costs
from .geometry import STRICT_OVERLAP
from .graph import GraphConfig, TrackingGraph, build_graph, make_graph, objective
from .io import rows_to_detections
from .solvers import brute_force, solve_dp1, solve_dp2, solve_ssp
from .synth import SynthConfig, generate


def hand_weights(layout: FeatureLayout, overlap_penalty: float = 0.0) -> WeightVector:
    """Plain weights that track the synthetic scenes well: confident detections are
    cheap, births and deaths cost 1, longer or looser links cost a little more."""
    w = WeightVector.zeros(layout)
    w.w_app[:, 0] = -1.0
    w.block("birth")[0] = 1.0
    w.block("death")[0] = 1.0
    for gap in range(1, layout.max_gap + 1):
        w.w_trans[(gap - 1) * 2] = 0.1 * (gap - 1)
        w.w_trans[(gap - 1) * 2 + 1] = 0.1 * (gap - 1) + 0.5
    if overlap_penalty:
        w.w_pair[:, :, STRICT_OVERLAP] = overlap_penalty
    return w


def random_instance(rng: np.random.Generator, max_nodes: int = 12, quadratic: bool = True, integer: bool = False,
                    max_frames: int = 5, edge_prob: float = 0.5, pair_prob: float = 0.7) -> TrackingGraph:
    """Random layered graph; linear costs U[-2, 1] (or integers in [-4, 2]), q ~ U[-1, 1]."""
    n = int(rng.integers(1, max_nodes + 1))
    n_frames = int(rng.integers(2, max_frames + 1))
    frames = np.sort(rng.integers(0, n_frames, size=n))
    edges = [(i, j) for i in range(n) for j in range(n) if frames[i] < frames[j] <= frames[i] + 2 and rng.random() < edge_prob]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if frames[i] == frames[j] and rng.random() < pair_prob]

    def lin(k):
        if integer:
            return rng.integers(-4, 3, size=k).astype(np.float64)
        return rng.uniform(-2.0, 1.0, size=k)

    q = rng.uniform(-1.0, 1.0, size=len(pairs)) if quadratic else np.zeros(len(pairs))
    return make_graph(frames.tolist(), edges, pairs, c_det=lin(n), c_birth=lin(n), c_death=lin(n),
                      c_trans=lin(len(edges)), q_pair=q, max_gap=2)


def scene_graph(n_frames: int, n_objects: int = 6, clutter: float = 2.0, seed: int = 0,
                overlap_penalty: float = 1.0) -> TrackingGraph:
    dets, _ = generate("clutter", SynthConfig(n_frames=n_frames, n_objects=n_objects, noise=2.0, drop=0.1,
                                              clutter=clutter, seed=seed))
    layout = FeatureLayout(K=1, max_gap=8)
    g = build_graph(rows_to_detections(dets), GraphConfig(max_gap=8))
    return assign_costs(g, hand_weights(layout, overlap_penalty))


def _timed(fn, *args, **kwargs):
    t = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t


def run_bench(sizes: Sequence[int] = (25, 50, 100, 200), n_objects: int = 6, clutter: float = 2.0, seed: int = 0,
              oracle_trials: int = 50, oracle_nodes: int = 12) -> dict:
    """Time every solver on scenes of increasing length and tabulate greedy-vs-exact gaps."""
    runs = []
    for n_frames in sizes:
        g = scene_graph(n_frames, n_objects, clutter, seed)
        row = {"frames": n_frames, "nodes": g.n_nodes, "transitions": len(g.transitions), "pairs": len(g.pairs)}
        f, row["time_ssp"] = _timed(solve_ssp, g, ignore_quadratic=True)
        row["objective_ssp"] = objective(g, f)
        for name, fn in (("dp1", solve_dp1), ("dp2", solve_dp2)):
            f, row[f"time_{name}"] = _timed(fn, g, caching=False)
            fc, row[f"time_{name}_cached"] = _timed(fn, g, caching=True)
            row[f"objective_{name}"] = objective(g, f)
            row[f"cache_identical_{name}"] = bool(f == fc)
        runs.append(row)

    fit = {}
    if len(runs) >= 2:
        x = np.log([r["nodes"] for r in runs])
        for name in ("ssp", "dp1", "dp2"):
            y = np.log([max(r[f"time_{name}"], 1e-9) for r in runs])
            fit[name] = float(np.polyfit(x, y, 1)[0])

    rng = np.random.Generator(np.random.PCG64(seed))
    gaps = []
    for trial in range(oracle_trials):
        g = random_instance(rng, max_nodes=oracle_nodes)
        opt = objective(g, brute_force(g))
        o1 = objective(g, solve_dp1(g))
        o2 = objective(g, solve_dp2(g))
        gaps.append({
            "trial": trial,
            "nodes": g.n_nodes,
            "oracle": opt,
            "dp1": o1,
            "dp2": o2,
            "gap_dp1": (o1 - opt) / abs(opt) if opt else 0.0,
            "gap_dp2": (o2 - opt) / abs(opt) if opt else 0.0,
        })
    summary = {
        "median_gap_dp1": float(np.median([r["gap_dp1"] for r in gaps])) if gaps else None,
        "median_gap_dp2": float(np.median([r["gap_dp2"] for r in gaps])) if gaps else None,
        "mean_dp1": float(np.mean([r["dp1"] for r in gaps])) if gaps else None,
        "mean_dp2": float(np.mean([r["dp2"] for r in gaps])) if gaps else None,
    }
    return {"runs": runs, "time_exponent": fit, "oracle_gaps": gaps, "oracle_summary": summary}

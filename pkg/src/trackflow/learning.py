"""Structured SVM training of all cost weights.

Ground-truth boxes are mapped onto flows, a decomposable tracking loss is built per
graph, and a one-slack cutting-plane loop adds one summed constraint per round.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .features import FeatureLayout, GraphFeatures, WeightVector
from .geometry import interpolate, iou
from .graph import Detection, FlowSolution, GraphConfig, TrackingGraph, build_graph, check_flow, flows_to_tracks, tracks_to_flows
from .solvers import SolverError, solve

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GTBox:
    frame: int
    track_id: int
    box: tuple[float, float, float, float]
    class_id: int = 0
    ignore: bool = False  # "don't care" label


@dataclass
class TrainConfig:
    C: float = 1.0
    max_rounds: int = 100
    tol: float = 1e-4
    solver: str = "dp2"
    use_pairwise: bool = True
    gt_iou: float = 0.5
    virtual_iou: float = 0.5
    subseq_len: int = 10
    subseq_overlap: int = 5


# --------------------------------------------------------------------------
# ground truth


def remove_ambiguous(detections: Sequence[Detection], gt: Sequence[GTBox], gt_iou: float = 0.5) -> list[Detection]:
    """Drop detections that match an ignored ground-truth box in their frame."""
    ignored: dict[int, list[GTBox]] = {}
    for b in gt:
        if b.ignore:
            ignored.setdefault(b.frame, []).append(b)
    return [d for d in detections if not any(iou(d.box, b.box) >= gt_iou for b in ignored.get(d.frame, ()))]


def claim_detections(g: TrackingGraph, gt: Sequence[GTBox], gt_iou: float = 0.5) -> list[int]:
    """Per-node ground-truth identity (-1 for none).

    Within each frame the highest-scoring detection overlapping a ground-truth box
    claims it; conflicts are resolved greedily by (score, overlap).
    """
    by_frame: dict[int, list[GTBox]] = {}
    for b in gt:
        if not b.ignore:
            by_frame.setdefault(b.frame, []).append(b)
    identity = [-1] * g.n_nodes
    nodes_by_frame: dict[int, list[int]] = {}
    for i, d in enumerate(g.detections):
        nodes_by_frame.setdefault(d.frame, []).append(i)
    for frame, boxes in sorted(by_frame.items()):
        cands = []
        for i in nodes_by_frame.get(frame, ()):
            d = g.detections[i]
            for k, b in enumerate(boxes):
                if b.class_id != d.class_id:
                    continue
                o = iou(d.box, b.box)
                if o >= gt_iou:
                    cands.append((-d.score, -o, i, k))
        cands.sort()
        used_gt = set()
        for _, _, i, k in cands:
            if identity[i] >= 0 or k in used_gt:
                continue
            identity[i] = boxes[k].track_id
            used_gt.add(k)
    return identity


def map_ground_truth(g: TrackingGraph, gt: Sequence[GTBox], gt_iou: float = 0.5) -> FlowSolution:
    """Ground-truth flow: per identity, the edge-connected path over claimed detections
    that covers the most of them."""
    identity = claim_detections(g, gt, gt_iou)
    members: dict[int, list[int]] = {}
    for i, tid in enumerate(identity):
        if tid >= 0:
            members.setdefault(tid, []).append(i)
    tracks = []
    for tid in sorted(members):
        nodes = members[tid]
        member = set(nodes)
        length: dict[int, int] = {}
        prev: dict[int, int] = {}
        for i in nodes:
            best, bj = 1, -1
            for j, _ in g.adj.incoming[i]:
                if j in member and length[j] + 1 > best:
                    best, bj = length[j] + 1, j
            length[i], prev[i] = best, bj
        end = max(nodes, key=lambda i: (length[i], -i))
        path = [end]
        while prev[path[-1]] >= 0:
            path.append(prev[path[-1]])
        tracks.append(path[::-1])
    return tracks_to_flows(g, tracks)


# --------------------------------------------------------------------------
# loss


@dataclass
class LossVector:
    l_det: np.ndarray
    l_trans: np.ndarray
    l_birth: np.ndarray
    l_death: np.ndarray

    def loss(self, gt: FlowSolution, f: FlowSolution) -> float:
        """Weighted Hamming distance between ``gt`` and ``f``."""
        total = 0.0
        for l, a, b in (
            (self.l_det, gt.det, f.det),
            (self.l_trans, gt.trans, f.trans),
            (self.l_birth, gt.birth, f.birth),
            (self.l_death, gt.death, f.death),
        ):
            total += float(l @ np.abs(a.astype(np.int64) - b.astype(np.int64)))
        return total

    @classmethod
    def zeros(cls, g: TrackingGraph) -> LossVector:
        n, m = g.n_nodes, len(g.transitions)
        return cls(np.zeros(n), np.zeros(m), np.zeros(n), np.zeros(n))


TRANSITION_CATEGORIES = ("NN", "PN", "NP", "PP-", "PP+")


def count_virtual(g: TrackingGraph, e: int, gt_by_frame: dict[int, list[tuple]], virtual_iou: float = 0.5) -> tuple[int, int]:
    """(true, false) counts of boxes interpolated strictly inside transition ``e``."""
    t = g.transitions[e]
    a, b = g.detections[t.src], g.detections[t.dst]
    n_true = n_false = 0
    for k in range(1, t.gap):
        box = interpolate(a.box, b.box, k / t.gap)
        if any(iou(box, gb) >= virtual_iou for gb in gt_by_frame.get(a.frame + k, ())):
            n_true += 1
        else:
            n_false += 1
    return n_true, n_false


def transition_category(src_id: int, dst_id: int) -> str:
    if src_id < 0 and dst_id < 0:
        return "NN"
    if dst_id < 0:
        return "PN"
    if src_id < 0:
        return "NP"
    return "PP+" if src_id == dst_id else "PP-"


def transition_loss(category: str, n_true: int, n_false: int) -> float:
    return {
        "NN": n_true + n_false,
        "PN": n_true + n_false + 1,
        "NP": n_true + n_false + 1,
        "PP-": n_true + n_false + 2,
        "PP+": n_true,
    }[category]


def build_loss(g: TrackingGraph, gt_flow: FlowSolution, gt: Sequence[GTBox], cfg: TrainConfig = TrainConfig()) -> LossVector:
    check_flow(g, gt_flow)
    n = g.n_nodes
    identity = [-1] * n
    for k, track in enumerate(flows_to_tracks(g, gt_flow)):
        for i in track:
            identity[i] = k
    gt_by_frame: dict[int, list[tuple]] = {}
    for b in gt:
        if not b.ignore:
            gt_by_frame.setdefault(b.frame, []).append(b.box)
    l_trans = np.zeros(len(g.transitions))
    for e, t in enumerate(g.transitions):
        cat = transition_category(identity[t.src], identity[t.dst])
        l_trans[e] = transition_loss(cat, *count_virtual(g, e, gt_by_frame, cfg.virtual_iou))
    return LossVector(np.ones(n), l_trans, np.ones(n), np.ones(n))


# --------------------------------------------------------------------------
# loss-augmented inference


@dataclass
class TrainingSample:
    graph: TrackingGraph
    gt_flow: FlowSolution
    loss: LossVector
    feats: GraphFeatures = field(repr=False)
    psi_gt: np.ndarray = field(repr=False)

    @classmethod
    def create(cls, g: TrackingGraph, gt_flow: FlowSolution, loss: LossVector, layout: FeatureLayout) -> TrainingSample:
        check_flow(g, gt_flow)
        feats = GraphFeatures(g, layout)
        return cls(g, gt_flow, loss, feats, feats.feature_sum(gt_flow))


def augmented_graph(g: TrackingGraph, loss: LossVector, gt_flow: FlowSolution) -> tuple[TrackingGraph, float]:
    """Costs shifted so that minimizing gives ``argmin cost(f) - L(gt, f)``.

    ``|gt - f| = gt + (1 - 2 gt) f`` for binary values, so each element cost drops
    by ``l * (1 - 2 gt)`` and ``-sum(l * gt)`` is returned as the constant.
    """
    shifted = {}
    const = 0.0
    for name, lname, gname in (
        ("c_det", "l_det", "det"),
        ("c_trans", "l_trans", "trans"),
        ("c_birth", "l_birth", "birth"),
        ("c_death", "l_death", "death"),
    ):
        l = getattr(loss, lname)
        y = getattr(gt_flow, gname).astype(np.float64)
        shifted[name] = getattr(g, name) - l * (1.0 - 2.0 * y)
        const -= float(l @ y)
    return g.with_costs(**shifted), const


def loss_augmented_infer(
    g: TrackingGraph,
    w: WeightVector,
    loss: LossVector,
    gt_flow: FlowSolution,
    solver: str = "dp2",
    feats: GraphFeatures | None = None,
) -> tuple[FlowSolution, float]:
    """Most violated flow under ``w`` and its violation ``L - w.(psi(f) - psi(gt))``."""
    feats = feats or GraphFeatures(g, w.layout)
    costed = g.with_costs(**feats.costs(w))
    if solver == "ssp" and costed.has_quadratic():
        raise SolverError("ssp inference requires zero pairwise weights")
    aug, _ = augmented_graph(costed, loss, gt_flow)
    f = solve(aug, solver)
    dpsi = feats.feature_sum(f) - feats.feature_sum(gt_flow)
    return f, loss.loss(gt_flow, f) - float(w.vector @ dpsi)


# --------------------------------------------------------------------------
# cutting plane


def solve_master_dual(A: np.ndarray, b: np.ndarray, C: float, alpha: np.ndarray | None = None, tol: float = 1e-12, max_iter: int = 200000):
    """Dual of ``min 1/2|w|^2 + C xi  s.t.  w.a_k >= b_k - xi, xi >= 0``.

    Multipliers live on the simplex ``{alpha >= 0, sum alpha = C}`` after adding a
    zero constraint for ``xi >= 0``; solved by pairwise coordinate ascent with exact
    line search.  Returns ``(w, alpha, xi)``; ``alpha`` excludes the dummy entry.
    """
    k = len(b)
    Ap = np.vstack([np.zeros((1, A.shape[1])), A]) if k else np.zeros((1, A.shape[1]))
    bp = np.concatenate([[0.0], b])
    G = Ap @ Ap.T
    a = np.zeros(k + 1)
    if alpha is not None and len(alpha) == k and alpha.sum() <= C:
        a[1:] = alpha
        a[0] = C - alpha.sum()
    else:
        a[0] = C
    grad = bp - G @ a
    scale = max(1.0, float(np.abs(bp).max()) * C)
    for _ in range(max_iter):
        i = int(np.argmax(grad))
        support = np.nonzero(a > 0)[0]
        j = int(support[np.argmin(grad[support])])
        gap = float(a @ (grad[i] - grad))
        if grad[i] - grad[j] <= 0 or gap <= tol * scale:
            break
        curv = G[i, i] + G[j, j] - 2 * G[i, j]
        t = a[j] if curv <= 0 else min(a[j], (grad[i] - grad[j]) / curv)
        a[i] += t
        a[j] -= t
        if a[j] < 1e-300:
            a[j] = 0.0
        grad -= t * (G[:, i] - G[:, j])
    w = Ap.T @ a
    xi = max(0.0, float(np.max(bp - Ap @ w)))
    return w, a[1:], xi


@dataclass
class TrainLog:
    objective: list[float] = field(default_factory=list)
    violation: list[float] = field(default_factory=list)
    slack: list[float] = field(default_factory=list)
    constraints: list[tuple[np.ndarray, float]] = field(default_factory=list)
    converged: bool = False


def train(
    samples: Sequence[TrainingSample],
    layout: FeatureLayout,
    cfg: TrainConfig = TrainConfig(),
    log_out: TrainLog | None = None,
) -> WeightVector:
    """One-slack cutting-plane structured SVM; returns the learned weights."""
    if not samples:
        raise ValueError("train needs at least one sample")
    if cfg.C <= 0:
        raise ValueError("C must be positive")
    tlog = log_out if log_out is not None else TrainLog()
    pair = layout.slices()["pair"]
    w = WeightVector.zeros(layout)
    A: list[np.ndarray] = []
    b: list[float] = []
    alpha = None
    xi = 0.0
    for rnd in range(cfg.max_rounds):
        dpsi = np.zeros(layout.dim)
        total_loss = 0.0
        for s in samples:
            f, _ = loss_augmented_infer(s.graph, w, s.loss, s.gt_flow, cfg.solver, s.feats)
            dpsi += s.feats.feature_sum(f) - s.psi_gt
            total_loss += s.loss.loss(s.gt_flow, f)
        if not cfg.use_pairwise:
            dpsi[pair] = 0.0
        violation = total_loss - float(w.vector @ dpsi)
        tlog.violation.append(violation)
        if violation <= xi + cfg.tol:
            tlog.converged = True
            break
        A.append(dpsi)
        b.append(total_loss)
        tlog.constraints.append((dpsi, total_loss))
        wv, alpha, xi = solve_master_dual(np.array(A), np.array(b), cfg.C, alpha)
        w = WeightVector(layout, wv)
        obj = 0.5 * float(wv @ wv) + cfg.C * xi
        tlog.objective.append(obj)
        tlog.slack.append(xi)
        log.info("round %d: violation %.6g, slack %.6g, objective %.6g", rnd, violation, xi, obj)
    return w


# --------------------------------------------------------------------------
# subsequences


def subsequence_windows(first_frame: int, last_frame: int, length: int = 10, overlap: int = 5) -> list[tuple[int, int]]:
    """Half-open frame windows; stops once a window reaches the last frame."""
    if not length > overlap >= 0:
        raise ValueError("need length > overlap >= 0")
    n = last_frame - first_frame + 1
    out = []
    start = 0
    while True:
        end = min(start + length, n)
        if end - start >= 2:
            out.append((first_frame + start, first_frame + end))
        if start + length >= n:
            break
        start += length - overlap
    return out


def partition_subsequences(
    detections: Sequence[Detection],
    gt: Sequence[GTBox],
    layout: FeatureLayout,
    cfg: TrainConfig = TrainConfig(),
    graph_cfg: GraphConfig = GraphConfig(),
) -> list[TrainingSample]:
    """Split one video into overlapping windows, each with its own graph, ground-truth
    flow and loss.  Detections matching ignored labels are removed first."""
    frames = [d.frame for d in detections] + [b.frame for b in gt]
    if not frames:
        return []
    dets = remove_ambiguous(detections, gt, cfg.gt_iou)
    samples = []
    for lo, hi in subsequence_windows(min(frames), max(frames), cfg.subseq_len, cfg.subseq_overlap):
        wd = [d for d in dets if lo <= d.frame < hi]
        wg = [b for b in gt if lo <= b.frame < hi]
        g = build_graph(wd, graph_cfg)
        gt_flow = map_ground_truth(g, wg, cfg.gt_iou)
        loss = build_loss(g, gt_flow, wg, cfg)
        samples.append(TrainingSample.create(g, gt_flow, loss, layout))
    return samples

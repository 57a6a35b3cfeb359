"""Tracking graph construction, flow solutions and the quadratic flow objective."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .geometry import FAR, iou, spatial_relation

INF = 1e18


class FlowError(ValueError):
    """Raised when a flow violates conservation or is not binary."""


@dataclass(frozen=True)
class Detection:
    id: int
    frame: int
    box: tuple[float, float, float, float]
    class_id: int = 0
    score: float = 0.0

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError(f"detection {self.id}: negative frame {self.frame}")
        if not (self.box[2] > 0 and self.box[3] > 0):
            raise ValueError(f"detection {self.id}: non-positive box size {self.box}")
        if self.class_id < 0:
            raise ValueError(f"detection {self.id}: negative class id")


@dataclass(frozen=True)
class TransitionEdge:
    src: int
    dst: int
    gap: int
    iou: float


@dataclass(frozen=True)
class PairwiseEdge:
    a: int
    b: int
    relation: int
    # relation of a as seen from b; computed directly since strict overlap is not symmetric
    relation_ba: int = 0


@dataclass(frozen=True)
class GraphConfig:
    max_gap: int = 8
    iou_link_threshold: float = 0.3
    prune_far_pairs: bool = True
    same_class_links: bool = True

    def __post_init__(self):
        if self.max_gap < 1:
            raise ValueError("max_gap must be >= 1")
        if not 0.0 <= self.iou_link_threshold < 1.0:
            raise ValueError("iou_link_threshold must lie in [0, 1)")


class Adjacency:
    """Index lists shared by every cost assignment of one graph structure."""

    def __init__(self, n: int, transitions: Sequence[TransitionEdge], pairs: Sequence[PairwiseEdge]):
        self.incoming: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        self.outgoing: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        self.neighbors: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        self.edge_index: dict[tuple[int, int], int] = {}
        for e, t in enumerate(transitions):
            self.incoming[t.dst].append((t.src, e))
            self.outgoing[t.src].append((t.dst, e))
            self.edge_index[(t.src, t.dst)] = e
        for lst in self.incoming:
            lst.sort()
        for lst in self.outgoing:
            lst.sort()
        for p, pe in enumerate(pairs):
            self.neighbors[pe.a].append((pe.b, p))
            self.neighbors[pe.b].append((pe.a, p))
        for lst in self.neighbors:
            lst.sort()


@dataclass(eq=False)
class TrackingGraph:
    """Nodes, transition edges, same-frame pairs and their cost coefficients.

    Treated as immutable once built; :meth:`with_costs` returns a copy that shares
    the structure.
    """

    detections: list[Detection]
    transitions: list[TransitionEdge]
    pairs: list[PairwiseEdge]
    c_det: np.ndarray
    c_birth: np.ndarray
    c_death: np.ndarray
    c_trans: np.ndarray
    q_pair: np.ndarray
    max_gap: int = 8
    adj: Adjacency = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        n, m, p = len(self.detections), len(self.transitions), len(self.pairs)
        for name, arr, size in (
            ("c_det", self.c_det, n),
            ("c_birth", self.c_birth, n),
            ("c_death", self.c_death, n),
            ("c_trans", self.c_trans, m),
            ("q_pair", self.q_pair, p),
        ):
            if np.shape(arr) != (size,):
                raise ValueError(f"{name} has shape {np.shape(arr)}, expected ({size},)")
        if self.adj is None:
            frames = [d.frame for d in self.detections]
            for t in self.transitions:
                if not (0 <= t.src < n and 0 <= t.dst < n) or frames[t.src] >= frames[t.dst]:
                    raise ValueError(f"invalid transition {t}")
            for pe in self.pairs:
                if not (0 <= pe.a < pe.b < n) or frames[pe.a] != frames[pe.b]:
                    raise ValueError(f"invalid pairwise edge {pe}")
            self.adj = Adjacency(n, self.transitions, self.pairs)

    @property
    def n_nodes(self) -> int:
        return len(self.detections)

    @property
    def frames(self) -> np.ndarray:
        return np.array([d.frame for d in self.detections], dtype=np.int64)

    def with_costs(self, c_det=None, c_birth=None, c_death=None, c_trans=None, q_pair=None) -> TrackingGraph:
        def pick(new, old):
            return old.copy() if new is None else np.asarray(new, dtype=np.float64).copy()

        return replace(
            self,
            c_det=pick(c_det, self.c_det),
            c_birth=pick(c_birth, self.c_birth),
            c_death=pick(c_death, self.c_death),
            c_trans=pick(c_trans, self.c_trans),
            q_pair=pick(q_pair, self.q_pair),
        )

    def has_quadratic(self) -> bool:
        return bool(np.any(self.q_pair != 0.0))


@dataclass
class FlowSolution:
    det: np.ndarray
    trans: np.ndarray
    birth: np.ndarray
    death: np.ndarray

    @classmethod
    def empty(cls, g: TrackingGraph) -> FlowSolution:
        n, m = g.n_nodes, len(g.transitions)
        z = lambda k: np.zeros(k, dtype=np.int8)  # noqa: E731
        return cls(z(n), z(m), z(n), z(n))

    def copy(self) -> FlowSolution:
        return FlowSolution(self.det.copy(), self.trans.copy(), self.birth.copy(), self.death.copy())

    def vector(self) -> np.ndarray:
        """Concatenation ``(det, trans, birth, death)``; defines the lexicographic order."""
        return np.concatenate([self.det, self.trans, self.birth, self.death]).astype(np.int8)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FlowSolution):
            return NotImplemented
        return all(
            np.array_equal(a, b)
            for a, b in zip(
                (self.det, self.trans, self.birth, self.death),
                (other.det, other.trans, other.birth, other.death),
            )
        )

    def n_tracks(self) -> int:
        return int(self.birth.sum())


Track = list  # ordered node indices, strictly increasing frames


def _check_sorted(detections: Sequence[Detection]) -> None:
    seen = set()
    prev = None
    for d in detections:
        if d.id in seen:
            raise ValueError(f"duplicate detection id {d.id}")
        seen.add(d.id)
        key = (d.frame, d.id)
        if prev is not None and key < prev:
            raise ValueError("detections must be sorted by (frame, id)")
        prev = key


def build_graph(detections: Sequence[Detection], cfg: GraphConfig = GraphConfig()) -> TrackingGraph:
    """Build transition edges and same-frame pairs; all costs start at zero."""
    detections = list(detections)
    _check_sorted(detections)
    n = len(detections)
    by_frame: dict[int, list[int]] = {}
    for i, d in enumerate(detections):
        by_frame.setdefault(d.frame, []).append(i)

    transitions = []
    for i, di in enumerate(detections):
        for gap in range(1, cfg.max_gap + 1):
            for j in by_frame.get(di.frame + gap, ()):
                dj = detections[j]
                if cfg.same_class_links and dj.class_id != di.class_id:
                    continue
                o = iou(di.box, dj.box)
                if o > cfg.iou_link_threshold:
                    transitions.append(TransitionEdge(i, j, gap, o))
    transitions.sort(key=lambda t: (t.src, t.dst))

    pairs = []
    for frame in sorted(by_frame):
        idx = by_frame[frame]
        for u, a in enumerate(idx):
            for b in idx[u + 1:]:
                rel = spatial_relation(detections[a].box, detections[b].box)
                rel_ba = spatial_relation(detections[b].box, detections[a].box)
                if cfg.prune_far_pairs and rel == FAR:
                    continue
                pairs.append(PairwiseEdge(a, b, rel, rel_ba))

    return TrackingGraph(
        detections=detections,
        transitions=transitions,
        pairs=pairs,
        c_det=np.zeros(n),
        c_birth=np.zeros(n),
        c_death=np.zeros(n),
        c_trans=np.zeros(len(transitions)),
        q_pair=np.zeros(len(pairs)),
        max_gap=cfg.max_gap,
    )


def make_graph(
    frames: Sequence[int],
    edges: Iterable[tuple[int, int]],
    pairs: Iterable[tuple[int, int]] = (),
    *,
    c_det=None,
    c_birth=None,
    c_death=None,
    c_trans=None,
    q_pair=None,
    max_gap: int | None = None,
) -> TrackingGraph:
    """Build a graph directly from node frames and edge lists.

    Used for synthetic solver instances where boxes are irrelevant; every node gets
    a unit box and every transition an overlap of 1.
    """
    frames = list(frames)
    n = len(frames)
    order = sorted(range(n), key=lambda i: frames[i])
    if order != list(range(n)):
        raise ValueError("node frames must be non-decreasing")
    dets = [Detection(id=i, frame=f, box=(0.0, 0.0, 1.0, 1.0)) for i, f in enumerate(frames)]
    trans = sorted(
        (TransitionEdge(s, t, frames[t] - frames[s], 1.0) for s, t in edges),
        key=lambda t: (t.src, t.dst),
    )
    pe = sorted((PairwiseEdge(min(a, b), max(a, b), 0, 0) for a, b in pairs), key=lambda p: (p.a, p.b))
    gap = max_gap if max_gap is not None else max([t.gap for t in trans], default=1)

    def arr(x, k):
        return np.zeros(k) if x is None else np.asarray(x, dtype=np.float64).copy()

    return TrackingGraph(
        detections=dets,
        transitions=trans,
        pairs=pe,
        c_det=arr(c_det, n),
        c_birth=arr(c_birth, n),
        c_death=arr(c_death, n),
        c_trans=arr(c_trans, len(trans)),
        q_pair=arr(q_pair, len(pe)),
        max_gap=gap,
    )


def check_flow(g: TrackingGraph, f: FlowSolution) -> None:
    """Raise :class:`FlowError` unless ``f`` is binary and conserves flow at every node."""
    n, m = g.n_nodes, len(g.transitions)
    for name, arr, size in (("det", f.det, n), ("trans", f.trans, m), ("birth", f.birth, n), ("death", f.death, n)):
        if arr.shape != (size,):
            raise FlowError(f"{name} has shape {arr.shape}, expected ({size},)")
        if np.any((arr != 0) & (arr != 1)):
            raise FlowError(f"{name} is not binary")
    inflow = f.birth.astype(np.int64).copy()
    outflow = f.death.astype(np.int64).copy()
    for e, t in enumerate(g.transitions):
        if f.trans[e]:
            inflow[t.dst] += 1
            outflow[t.src] += 1
    bad = np.nonzero((inflow != f.det) | (outflow != f.det))[0]
    if bad.size:
        i = int(bad[0])
        raise FlowError(f"flow conservation violated at node {i}: in={inflow[i]} det={f.det[i]} out={outflow[i]}")


def objective(g: TrackingGraph, f: FlowSolution, check: bool = True) -> float:
    """Linear flow cost plus folded pairwise costs of co-active same-frame pairs."""
    if check:
        check_flow(g, f)
    total = float(g.c_birth @ f.birth + g.c_trans @ f.trans + g.c_det @ f.det + g.c_death @ f.death)
    if g.pairs:
        a = np.fromiter((p.a for p in g.pairs), dtype=np.int64, count=len(g.pairs))
        b = np.fromiter((p.b for p in g.pairs), dtype=np.int64, count=len(g.pairs))
        total += float(g.q_pair @ (f.det[a] * f.det[b]))
    return total


def flows_to_tracks(g: TrackingGraph, f: FlowSolution) -> list[Track]:
    check_flow(g, f)
    succ = {}
    for e, t in enumerate(g.transitions):
        if f.trans[e]:
            succ[t.src] = t.dst
    tracks = []
    for i in np.nonzero(f.birth)[0]:
        i = int(i)
        track = [i]
        while i in succ:
            i = succ[i]
            track.append(i)
        tracks.append(track)
    return tracks


def tracks_to_flows(g: TrackingGraph, tracks: Iterable[Sequence[int]]) -> FlowSolution:
    f = FlowSolution.empty(g)
    for track in tracks:
        if len(track) == 0:
            raise FlowError("empty track")
        for i in track:
            if not 0 <= i < g.n_nodes:
                raise FlowError(f"node {i} out of range")
            if f.det[i]:
                raise FlowError(f"node {i} used by more than one track")
            f.det[i] = 1
        f.birth[track[0]] = 1
        f.death[track[-1]] = 1
        for a, b in zip(track, track[1:]):
            e = g.adj.edge_index.get((a, b))
            if e is None:
                raise FlowError(f"no transition edge {a}->{b}")
            f.trans[e] = 1
    return f

"""Joint feature map and weight vector.

The weight vector is laid out as ``[birth | trans | pair | app | death]``:

* ``birth``, ``death``: one weight each (the feature is the constant 1)
* ``trans``: ``2 * max_gap`` bins indexed by ``(gap - 1) * 2 + low_overlap``
* ``pair``: ``K * K * D`` bins indexed by ``(class_a * K + class_b) * D + relation``
* ``app``: ``(score, bias)`` per class
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import NUM_RELATIONS
from .graph import Detection, FlowSolution, TrackingGraph, TransitionEdge

LOW_OVERLAP_IOU = 0.5
BLOCKS = ("birth", "trans", "pair", "app", "death")


@dataclass(frozen=True)
class FeatureLayout:
    K: int = 1
    D: int = NUM_RELATIONS
    max_gap: int = 8

    def sizes(self) -> dict[str, int]:
        return {
            "birth": 1,
            "trans": 2 * self.max_gap,
            "pair": self.D * self.K * self.K,
            "app": 2 * self.K,
            "death": 1,
        }

    @property
    def dim(self) -> int:
        return sum(self.sizes().values())

    def slices(self) -> dict[str, slice]:
        out, start = {}, 0
        for name, size in self.sizes().items():
            out[name] = slice(start, start + size)
            start += size
        return out

    def pair_index(self, class_a: int, class_b: int, relation: int) -> int:
        return (class_a * self.K + class_b) * self.D + relation


@dataclass
class WeightVector:
    layout: FeatureLayout
    vector: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if self.vector.shape != (self.layout.dim,):
            raise ValueError(f"weight vector has shape {self.vector.shape}, expected ({self.layout.dim},)")

    @classmethod
    def zeros(cls, layout: FeatureLayout) -> WeightVector:
        return cls(layout, np.zeros(layout.dim))

    def block(self, name: str) -> np.ndarray:
        """Writable view of one block."""
        return self.vector[self.layout.slices()[name]]

    @property
    def w_birth(self) -> float:
        return float(self.block("birth")[0])

    @property
    def w_death(self) -> float:
        return float(self.block("death")[0])

    @property
    def w_trans(self) -> np.ndarray:
        return self.block("trans")

    @property
    def w_app(self) -> np.ndarray:
        return self.block("app").reshape(self.layout.K, 2)

    @property
    def w_pair(self) -> np.ndarray:
        """View shaped ``(K, K, D)``."""
        L = self.layout
        return self.block("pair").reshape(L.K, L.K, L.D)

    def to_dict(self) -> dict:
        L = self.layout
        return {
            "meta": {"K": L.K, "D": L.D, "max_gap": L.max_gap},
            "blocks": {name: [float(x) for x in self.block(name)] for name in BLOCKS},
        }

    @classmethod
    def from_dict(cls, data: dict) -> WeightVector:
        try:
            meta, blocks = data["meta"], data["blocks"]
            layout = FeatureLayout(K=int(meta["K"]), D=int(meta["D"]), max_gap=int(meta["max_gap"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed weights: missing {exc}") from None
        sizes = layout.sizes()
        if not isinstance(blocks, dict) or set(blocks) != set(BLOCKS):
            raise ValueError(f"weight blocks must be exactly {BLOCKS}")
        parts = []
        for name in BLOCKS:
            values = [float(x) for x in blocks[name]]
            if len(values) != sizes[name]:
                raise ValueError(f"block {name!r} has {len(values)} entries, expected {sizes[name]}")
            parts.append(values)
        return cls(layout, np.concatenate(parts))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> WeightVector:
        return cls.from_dict(json.loads(Path(path).read_text()))


def transition_feature(det_i: Detection, det_j: Detection, overlap: float, max_gap: int = 8) -> int:
    """One-hot index jointly encoding frame gap and a low-overlap flag."""
    gap = det_j.frame - det_i.frame
    if not 1 <= gap <= max_gap:
        raise ValueError(f"frame gap {gap} outside [1, {max_gap}]")
    return (gap - 1) * 2 + (1 if overlap < LOW_OVERLAP_IOU else 0)


def _edge_bin(t: TransitionEdge, max_gap: int) -> int:
    if not 1 <= t.gap <= max_gap:
        raise ValueError(f"frame gap {t.gap} outside [1, {max_gap}]")
    return (t.gap - 1) * 2 + (1 if t.iou < LOW_OVERLAP_IOU else 0)


def _check_layout(g: TrackingGraph, layout: FeatureLayout) -> None:
    if g.max_gap > layout.max_gap:
        raise ValueError(f"graph max_gap {g.max_gap} exceeds weight layout max_gap {layout.max_gap}")
    for d in g.detections:
        if d.class_id >= layout.K:
            raise ValueError(f"detection {d.id} has class {d.class_id}, layout has K={layout.K}")


class GraphFeatures:
    """Per-element feature indices of one graph, precomputed once."""

    def __init__(self, g: TrackingGraph, layout: FeatureLayout):
        _check_layout(g, layout)
        self.layout = layout
        sl = layout.slices()
        self.classes = np.array([d.class_id for d in g.detections], dtype=np.int64)
        self.scores = np.array([d.score for d in g.detections], dtype=np.float64)
        self.trans_index = sl["trans"].start + np.array(
            [_edge_bin(t, layout.max_gap) for t in g.transitions], dtype=np.int64
        )
        cls = self.classes
        self.pair_ab = sl["pair"].start + np.array(
            [layout.pair_index(cls[p.a], cls[p.b], p.relation) for p in g.pairs], dtype=np.int64
        )
        self.pair_ba = sl["pair"].start + np.array(
            [layout.pair_index(cls[p.b], cls[p.a], p.relation_ba) for p in g.pairs], dtype=np.int64
        )
        self.pair_a = np.array([p.a for p in g.pairs], dtype=np.int64)
        self.pair_b = np.array([p.b for p in g.pairs], dtype=np.int64)
        self.app_score = sl["app"].start + 2 * cls
        self.app_bias = self.app_score + 1
        self.birth = sl["birth"].start
        self.death = sl["death"].start

    def costs(self, w: WeightVector) -> dict[str, np.ndarray]:
        v = w.vector
        return {
            "c_det": v[self.app_score] * self.scores + v[self.app_bias],
            "c_birth": np.full(len(self.classes), v[self.birth]),
            "c_death": np.full(len(self.classes), v[self.death]),
            "c_trans": v[self.trans_index] if self.trans_index.size else np.zeros(0),
            "q_pair": v[self.pair_ab] + v[self.pair_ba] if self.pair_ab.size else np.zeros(0),
        }

    def feature_sum(self, f: FlowSolution) -> np.ndarray:
        psi = np.zeros(self.layout.dim)
        det = f.det.astype(np.float64)
        psi[self.birth] = float(f.birth.sum())
        psi[self.death] = float(f.death.sum())
        np.add.at(psi, self.app_score, det * self.scores)
        np.add.at(psi, self.app_bias, det)
        if self.trans_index.size:
            np.add.at(psi, self.trans_index, f.trans.astype(np.float64))
        if self.pair_ab.size:
            both = det[self.pair_a] * det[self.pair_b]
            np.add.at(psi, self.pair_ab, both)
            np.add.at(psi, self.pair_ba, both)
        return psi


def assign_costs(g: TrackingGraph, w: WeightVector) -> TrackingGraph:
    """Copy of ``g`` with every cost coefficient set from ``w``."""
    return g.with_costs(**GraphFeatures(g, w.layout).costs(w))


def feature_sum(g: TrackingGraph, f: FlowSolution, layout: FeatureLayout) -> np.ndarray:
    """Joint feature vector of flow ``f``; ``w . feature_sum == objective(assign_costs(g, w), f)``."""
    return GraphFeatures(g, layout).feature_sum(f)

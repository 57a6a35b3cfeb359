"""Run configuration: a strict JSON schema with command-line overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .features import FeatureLayout
from .geometry import NUM_RELATIONS
from .graph import GraphConfig
from .learning import TrainConfig

SOLVER_CHOICES = ("ssp", "dp1", "dp2", "oracle")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    max_gap: int = 8
    iou_link_threshold: float = 0.3
    gt_iou: float = 0.5
    solver: str = "dp2"
    C: float = 1.0
    max_rounds: int = 100
    tol: float = 1e-4
    prune_far_pairs: bool = True
    same_class_links: bool = True
    use_pairwise: bool = True
    caching: bool = False
    subseq_len: int = 10
    subseq_overlap: int = 5
    K: int = 1
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.max_gap, int) or self.max_gap < 1:
            raise ConfigError("max_gap must be an integer >= 1")
        if not 0.0 <= self.iou_link_threshold < 1.0:
            raise ConfigError("iou_link_threshold must lie in [0, 1)")
        if not 0.0 < self.gt_iou <= 1.0:
            raise ConfigError("gt_iou must lie in (0, 1]")
        if self.solver not in SOLVER_CHOICES:
            raise ConfigError(f"solver must be one of {SOLVER_CHOICES}")
        if not self.C > 0:
            raise ConfigError("C must be positive")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if not self.subseq_len > self.subseq_overlap >= 0:
            raise ConfigError("need subseq_len > subseq_overlap >= 0")
        if self.K < 1:
            raise ConfigError("K must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        kwargs = {}
        for k, v in data.items():
            kind = known[k].type
            if kind in ("int", int) and not (isinstance(v, int) and not isinstance(v, bool)):
                raise ConfigError(f"{k} must be an integer")
            if kind in ("bool", bool) and not isinstance(v, bool):
                raise ConfigError(f"{k} must be a boolean")
            if kind in ("float", float):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigError(f"{k} must be a number")
                v = float(v)
            if kind in ("str", str) and not isinstance(v, str):
                raise ConfigError(f"{k} must be a string")
            kwargs[k] = v
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> RunConfig:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def override(self, **kwargs) -> RunConfig:
        data = asdict(self)
        data.update({k: v for k, v in kwargs.items() if v is not None})
        return RunConfig.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def graph(self) -> GraphConfig:
        return GraphConfig(
            max_gap=self.max_gap,
            iou_link_threshold=self.iou_link_threshold,
            prune_far_pairs=self.prune_far_pairs,
            same_class_links=self.same_class_links,
        )

    @property
    def train(self) -> TrainConfig:
        return TrainConfig(
            C=self.C,
            max_rounds=self.max_rounds,
            tol=self.tol,
            solver="brute_force" if self.solver == "oracle" else self.solver,
            use_pairwise=self.use_pairwise,
            gt_iou=self.gt_iou,
            subseq_len=self.subseq_len,
            subseq_overlap=self.subseq_overlap,
        )

    @property
    def layout(self) -> FeatureLayout:
        return FeatureLayout(K=self.K, D=NUM_RELATIONS, max_gap=self.max_gap)

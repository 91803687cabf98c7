"""Run configuration: JSON-round-trippable bundle of all stage configs.

Backend entries are plain {"kind": ...} specs; the CLI materializes real
backend objects (file paths and ground-truth warps arrive via flags).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .core import InvalidInputError
from .matcher import MatcherConfig
from .metrics import LossConfig
from .ot import SinkhornConfig
from .subdivision import HierarchyConfig, LevelSpec

__all__ = ["RunConfig", "load_config", "save_config"]


@dataclass(frozen=True)
class RunConfig:
    hierarchy: HierarchyConfig = field(default_factory=HierarchyConfig)
    sinkhorn: SinkhornConfig = field(default_factory=SinkhornConfig)
    matcher: MatcherConfig = field(default_factory=MatcherConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    descriptor_backend: str = "handcrafted"
    area_backend: str = "unit"
    seed: int = 0

    def __post_init__(self):
        if self.seed < 0:
            raise InvalidInputError("seed must be non-negative")

    def to_dict(self) -> dict:
        return {
            "hierarchy": {
                "levels": [[spec.patch_size, spec.expansion] for spec in self.hierarchy.levels]
            },
            "sinkhorn": dataclasses.asdict(self.sinkhorn),
            "matcher": dataclasses.asdict(self.matcher),
            "loss": dataclasses.asdict(self.loss),
            "descriptor_backend": {"kind": self.descriptor_backend},
            "area_backend": {"kind": self.area_backend},
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        kwargs = {}
        if "hierarchy" in d:
            kwargs["hierarchy"] = HierarchyConfig(
                levels=tuple(LevelSpec(int(s), None if n is None else int(n))
                             for s, n in d["hierarchy"]["levels"])
            )
        if "sinkhorn" in d:
            kwargs["sinkhorn"] = SinkhornConfig(**d["sinkhorn"])
        if "matcher" in d:
            kwargs["matcher"] = MatcherConfig(**d["matcher"])
        if "loss" in d:
            kwargs["loss"] = LossConfig(**d["loss"])
        if "descriptor_backend" in d:
            kwargs["descriptor_backend"] = d["descriptor_backend"]["kind"]
        if "area_backend" in d:
            kwargs["area_backend"] = d["area_backend"]["kind"]
        if "seed" in d:
            kwargs["seed"] = int(d["seed"])
        return cls(**kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def load_config(path: str | Path) -> RunConfig:
    with open(path) as fh:
        return RunConfig.from_dict(json.load(fh))


def save_config(config: RunConfig, path: str | Path) -> None:
    Path(path).write_text(config.to_json())

"""Pipeline-wide configuration, loadable from JSON."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .diffusion.schedule import DEFAULT_T_MIN, NoiseSchedule
from .errors import ValidationError
from .gmm import GmmFitConfig
from .synthgen import SynthConfig


@dataclass(frozen=True)
class PipelineConfig:
    data_dir: str = "data"
    model_dir: str = "model"
    output_dir: str = "out"
    synth: SynthConfig = field(default_factory=SynthConfig)
    gmm: GmmFitConfig = field(default_factory=GmmFitConfig)
    n_components: int = 128
    schedule: NoiseSchedule = field(default_factory=NoiseSchedule)
    n_steps: int = 100
    t_min: float = DEFAULT_T_MIN
    seed: int = 0

    def __post_init__(self):
        if self.n_components < 1:
            raise ValidationError(f"n_components must be >= 1, got {self.n_components}")
        if self.n_steps < 1:
            raise ValidationError(f"n_steps must be >= 1, got {self.n_steps}")
        if not 0.0 < self.t_min < 1.0:
            raise ValidationError(f"t_min must lie in (0, 1), got {self.t_min}")
        if self.seed < 0:
            raise ValidationError(f"seed must be >= 0, got {self.seed}")

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> PipelineConfig:
        if not isinstance(raw, dict):
            raise ValidationError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown config fields {sorted(unknown)}")
        kw = dict(raw)
        nested = {"synth": SynthConfig, "gmm": GmmFitConfig, "schedule": NoiseSchedule}
        for name, typ in nested.items():
            if name in kw:
                sub = kw[name]
                if not isinstance(sub, dict):
                    raise ValidationError(f"config field {name} must be an object")
                if typ is SynthConfig:
                    kw[name] = SynthConfig.from_dict(sub)
                    continue
                bad = set(sub) - {f.name for f in fields(typ)}
                if bad:
                    raise ValidationError(f"unknown {name} config fields {sorted(bad)}")
                kw[name] = typ(**sub)
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ValidationError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> PipelineConfig:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(raw)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

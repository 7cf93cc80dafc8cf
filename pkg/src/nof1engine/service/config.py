"""Service configuration: run mode, persistence location, policy defaults.

Precedence for the data directory: NOF1_DATA_DIR env var, then the CLI flag,
then the config file, then ./nof1-data.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..errors import ValidationError
from ..trigger import TriggerPolicy

ENV_DATA_DIR = "NOF1_DATA_DIR"
MODES = ("device", "aggregate")


@dataclass(frozen=True)
class ServiceConfig:
    mode: str = "device"
    host: str = "127.0.0.1"
    port: int = 8490
    data_dir: Path = Path("nof1-data")
    model_path: str | None = None  # None -> packaged demo model
    trigger: TriggerPolicy = field(default_factory=TriggerPolicy)
    budget_epsilon: float = 4.0
    budget_delta: float = 1e-4
    clip: float = 3.0
    k_min: int = 10
    seed: int = 0
    token: str | None = None
    static_dir: str | None = None
    snapshot_every: int = 500  # events between automatic snapshots; 0 disables

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}", field="mode")
        object.__setattr__(self, "data_dir", Path(self.data_dir))

    @classmethod
    def from_dict(cls, d: dict) -> "ServiceConfig":
        kwargs = dict(d)
        if "trigger" in kwargs:
            kwargs["trigger"] = TriggerPolicy.from_dict(kwargs["trigger"])
        if "data_dir" in kwargs:
            kwargs["data_dir"] = Path(kwargs["data_dir"])
        return cls(**kwargs)

    @classmethod
    def load(
        cls,
        config_path: str | None = None,
        *,
        mode: str | None = None,
        data_dir: str | None = None,
        model_path: str | None = None,
        port: int | None = None,
        host: str | None = None,
        seed: int | None = None,
    ) -> "ServiceConfig":
        base = {}
        if config_path:
            with open(config_path, encoding="utf-8") as fh:
                base = json.load(fh)
        config = cls.from_dict(base)
        overrides = {}
        if mode is not None:
            overrides["mode"] = mode
        if data_dir is not None:
            overrides["data_dir"] = Path(data_dir)
        if model_path is not None:
            overrides["model_path"] = model_path
        if port is not None:
            overrides["port"] = port
        if host is not None:
            overrides["host"] = host
        if seed is not None:
            overrides["seed"] = seed
        env_dir = os.environ.get(ENV_DATA_DIR)
        if env_dir:
            overrides["data_dir"] = Path(env_dir)
        return replace(config, **overrides) if overrides else config

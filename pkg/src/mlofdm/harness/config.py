"""Experiment configuration: YAML file -> validated dataclasses.

Every field defaults to the reference 64-subcarrier 4-QAM scenario.
Unknown keys are rejected at every nesting level. Only the output directory
may be overridden from the environment (``MLOFDM_OUTPUT_DIR``).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from ..channel import ChannelProfile
from ..elm import ElmConfig
from ..modem import SUPPORTED_ORDERS
from ..neural import TrainConfig

OUTPUT_ENV = "MLOFDM_OUTPUT_DIR"
DETECTORS = ("perfect", "ls", "mmse", "dnn", "elm")


@dataclass
class DnnConfig:
    hidden: list[int] = field(default_factory=lambda: [500, 250, 120])
    outputs: int = 64
    train: TrainConfig = field(default_factory=lambda: TrainConfig(dataset_size=1_000_000))

    def __post_init__(self):
        if not self.hidden or any(h < 1 for h in self.hidden) or self.outputs < 1:
            raise ValueError("DNN layer sizes must be positive")


@dataclass
class ExperimentConfig:
    scenario: str = "table1"
    modulation: int = 4
    users: int = 4
    n_subcarriers: int = 64
    n_pilots: int = 64
    cp_fraction: float = 0.25
    snr_db: list[float] = field(default_factory=lambda: [5.0, 10.0, 15.0, 20.0, 25.0])
    total_power_mw: float = 1.0
    n_cpu: int = 16
    n_cpu_eq: int = 4
    channel: ChannelProfile = field(default_factory=ChannelProfile)
    detectors: list[str] = field(default_factory=lambda: list(DETECTORS))
    dnn: DnnConfig = field(default_factory=DnnConfig)
    elm: ElmConfig = field(default_factory=ElmConfig)
    trials: int = 10_000
    elm_trials: int = 1_000
    batch_frames: int = 500
    nmse_samples: int = 1
    pilot_seed: int = 2024
    seed: int = 0
    output_dir: str = "results"

    def __post_init__(self):
        if self.modulation not in SUPPORTED_ORDERS:
            raise ValueError(f"modulation must be one of {SUPPORTED_ORDERS}")
        if not 1 <= self.n_pilots <= self.n_subcarriers:
            raise ValueError("n_pilots must lie in [1, n_subcarriers]")
        if self.cp_fraction < 0 or self.cp_fraction > 1:
            raise ValueError("cp_fraction must lie in [0, 1]")
        if not self.snr_db:
            raise ValueError("empty SNR grid")
        bad = set(self.detectors) - set(DETECTORS)
        if bad:
            raise ValueError(f"unknown detectors {sorted(bad)}")
        for name in ("trials", "elm_trials", "batch_frames", "nmse_samples", "users"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.channel.n_taps > self.n_subcarriers:
            raise ValueError("channel longer than the OFDM symbol")
        cp = int(round(self.cp_fraction * self.n_subcarriers))
        self.channel.check_cp(cp)

    @property
    def total_power_w(self) -> float:
        return self.total_power_mw * 1e-3

    @property
    def cp_len(self) -> int:
        return int(round(self.cp_fraction * self.n_subcarriers))

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """Stable hash of every field except the output location."""
        d = self.to_dict()
        d.pop("output_dir", None)
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def resolved_output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_ENV) or self.output_dir)


_NESTED = {
    (ExperimentConfig, "channel"): ChannelProfile,
    (ExperimentConfig, "dnn"): DnnConfig,
    (ExperimentConfig, "elm"): ElmConfig,
    (DnnConfig, "train"): TrainConfig,
}


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ValueError(f"{where}: expected a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"{where}: unknown keys {sorted(unknown)}")
    kw = {}
    for k, v in data.items():
        sub = _NESTED.get((cls, k))
        if sub is not None:
            kw[k] = _build(sub, v or {}, f"{where}.{k}")
        elif k == "pdp" and v is not None:
            kw[k] = tuple(float(x) for x in v)
        else:
            kw[k] = v
    return cls(**kw)


def config_from_dict(data: dict | None) -> ExperimentConfig:
    return _build(ExperimentConfig, data or {}, "config")


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(yaml.safe_load(fh))


def dump_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=False)

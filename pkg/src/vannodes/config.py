"""Flat experiment configuration: a documented key=value text format with
lossless round-tripping and a content hash for provenance headers.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field, fields

from .activations import ActivationKind
from .initializers import InitKind, InitializerSpec
from .network import NetworkSpec
from .training import OptimizerKind, OptimizerSpec, SuccessCriterion

__all__ = ["ExperimentConfig", "EXPERIMENTS"]

EXPERIMENTS = (
    "vni_sweep",
    "heatmap",
    "dynamics",
    "tasks_table",
    "grid",
    "orthogonal_table",
    "diagnostics",
)


@dataclass
class ExperimentConfig:
    experiment: str = "vni_sweep"
    # architecture
    depths: list[int] = field(default_factory=lambda: [10, 20, 30, 40, 50, 60, 70, 80, 90, 100])
    widths: list[int] = field(default_factory=lambda: [200])
    activation: str = "hard_tanh"
    # initialization; sigma_w_sq <= 0 means "auto": tune sigma_w^2 mu_1 = 1
    init: str = "scaled_gaussian"
    sigma_w_sq: float = 0.0
    bottleneck_nb: int = 1
    # optimization
    optimizer: str = "sgd"
    learning_rates: list[float] = field(default_factory=lambda: [0.01])
    batch_size: int = 100
    epochs: int = 100
    early_stop: bool = False
    # task / probe
    dataset: str = "xor2"  # and2 | and4 | xor2 | mnist
    mnist_dir: str = "data/mnist"
    train_slice: int = 5000
    test_slice: int = 1000
    probe_samples: int = 1000
    sigma_x_sq: float = 0.1
    # protocol
    runs: int = 20
    master_seed: int = 0
    success_metric: str = "test_accuracy"
    success_threshold: float = 0.99
    max_epochs: int = 100
    out_dir: str = "out"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        ActivationKind(self.activation)
        InitKind(self.init)
        OptimizerKind(self.optimizer)
        if self.runs < 1:
            raise ValueError("runs must be >= 1")

    # -- structured views ---------------------------------------------------

    @property
    def activation_kind(self) -> ActivationKind:
        return ActivationKind(self.activation)

    @property
    def init_kind(self) -> InitKind:
        return InitKind(self.init)

    def initializer_spec(self, sigma_w_sq: float) -> InitializerSpec:
        return InitializerSpec(self.init_kind, sigma_w_sq, self.bottleneck_nb)

    def optimizer_spec(self, learning_rate: float) -> OptimizerSpec:
        return OptimizerSpec(OptimizerKind(self.optimizer), learning_rate)

    def network_spec(self, depth: int, width: int, input_dim: int, num_classes: int) -> NetworkSpec:
        return NetworkSpec(depth, width, input_dim, num_classes, self.activation_kind)

    def success_criterion(self) -> SuccessCriterion:
        return SuccessCriterion(self.success_metric, self.success_threshold, self.max_epochs)

    # -- serialization ------------------------------------------------------

    def to_text(self) -> str:
        lines = ["# vannodes experiment config"]
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, overrides: dict | None = None) -> "ExperimentConfig":
        raw: dict = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            raw[key.strip()] = value.strip()
        if overrides:
            raw.update(overrides)
        return cls._from_raw(raw)

    @classmethod
    def _from_raw(cls, raw: dict) -> "ExperimentConfig":
        kwargs = {}
        by_name = {f.name: f for f in fields(cls)}
        for key, value in raw.items():
            if key not in by_name:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _parse_field(by_name[key], value)
        return cls(**kwargs)

    def with_overrides(self, overrides: dict) -> "ExperimentConfig":
        raw = {}
        by_name = {f.name: f for f in fields(self)}
        for key, value in overrides.items():
            if key not in by_name:
                raise ValueError(f"unknown config key {key!r}")
            raw[key] = _parse_field(by_name[key], value) if isinstance(value, str) else value
        return dataclasses.replace(self, **raw)

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:12]


def _parse_field(f, value: str):
    if f.type.startswith("list[int]"):
        return [int(x) for x in value.split(",") if x.strip()]
    if f.type.startswith("list[float]"):
        return [float(x) for x in value.split(",") if x.strip()]
    if f.type == "bool":
        if value.lower() in ("true", "1", "yes"):
            return True
        if value.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"bad boolean {value!r} for {f.name}")
    if f.type == "int":
        return int(value)
    if f.type == "float":
        return float(value)
    return value

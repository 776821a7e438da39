"""Experiment configuration for the system-identification benchmark."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from ..errors import BadConfig
from ..groups import GroupPartition, make_partition


@dataclass(frozen=True)
class SupportWindow:
    """Contiguous block of nonzero true coefficients (1-based ``start``)."""

    start: int = 29
    length: int = 14
    shift: int = 22


@dataclass(frozen=True)
class ExperimentConfig:
    p: int = 100
    n_samples: int = 400
    change_at: int = 200
    trials: int = 100
    gamma: float = 0.9
    lambda_group: float = 0.1
    lambda_l1: float = 0.05
    noise_var: float = 0.01
    group_sizes: tuple = (5,) * 20
    true_support: SupportWindow = field(default_factory=SupportWindow)
    seed: int = 0
    audit_every: int = 25
    output_dir: str = "bench_out"
    icap_every: int = 1
    delta: float = 1e-2
    steady_window: int = 50
    groups: tuple | None = None  # explicit 1-based groups; overrides group_sizes

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.p < 1:
            raise BadConfig(f"p must be positive, got {self.p}")
        if self.n_samples < 1:
            raise BadConfig(f"n_samples must be positive, got {self.n_samples}")
        if not 0 <= self.change_at < self.n_samples:
            raise BadConfig(f"change_at={self.change_at} must lie in [0, n_samples={self.n_samples})")
        if self.trials < 1:
            raise BadConfig("trials must be at least 1")
        if not 0 < self.gamma <= 1:
            raise BadConfig(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.lambda_group <= 0 or self.lambda_l1 <= 0:
            raise BadConfig("lambda_group and lambda_l1 must be positive")
        if self.noise_var < 0:
            raise BadConfig("noise_var must be nonnegative")
        if self.delta <= 0:
            raise BadConfig("delta must be positive")
        if self.audit_every < 0 or self.icap_every < 0:
            raise BadConfig("audit_every and icap_every must be nonnegative")
        if self.steady_window < 1:
            raise BadConfig("steady_window must be positive")
        s = self.true_support
        if s.length < 0 or s.shift < 0:
            raise BadConfig("support length and shift must be nonnegative")
        if s.length and (s.start < 1 or s.start + s.shift + s.length - 1 > self.p):
            raise BadConfig(f"support window {s} does not fit in 1..{self.p}")
        self.partition()

    def partition(self) -> GroupPartition:
        try:
            if self.groups is not None:
                return make_partition(self.p, groups=[list(g) for g in self.groups], one_based=True)
            return make_partition(self.p, sizes=list(self.group_sizes))
        except ValueError as exc:
            raise BadConfig(f"invalid group layout: {exc}") from exc

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["group_sizes"] = list(self.group_sizes)
        if self.groups is not None:
            d["groups"] = [list(g) for g in self.groups]
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise BadConfig("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise BadConfig(f"unknown config fields: {sorted(unknown)}")
        kw = dict(raw)
        try:
            if "true_support" in kw:
                kw["true_support"] = SupportWindow(**kw["true_support"])
            if "group_sizes" in kw:
                kw["group_sizes"] = tuple(int(s) for s in kw["group_sizes"])
            if kw.get("groups") is not None:
                kw["groups"] = tuple(tuple(int(i) for i in g) for g in kw["groups"])
            return cls(**kw)
        except TypeError as exc:
            raise BadConfig(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise BadConfig(f"cannot read config {path}: {exc}") from exc
    return ExperimentConfig.from_dict(raw)

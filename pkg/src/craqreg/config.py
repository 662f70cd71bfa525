"""Registration configuration: knobs, validation, file persistence."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

ESTIMATOR_METHODS = ("ransac", "lo-ransac", "magsac-simplified")
RESIZE_POLICIES = ("same-width", "none")  # plus "height:<h>"

CONFIG_ENV_VAR = "CRAQREG_CONFIG"


def parse_resize_policy(policy: str) -> tuple[str, int | None]:
    """Split a policy string into (kind, height); raises ConfigError."""
    if policy in RESIZE_POLICIES:
        return policy, None
    if policy.startswith("height:"):
        try:
            h = int(policy.split(":", 1)[1])
        except ValueError:
            raise ConfigError("resize_policy", f"bad height in {policy!r}") from None
        if h <= 0:
            raise ConfigError("resize_policy", "height must be > 0")
        return "height", h
    raise ConfigError("resize_policy", f"unknown policy {policy!r}")


@dataclass(frozen=True)
class EstimatorConfig:
    method: str = "ransac"
    tau_reproj: float = 5.0
    max_iters: int = 10000
    confidence: float = 0.995
    seed: int = 0

    def validate(self) -> None:
        if self.method not in ESTIMATOR_METHODS:
            raise ConfigError(
                "estimator.method",
                f"got {self.method!r}, expected one of {ESTIMATOR_METHODS}",
            )
        if not self.tau_reproj > 0:
            raise ConfigError("estimator.tau_reproj", "must be > 0")
        if not 0 < self.confidence < 1:
            raise ConfigError("estimator.confidence", "must be in (0, 1)")
        if self.max_iters < 1:
            raise ConfigError("estimator.max_iters", "must be >= 1")
        if not isinstance(self.seed, int) or not -(2**63) <= self.seed < 2**64:
            raise ConfigError("estimator.seed", "must be a 64-bit integer")


@dataclass(frozen=True)
class RegistrationConfig:
    patch_size: int = 1024
    n_max: int = 8000
    tau_kp: float = 0.0
    resize_policy: str = "same-width"
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    backend: str = "junction"
    visualize_matches: bool = False

    def validate(self) -> None:
        if self.patch_size < 64:
            raise ConfigError("patch_size", "must be >= 64")
        if self.n_max < 4:
            raise ConfigError("n_max", "must be >= 4")
        if not 0 <= self.tau_kp < 1:
            raise ConfigError("tau_kp", "must be in [0, 1)")
        parse_resize_policy(self.resize_policy)
        # backend names are checked against the registry lazily, but the
        # field must at least be a non-empty string
        if not self.backend or not isinstance(self.backend, str):
            raise ConfigError("backend", "must be a backend name")
        self.estimator.validate()

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RegistrationConfig":
        if not isinstance(data, dict):
            raise ConfigError("config", "expected a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown configuration field")
        kwargs = dict(data)
        est = kwargs.pop("estimator", None)
        if est is not None:
            if not isinstance(est, dict):
                raise ConfigError("estimator", "expected a JSON object")
            est_known = {f.name for f in dataclasses.fields(EstimatorConfig)}
            est_extra = set(est) - est_known
            if est_extra:
                raise ConfigError(
                    f"estimator.{sorted(est_extra)[0]}", "unknown configuration field"
                )
            kwargs["estimator"] = EstimatorConfig(**est)
        try:
            cfg = cls(**kwargs)
        except TypeError as exc:
            raise ConfigError("config", str(exc)) from exc
        cfg.validate()
        return cfg


def default_config() -> RegistrationConfig:
    return RegistrationConfig()


def config_path(base_dir: str | Path | None = None) -> Path:
    """Config file location; the CRAQREG_CONFIG env var wins."""
    env = os.environ.get(CONFIG_ENV_VAR)
    if env:
        return Path(env)
    base = Path(base_dir) if base_dir is not None else Path.home() / ".craqreg"
    return base / "config.json"


def load_persisted(path: str | Path) -> RegistrationConfig:
    """Last-used configuration from disk, or defaults if absent."""
    path = Path(path)
    if not path.exists():
        return default_config()
    with open(path) as f:
        data = json.load(f)
    return RegistrationConfig.from_dict(data.get("config", data))


def save_persisted(path: str | Path, cfg: RegistrationConfig) -> dict:
    """Persist a configuration; returns the stored document."""
    cfg.validate()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"defaults": cfg == default_config(), "config": cfg.to_dict()}
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    return doc

"""Experiment configuration: a flat key/value file plus CLI overrides."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from ..channel_model import SystemParams
from ..errors import InvalidConfigError
from ..precoder import COLUMN_SCALINGS, MODES

KINDS = ("rate_vs_snr", "target_rate_sweep", "rank_vs_l", "single_trial")

# Default trial counts when the config leaves ``trials`` unset.
RATE_TRIALS = 2000
RANK_TRIALS = 500

# Keys that do not change the numbers in the output.
_NON_SEMANTIC = ("output_path", "threads", "plot")


@dataclass
class ExperimentConfig:
    kind: str = "rate_vs_snr"
    n_carriers: int = 64
    cp_len: int = 16
    sigma11: float = 1.0
    sigma12: float = 1.0
    sigma21: float = 1.0
    sigma22: float = 1.0
    p1: float = 10.0
    p2: float = 10.0
    snr_db: Optional[float] = None
    snr_grid_db: list = field(default_factory=lambda: [0.0, 10.0, 20.0, 30.0, 40.0])
    target_grid: list = field(default_factory=lambda: [0.0, 0.9, 1.8, 2.7])
    l_grid: list = field(default_factory=lambda: list(range(1, 33)))
    aspect_ratio: float = 0.25
    trials: int = 2000
    master_seed: int = 0
    precoder_mode: str = "exact"
    column_scaling: str = "unit"
    svd_rel_tol: float = 1e-12
    bandwidth_hz: float = 20e6
    rank_tol: float = 1e-12
    oracle_every: int = 50
    max_redraws: int = 10
    output_path: Optional[str] = None
    threads: int = 1
    plot: bool = False

    def validate(self) -> "ExperimentConfig":
        def fail(msg):
            raise InvalidConfigError(msg)

        if self.kind not in KINDS:
            fail(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.precoder_mode not in MODES:
            fail(f"precoder_mode must be one of {MODES}")
        if self.column_scaling not in COLUMN_SCALINGS:
            fail(f"column_scaling must be one of {COLUMN_SCALINGS}")
        if int(self.trials) != self.trials or self.trials < 1:
            fail("trials must be a positive integer")
        if int(self.threads) != self.threads or self.threads < 1:
            fail("threads must be a positive integer")
        if int(self.oracle_every) != self.oracle_every or self.oracle_every < 0:
            fail("oracle_every must be a nonnegative integer")
        for name in ("snr_grid_db", "target_grid", "l_grid"):
            if len(getattr(self, name)) == 0:
                fail(f"{name} must be nonempty")
        if any(t < 0 for t in self.target_grid):
            fail("target rates must be nonnegative")
        if any(int(v) != v or v < 1 for v in self.l_grid):
            fail("l_grid entries must be positive integers")
        if not 0 < self.aspect_ratio <= 1:
            fail("aspect_ratio must lie in (0, 1]")
        if not 0 < self.rank_tol < 1:
            fail("rank_tol must lie in (0, 1)")
        if not 0 <= self.svd_rel_tol < 1:
            fail("svd_rel_tol must lie in [0, 1)")
        if not self.bandwidth_hz > 0:
            fail("bandwidth_hz must be positive")
        try:
            self.system_params()
        except ValueError as exc:
            fail(str(exc))
        return self

    def sigma(self) -> np.ndarray:
        return np.array([[self.sigma11, self.sigma12],
                         [self.sigma21, self.sigma22]], dtype=float)

    def system_params(self) -> SystemParams:
        p1, p2 = self.p1, self.p2
        if self.snr_db is not None:
            p1 = p2 = 10.0 ** (self.snr_db / 10.0)
        return SystemParams(n_carriers=self.n_carriers, cp_len=self.cp_len,
                            sigma=self.sigma(), p1=p1, p2=p2)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        d = {k: v for k, v in self.as_dict().items() if k not in _NON_SEMANTIC}
        blob = json.dumps(d, sort_keys=True, default=float).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_ALIASES = {"sigma_12": "sigma12", "seed": "master_seed", "mode": "precoder_mode",
            "out": "output_path"}


def _coerce(name, value):
    default = _FIELDS[name].default
    if name in ("snr_grid_db", "target_grid"):
        if isinstance(value, (int, float)):
            value = [value]
        return [float(v) for v in value]
    if name == "l_grid":
        if isinstance(value, (int, float)):
            value = [value]
        return [int(v) for v in value]
    if name == "precoder_mode" and isinstance(value, str):
        return value.replace("-", "_")
    if value is None:
        return None
    if isinstance(default, bool):
        if isinstance(value, str):
            return value.lower() in ("1", "true", "yes", "on")
        return bool(value)
    if isinstance(default, int):
        if isinstance(value, float) and not value.is_integer():
            raise InvalidConfigError(f"{name} must be an integer")
        return int(value)
    if isinstance(default, float) or name == "snr_db":
        return float(value)
    return value


def make_config(values: Optional[dict] = None, **overrides) -> ExperimentConfig:
    """Build and validate a config from a mapping plus keyword overrides.

    ``None`` overrides are ignored so CLI defaults do not clobber file
    values.
    """
    merged = {}
    for src in (values or {}), overrides:
        for key, value in src.items():
            key = _ALIASES.get(key, key)
            if key not in _FIELDS:
                raise InvalidConfigError(f"unknown config key {key!r}")
            if value is None and src is overrides:
                continue
            try:
                merged[key] = _coerce(key, value)
            except (TypeError, ValueError) as exc:
                raise InvalidConfigError(f"bad value for {key}: {exc}") from None
    if "trials" not in merged:
        merged["trials"] = RANK_TRIALS if merged.get("kind") == "rank_vs_l" else RATE_TRIALS
    return ExperimentConfig(**merged).validate()


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a flat ``key: value`` file (YAML or JSON) and apply overrides."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidConfigError(f"cannot read config {path}: {exc}") from None
    try:
        values = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise InvalidConfigError(f"cannot parse config {path}: {exc}") from None
    if not isinstance(values, dict):
        raise InvalidConfigError("config file must hold a flat mapping")
    for key, value in values.items():
        if isinstance(value, dict):
            raise InvalidConfigError(f"nested value for {key!r}; config must be flat")
    return make_config(values, **overrides)

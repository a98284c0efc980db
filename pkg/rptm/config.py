"""
RPTM Configuration
Run configuration models for every pipeline stage.

A single RunConfig document carries the feature, matching, mining, training
and evaluation settings; the same document serves every dataset.
"""

import json
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError, IoError


class TauPolicy(str, Enum):
    """Threshold policies for positive selection"""
    MIN = "min"      # hard positives
    MEAN = "mean"    # semi-hard positives
    MAX = "max"      # easy positives


class ConfigSection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class FeatureConfig(ConfigSection):
    """Keypoint detection and description settings"""
    max_features: int = Field(10000, ge=1)
    fast_threshold: int = Field(20, ge=1)
    pyramid_levels: int = Field(4, ge=1)
    scale_factor: float = Field(1.2, gt=1.0)
    match_size: Tuple[int, int] = (224, 224)
    harris_k: float = 0.04
    blur_sigma: float = Field(2.0, ge=0.0)

    @model_validator(mode="after")
    def _check_size(self) -> "FeatureConfig":
        if min(self.match_size) < 1:
            raise ValueError("match_size entries must be >= 1")
        return self


class GMSConfig(ConfigSection):
    """Grid-based motion statistics verification settings"""
    grid_size: int = Field(20, ge=1)
    alpha: float = Field(6.0, gt=0.0)
    with_rotation: bool = True
    with_shifts: bool = True


class MiningConfig(ConfigSection):
    """Positive selection settings"""
    policy: TauPolicy = TauPolicy.MEAN
    tau_min: float = Field(10.0, ge=0.0)


class TrainConfig(ConfigSection):
    """Optimiser, loss and schedule settings"""
    lr0: float = Field(0.005, gt=0.0)
    momentum: float = Field(0.9, ge=0.0)
    weight_decay: float = Field(0.0005, ge=0.0)
    margin: float = Field(0.3, ge=0.0)
    lambda_tri: float = Field(2.0, ge=0.0)
    lambda_ent: float = Field(0.5, ge=0.0)
    epochs: int = Field(80, ge=1)
    batch_size: int = Field(24, ge=2)
    batch_p: int = Field(6, ge=1)
    batch_k: int = Field(4, ge=2)
    lr_decay_factor: float = Field(0.1, gt=0.0)
    lr_step: int = Field(20, ge=1)
    seed: int = 0
    hidden_dim: int = Field(32, ge=1)
    embed_dim: int = Field(16, ge=1)
    hflip: bool = False

    @model_validator(mode="after")
    def _check_batch(self) -> "TrainConfig":
        if self.batch_p * self.batch_k != self.batch_size:
            raise ValueError(
                f"batch_p x batch_k = {self.batch_p * self.batch_k} "
                f"does not equal batch_size {self.batch_size}"
            )
        return self


class EvalConfig(ConfigSection):
    """Ranking evaluation and re-ranking settings"""
    rerank: bool = False
    k1: int = Field(60, ge=1)
    k2: int = Field(15, ge=1)
    eta: float = Field(0.2, ge=0.0, le=1.0)
    cmc_ranks: List[int] = [1, 5, 10]

    @model_validator(mode="after")
    def _check_k(self) -> "EvalConfig":
        if self.k2 > self.k1:
            raise ValueError(f"k2 ({self.k2}) must not exceed k1 ({self.k1})")
        if any(r < 1 for r in self.cmc_ranks):
            raise ValueError("cmc_ranks entries must be >= 1")
        return self


class RunConfig(ConfigSection):
    """Every stage's settings in one document"""
    feature: FeatureConfig = FeatureConfig()
    gms: GMSConfig = GMSConfig()
    mining: MiningConfig = MiningConfig()
    train: TrainConfig = TrainConfig()
    eval: EvalConfig = EvalConfig()
    threads: Optional[int] = Field(None, ge=1)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """Validate a parsed document"""
        return validate_section(cls, data)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        """Load a JSON or YAML configuration file"""
        return cls.from_dict(read_document(path))

    def dump(self) -> str:
        """Serialize as JSON with sorted keys"""
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def validate_section(model: type, data: Any) -> Any:
    """Validate data against a config model, raising ConfigError"""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{model.__name__}: expected a mapping, got {type(data).__name__}")
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ())) or "<root>"
        raise ConfigError(f"{model.__name__}: {where}: {first.get('msg')}") from e


def read_document(path: Union[str, Path]) -> Any:
    """Parse a JSON (.json) or YAML (.yaml, .yml) document"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot read {path}: {e.strerror or e}") from e

    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            return yaml.safe_load(text)
        return json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"{path}: not a valid configuration document: {e}") from e


def resolve_threads(cli_threads: Optional[int], config: Optional[RunConfig] = None) -> int:
    """Worker count: flag, then RPTM_THREADS, then config, then core count"""
    if cli_threads is not None:
        if cli_threads < 1:
            raise ConfigError("--threads must be >= 1")
        return cli_threads
    env = os.environ.get("RPTM_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError as e:
            raise ConfigError(f"RPTM_THREADS is not an integer: {env!r}") from e
        if value < 1:
            raise ConfigError("RPTM_THREADS must be >= 1")
        return value
    if config is not None and config.threads is not None:
        return config.threads
    return os.cpu_count() or 1

"""Pipeline configuration loading."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .aoi import EnlargeRatios
from .cluster import ClusteringConfig
from .errors import ConfigError
from .ground import RansacPlaneConfig
from .metrics import GuaranteeConfig, ToleranceConfig
from .shape import ShapeFilterConfig
from .smoother import SmootherConfig


@dataclass
class PipelineConfig:
    calibration_path: Path
    benchmark_registry_path: Optional[Path] = None
    ransac_ground: RansacPlaneConfig = field(default_factory=RansacPlaneConfig)
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)
    enlarge_ratios: dict = field(
        default_factory=lambda: {"default": EnlargeRatios()})
    shape_filter: ShapeFilterConfig = field(default_factory=ShapeFilterConfig)
    smoother: SmootherConfig = field(default_factory=SmootherConfig)
    tolerance: ToleranceConfig = field(default_factory=ToleranceConfig)
    guarantee: GuaranteeConfig = field(default_factory=GuaranteeConfig)
    target_object_ids: Optional[list] = None  # None = aggregate all objects
    rng_seed: int = 0
    output_dir: Optional[Path] = None

    def ratios_for(self, class_label: str) -> EnlargeRatios:
        return self.enlarge_ratios.get(class_label,
                                       self.enlarge_ratios.get(
                                           "default", EnlargeRatios()))

    def with_seed(self, seed: int) -> "PipelineConfig":
        cfg = PipelineConfig(**{**self.__dict__})
        cfg.rng_seed = seed
        cfg.ransac_ground = RansacPlaneConfig(
            **{**self.ransac_ground.__dict__, "rng_seed": seed})
        cfg.clustering = ClusteringConfig(
            **{**self.clustering.__dict__, "rng_seed": seed})
        cfg.smoother = SmootherConfig(
            **{**self.smoother.__dict__, "rng_seed": seed})
        return cfg


def _ratios_from_json(raw: dict) -> dict:
    return {cls: EnlargeRatios(**vals) for cls, vals in raw.items()}


def load_pipeline_config(path) -> PipelineConfig:
    """Load a JSON pipeline config; relative paths resolve next to it."""
    path = Path(path)
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    base = path.parent

    def resolve(key):
        value = raw.get(key)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else base / p

    calib_path = resolve("calibration")
    if calib_path is None:
        raise ConfigError("config must name a calibration file")
    if not calib_path.exists():
        raise ConfigError(f"calibration file {calib_path} does not exist")
    registry = resolve("benchmark_registry")
    if registry is not None and not registry.exists():
        raise ConfigError(f"benchmark registry {registry} does not exist")

    try:
        cfg = PipelineConfig(
            calibration_path=calib_path,
            benchmark_registry_path=registry,
            ransac_ground=RansacPlaneConfig(**raw.get("ransac_ground", {})),
            clustering=ClusteringConfig(**raw.get("clustering", {})),
            enlarge_ratios=_ratios_from_json(
                raw.get("enlarge_ratios", {"default": {}})),
            shape_filter=ShapeFilterConfig(**raw.get("shape_filter", {})),
            smoother=SmootherConfig(**raw.get("smoother", {})),
            tolerance=ToleranceConfig(**raw.get("tolerance", {})),
            guarantee=GuaranteeConfig(**raw.get("guarantee", {})),
            target_object_ids=raw.get("target_object_ids"),
            rng_seed=int(raw.get("rng_seed", 0)),
            output_dir=resolve("output_dir"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from exc
    if "default" not in cfg.enlarge_ratios:
        cfg.enlarge_ratios["default"] = EnlargeRatios()
    return cfg


def write_pipeline_config(path, *, calibration="calibration.json",
                          benchmark_registry=None, **overrides) -> None:
    """Write a config JSON with the library defaults plus overrides."""
    payload = {
        "calibration": str(calibration),
        "rng_seed": overrides.pop("rng_seed", 0),
        "ransac_ground": overrides.pop("ransac_ground", {}),
        "clustering": overrides.pop("clustering", {}),
        "enlarge_ratios": overrides.pop(
            "enlarge_ratios",
            {"default": {"left": 1.0, "right": 1.0, "up": 0.0, "down": 0.0}}),
        "shape_filter": overrides.pop("shape_filter", {}),
        "smoother": overrides.pop("smoother", {}),
        "tolerance": overrides.pop("tolerance", {}),
        "guarantee": overrides.pop("guarantee", {}),
    }
    if benchmark_registry is not None:
        payload["benchmark_registry"] = str(benchmark_registry)
    payload.update(overrides)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)

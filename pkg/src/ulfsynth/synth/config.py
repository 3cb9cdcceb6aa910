"""Generator configuration: every randomized stage reads its ranges from here.

The on-disk form is YAML (see ``data/config/default_generator.yaml``); all
values are plain scalars/lists so a resolved snapshot can be written next to
any output as JSON. Ranges are inclusive (lo, hi) pairs sampled uniformly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from ..errors import ConfigError

CONFIG_SCHEMA_VERSION = 1


def _range(value, name: str, lo_bound: float | None = None) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a (lo, hi) pair, got {value!r}") from exc
    if lo > hi:
        raise ConfigError(f"{name}: lo {lo} exceeds hi {hi}")
    if lo_bound is not None and lo < lo_bound:
        raise ConfigError(f"{name}: values must be >= {lo_bound}")
    return (lo, hi)


def _int_range(value, name: str, lo_bound: int = 0) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be an (lo, hi) integer pair, got {value!r}") from exc
    if lo > hi:
        raise ConfigError(f"{name}: lo {lo} exceeds hi {hi}")
    if lo < lo_bound:
        raise ConfigError(f"{name}: values must be >= {lo_bound}")
    return (lo, hi)


def _probability(value, name: str) -> float:
    p = float(value)
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {p}")
    return p


@dataclass(frozen=True)
class IntensityPrior:
    mu: tuple[float, float] = (0.1, 0.9)
    sigma: tuple[float, float] = (0.01, 0.1)

    def validated(self, name: str) -> "IntensityPrior":
        return IntensityPrior(_range(self.mu, f"{name}.mu"), _range(self.sigma, f"{name}.sigma", 0.0))


@dataclass(frozen=True)
class IntensityConfig:
    default_prior: IntensityPrior | None = IntensityPrior()
    background_prior: IntensityPrior = IntensityPrior(mu=(0.0, 0.3))
    class_priors: dict[int, IntensityPrior] = field(default_factory=dict)
    smoothing_sigma_mm: tuple[float, float] = (0.0, 1.0)

    def prior_for(self, label: int) -> IntensityPrior:
        """The prior governing a label; raises ConfigError when none applies."""
        if label == 0:
            return self.class_priors.get(0, self.background_prior)
        if label in self.class_priors:
            return self.class_priors[label]
        if self.default_prior is not None:
            return self.default_prior
        raise ConfigError(f"no intensity prior configured for class {label}")


@dataclass(frozen=True)
class NonrigidConfig:
    control_dims: tuple[int, int, int] = (5, 5, 5)
    max_displacement_mm: float = 4.0


@dataclass(frozen=True)
class SpatialConfig:
    rotation_deg: float = 15.0
    scale: tuple[float, float] = (0.9, 1.1)
    translation_mm: float = 5.0
    shear: float = 0.02
    nonrigid: NonrigidConfig = field(default_factory=NonrigidConfig)


@dataclass(frozen=True)
class BiasFieldConfig:
    control_dims: tuple[int, int, int] = (4, 4, 4)
    log_amplitude: tuple[float, float] = (0.0, 0.3)


@dataclass(frozen=True)
class ResolutionConfig:
    enabled: bool = True
    slice_thickness_mm: tuple[float, float] = (1.0, 5.0)


@dataclass(frozen=True)
class GhostingConfig:
    probability: float = 0.3
    num_ghosts: tuple[int, int] = (2, 5)
    intensity: tuple[float, float] = (0.2, 1.0)
    axes: tuple[int, ...] = (0, 1, 2)
    restore_center_fraction: float = 0.06


@dataclass(frozen=True)
class SpikeConfig:
    probability: float = 0.3
    num_spikes: tuple[int, int] = (1, 3)
    intensity: tuple[float, float] = (0.05, 0.3)


@dataclass(frozen=True)
class MotionConfig:
    probability: float = 0.3
    num_movements: tuple[int, int] = (1, 3)
    rotation_deg: float = 10.0
    translation_mm: float = 10.0


@dataclass(frozen=True)
class ArtifactsConfig:
    ghosting: GhostingConfig = field(default_factory=GhostingConfig)
    spike: SpikeConfig = field(default_factory=SpikeConfig)
    motion: MotionConfig = field(default_factory=MotionConfig)


@dataclass(frozen=True)
class GeneratorConfig:
    intensity: IntensityConfig = field(default_factory=IntensityConfig)
    spatial: SpatialConfig = field(default_factory=SpatialConfig)
    bias_field: BiasFieldConfig = field(default_factory=BiasFieldConfig)
    gamma: tuple[float, float] = (0.7, 1.4)
    noise_std: tuple[float, float] = (0.0, 0.05)
    resolution: ResolutionConfig = field(default_factory=ResolutionConfig)
    artifacts: ArtifactsConfig = field(default_factory=ArtifactsConfig)

    def validate(self) -> "GeneratorConfig":
        intensity = self.intensity
        if intensity.default_prior is not None:
            intensity.default_prior.validated("intensity.default_prior")
        intensity.background_prior.validated("intensity.background_prior")
        for cid, prior in intensity.class_priors.items():
            prior.validated(f"intensity.class_priors[{cid}]")
        _range(intensity.smoothing_sigma_mm, "intensity.smoothing_sigma_mm", 0.0)
        if self.spatial.rotation_deg < 0 or self.spatial.translation_mm < 0 or self.spatial.shear < 0:
            raise ConfigError("spatial ranges must be non-negative half-widths")
        _range(self.spatial.scale, "spatial.scale", 1e-6)
        if any(c < 2 for c in self.spatial.nonrigid.control_dims):
            raise ConfigError("spatial.nonrigid.control_dims must all be >= 2")
        if self.spatial.nonrigid.max_displacement_mm < 0:
            raise ConfigError("spatial.nonrigid.max_displacement_mm must be >= 0")
        if any(c < 2 for c in self.bias_field.control_dims):
            raise ConfigError("bias_field.control_dims must all be >= 2")
        _range(self.bias_field.log_amplitude, "bias_field.log_amplitude", 0.0)
        _range(self.gamma, "gamma", 1e-6)
        _range(self.noise_std, "noise_std", 0.0)
        _range(self.resolution.slice_thickness_mm, "resolution.slice_thickness_mm", 1e-6)
        for name in ("ghosting", "spike", "motion"):
            _probability(getattr(self.artifacts, name).probability, f"artifacts.{name}.probability")
        _int_range(self.artifacts.ghosting.num_ghosts, "artifacts.ghosting.num_ghosts", 2)
        _range(self.artifacts.ghosting.intensity, "artifacts.ghosting.intensity", 0.0)
        if not set(self.artifacts.ghosting.axes) <= {0, 1, 2}:
            raise ConfigError("artifacts.ghosting.axes must be a subset of {0, 1, 2}")
        if not 0.0 <= self.artifacts.ghosting.restore_center_fraction <= 1.0:
            raise ConfigError("artifacts.ghosting.restore_center_fraction must lie in [0, 1]")
        _int_range(self.artifacts.spike.num_spikes, "artifacts.spike.num_spikes", 1)
        _range(self.artifacts.spike.intensity, "artifacts.spike.intensity", 0.0)
        _int_range(self.artifacts.motion.num_movements, "artifacts.motion.num_movements", 1)
        if self.artifacts.motion.rotation_deg < 0 or self.artifacts.motion.translation_mm < 0:
            raise ConfigError("artifacts.motion ranges must be non-negative half-widths")
        return self

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["schema_version"] = CONFIG_SCHEMA_VERSION
        prior_block = doc["intensity"]
        prior_block["class_priors"] = {
            str(k): v for k, v in prior_block["class_priors"].items()
        }
        return doc

    def digest(self) -> str:
        """Stable content hash of the resolved configuration."""
        canon = json.dumps(self.to_dict(), sort_keys=True, default=list)
        return hashlib.sha256(canon.encode()).hexdigest()


def _prior_from(raw: dict, name: str) -> IntensityPrior:
    if not isinstance(raw, dict):
        raise ConfigError(f"{name} must be a mapping with mu/sigma")
    return IntensityPrior(
        mu=_range(raw.get("mu", IntensityPrior.mu), f"{name}.mu"),
        sigma=_range(raw.get("sigma", IntensityPrior.sigma), f"{name}.sigma", 0.0),
    )


def config_from_dict(doc: dict) -> GeneratorConfig:
    if not isinstance(doc, dict):
        raise ConfigError("generator config must be a mapping")
    doc = dict(doc)
    version = doc.pop("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema_version {version!r}")

    known = {
        "intensity", "spatial", "bias_field", "gamma", "noise_std", "resolution", "artifacts",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    defaults = GeneratorConfig()

    raw_int = doc.get("intensity", {})
    raw_default = raw_int.get("default_prior", "unset")
    default_prior: IntensityPrior | None
    if raw_default == "unset":
        default_prior = defaults.intensity.default_prior
    elif raw_default is None:
        default_prior = None
    else:
        default_prior = _prior_from(raw_default, "intensity.default_prior")
    background = (
        _prior_from(raw_int["background_prior"], "intensity.background_prior")
        if "background_prior" in raw_int
        else defaults.intensity.background_prior
    )
    class_priors = {
        int(k): _prior_from(v, f"intensity.class_priors[{k}]")
        for k, v in raw_int.get("class_priors", {}).items()
    }
    intensity = IntensityConfig(
        default_prior=default_prior,
        background_prior=background,
        class_priors=class_priors,
        smoothing_sigma_mm=_range(
            raw_int.get("smoothing_sigma_mm", defaults.intensity.smoothing_sigma_mm),
            "intensity.smoothing_sigma_mm",
            0.0,
        ),
    )

    raw_sp = doc.get("spatial", {})
    raw_nr = raw_sp.get("nonrigid", {})
    spatial = SpatialConfig(
        rotation_deg=float(raw_sp.get("rotation_deg", defaults.spatial.rotation_deg)),
        scale=_range(raw_sp.get("scale", defaults.spatial.scale), "spatial.scale", 1e-6),
        translation_mm=float(raw_sp.get("translation_mm", defaults.spatial.translation_mm)),
        shear=float(raw_sp.get("shear", defaults.spatial.shear)),
        nonrigid=NonrigidConfig(
            control_dims=tuple(
                int(c) for c in raw_nr.get("control_dims", defaults.spatial.nonrigid.control_dims)
            ),
            max_displacement_mm=float(
                raw_nr.get("max_displacement_mm", defaults.spatial.nonrigid.max_displacement_mm)
            ),
        ),
    )

    raw_bias = doc.get("bias_field", {})
    bias = BiasFieldConfig(
        control_dims=tuple(
            int(c) for c in raw_bias.get("control_dims", defaults.bias_field.control_dims)
        ),
        log_amplitude=_range(
            raw_bias.get("log_amplitude", defaults.bias_field.log_amplitude),
            "bias_field.log_amplitude",
            0.0,
        ),
    )

    raw_res = doc.get("resolution", {})
    resolution = ResolutionConfig(
        enabled=bool(raw_res.get("enabled", defaults.resolution.enabled)),
        slice_thickness_mm=_range(
            raw_res.get("slice_thickness_mm", defaults.resolution.slice_thickness_mm),
            "resolution.slice_thickness_mm",
            1e-6,
        ),
    )

    raw_art = doc.get("artifacts", {})
    raw_g = raw_art.get("ghosting", {})
    raw_s = raw_art.get("spike", {})
    raw_m = raw_art.get("motion", {})
    dg, ds, dm = defaults.artifacts.ghosting, defaults.artifacts.spike, defaults.artifacts.motion
    artifacts = ArtifactsConfig(
        ghosting=GhostingConfig(
            probability=_probability(raw_g.get("probability", dg.probability), "artifacts.ghosting.probability"),
            num_ghosts=_int_range(raw_g.get("num_ghosts", dg.num_ghosts), "artifacts.ghosting.num_ghosts", 2),
            intensity=_range(raw_g.get("intensity", dg.intensity), "artifacts.ghosting.intensity", 0.0),
            axes=tuple(int(a) for a in raw_g.get("axes", dg.axes)),
            restore_center_fraction=float(
                raw_g.get("restore_center_fraction", dg.restore_center_fraction)
            ),
        ),
        spike=SpikeConfig(
            probability=_probability(raw_s.get("probability", ds.probability), "artifacts.spike.probability"),
            num_spikes=_int_range(raw_s.get("num_spikes", ds.num_spikes), "artifacts.spike.num_spikes", 1),
            intensity=_range(raw_s.get("intensity", ds.intensity), "artifacts.spike.intensity", 0.0),
        ),
        motion=MotionConfig(
            probability=_probability(raw_m.get("probability", dm.probability), "artifacts.motion.probability"),
            num_movements=_int_range(raw_m.get("num_movements", dm.num_movements), "artifacts.motion.num_movements", 1),
            rotation_deg=float(raw_m.get("rotation_deg", dm.rotation_deg)),
            translation_mm=float(raw_m.get("translation_mm", dm.translation_mm)),
        ),
    )

    cfg = GeneratorConfig(
        intensity=intensity,
        spatial=spatial,
        bias_field=bias,
        gamma=_range(doc.get("gamma", defaults.gamma), "gamma", 1e-6),
        noise_std=_range(doc.get("noise_std", defaults.noise_std), "noise_std", 0.0),
        resolution=resolution,
        artifacts=artifacts,
    )
    return cfg.validate()


def load_config(path: str | Path) -> GeneratorConfig:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path.name}: invalid YAML: {exc}") from exc
    if doc is None:
        doc = {}
    return config_from_dict(doc)


def save_config(cfg: GeneratorConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))

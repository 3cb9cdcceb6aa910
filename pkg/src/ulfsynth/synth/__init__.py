"""Synthetic image generation from label maps via domain randomization."""

from .acquisition import FWHM_FACTOR, simulate_acquisition, slab_resample
from .artifacts import (
    apply_ghosting,
    apply_motion,
    apply_spike,
    ghost_kspace,
    motion_kspace,
    restore_unit_range,
    spike_kspace,
)
from .config import (
    GeneratorConfig,
    IntensityPrior,
    config_from_dict,
    load_config,
    save_config,
)
from .intensity import apply_bias_field, apply_gamma, apply_noise, minmax_unit, synth_intensity
from .pipeline import SynthSample, generate, sample_seed
from .transform import (
    SpatialTransform,
    apply_transform,
    apply_world_affine,
    compose_affine,
    sample_transform,
    upsample_control_grid,
)

__all__ = [
    "FWHM_FACTOR",
    "GeneratorConfig",
    "IntensityPrior",
    "SpatialTransform",
    "SynthSample",
    "apply_bias_field",
    "apply_gamma",
    "apply_ghosting",
    "apply_motion",
    "apply_noise",
    "apply_spike",
    "apply_transform",
    "apply_world_affine",
    "compose_affine",
    "config_from_dict",
    "generate",
    "ghost_kspace",
    "load_config",
    "minmax_unit",
    "motion_kspace",
    "restore_unit_range",
    "sample_seed",
    "sample_transform",
    "save_config",
    "simulate_acquisition",
    "slab_resample",
    "spike_kspace",
    "synth_intensity",
    "upsample_control_grid",
]

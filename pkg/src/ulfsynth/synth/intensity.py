"""Per-class Gaussian intensity synthesis, bias field, gamma, and noise.

Each stage ends with the shared unit renormalization so the next stage sees
values in [0, 1]: when the image already spans a nondegenerate range it is
min-max normalized; a constant image is clipped unchanged.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..errors import ConfigError
from ..volume import LabelMap, Volume
from .config import GeneratorConfig
from .transform import upsample_control_grid


def minmax_unit(data: np.ndarray) -> np.ndarray:
    lo = float(data.min())
    hi = float(data.max())
    if hi > lo:
        return (data - lo) / (hi - lo)
    return np.clip(data, 0.0, 1.0)


def synth_intensity(
    labels: LabelMap,
    rng: np.random.Generator,
    cfg: GeneratorConfig,
    record: dict | None = None,
) -> Volume:
    """Render an intensity image from a label map.

    For every present class (ascending id, background included) a mean and
    standard deviation are drawn from that class's prior and its voxels are
    filled with Gaussian samples. The image is then smoothed with a sampled
    isotropic Gaussian (sigma in mm, converted per-axis to voxels) and
    min-max normalized to [0, 1].
    """
    data = np.empty(labels.grid.dims, dtype=np.float64)
    present = np.unique(labels.data)
    per_class: dict[str, dict[str, float]] = {}
    for label in (int(v) for v in present):
        try:
            prior = cfg.intensity.prior_for(label)
        except ConfigError:
            raise ConfigError(
                f"class {label} is present in the label map but has no intensity prior"
            ) from None
        mu = float(rng.uniform(prior.mu[0], prior.mu[1]))
        sigma = float(rng.uniform(prior.sigma[0], prior.sigma[1]))
        mask = labels.data == label
        data[mask] = rng.normal(mu, sigma, size=int(mask.sum()))
        per_class[str(label)] = {"mu": mu, "sigma": sigma}

    lo, hi = cfg.intensity.smoothing_sigma_mm
    sigma_mm = float(rng.uniform(lo, hi))
    if sigma_mm > 0:
        sigma_vox = [sigma_mm / s for s in labels.grid.spacing]
        data = ndimage.gaussian_filter(data, sigma=sigma_vox, mode="nearest")

    if record is not None:
        record.update({"per_class": per_class, "smoothing_sigma_mm": sigma_mm})
    return Volume(labels.grid, minmax_unit(data))


def apply_bias_field(
    vol: Volume,
    rng: np.random.Generator,
    cfg: GeneratorConfig,
    record: dict | None = None,
) -> Volume:
    """Multiply by exp(B) where B is coarse Gaussian noise upsampled trilinearly.

    The noise scale is itself drawn from the configured log-amplitude range,
    so a (0, 0) range makes this stage the identity up to renormalization.
    """
    lo, hi = cfg.bias_field.log_amplitude
    log_sigma = float(rng.uniform(lo, hi))
    control = rng.normal(0.0, log_sigma, size=tuple(cfg.bias_field.control_dims))
    log_field = upsample_control_grid(control, vol.grid)
    data = vol.data * np.exp(log_field)
    if record is not None:
        record.update(
            {
                "log_amplitude_sigma": log_sigma,
                "control_dims": list(cfg.bias_field.control_dims),
                "control_log_values": control.tolist(),
            }
        )
    return Volume(vol.grid, minmax_unit(data))


def apply_gamma(
    vol: Volume,
    rng: np.random.Generator,
    cfg: GeneratorConfig,
    record: dict | None = None,
) -> Volume:
    """Raise voxel values (already in [0, 1]) to a sampled exponent."""
    gamma = float(rng.uniform(cfg.gamma[0], cfg.gamma[1]))
    data = np.power(np.clip(vol.data, 0.0, 1.0), gamma)
    if record is not None:
        record["exponent"] = gamma
    return Volume(vol.grid, data)


def apply_noise(
    vol: Volume,
    rng: np.random.Generator,
    cfg: GeneratorConfig,
    record: dict | None = None,
) -> Volume:
    """Add white Gaussian noise with a sampled sigma, then renormalize."""
    sigma = float(rng.uniform(cfg.noise_std[0], cfg.noise_std[1]))
    data = vol.data + rng.normal(0.0, sigma, size=vol.grid.dims)
    if record is not None:
        record["sigma"] = sigma
    return Volume(vol.grid, minmax_unit(data))

"""The generation pipeline: one label map + seed + config -> one training pair.

Stage order is fixed: spatial transform -> label warp (nearest) -> per-class
intensity synthesis -> bias field -> gamma -> noise -> acquisition simulation
(when enabled) -> k-space artifacts (each fired by its own probability) ->
final unit normalization. All randomness flows from a single numpy Generator
seeded with the given seed, so the same (labels, seed, config) triple
reproduces the sample bit for bit; the provenance dict records the seed,
config digest, and every sampled parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import __version__ as _version
from ..volume import LabelMap, Volume
from . import artifacts as art
from .acquisition import simulate_acquisition
from .config import GeneratorConfig
from .intensity import apply_bias_field, apply_gamma, apply_noise, minmax_unit, synth_intensity
from .transform import apply_transform, sample_transform

PROVENANCE_SCHEMA_VERSION = 1
_ARTIFACT_ORDER = ("ghosting", "spike", "motion")


@dataclass(frozen=True)
class SynthSample:
    image: Volume
    labels: LabelMap
    seed: int
    provenance: dict


def sample_seed(dataset_seed: int, subject_id: str, epoch: int, index: int) -> int:
    """Derive a per-sample seed; stable across runs and platforms."""
    import hashlib

    material = f"{dataset_seed}|{subject_id}|{epoch}|{index}".encode()
    digest = hashlib.blake2b(material, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def generate(labels: LabelMap, seed: int, cfg: GeneratorConfig) -> SynthSample:
    """Generate one aligned (image, labels) pair from a label map."""
    cfg.validate()
    rng = np.random.default_rng(seed)
    stages: dict = {}

    rec_transform: dict = {}
    transform = sample_transform(rng, cfg, labels.grid, record=rec_transform)
    warped = apply_transform(labels, transform, interp="nearest")
    stages["spatial"] = rec_transform

    rec: dict = {}
    image = synth_intensity(warped, rng, cfg, record=rec)
    stages["intensity"] = rec

    rec = {}
    image = apply_bias_field(image, rng, cfg, record=rec)
    stages["bias_field"] = rec

    rec = {}
    image = apply_gamma(image, rng, cfg, record=rec)
    stages["gamma"] = rec

    rec = {}
    image = apply_noise(image, rng, cfg, record=rec)
    stages["noise"] = rec

    if cfg.resolution.enabled:
        rec = {"applied": True}
        image = simulate_acquisition(image, rng, cfg, record=rec)
        stages["acquisition"] = rec

    art_params = {
        "ghosting": (cfg.artifacts.ghosting, art.apply_ghosting),
        "spike": (cfg.artifacts.spike, art.apply_spike),
        "motion": (cfg.artifacts.motion, art.apply_motion),
    }
    art_record: dict = {"order": list(_ARTIFACT_ORDER)}
    for name in _ARTIFACT_ORDER:
        params, fn = art_params[name]
        fired = bool(rng.uniform() < params.probability)
        rec = {"applied": fired}
        if fired:
            image = fn(image, rng, params, record=rec)
        art_record[name] = rec
    stages["artifacts"] = art_record

    image = Volume(image.grid, minmax_unit(image.data))

    provenance = {
        "schema_version": PROVENANCE_SCHEMA_VERSION,
        "tool_version": _version,
        "seed": int(seed),
        "config_digest": cfg.digest(),
        "stages": stages,
    }
    return SynthSample(image=image, labels=warped, seed=int(seed), provenance=provenance)

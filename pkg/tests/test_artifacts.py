"""K-space artifact tests.

The ghosting comb is checked against an explicit DFT-matrix filter and a
hand-derived half-FOV replica; spikes against the closed-form cosine a
single Fourier coefficient contributes; motion against a manually assembled
spectrum partition.
"""

import numpy as np
import pytest

from ulfsynth.errors import ContractError
from ulfsynth.synth import config_from_dict
from ulfsynth.synth.artifacts import (
    apply_ghosting,
    apply_motion,
    apply_spike,
    ghost_kspace,
    motion_kspace,
    restore_unit_range,
    spike_kspace,
)
from ulfsynth.synth.transform import compose_affine
from ulfsynth.volume import Grid, Volume

from oracles import dft_filter_oracle


def mid_gray_volume(rng, dims=(16, 16, 16), amplitude=0.2) -> Volume:
    data = 0.5 + amplitude * (rng.random(dims) - 0.5)
    return Volume(Grid.isotropic(dims), data)


class TestRestoreUnitRange:
    def test_in_range_data_passes_through(self, rng):
        data = rng.random(50)
        assert np.array_equal(restore_unit_range(data), data)

    def test_overshoot_is_affinely_squeezed(self):
        data = np.array([-0.5, 0.0, 1.0, 1.5])
        out = restore_unit_range(data)
        # affine map from [-0.5, 1.5] onto [0, 1]
        assert np.allclose(out, [0.0, 0.25, 0.75, 1.0])

    def test_only_high_side_out(self):
        out = restore_unit_range(np.array([0.0, 1.0, 3.0]))
        assert np.allclose(out, [0.0, 1.0 / 3.0, 1.0])


class TestGhosting:
    def test_zero_intensity_is_identity(self, rng):
        vol = mid_gray_volume(rng)
        out = ghost_kspace(vol, axis=0, num_ghosts=3, intensity=0.0)
        assert np.allclose(out.data, vol.data, atol=1e-12)

    def test_full_comb_creates_half_fov_replica(self):
        # g=2, s=1, no protected band: odd k-space planes vanish, so a point
        # source splits into half-amplitude copies half a field of view apart
        n = 32
        grid = Grid.isotropic((n, 8, 8))
        data = np.zeros(grid.dims)
        data[5, 3, 3] = 1.0
        out = ghost_kspace(Volume(grid, data), axis=0, num_ghosts=2, intensity=1.0,
                           restore_center_fraction=0.0)
        expected = np.zeros(grid.dims)
        expected[5, 3, 3] = 0.5
        expected[5 + n // 2, 3, 3] = 0.5
        assert np.allclose(out.data, expected, atol=1e-6)

    def test_matches_explicit_dft_filter(self, rng):
        n = 16
        grid = Grid.isotropic((n, 4, 4))
        data = 0.5 + 0.1 * (rng.random(grid.dims) - 0.5)
        g, s = 4, 0.6
        out = ghost_kspace(Volume(grid, data), axis=0, num_ghosts=g, intensity=s,
                           restore_center_fraction=0.0)
        k = np.arange(n)
        factor = np.where(k % g == g // 2, 1.0 - s, 1.0)
        expected = np.empty_like(data)
        for j in range(4):
            for kk in range(4):
                expected[:, j, kk] = dft_filter_oracle(data[:, j, kk], factor)
        assert np.allclose(out.data, np.clip(expected, 0.0, 1.0), atol=1e-9)

    def test_dc_plane_never_modulated(self, rng):
        # mean brightness survives any comb because index g//2 != 0
        vol = mid_gray_volume(rng, amplitude=0.05)
        for g in (2, 3, 4, 5):
            out = ghost_kspace(vol, axis=2, num_ghosts=g, intensity=0.8,
                               restore_center_fraction=0.0)
            assert np.isclose(out.data.mean(), vol.data.mean(), atol=1e-9)

    def test_protected_band_suppresses_everything(self, rng):
        vol = mid_gray_volume(rng)
        out = ghost_kspace(vol, axis=0, num_ghosts=2, intensity=1.0,
                           restore_center_fraction=2.0)
        assert np.allclose(out.data, vol.data, atol=1e-12)

    def test_argument_validation(self, rng):
        vol = mid_gray_volume(rng)
        with pytest.raises(ContractError):
            ghost_kspace(vol, axis=3, num_ghosts=2, intensity=0.5)
        with pytest.raises(ContractError):
            ghost_kspace(vol, axis=0, num_ghosts=1, intensity=0.5)

    def test_apply_ghosting_respects_axis_choice_and_records(self, rng):
        vol = mid_gray_volume(rng)
        cfg = config_from_dict({"artifacts": {"ghosting": {"axes": [2]}}})
        rec: dict = {}
        apply_ghosting(vol, np.random.default_rng(0), cfg.artifacts.ghosting, record=rec)
        assert rec["axis"] == 2
        assert 2 <= rec["num_ghosts"] <= 5


class TestSpike:
    def test_single_spike_adds_closed_form_cosine(self):
        dims = (8, 8, 8)
        grid = Grid.isotropic(dims)
        vol = Volume(grid, np.full(dims, 0.5))
        loc = np.array([[2, 1, 3]])
        phase = np.array([0.7])
        intensity = 0.01
        out = spike_kspace(vol, loc, phase, intensity)
        # reference |K| max is the DC bin, 0.5 * N; the added coefficient
        # contributes (intensity * 0.5 * N / N) * cos(2 pi k.x / n + phase)
        ii, jj, kk = np.meshgrid(*(np.arange(n, dtype=float) for n in dims), indexing="ij")
        angle = 2.0 * np.pi * (2 * ii / 8 + 1 * jj / 8 + 3 * kk / 8) + 0.7
        expected = 0.5 + intensity * 0.5 * np.cos(angle)
        assert np.allclose(out.data, expected, atol=1e-9)

    def test_zero_intensity_is_identity(self, rng):
        vol = mid_gray_volume(rng)
        out = spike_kspace(vol, np.array([[1, 1, 1]]), np.array([0.0]), 0.0)
        assert np.allclose(out.data, vol.data, atol=1e-10)

    def test_dc_spike_rejected(self, rng):
        vol = mid_gray_volume(rng)
        with pytest.raises(ContractError, match="DC"):
            spike_kspace(vol, np.array([[0, 0, 0]]), np.array([0.0]), 0.1)

    def test_location_phase_count_mismatch(self, rng):
        vol = mid_gray_volume(rng)
        with pytest.raises(ContractError):
            spike_kspace(vol, np.array([[1, 1, 1]]), np.array([0.0, 1.0]), 0.1)

    def test_apply_spike_avoids_dc_and_records(self, rng):
        vol = mid_gray_volume(rng)
        cfg = config_from_dict({"artifacts": {"spike": {"num_spikes": [3, 3]}}})
        rec: dict = {}
        out = apply_spike(vol, np.random.default_rng(2), cfg.artifacts.spike, record=rec)
        assert len(rec["locations"]) == 3
        assert [0, 0, 0] not in rec["locations"]
        assert out.data.min() >= 0.0 and out.data.max() <= 1.0


class TestMotion:
    def test_identity_movements_change_nothing(self, rng):
        vol = mid_gray_volume(rng)
        eye = np.eye(4)
        out = motion_kspace(vol, [eye, eye], axis=1, cuts=[4, 9])
        assert np.allclose(out.data, vol.data, atol=1e-10)

    def test_partition_matches_manual_assembly(self, rng):
        # one movement = an exact 3-voxel translation of an interior blob, so
        # the expected composite spectrum can be assembled with numpy alone
        n = 16
        grid = Grid.isotropic((n, n, n))
        data = np.zeros(grid.dims)
        data[6:9, 6:9, 6:9] = 0.8
        vol = Volume(grid, data)
        affine = compose_affine(
            grid.center_world(), (0, 0, 0), (1, 1, 1), (3.0, 0.0, 0.0), (0, 0, 0)
        )
        cut = 5
        out = motion_kspace(vol, [affine], axis=0, cuts=[cut])

        moved = np.roll(data, 3, axis=0)  # integer translation, blob stays interior
        s0 = np.fft.fftshift(np.fft.fftn(data), axes=0)
        s1 = np.fft.fftshift(np.fft.fftn(moved), axes=0)
        composite = np.concatenate([s0[:cut], s1[cut:]], axis=0)
        expected = np.fft.ifftn(np.fft.ifftshift(composite, axes=0)).real
        assert np.allclose(out.data, np.clip(expected, 0.0, 1.0), atol=1e-9)

    def test_cut_validation(self, rng):
        vol = mid_gray_volume(rng, dims=(8, 8, 8))
        eye = np.eye(4)
        with pytest.raises(ContractError):
            motion_kspace(vol, [eye], axis=0, cuts=[0])
        with pytest.raises(ContractError):
            motion_kspace(vol, [eye], axis=0, cuts=[8])
        with pytest.raises(ContractError):
            motion_kspace(vol, [eye, eye], axis=0, cuts=[3, 3])
        with pytest.raises(ContractError):
            motion_kspace(vol, [eye, eye], axis=0, cuts=[3])

    def test_apply_motion_records_movements(self, rng):
        vol = mid_gray_volume(rng)
        cfg = config_from_dict({"artifacts": {"motion": {"num_movements": [2, 2]}}})
        rec: dict = {}
        out = apply_motion(vol, np.random.default_rng(1), cfg.artifacts.motion, record=rec)
        assert len(rec["movements"]) == 2
        assert len(rec["cuts"]) == 2
        assert rec["axis"] in (0, 1, 2)
        assert out.grid.dims == vol.grid.dims

    def test_deterministic(self, rng):
        vol = mid_gray_volume(rng)
        cfg = config_from_dict({})
        a = apply_motion(vol, np.random.default_rng(5), cfg.artifacts.motion)
        b = apply_motion(vol, np.random.default_rng(5), cfg.artifacts.motion)
        assert np.array_equal(a.data, b.data)

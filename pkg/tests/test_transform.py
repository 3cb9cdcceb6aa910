import numpy as np
import pytest

from ulfsynth.errors import ContractError
from ulfsynth.synth import GeneratorConfig, config_from_dict
from ulfsynth.synth.transform import (
    SpatialTransform,
    apply_transform,
    apply_world_affine,
    compose_affine,
    rotation_matrix,
    sample_transform,
    upsample_control_grid,
)
from ulfsynth.volume import DisplacementField, Grid, LabelMap, Volume

from conftest import make_labels


def _rigid_cfg(**spatial):
    base = {
        "rotation_deg": 0.0,
        "scale": [1.0, 1.0],
        "translation_mm": 0.0,
        "shear": 0.0,
        "nonrigid": {"control_dims": [2, 2, 2], "max_displacement_mm": 0.0},
    }
    base.update(spatial)
    return config_from_dict({"spatial": base})


class TestRotation:
    @pytest.mark.parametrize("axis", [0, 1, 2])
    def test_orthonormal_unit_determinant(self, axis):
        m = rotation_matrix(axis, 37.0)[:3, :3]
        assert np.allclose(m @ m.T, np.eye(3), atol=1e-12)
        assert np.isclose(np.linalg.det(m), 1.0)

    def test_quarter_turn_about_z(self):
        m = rotation_matrix(2, 90.0)
        assert np.allclose(m[:3, :3] @ [1, 0, 0], [0, 1, 0], atol=1e-12)

    def test_axis_leaves_own_coordinate_fixed(self):
        m = rotation_matrix(1, 63.0)
        assert np.allclose(m[:3, :3] @ [0, 1, 0], [0, 1, 0], atol=1e-12)


class TestComposeAffine:
    def test_neutral_arguments_give_identity(self):
        a = compose_affine(
            np.array([5.0, 6.0, 7.0]), (0, 0, 0), (1, 1, 1), (0, 0, 0), (0, 0, 0)
        )
        assert np.allclose(a, np.eye(4), atol=1e-12)

    def test_center_is_fixed_point_without_translation(self):
        center = np.array([3.0, -2.0, 8.0])
        a = compose_affine(center, (20, -10, 5), (0.9, 1.1, 1.0), (0, 0, 0), (0.02, 0, 0.01))
        assert np.allclose(a @ [*center, 1.0], [*center, 1.0], atol=1e-9)

    def test_pure_translation(self):
        a = compose_affine(np.array([4.0, 4.0, 4.0]), (0, 0, 0), (1, 1, 1), (1.0, -2.0, 3.0), (0, 0, 0))
        expected = np.eye(4)
        expected[:3, 3] = (1.0, -2.0, 3.0)
        assert np.allclose(a, expected, atol=1e-12)

    def test_scale_about_center(self):
        center = np.array([10.0, 0.0, 0.0])
        a = compose_affine(center, (0, 0, 0), (2.0, 2.0, 2.0), (0, 0, 0), (0, 0, 0))
        moved = a @ [12.0, 0.0, 0.0, 1.0]
        assert np.allclose(moved[:3], [14.0, 0.0, 0.0])  # center + 2 * offset


class TestControlGridUpsampling:
    def test_constant_control_is_constant(self):
        grid = Grid.isotropic((7, 6, 5))
        out = upsample_control_grid(np.full((3, 3, 3), 2.5), grid)
        assert out.shape == grid.dims
        assert np.allclose(out, 2.5, atol=1e-12)

    def test_control_matching_grid_is_identity(self, rng):
        grid = Grid.isotropic((4, 5, 6))
        control = rng.random(grid.dims)
        out = upsample_control_grid(control, grid)
        assert np.array_equal(out, control)

    def test_linear_control_reproduced_exactly(self, rng):
        # trilinear upsampling is exact for control values affine in the index
        grid = Grid.isotropic((9, 8, 7))
        cdims = (3, 4, 5)
        ci, cj, ck = np.meshgrid(*(np.arange(c, dtype=float) for c in cdims), indexing="ij")
        control = 1.5 * ci - 2.0 * cj + 0.5 * ck + 3.0
        out = upsample_control_grid(control, grid)
        ii, jj, kk = np.meshgrid(*(np.arange(n, dtype=float) for n in grid.dims), indexing="ij")
        scale = [(c - 1) / (n - 1) for c, n in zip(cdims, grid.dims)]
        expected = 1.5 * ii * scale[0] - 2.0 * jj * scale[1] + 0.5 * kk * scale[2] + 3.0
        assert np.allclose(out, expected, atol=1e-9)

    def test_vector_channels_upsampled_independently(self, rng):
        grid = Grid.isotropic((5, 5, 5))
        control = np.zeros((2, 2, 2, 3))
        control[..., 0] = 1.0
        control[..., 2] = -2.0
        out = upsample_control_grid(control, grid)
        assert out.shape == grid.dims + (3,)
        assert np.allclose(out[..., 0], 1.0)
        assert np.allclose(out[..., 1], 0.0)
        assert np.allclose(out[..., 2], -2.0)

    def test_too_few_control_points_rejected(self):
        with pytest.raises(ContractError):
            upsample_control_grid(np.zeros((1, 3, 3)), Grid.isotropic((4, 4, 4)))


class TestSampleTransform:
    def test_deterministic_given_seed(self):
        cfg = GeneratorConfig()
        grid = Grid.isotropic((8, 8, 8))
        t1 = sample_transform(np.random.default_rng(42), cfg, grid)
        t2 = sample_transform(np.random.default_rng(42), cfg, grid)
        assert np.array_equal(t1.affine, t2.affine)
        assert np.array_equal(t1.displacement.vectors, t2.displacement.vectors)

    def test_zero_ranges_give_identity(self):
        cfg = _rigid_cfg()
        grid = Grid.isotropic((8, 8, 8))
        t = sample_transform(np.random.default_rng(0), cfg, grid)
        assert np.allclose(t.affine, np.eye(4), atol=1e-12)
        assert not t.displacement.vectors.any()

    def test_draw_count_independent_of_magnitudes(self):
        # same draw sequence length regardless of configured widths, so a
        # config tweak never de-synchronizes unrelated downstream sampling
        grid = Grid.isotropic((6, 6, 6))
        narrow = _rigid_cfg()
        wide = _rigid_cfg(
            rotation_deg=30.0,
            scale=[0.7, 1.3],
            translation_mm=10.0,
            shear=0.1,
            nonrigid={"control_dims": [2, 2, 2], "max_displacement_mm": 9.0},
        )
        r1, r2 = np.random.default_rng(7), np.random.default_rng(7)
        sample_transform(r1, narrow, grid)
        sample_transform(r2, wide, grid)
        assert r1.uniform() == r2.uniform()

    def test_record_captures_every_sampled_parameter(self):
        rec: dict = {}
        grid = Grid.isotropic((6, 6, 6))
        sample_transform(np.random.default_rng(3), GeneratorConfig(), grid, record=rec)
        assert set(rec) == {"rotation_deg", "scale", "translation_mm", "shear", "nonrigid"}
        assert len(rec["nonrigid"]["control_offsets_mm"]) == 5  # control_dims[0]

    def test_replay_from_record_reproduces_the_transform(self):
        # the record is sufficient to rebuild both the affine and the field
        grid = Grid.isotropic((8, 8, 8))
        rec: dict = {}
        t = sample_transform(np.random.default_rng(11), GeneratorConfig(), grid, record=rec)
        affine = compose_affine(
            grid.center_world(),
            rec["rotation_deg"],
            rec["scale"],
            rec["translation_mm"],
            rec["shear"],
        )
        vectors = upsample_control_grid(
            np.asarray(rec["nonrigid"]["control_offsets_mm"]), grid
        )
        assert np.array_equal(affine, t.affine)
        assert np.array_equal(vectors, t.displacement.vectors)


class TestApplyTransform:
    def test_identity_is_exact(self, rng):
        labels = make_labels(rng, (7, 7, 7))
        grid = labels.grid
        t = SpatialTransform(np.eye(4), DisplacementField.zero(grid))
        out = apply_transform(labels, t)
        assert np.array_equal(out.data, labels.data)

    def test_label_indicator_alignment_is_bit_exact(self, rng):
        # warping the label map and warping each class indicator must agree
        # voxel for voxel, because both flow through the same coordinates
        labels = make_labels(rng, (12, 12, 12), num_classes=4)
        t = sample_transform(np.random.default_rng(5), GeneratorConfig(), labels.grid)
        warped = apply_transform(labels, t, interp="nearest")
        for cls in (1, 2, 3):
            indicator = LabelMap(labels.grid, (labels.data == cls).astype(np.int32))
            warped_ind = apply_transform(indicator, t, interp="nearest")
            assert np.array_equal(warped_ind.data.astype(bool), warped.data == cls)

    def test_grid_mismatch_rejected(self, rng):
        labels = make_labels(rng, (5, 5, 5))
        t = SpatialTransform(np.eye(4), DisplacementField.zero(Grid.isotropic((6, 5, 5))))
        with pytest.raises(ContractError):
            apply_transform(labels, t)

    def test_world_translation_shifts_content(self):
        grid = Grid.isotropic((16, 16, 16))
        data = np.zeros(grid.dims)
        data[8, 8, 8] = 1.0
        vol = Volume(grid, data)
        affine = compose_affine(grid.center_world(), (0, 0, 0), (1, 1, 1), (3.0, 0.0, 0.0), (0, 0, 0))
        out = apply_world_affine(vol, affine)
        # forward translation +3mm moves the blob from voxel 8 to voxel 11
        assert out.data[11, 8, 8] == pytest.approx(1.0, abs=1e-12)
        assert out.data[8, 8, 8] == pytest.approx(0.0, abs=1e-12)

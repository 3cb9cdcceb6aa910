from pathlib import Path

import numpy as np
import pytest

from ulfsynth.errors import ContractError, FormatError
from ulfsynth.labels import (
    BUILTIN_SCHEMES,
    LISA,
    LISA_PLUS,
    LabelScheme,
    get_scheme,
    load_mapping,
    remap,
)
from ulfsynth.volume import Grid, LabelMap

DATA_DIR = Path(__file__).parent.parent / "src" / "ulfsynth" / "data" / "mappings"


class TestBuiltinSchemes:
    def test_lisa_classes(self):
        assert LISA.ids == (1, 2, 3, 4, 5, 6, 7, 8)
        assert LISA.names[1] == "left_hippocampus"
        assert LISA.names[2] == "right_hippocampus"
        assert LISA.names[3] == "left_lateral_ventricle"
        assert LISA.names[4] == "right_lateral_ventricle"
        assert LISA.names[5] == "left_caudate_nucleus"
        assert LISA.names[6] == "right_caudate_nucleus"
        assert LISA.names[7] == "left_lentiform_nucleus"
        assert LISA.names[8] == "right_lentiform_nucleus"

    def test_lisa_eval_exclusions(self):
        # ventricles are reviewed but not ranked
        assert LISA.eval_ids() == (1, 2, 5, 6, 7, 8)
        assert LISA.excluded_from_eval == {3, 4}

    def test_lisa_plus_extends_lisa(self):
        assert LISA_PLUS.ids == tuple(range(1, 15))
        assert LISA_PLUS.names[9] == "white_matter"
        assert LISA_PLUS.names[10] == "cortical_gray_matter"
        assert LISA_PLUS.names[11] == "csf"
        assert LISA_PLUS.names[12] == "cerebellum"
        assert LISA_PLUS.names[13] == "brainstem"
        assert LISA_PLUS.names[14] == "deep_gray_matter"
        for cid in LISA.ids:
            assert LISA_PLUS.names[cid] == LISA.names[cid]

    def test_get_scheme(self):
        assert get_scheme("LISA") is LISA
        with pytest.raises(ContractError, match="unknown scheme"):
            get_scheme("nope")

    def test_id_of(self):
        assert LISA.id_of("right_caudate_nucleus") == 6
        with pytest.raises(ContractError):
            LISA.id_of("amygdala")


class TestSchemeValidation:
    def test_ids_must_be_contiguous(self):
        with pytest.raises(ContractError, match="contiguous"):
            LabelScheme("x", ((1, "a"), (3, "b")))

    def test_duplicate_names_rejected(self):
        with pytest.raises(ContractError, match="duplicate"):
            LabelScheme("x", ((1, "a"), (2, "a")))

    def test_mapping_targets_must_be_scheme_ids(self):
        with pytest.raises(ContractError, match="mapping targets"):
            LabelScheme("x", ((1, "a"),), mapping={5: 9})

    def test_mapping_to_background_allowed(self):
        s = LabelScheme("x", ((1, "a"),), mapping={17: 0, 4: 1})
        assert s.mapping[17] == 0


class TestMappingCsv:
    def _write(self, tmp_path, text):
        p = tmp_path / "map.csv"
        p.write_text(text)
        return p

    def test_load_happy_path(self, tmp_path):
        p = self._write(
            tmp_path,
            "source_id,source_name,target_id\n17,Left-Hippocampus,1\n53,Right-Hippocampus,2\n24,CSF,0\n",
        )
        s = load_mapping(p, LISA)
        assert dict(s.mapping) == {17: 1, 53: 2, 24: 0}

    def test_bad_header(self, tmp_path):
        p = self._write(tmp_path, "src,name,dst\n1,a,1\n")
        with pytest.raises(FormatError, match="expected header"):
            load_mapping(p, LISA)

    def test_non_integer_id_names_line(self, tmp_path):
        p = self._write(tmp_path, "source_id,source_name,target_id\n17,hippo,1\nxx,bad,2\n")
        with pytest.raises(FormatError, match="line 3"):
            load_mapping(p, LISA)

    def test_duplicate_source_rejected(self, tmp_path):
        p = self._write(tmp_path, "source_id,source_name,target_id\n17,a,1\n17,b,2\n")
        with pytest.raises(FormatError, match="duplicate source_id"):
            load_mapping(p, LISA)

    def test_target_outside_scheme_rejected(self, tmp_path):
        p = self._write(tmp_path, "source_id,source_name,target_id\n17,a,99\n")
        with pytest.raises(FormatError):
            load_mapping(p, LISA)

    @pytest.mark.parametrize(
        "fname,scheme_name",
        [
            ("dhcp_to_lisa.csv", "LISA"),
            ("dhcp_to_lisa_plus.csv", "LISA_PLUS"),
            ("bobs_to_lisa.csv", "LISA"),
            ("bobs_to_lisa_plus.csv", "LISA_PLUS"),
        ],
    )
    def test_bundled_templates_parse(self, fname, scheme_name):
        scheme = load_mapping(DATA_DIR / fname, BUILTIN_SCHEMES[scheme_name])
        assert len(scheme.mapping) > 0
        # every non-background scheme target is reachable from some source id
        targets = set(scheme.mapping.values()) - {0}
        assert targets <= set(scheme.ids)


class TestRemap:
    def test_remap_applies_lut_and_zeroes_unmapped(self):
        grid = Grid.isotropic((2, 2, 2))
        data = np.array([0, 17, 53, 24, 99, 17, 0, 53], dtype=np.int32).reshape(2, 2, 2)
        scheme = LISA.with_mapping({17: 1, 53: 2, 24: 0})
        out = remap(LabelMap(grid, data), scheme)
        expected = np.array([0, 1, 2, 0, 0, 1, 0, 2], dtype=np.int32).reshape(2, 2, 2)
        assert np.array_equal(out.data, expected)

    def test_remap_output_vocabulary_is_scheme(self):
        grid = Grid.isotropic((2, 2, 2))
        out = remap(LabelMap(grid, np.zeros((2, 2, 2), dtype=np.int32)), LISA)
        assert dict(out.vocabulary) == LISA.vocabulary()

    def test_remap_identity_for_native_scheme_data(self, rng):
        grid = Grid.isotropic((4, 4, 4))
        data = rng.integers(0, 9, grid.dims).astype(np.int32)
        out = remap(LabelMap(grid, data), LISA)
        assert np.array_equal(out.data, data)

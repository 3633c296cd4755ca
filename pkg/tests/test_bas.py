import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anneal_rbm.bas import clamp_mask, generate_bas, load_bas, save_bas
from anneal_rbm.errors import ContractViolation


def is_bar_or_stripe(img, m):
    grid = img.reshape(m, m)
    rows_identical = all(np.array_equal(grid[0], grid[r]) for r in range(m))
    cols_identical = all(np.array_equal(grid[:, 0], grid[:, c]) for c in range(m))
    return rows_identical or cols_identical


class TestGenerate:
    def test_bas4_has_30_images(self):
        assert generate_bas(4).n_images == 30

    def test_bas2_has_6_images(self):
        assert generate_bas(2).n_images == 6

    def test_bas3_enumeration(self):
        ds = generate_bas(3)
        assert ds.n_images == 14
        for img in ds.images:
            assert is_bar_or_stripe(img, 3)

    def test_no_duplicates(self):
        ds = generate_bas(4)
        assert len({img.tobytes() for img in ds.images}) == 30

    def test_deterministic(self):
        assert np.array_equal(generate_bas(4).images, generate_bas(4).images)

    def test_small_side_rejected(self):
        with pytest.raises(ContractViolation):
            generate_bas(1)

    @given(st.integers(min_value=2, max_value=6))
    @settings(max_examples=5, deadline=None)
    def test_count_formula(self, m):
        ds = generate_bas(m)
        assert ds.n_images == 2 ** (m + 1) - 2
        for img in ds.images:
            assert is_bar_or_stripe(img, m)


class TestClampMask:
    def test_outer_border_m4(self):
        idx = clamp_mask(4)
        assert len(idx) == 12
        free = sorted(set(range(16)) - set(idx.tolist()))
        assert free == [5, 6, 9, 10]  # the four central pixels

    def test_outer_border_m2_has_no_interior(self):
        assert len(clamp_mask(2)) == 4

    def test_custom_region_passthrough(self):
        assert clamp_mask(4, [0]).tolist() == [0]

    def test_out_of_range_rejected(self):
        with pytest.raises(ContractViolation):
            clamp_mask(4, [16])

    def test_unknown_region_rejected(self):
        with pytest.raises(ContractViolation):
            clamp_mask(4, "inner-ring")


class TestBorderIdentifiability:
    def test_outer_pixels_identify_one_image(self):
        # fixing the 12 outer pixels leaves exactly one compatible image
        ds = generate_bas(4)
        border = clamp_mask(4)
        for img in ds.images:
            compatible = [
                other for other in ds.images
                if np.array_equal(other[border], img[border])
            ]
            assert len(compatible) == 1


class TestIo:
    def test_round_trip(self, tmp_path):
        ds = generate_bas(3)
        path = tmp_path / "bas.txt"
        save_bas(ds, path)
        back = load_bas(path)
        assert back.m == 3
        assert np.array_equal(back.images, ds.images)

    def test_line_format(self, tmp_path):
        path = tmp_path / "bas.txt"
        save_bas(generate_bas(4), path)
        lines = path.read_text().splitlines()
        assert len(lines) == 30
        assert all(len(line) == 16 and set(line) <= {"0", "1"} for line in lines)

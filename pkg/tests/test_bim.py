import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tvc.bim import (
    ImportanceGrid,
    BlockError,
    bim_sequence,
    block_error,
    ctu_mean_e,
    delta_qp_of_e3,
    e3,
    frame_errors,
    pair_e,
)
from tvc.motion import MotionField, MotionVector
from tvc.synth import flat_clip, transient_clip
from tvc.video_io import Frame420, Plane


def zero_field(w, h):
    rows, cols = -(-h // 16), -(-w // 16)
    return MotionField(
        16, cols, rows,
        tuple(tuple(MotionVector(0, 0) for _ in range(cols)) for _ in range(rows)),
    )


class TestBlockError:
    def test_floor_value(self):
        assert block_error(0, 0) == pytest.approx(0.2, abs=1e-12)

    def test_worked_values(self):
        assert block_error(3200, 3195) == pytest.approx(1.2003125, abs=1e-9)
        assert block_error(315, 15) == pytest.approx(3.2984375, abs=1e-9)

    def test_negative_inputs_rejected(self):
        with pytest.raises(ValueError):
            block_error(-1, 0)
        with pytest.raises(ValueError):
            block_error(0, -0.5)

    @given(st.floats(0, 1e7), st.floats(0, 1e7), st.floats(1e-3, 1e5))
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_ssd(self, ssd, var, bump):
        assert block_error(ssd + bump, var) > block_error(ssd, var)

    @given(st.floats(1e-3, 1e7), st.floats(0, 1e7), st.floats(1e-3, 1e5))
    @settings(max_examples=200, deadline=None)
    def test_antitone_in_variance(self, ssd, var, bump):
        assert block_error(ssd, var + bump) < block_error(ssd, var)


class TestFrameErrors:
    def test_static_flat_gives_floor(self):
        p = np.full((32, 48), 7, dtype=np.uint8)
        grid = frame_errors(p, p, zero_field(48, 32))
        assert grid.rows == 2 and grid.cols == 3
        for row in grid.blocks:
            for b in row:
                assert b.ssd == 0 and b.variance == 0
                assert b.e == pytest.approx(0.2, abs=1e-12)

    def test_checkerboard_matches_brute_force(self):
        cur = np.zeros((16, 16), dtype=np.uint8)
        cur[::2, 1::2] = 255
        cur[1::2, ::2] = 255
        ref = np.full((16, 16), 128, dtype=np.uint8)
        grid = frame_errors(cur, ref, zero_field(16, 16))
        # brute-force sums
        sx = sum(int(v) for v in cur.reshape(-1))
        sx2 = sum(int(v) ** 2 for v in cur.reshape(-1))
        variance = float(sx2) - float(sx) * float(sx) / 256
        ssd = float(sum((int(a) - 128) ** 2 for a in cur.reshape(-1)))
        b = grid.blocks[0][0]
        assert b.ssd == ssd
        assert b.variance == variance
        assert b.e == block_error(ssd, variance)

    def test_partial_blocks_excluded(self):
        p = np.full((24, 40), 9, dtype=np.uint8)
        grid = frame_errors(p, p, zero_field(40, 24))
        assert (grid.rows, grid.cols) == (1, 2)
        assert (grid.width, grid.height) == (40, 24)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            frame_errors(
                np.zeros((16, 16), np.uint8),
                np.zeros((16, 32), np.uint8),
                zero_field(16, 16),
            )


def grid_of_es(es, width, height):
    rows = len(es)
    cols = len(es[0])
    blocks = tuple(
        tuple(BlockError(0.0, 0.0, e) for e in row) for row in es
    )
    return ImportanceGrid(0, width, height, rows, cols, blocks)


class TestCtuMean:
    def test_uniform(self):
        g = grid_of_es([[0.2] * 8] * 8, 128, 128)
        means = ctu_mean_e(g, 64)
        assert means == [[pytest.approx(0.2)] * 2] * 2

    def test_half_and_half(self):
        es = [[1.0] * 8 for _ in range(4)] + [[3.0] * 8 for _ in range(4)]
        g = grid_of_es(es, 128, 128)
        means = ctu_mean_e(g, 128)
        assert means == [[pytest.approx(2.0)]]

    def test_frame_smaller_than_ctu(self):
        g = grid_of_es([[1.0, 3.0]], 32, 16)
        assert ctu_mean_e(g, 64) == [[pytest.approx(2.0)]]

    def test_ctu_without_full_blocks_gets_zero(self):
        # 130-wide frame: third 64-CTU column holds only partial blocks
        g = grid_of_es([[1.0] * 8], 130, 16)
        means = ctu_mean_e(g, 64)
        assert means == [[pytest.approx(1.0), pytest.approx(1.0), 0.0]]

    def test_bad_ctu_size(self):
        g = grid_of_es([[1.0]], 16, 16)
        with pytest.raises(ValueError):
            ctu_mean_e(g, 40)


class TestPairE:
    def test_two_sides_average(self):
        h = w = 32
        cur = flat_clip(w, h, 1, 128)[0]
        prev = flat_clip(w, h, 1, 128)[0]
        nxt = flat_clip(w, h, 1, 128)[0]
        out = pair_e(cur, prev, nxt, 1, 32)
        assert out == [[pytest.approx(0.2)]]

    def test_single_side(self):
        cur = flat_clip(32, 32, 1, 100)[0]
        nxt = flat_clip(32, 32, 1, 100)[0]
        out = pair_e(cur, None, nxt, 2, 32)
        assert out == [[pytest.approx(0.2)]]

    def test_both_absent_rejected(self):
        cur = flat_clip(32, 32, 1)[0]
        with pytest.raises(ValueError):
            pair_e(cur, None, None, 1, 32)

    def test_asymmetric_sides_average(self):
        # prev identical (E=0.2), next shifted brightness: average in between
        cur = flat_clip(32, 32, 1, 100)[0]
        prev = flat_clip(32, 32, 1, 100)[0]
        nxt = flat_clip(32, 32, 1, 140)[0]
        one = pair_e(cur, None, nxt, 1, 32)[0][0]
        both = pair_e(cur, prev, nxt, 1, 32)[0][0]
        assert both == pytest.approx((0.2 + one) / 2.0, abs=1e-12)


class TestE3:
    def test_worked_examples(self):
        assert e3(10, 10) == 10
        assert e3(50, 10) == 170
        assert e3(5, 30) == 105

    @given(st.floats(0, 1e6), st.floats(0, 1e6))
    @settings(max_examples=300, deadline=None)
    def test_symmetry_and_bound(self, a, b):
        assert e3(a, b) == e3(b, a)
        assert e3(a, b) >= max(a, b)

    @given(st.floats(0, 1e6))
    @settings(max_examples=100, deadline=None)
    def test_identity_on_diagonal(self, a):
        assert e3(a, a) == a

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            e3(-1, 0)


class TestDeltaQp:
    @pytest.mark.parametrize(
        "value,expected",
        [
            (0, -2), (22, -2), (23, -1), (41, -1), (42, 0), (76, 0),
            (77, 1), (101, 1), (102, 2), (103, 2), (10**6, 2),
        ],
    )
    def test_bands(self, value, expected):
        assert delta_qp_of_e3(value) == expected

    def test_real_valued_inputs(self):
        assert delta_qp_of_e3(22.5) == -1
        assert delta_qp_of_e3(101.5) == 1

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            delta_qp_of_e3(-0.1)

    def test_monotone_and_surjective(self):
        values = np.linspace(0, 200, 4001)
        deltas = [delta_qp_of_e3(v) for v in values]
        assert all(b >= a for a, b in zip(deltas, deltas[1:]))
        assert set(deltas) == {-2, -1, 0, 1, 2}


class TestBimSequence:
    def test_gating_poc_mod_8(self):
        clip = flat_clip(32, 32, 17)
        grids = bim_sequence(clip, 32)
        assert sorted(grids) == [0, 8, 16]

    def test_static_sequence_all_minus_two(self):
        clip = flat_clip(48, 32, 10)
        grids = bim_sequence(clip, 32)
        for imp in grids.values():
            assert np.all(imp.delta_grid == -2)
            for row in imp.ctus:
                for c in row:
                    assert c.e1 == pytest.approx(0.2)
                    assert c.e3 == pytest.approx(0.2)

    def test_single_frame_all_zero(self):
        clip = flat_clip(32, 32, 1)
        grids = bim_sequence(clip, 32)
        assert np.all(grids[0].delta_grid == 0)

    def test_transient_region_boosted(self):
        clip = transient_clip(width=192, height=128, count=9, patch_frames=(7, 8))
        # shrink the patch into the 64-CTU at (1, 1)
        from tvc.synth import _frame

        base = clip[0].y.samples.copy()
        frames = []
        for i in range(9):
            y = base.copy()
            if i in (7, 8):
                y[64:128, 64:128] = 235
            frames.append(_frame(y, i))
        grids = bim_sequence(frames, 64)
        assert sorted(grids) == [0, 8]
        d0 = grids[0].delta_grid
        assert np.all(d0 == -2)  # frames 0..2 identical
        d8 = grids[8].delta_grid
        assert d8[1, 1] >= 1  # patch CTU: matches at distance 1, gone at 2
        mask = np.ones_like(d8, dtype=bool)
        mask[1, 1] = False
        assert np.all(d8[mask] <= 0)

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError):
            bim_sequence([], 64)

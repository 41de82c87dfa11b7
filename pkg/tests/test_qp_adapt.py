import numpy as np
import pytest

from tvc.bim import bim_sequence
from tvc.errors import QpmapError
from tvc.qp_adapt import (
    AnalyzeConfig,
    OffsetConfig,
    SequenceClass,
    SequenceKind,
    analyze,
    classify_sequence,
    compose_qp_plan,
    keyframe_offset,
    perceptual_ctu_delta,
    read_qpmap,
    uniform_plan,
    write_qpmap,
)
from tvc.synth import flat_clip, noise_clip
from tvc.video_io import Frame420, Plane


class TestClassify:
    def test_static_clip_is_slow(self):
        cls = classify_sequence(flat_clip(32, 32, 4))
        assert cls.kind is SequenceKind.SLOW
        assert cls.activity == pytest.approx(0.2)

    def test_noise_clip_is_fast(self):
        cls = classify_sequence(noise_clip(32, 32, 4, seed=5))
        assert cls.kind is SequenceKind.FAST
        assert cls.activity > 2.0

    def test_zero_threshold_always_fast(self):
        cls = classify_sequence(flat_clip(32, 32, 3), threshold=0.0)
        assert cls.kind is SequenceKind.FAST

    def test_too_few_frames(self):
        with pytest.raises(ValueError):
            classify_sequence(flat_clip(32, 32, 1))

    def test_probe_count_caps_pairs(self):
        # noisy first pair, static afterwards: probing one pair sees only noise
        from tvc.synth import _frame

        rng = np.random.default_rng(1)
        noisy = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        flat = np.full((32, 32), 128, dtype=np.uint8)
        frames = [_frame(noisy, 0)] + [_frame(flat.copy(), i) for i in range(1, 5)]
        one = classify_sequence(frames, probe_count=1)
        all_pairs = classify_sequence(frames, probe_count=8)
        assert one.activity > all_pairs.activity
        assert one.kind is SequenceKind.FAST


class TestKeyframeOffset:
    def test_fast_is_minus_three_for_all_inputs(self):
        for activity in (0.0, 0.5, 7.0, 1e9):
            cls = SequenceClass(SequenceKind.FAST, activity)
            assert keyframe_offset(cls) == -3
            assert keyframe_offset(cls, persistence=5.0) == -3

    def test_slow_worked_example(self):
        cls = SequenceClass(SequenceKind.SLOW, 0.2)
        cfg = OffsetConfig(slow_gain=1.0, epsilon=0.05)
        assert keyframe_offset(cls, cfg=cfg) == -7

    def test_slow_clamp_floor(self):
        cls = SequenceClass(SequenceKind.SLOW, 1.99)
        assert keyframe_offset(cls) == -4

    def test_slow_clamp_ceiling(self):
        cls = SequenceClass(SequenceKind.SLOW, 0.0)
        cfg = OffsetConfig(slow_gain=100.0)
        assert keyframe_offset(cls, cfg=cfg) == -10

    def test_negative_persistence_rejected(self):
        cls = SequenceClass(SequenceKind.SLOW, 0.2)
        with pytest.raises(ValueError):
            keyframe_offset(cls, persistence=-1.0)


class TestPerceptual:
    def test_flat_frame_all_zero(self):
        f = flat_clip(64, 64, 1, 90)[0]
        assert np.all(perceptual_ctu_delta(f, 32) == 0)

    def test_single_ctu_zero(self):
        rng = np.random.default_rng(3)
        y = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        f = flat_clip(32, 32, 1)[0]
        f = Frame420(Plane(y), f.cb, f.cr, 0)
        assert np.all(perceptual_ctu_delta(f, 64) == 0)

    def test_high_variance_ctu_positive(self):
        rng = np.random.default_rng(4)
        y = np.full((64, 64), 100, dtype=np.uint8)
        y[:32, :32] = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        cb = np.full((32, 32), 128, dtype=np.uint8)
        f = Frame420(Plane(y), Plane(cb), Plane(cb.copy()), 0)
        d = perceptual_ctu_delta(f, 32)
        assert 1 <= d[0, 0] <= 3
        assert d[0, 1] <= 0 and d[1, 0] <= 0 and d[1, 1] <= 0


class TestCompose:
    def test_fast_keyframe_composition(self):
        clip = flat_clip(64, 48, 9)
        cls = SequenceClass(SequenceKind.FAST, 10.0)
        plan = compose_qp_plan(37, clip, None, None, cls, 64)
        assert plan.keyframe_qp == 34
        assert np.all(plan.frame(0).grid == 34)
        for poc in range(1, 9):
            assert np.all(plan.frame(poc).grid == 37)

    def test_clamp_floor(self):
        clip = flat_clip(32, 32, 1)
        cls = SequenceClass(SequenceKind.FAST, 10.0)
        bim = bim_sequence(clip, 32)  # single frame: all-zero deltas
        perceptual = {0: np.full((1, 1), -3, dtype=np.int32)}
        plan = compose_qp_plan(2, clip, bim, perceptual, cls, 32)
        # key start = clamp(2-3) = 0, then -3 perceptual, clamped to 0
        assert np.all(plan.frame(0).grid == 0)

    def test_bim_not_applied_off_gate(self):
        clip = flat_clip(32, 32, 6)
        cls = SequenceClass(SequenceKind.FAST, 10.0)
        bim = bim_sequence(clip, 32)
        perceptual = {f.poc: np.full((1, 1), 1, dtype=np.int32) for f in clip}
        plan = compose_qp_plan(37, clip, bim, perceptual, cls, 32)
        assert np.all(plan.frame(5).grid == 38)  # +1 perceptual only
        assert np.all(plan.frame(0).grid == 34 + 1 - 2)  # key, perceptual, bim

    def test_all_values_in_range(self):
        clip = flat_clip(32, 32, 3)
        cls = SequenceClass(SequenceKind.SLOW, 0.2)
        for base in (0, 1, 37, 63):
            plan = compose_qp_plan(base, clip, None, None, cls, 32)
            for fp in plan.frames:
                assert fp.grid.min() >= 0 and fp.grid.max() <= 63


class TestQpmapFormat:
    def roundtrip_plan(self):
        clip = flat_clip(48, 32, 3)
        cls = SequenceClass(SequenceKind.SLOW, 0.2)
        bim = bim_sequence(clip, 16)
        return compose_qp_plan(30, clip, bim, None, cls, 16)

    def test_roundtrip(self):
        plan = self.roundtrip_plan()
        text = write_qpmap(plan)
        back = read_qpmap(text)
        assert back.base_qp == plan.base_qp
        assert back.keyframe_qp == plan.keyframe_qp
        assert (back.width, back.height, back.ctu_size) == (48, 32, 16)
        for a, b in zip(plan.frames, back.frames):
            assert a.poc == b.poc and a.is_key == b.is_key
            assert a.frame_qp == b.frame_qp
            assert np.array_equal(a.grid, b.grid)
        assert write_qpmap(back) == text

    def test_header_line(self):
        text = write_qpmap(self.roundtrip_plan())
        assert text.splitlines()[0] == "QPMAP 1 48 32 16"

    def test_unknown_version_rejected(self):
        with pytest.raises(QpmapError, match="version"):
            read_qpmap("QPMAP 2 16 16 16\nframe 0 key=1 qp=30\n30\n")

    def test_malformed_header(self):
        with pytest.raises(QpmapError, match="line 1"):
            read_qpmap("QPMAPX 1 16 16\n")

    def test_short_grid_row_positioned(self):
        with pytest.raises(QpmapError, match="line 3"):
            read_qpmap("QPMAP 1 32 16 16\nframe 0 key=1 qp=30\n30\n")

    def test_non_integer_qp_positioned(self):
        with pytest.raises(QpmapError, match="line 3"):
            read_qpmap("QPMAP 1 16 16 16\nframe 0 key=1 qp=30\nxx\n")

    def test_out_of_range_qp(self):
        with pytest.raises(QpmapError, match="out of"):
            read_qpmap("QPMAP 1 16 16 16\nframe 0 key=1 qp=30\n99\n")

    def test_missing_grid_row(self):
        with pytest.raises(QpmapError, match="missing grid row"):
            read_qpmap("QPMAP 1 16 32 16\nframe 0 key=1 qp=30\n30\n")

    def test_wrong_poc_order(self):
        with pytest.raises(QpmapError, match="expected poc"):
            read_qpmap("QPMAP 1 16 16 16\nframe 1 key=0 qp=30\n30\n")


class TestAnalyzePipeline:
    def test_static_clip_report(self):
        clip = flat_clip(32, 32, 9)
        cfg = AnalyzeConfig(base_qp=37, ctu_size=32, enable_bim=True)
        plan, report = analyze(clip, cfg)
        assert report["class"] == "Slow"
        assert report["activity"] == pytest.approx(0.2)
        assert report["keyframe_offset"] == -7
        assert plan.keyframe_qp == 30
        gated = [f for f in report["frames"] if f["gated"]]
        assert [f["poc"] for f in gated] == [0, 8]
        for f in gated:
            assert "bim" in f
            assert np.all(np.asarray(f["bim"]["delta_qp"]) == -2)
        # non-key gated frame: base 37 + bim -2
        assert np.all(plan.frame(8).grid == 35)

    def test_uniform_plan(self):
        plan = uniform_plan(22, 64, 48, 4, 64)
        assert plan.keyframe_qp == 22
        assert all(np.all(fp.grid == 22) for fp in plan.frames)

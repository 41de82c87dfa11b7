import numpy as np
import pytest

from tvc.cnnlf import CnnlfModel
from tvc.codec import (
    BlockMode,
    CodecConfig,
    _dc_predict,
    _planar_predict,
    decide_cnnlf_flags,
    decode_sequence,
    encode_sequence,
    rd_cost,
    rd_lambda,
)
from tvc.errors import BitstreamError
from tvc.nn_intra import IntraModelSet
from tvc.qp_adapt import uniform_plan
from tvc.synth import flat_clip, moving_texture_clip, noise_clip
from tvc.video_io import psnr


class TestPredictors:
    def test_dc_no_neighbors_is_128(self):
        rec = np.zeros((32, 32), np.uint8)
        assert np.all(_dc_predict(rec, 0, 0, 16, 16) == 128)

    def test_dc_constant_neighbors(self):
        rec = np.full((32, 32), 100, np.uint8)
        assert np.all(_dc_predict(rec, 16, 16, 16, 16) == 100)

    def test_dc_mean_rounding(self):
        rec = np.zeros((32, 32), np.uint8)
        rec[15, 16:32] = 10  # top row of the block at (16,16)
        rec[16:32, 15] = 20  # left column
        # mean = (16*10 + 16*20) / 32 = 15
        assert np.all(_dc_predict(rec, 16, 16, 16, 16) == 15)

    def test_planar_constant_neighbors(self):
        rec = np.full((48, 48), 77, np.uint8)
        assert np.all(_planar_predict(rec, 16, 16, 16, 16) == 77)

    def test_planar_no_neighbors(self):
        rec = np.zeros((32, 32), np.uint8)
        assert np.all(_planar_predict(rec, 0, 0, 16, 16) == 128)

    def test_planar_interpolates_between_edges(self):
        rec = np.zeros((48, 48), np.uint8)
        rec[15, :] = 200
        rec[:, 15] = 0
        pred = _planar_predict(rec, 16, 16, 16, 16)
        assert pred[0, 0] < pred[0, 15] <= 200
        assert np.all(pred >= 0) and np.all(pred <= 255)


class TestRd:
    def test_lambda_at_12(self):
        assert rd_lambda(12) == pytest.approx(0.85)

    def test_cost_zero_rate(self):
        assert rd_cost(100.0, 0, rd_lambda(30)) == 100.0

    def test_lower_cost_candidate_wins(self):
        lam = rd_lambda(30)  # 0.85 * 2^6 = 54.4
        assert lam == pytest.approx(54.4)
        a = rd_cost(100.0, 10, lam)  # 100 + 544.0 = 644.0
        b = rd_cost(50.0, 12, lam)  # 50 + 652.8 = 702.8
        assert a == pytest.approx(644.0)
        assert b == pytest.approx(702.8)
        assert min(a, b) == a

    def test_lambda_range(self):
        with pytest.raises(ValueError):
            rd_lambda(99)


class TestRoundTrip:
    @pytest.mark.parametrize("make_clip", [
        lambda: moving_texture_clip(96, 64, 5, seed=3),
        lambda: noise_clip(48, 32, 4, seed=9),
        lambda: flat_clip(32, 48, 3, 200),
    ])
    def test_decode_matches_encoder_recon(self, make_clip):
        clip = make_clip()
        w, h = clip[0].width, clip[0].height
        plan = uniform_plan(32, w, h, len(clip), 64)
        res = encode_sequence(clip, plan, CodecConfig())
        dec = decode_sequence(res.bitstream)
        assert len(dec.frames) == len(clip)
        for a, b in zip(res.recon_frames, dec.frames):
            assert a == b

    def test_reencode_is_byte_identical(self):
        clip = noise_clip(48, 32, 3, seed=1)
        plan = uniform_plan(30, 48, 32, 3, 64)
        a = encode_sequence(clip, plan, CodecConfig())
        b = encode_sequence(clip, plan, CodecConfig())
        assert a.bitstream == b.bitstream

    def test_constant_gray_frame_is_near_lossless(self):
        clip = flat_clip(64, 48, 1, 128)
        plan = uniform_plan(4, 64, 48, 1, 64)
        res = encode_sequence(clip, plan, CodecConfig())
        dec = decode_sequence(res.bitstream)
        v = psnr(clip[0].y, dec.frames[0].y)
        assert v == float("inf") or v >= 50.0

    def test_non_multiple_of_16_dims(self):
        clip = moving_texture_clip(40, 24, 3, seed=5)
        plan = uniform_plan(28, 40, 24, 3, 64)
        res = encode_sequence(clip, plan, CodecConfig())
        dec = decode_sequence(res.bitstream)
        for a, b in zip(res.recon_frames, dec.frames):
            assert a == b

    def test_plan_must_cover_frames(self):
        clip = flat_clip(32, 32, 4)
        plan = uniform_plan(30, 32, 32, 2, 64)
        with pytest.raises(ValueError, match="covers"):
            encode_sequence(clip, plan, CodecConfig())

    def test_qp_monotonic_psnr_and_bits(self):
        clip = moving_texture_clip(64, 48, 5, seed=2)
        plan_qps = (22, 27, 32, 37)
        prev = (float("inf"), float("inf"))
        for qp in plan_qps:
            plan = uniform_plan(qp, 64, 48, 5, 64)
            res = encode_sequence(clip, plan, CodecConfig())
            dec = decode_sequence(res.bitstream)
            mean_p = float(
                np.mean([psnr(c.y, d.y) for c, d in zip(clip, dec.frames)])
            )
            assert mean_p <= prev[0]
            assert len(res.bitstream) <= prev[1]
            prev = (mean_p, len(res.bitstream))


class TestBitstreamErrors:
    def make_stream(self):
        clip = flat_clip(32, 32, 2)
        plan = uniform_plan(30, 32, 32, 2, 32)
        return encode_sequence(clip, plan, CodecConfig()).bitstream

    def test_bad_magic(self):
        data = b"XXXX" + self.make_stream()[4:]
        with pytest.raises(BitstreamError, match="magic"):
            decode_sequence(data)

    def test_bad_version(self):
        data = bytearray(self.make_stream())
        data[4] = 99
        with pytest.raises(BitstreamError, match="version"):
            decode_sequence(bytes(data))

    def test_truncation_names_offset(self):
        data = self.make_stream()
        with pytest.raises(BitstreamError, match="(offset|truncated)"):
            decode_sequence(data[: len(data) - 4])

    def test_trailing_garbage(self):
        data = self.make_stream() + b"\x01"
        with pytest.raises(BitstreamError, match="trailing"):
            decode_sequence(data)

    def test_empty(self):
        with pytest.raises(BitstreamError, match="truncated"):
            decode_sequence(b"")


class TestCnnlfFlags:
    def test_identity_filter_turns_frame_off(self, rng):
        rec = rng.integers(0, 256, (64, 64), dtype=np.uint8)
        orig = rng.integers(0, 256, (64, 64), dtype=np.uint8)
        flag, flags, costs = decide_cnnlf_flags([rec], [rec.copy()], [orig], 100.0, 32)
        assert flag is False
        assert not flags.any()
        assert costs["chosen"] == costs["off"]

    def test_uniformly_better_filter_all_on(self, rng):
        orig = rng.integers(60, 196, (64, 64)).astype(np.uint8)
        noise = rng.integers(-20, 21, (64, 64))
        rec = np.clip(orig.astype(int) + noise, 0, 255).astype(np.uint8)
        filt = orig.copy()  # ideal restoration
        flag, flags, _ = decide_cnnlf_flags([rec], [filt], [orig], 1.0, 32)
        assert flag is True
        assert flags.all()

    def test_mixed_frame_beats_forced_configs(self, rng):
        for _ in range(5):
            orig = rng.integers(0, 256, (96, 64), dtype=np.uint8)
            rec = rng.integers(0, 256, (96, 64), dtype=np.uint8)
            filt = rng.integers(0, 256, (96, 64), dtype=np.uint8)
            lam = float(rng.uniform(0.1, 1000))
            flag, flags, costs = decide_cnnlf_flags([rec], [filt], [orig], lam, 32)
            rows, cols = flags.shape
            n = rows * cols
            sse = lambda a, b: float(np.sum((a.astype(np.int64) - b.astype(np.int64)) ** 2))
            force_on = sse(orig, filt) + lam * (1 + n)
            force_off = sse(orig, rec) + lam
            assert costs["chosen"] <= force_on + 1e-9
            assert costs["chosen"] <= force_off + 1e-9


class TestInLoopTools:
    def test_zero_tail_filter_never_flags(self, zero_tail_cnnlf):
        from tvc.nnwf import load_weights, save_weights

        tensors = load_weights(save_weights(zero_tail_cnnlf))
        luma = CnnlfModel.from_tensor_map(tensors, "luma")
        chroma = CnnlfModel.from_tensor_map(tensors, "chroma")
        clip = moving_texture_clip(64, 48, 3, seed=8)
        plan = uniform_plan(32, 64, 48, 3, 64)
        with_f = encode_sequence(
            clip, plan, CodecConfig(cnnlf_luma=luma, cnnlf_chroma=chroma)
        )
        without = encode_sequence(clip, plan, CodecConfig())
        # identity filter: the frame flag loses to its own signaling overhead
        assert all(not s["cnnlf_frame_flag"] for s in with_f.stats["frames"])
        for a, b in zip(with_f.recon_frames, without.recon_frames):
            assert a == b
        dec = decode_sequence(with_f.bitstream, luma, chroma)
        for a, b in zip(with_f.recon_frames, dec.frames):
            assert a == b

    def test_disabled_cnnlf_decodes_without_weights(self):
        clip = flat_clip(32, 32, 2)
        plan = uniform_plan(30, 32, 32, 2, 32)
        res = encode_sequence(clip, plan, CodecConfig())
        dec = decode_sequence(res.bitstream)  # no weights at all
        assert dec.header["cnnlf_enabled"] is False
        for a, b in zip(res.recon_frames, dec.frames):
            assert a == b

    def test_nn_intra_roundtrip(self, intra_16x16_tensors):
        models = IntraModelSet.from_tensor_map(intra_16x16_tensors)
        clip = moving_texture_clip(64, 48, 3, seed=4)
        plan = uniform_plan(37, 64, 48, 3, 64)
        res = encode_sequence(clip, plan, CodecConfig(intra_models=models))
        dec = decode_sequence(res.bitstream, intra_models=models)
        for a, b in zip(res.recon_frames, dec.frames):
            assert a == b

    def test_nn_intra_stream_requires_weights_when_used(self):
        # handcraft a model that nails the first block of a flat-250 clip:
        # all weights zero except the prediction bias, so the network emits
        # a constant (250 - 128) / 127 above the context mean
        from helpers import make_intra_tensors

        tensors = make_intra_tensors(16, 16, 37, zero=True)
        bias = tensors["intra.16x16.qp37.head_pred.bias"]
        tensors["intra.16x16.qp37.head_pred.bias"] = np.full_like(
            bias, (250.0 - 128.0) / 127.0
        )
        models = IntraModelSet.from_tensor_map(tensors)
        clip = flat_clip(48, 48, 1, 250)
        plan = uniform_plan(37, 48, 48, 1, 64)
        res = encode_sequence(clip, plan, CodecConfig(intra_models=models))
        dec = decode_sequence(res.bitstream, intra_models=models)
        assert dec.header["nn_intra_enabled"] is True
        for a, b in zip(res.recon_frames, dec.frames):
            assert a == b
        # decoding without weights must fail, which also proves the encoder
        # actually picked the neural mode somewhere
        with pytest.raises(BitstreamError, match="intra weights"):
            decode_sequence(res.bitstream)

    def test_aux_collection_shapes(self):
        clip = moving_texture_clip(48, 32, 2, seed=6)
        plan = uniform_plan(30, 48, 32, 2, 32)
        res = encode_sequence(clip, plan, CodecConfig(collect_aux=True))
        assert len(res.aux) == 2
        e = res.aux[0]
        assert e["y"]["rec"].shape == (32, 48)
        assert e["y"]["bs"].shape == (32, 48)
        assert set(np.unique(e["y"]["bs"])) <= {0, 1, 2}
        assert e["chroma"]["rec"].shape == (2, 16, 24)
        assert e["chroma"]["orig"].shape == (2, 16, 24)

import json

import numpy as np
import pytest

from tvc.cli import main
from tvc.nnwf import load_weights, save_weights
from tvc.synth import flat_clip, moving_texture_clip, noise_clip
from tvc.video_io import read_yuv420, write_yuv420


def run(args):
    return main([str(a) for a in args])


def write_clip(path, clip):
    path.write_bytes(write_yuv420(clip))
    return path


@pytest.fixture
def static_yuv(tmp_path):
    return write_clip(tmp_path / "static.yuv", flat_clip(64, 48, 9))


@pytest.fixture
def moving_yuv(tmp_path):
    return write_clip(tmp_path / "moving.yuv", moving_texture_clip(64, 48, 5, seed=2))


class TestAnalyze:
    def test_static_clip_slow_all_minus_two(self, tmp_path, static_yuv):
        report = tmp_path / "r.json"
        qpmap = tmp_path / "plan.qpmap"
        rc = run([
            "analyze", "--input", static_yuv, "--width", 64, "--height", 48,
            "--qp", 37, "--ctu-size", 32, "--enable-bim",
            "--output", qpmap, "--report", report,
        ])
        assert rc == 0
        rep = json.loads(report.read_text())
        assert rep["class"] == "Slow"
        assert rep["keyframe_offset"] == -7
        for f in rep["frames"]:
            if f["gated"]:
                assert np.all(np.asarray(f["bim"]["delta_qp"]) == -2)
        text = qpmap.read_text()
        assert text.startswith("QPMAP 1 64 48 32")
        assert "config" in rep

    def test_noise_clip_fast_offset(self, tmp_path):
        yuv = write_clip(tmp_path / "n.yuv", noise_clip(48, 32, 4, seed=3))
        report = tmp_path / "r.json"
        rc = run([
            "analyze", "--input", yuv, "--width", 48, "--height", 32,
            "--report", report,
        ])
        assert rc == 0
        rep = json.loads(report.read_text())
        assert rep["class"] == "Fast"
        assert rep["keyframe_offset"] == -3

    def test_missing_input_exit_2(self, tmp_path, capsys):
        rc = run([
            "analyze", "--input", tmp_path / "absent.yuv",
            "--width", 16, "--height", 16,
        ])
        assert rc == 2
        assert "absent.yuv" in capsys.readouterr().err


class TestEncodeDecodeMetrics:
    def test_pipeline_and_monotone_table(self, tmp_path, moving_yuv):
        results = []
        for qp in (22, 27, 32, 37):
            bit = tmp_path / f"q{qp}.tvc"
            out = tmp_path / f"q{qp}.yuv"
            rep = tmp_path / f"q{qp}.json"
            met = tmp_path / f"m{qp}.json"
            assert run([
                "encode", "--input", moving_yuv, "--width", 64, "--height", 48,
                "--qp", qp, "--ctu-size", 64, "--output", bit, "--report", rep,
            ]) == 0
            assert run(["decode", "--input", bit, "--output", out,
                        "--report", tmp_path / "d.json"]) == 0
            assert run([
                "metrics", "--input", out, "--ref", moving_yuv,
                "--width", 64, "--height", 48, "--report", met,
            ]) == 0
            m = json.loads(met.read_text())
            results.append((m["mean_y_psnr"], bit.stat().st_size))
        psnrs = [r[0] for r in results]
        sizes = [r[1] for r in results]
        assert all(b <= a for a, b in zip(psnrs, psnrs[1:]))
        assert all(b <= a for a, b in zip(sizes, sizes[1:]))

    def test_encode_with_qpmap(self, tmp_path, static_yuv):
        qpmap = tmp_path / "plan.qpmap"
        bit = tmp_path / "o.tvc"
        assert run([
            "analyze", "--input", static_yuv, "--width", 64, "--height", 48,
            "--qp", 32, "--ctu-size", 32, "--enable-bim", "--output", qpmap,
            "--report", tmp_path / "r.json",
        ]) == 0
        assert run([
            "encode", "--input", static_yuv, "--width", 64, "--height", 48,
            "--qpmap", qpmap, "--output", bit,
        ]) == 0
        dec = tmp_path / "d.yuv"
        assert run(["decode", "--input", bit, "--output", dec,
                    "--report", tmp_path / "dr.json"]) == 0
        assert len(read_yuv420(dec.read_bytes(), 64, 48)) == 9

    def test_decode_truncated_names_offset(self, tmp_path, moving_yuv, capsys):
        bit = tmp_path / "o.tvc"
        run(["encode", "--input", moving_yuv, "--width", 64, "--height", 48,
             "--qp", 32, "--output", bit])
        bit.write_bytes(bit.read_bytes()[:-5])
        rc = run(["decode", "--input", bit, "--output", tmp_path / "d.yuv"])
        assert rc == 2
        err = capsys.readouterr().err
        assert "offset" in err or "truncated" in err

    def test_metrics_identical_inf(self, tmp_path, static_yuv):
        met = tmp_path / "m.json"
        assert run([
            "metrics", "--input", static_yuv, "--ref", static_yuv,
            "--width", 64, "--height", 48, "--report", met,
        ]) == 0
        m = json.loads(met.read_text())
        assert m["mean_y_psnr"] == "inf"
        assert m["frames"][0]["psnr_y"] == "inf"

    def test_dump_aux(self, tmp_path, moving_yuv):
        auxdir = tmp_path / "aux"
        assert run([
            "encode", "--input", moving_yuv, "--width", 64, "--height", 48,
            "--qp", 37, "--output", tmp_path / "o.tvc", "--dump-aux", auxdir,
        ]) == 0
        manifest = json.loads((auxdir / "aux_manifest.json").read_text())
        assert manifest["width"] == 64
        assert len(manifest["frames"]) == 5
        f0 = manifest["frames"][0]
        assert f0["qp"] == 37 and f0["is_key"] is True
        rec = np.load(auxdir / f0["files"]["y.rec"])
        assert rec.shape == (48, 64)
        ch = np.load(auxdir / f0["files"]["chroma.orig"])
        assert ch.shape == (2, 24, 32)


class TestFilter:
    def test_zero_tail_filter_is_byte_identical(self, tmp_path, moving_yuv, zero_tail_cnnlf):
        weights = tmp_path / "w.nnwf"
        weights.write_bytes(save_weights(zero_tail_cnnlf))
        out = tmp_path / "f.yuv"
        assert run([
            "filter", "--input", moving_yuv, "--width", 64, "--height", 48,
            "--qp", 32, "--cnnlf-weights", weights, "--output", out,
        ]) == 0
        assert out.read_bytes() == moving_yuv.read_bytes()

    def test_encode_decode_with_cnnlf_weights(self, tmp_path, moving_yuv, active_cnnlf):
        weights = tmp_path / "w.nnwf"
        weights.write_bytes(save_weights(active_cnnlf))
        bit = tmp_path / "o.tvc"
        assert run([
            "encode", "--input", moving_yuv, "--width", 64, "--height", 48,
            "--qp", 37, "--cnnlf-weights", weights, "--output", bit,
        ]) == 0
        out = tmp_path / "d.yuv"
        assert run([
            "decode", "--input", bit, "--cnnlf-weights", weights,
            "--output", out, "--report", tmp_path / "r.json",
        ]) == 0
        rep = json.loads((tmp_path / "r.json").read_text())
        assert rep["header"]["cnnlf_enabled"] is True


class TestNnEval:
    def test_cnnlf_eval_matches_library(self, tmp_path, active_cnnlf, rng):
        from tvc.cnnlf import CnnlfModel, cnnlf_forward

        weights = tmp_path / "w.nnwf"
        weights.write_bytes(save_weights(active_cnnlf))
        rec = rng.integers(0, 256, (8, 10)).astype(np.float32)
        pred = rng.integers(0, 256, (8, 10)).astype(np.float32)
        bs = rng.integers(0, 3, (8, 10)).astype(np.float32)
        inp = tmp_path / "in.nnwf"
        inp.write_bytes(save_weights({"rec": rec, "pred": pred, "bs": bs}))
        out = tmp_path / "out.nnwf"
        assert run([
            "nn-eval", "--model", "luma", "--cnnlf-weights", weights,
            "--qp", 30, "--input", inp, "--output", out,
        ]) == 0
        got = load_weights(out.read_bytes())["out"]
        model = CnnlfModel.from_tensor_map(active_cnnlf, "luma")
        expect = cnnlf_forward(model, rec, pred, bs, 30)
        assert np.max(np.abs(got - expect)) < 1e-5

    def test_intra_eval(self, tmp_path, intra_16x16_tensors, rng):
        weights = tmp_path / "w.nnwf"
        weights.write_bytes(save_weights(intra_16x16_tensors))
        above = rng.normal(0, 0.3, (8, 40)).astype(np.float32)
        left = rng.normal(0, 0.3, (32, 8)).astype(np.float32)
        inp = tmp_path / "in.nnwf"
        inp.write_bytes(save_weights({
            "above": above, "left": left,
            "mean": np.array([130.0], dtype=np.float32),
        }))
        out = tmp_path / "out.nnwf"
        assert run([
            "nn-eval", "--model", "intra.16x16.qp37", "--nn-intra-weights", weights,
            "--input", inp, "--output", out,
        ]) == 0
        got = load_weights(out.read_bytes())
        assert got["pred"].shape == (16, 16)
        assert got["grp1"].shape == (4,)

    def test_unknown_model_exit_2(self, tmp_path, capsys):
        inp = tmp_path / "in.nnwf"
        inp.write_bytes(save_weights({}))
        rc = run(["nn-eval", "--model", "bogus", "--input", inp,
                  "--output", tmp_path / "o.nnwf"])
        assert rc == 2

"""Command-line surface: analyze, encode, decode, metrics, filter, nn-eval.

Exit codes: 0 success, 1 internal error, 2 usage or input error.  Every
report is JSON and embeds the resolved configuration; output files are
written atomically (temp file + rename).  Infinite PSNR serializes as the
literal string "inf".
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import codec, qp_adapt
from .cnnlf import CnnlfModel, cnnlf_forward
from .errors import FormatError
from .nn_intra import IntraModelSet, nnintra_predict
from .nnwf import load_weights, save_weights
from .qp_adapt import AnalyzeConfig, OffsetConfig, read_qpmap, uniform_plan, write_qpmap
from .transform import round_half_away
from .video_io import Frame420, Plane, psnr, read_yuv420, write_yuv420


class UsageError(Exception):
    """Input or configuration problem; maps to exit code 2."""


def _atomic_write(path: str, data) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    mode = "wb" if isinstance(data, (bytes, bytearray)) else "w"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tvc-tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_safe(value):
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _write_report(path: str | None, report: dict) -> None:
    text = json.dumps(_json_safe(report), indent=2) + "\n"
    if path:
        _atomic_write(path, text)
    else:
        sys.stdout.write(text)


def _read_input(path: str) -> bytes:
    if not os.path.exists(path):
        raise UsageError(f"input file does not exist: {path}")
    with open(path, "rb") as fh:
        return fh.read()


def _load_frames(args) -> list[Frame420]:
    if args.width is None or args.height is None:
        raise UsageError("raw YUV input requires --width and --height")
    return read_yuv420(_read_input(args.input), args.width, args.height)


def _load_cnnlf(path: str | None):
    if path is None:
        return None, None
    tensors = load_weights(_read_input(path))
    return (
        CnnlfModel.from_tensor_map(tensors, "luma"),
        CnnlfModel.from_tensor_map(tensors, "chroma"),
    )


def _load_intra(path: str | None):
    if path is None:
        return None
    return IntraModelSet.from_tensor_map(load_weights(_read_input(path)))


def _resolved_config(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# --- commands ------------------------------------------------------------------


def cmd_analyze(args) -> int:
    frames = _load_frames(args)
    if not frames:
        raise UsageError(f"input clip is empty: {args.input}")
    cfg = AnalyzeConfig(
        base_qp=args.qp,
        ctu_size=args.ctu_size,
        search_range=args.search_range,
        probe_count=args.probe_count,
        activity_threshold=args.activity_threshold,
        enable_bim=args.enable_bim,
        enable_perceptual=args.enable_perceptual,
        offset=OffsetConfig(slow_gain=args.slow_gain, epsilon=args.slow_epsilon),
    )
    plan, report = qp_adapt.analyze(frames, cfg)
    if args.output:
        _atomic_write(args.output, write_qpmap(plan))
    report["config"] = _resolved_config(args)
    _write_report(args.report, report)
    return 0


def _codec_config(args) -> codec.CodecConfig:
    luma, chroma = _load_cnnlf(getattr(args, "cnnlf_weights", None))
    intra = _load_intra(getattr(args, "nn_intra_weights", None))
    return codec.CodecConfig(
        search_range=getattr(args, "search_range", 8),
        cnnlf_luma=luma,
        cnnlf_chroma=chroma,
        intra_models=intra,
        collect_aux=bool(getattr(args, "dump_aux", None)),
    )


def cmd_encode(args) -> int:
    frames = _load_frames(args)
    if not frames:
        raise UsageError(f"input clip is empty: {args.input}")
    if args.qpmap:
        plan = read_qpmap(_read_input(args.qpmap).decode("utf-8"))
        if (plan.width, plan.height) != (args.width, args.height):
            raise UsageError(
                f"qpmap is for {plan.width}x{plan.height}, input is "
                f"{args.width}x{args.height}"
            )
        if plan.frame_count < len(frames):
            raise UsageError(
                f"qpmap covers {plan.frame_count} frames, input has {len(frames)}"
            )
    else:
        plan = uniform_plan(args.qp, args.width, args.height, len(frames), args.ctu_size)
    cfg = _codec_config(args)
    result = codec.encode_sequence(frames, plan, cfg)
    _atomic_write(args.output, result.bitstream)
    if args.dump_aux:
        _dump_aux(args.dump_aux, result.aux, args.width, args.height)
    report = {"config": _resolved_config(args), **result.stats}
    if args.report:
        _write_report(args.report, report)
    return 0


def _dump_aux(directory: str, aux: list, width: int, height: int) -> None:
    os.makedirs(directory, exist_ok=True)
    manifest = {"width": width, "height": height, "frames": []}
    for entry in aux:
        poc = entry["poc"]
        files = {}
        for group in ("y", "chroma"):
            for kind, arr in entry[group].items():
                name = f"f{poc:04d}_{group}_{kind}.npy"
                np.save(os.path.join(directory, name), arr)
                files[f"{group}.{kind}"] = name
        manifest["frames"].append(
            {"poc": poc, "qp": entry["qp"], "is_key": entry["is_key"], "files": files}
        )
    _atomic_write(os.path.join(directory, "aux_manifest.json"), json.dumps(manifest, indent=2))


def cmd_decode(args) -> int:
    data = _read_input(args.input)
    luma, chroma = _load_cnnlf(args.cnnlf_weights)
    intra = _load_intra(args.nn_intra_weights)
    result = codec.decode_sequence(data, luma, chroma, intra)
    if args.output:
        _atomic_write(args.output, write_yuv420(result.frames))
    report = {"config": _resolved_config(args), "header": result.header, **result.stats}
    _write_report(args.report, report)
    return 0


def cmd_metrics(args) -> int:
    test = _load_frames(args)
    ref = read_yuv420(_read_input(args.ref), args.width, args.height)
    if len(ref) != len(test):
        raise UsageError(f"frame counts differ: ref {len(ref)}, input {len(test)}")
    if not ref:
        raise UsageError("empty clips")
    per_frame = []
    y_values = []
    for r, t in zip(ref, test):
        y_v = psnr(r.y, t.y)
        y_values.append(y_v)
        per_frame.append(
            {
                "poc": r.poc,
                "psnr_y": y_v,
                "psnr_cb": psnr(r.cb, t.cb),
                "psnr_cr": psnr(r.cr, t.cr),
            }
        )
    report = {
        "config": _resolved_config(args),
        "frames": per_frame,
        "mean_y_psnr": sum(y_values) / len(y_values),
    }
    _write_report(args.report, report)
    return 0


def cmd_filter(args) -> int:
    frames = _load_frames(args)
    luma, chroma = _load_cnnlf(args.cnnlf_weights)
    if luma is None:
        raise UsageError("filter requires --cnnlf-weights")
    out_frames = []
    for f in frames:
        # Standalone filtering has no codec state: prediction falls back to
        # the reconstruction itself and boundary strengths to zero.
        fy = cnnlf_forward(luma, f.y.samples, f.y.samples,
                           np.zeros_like(f.y.samples), args.qp)
        cstack = np.stack([f.cb.samples, f.cr.samples])
        fc = cnnlf_forward(chroma, cstack, cstack,
                           np.zeros_like(f.cb.samples), args.qp)
        out_frames.append(
            Frame420(
                Plane(round_half_away(fy).astype(np.uint8)),
                Plane(round_half_away(fc[0]).astype(np.uint8)),
                Plane(round_half_away(fc[1]).astype(np.uint8)),
                f.poc,
            )
        )
    _atomic_write(args.output, write_yuv420(out_frames))
    if args.report:
        _write_report(args.report, {"config": _resolved_config(args), "frames": len(out_frames)})
    return 0


def cmd_nn_eval(args) -> int:
    inputs = load_weights(_read_input(args.input))
    if args.model in ("luma", "chroma"):
        if args.cnnlf_weights is None:
            raise UsageError("cnnlf models require --cnnlf-weights")
        model = CnnlfModel.from_tensor_map(
            load_weights(_read_input(args.cnnlf_weights)), args.model
        )
        for key in ("rec", "pred", "bs"):
            if key not in inputs:
                raise UsageError(f"nn-eval input is missing tensor {key!r}")
        out = cnnlf_forward(model, inputs["rec"], inputs["pred"], inputs["bs"], args.qp)
        tensors = {"out": np.asarray(out, dtype=np.float32)}
    elif args.model.startswith("intra."):
        intra = _load_intra(args.nn_intra_weights)
        if intra is None:
            raise UsageError("intra models require --nn-intra-weights")
        try:
            _, size, qptag = args.model.split(".")
            w, h = (int(v) for v in size.split("x"))
            qp = int(qptag.removeprefix("qp"))
        except ValueError:
            raise UsageError(f"malformed intra model name {args.model!r}") from None
        per_qp = intra.by_size.get((w, h))
        if not per_qp or qp not in per_qp:
            raise UsageError(f"weights file has no model {args.model!r}")
        model = per_qp[qp]
        for key in ("above", "left"):
            if key not in inputs:
                raise UsageError(f"nn-eval input is missing tensor {key!r}")
        mean = float(inputs["mean"].reshape(-1)[0]) if "mean" in inputs else 128.0
        pred, grp1, grp2 = nnintra_predict(model, inputs["above"], inputs["left"], mean)
        tensors = {
            "pred": np.asarray(pred, dtype=np.float32),
            "grp1": np.asarray(grp1, dtype=np.float32),
            "grp2": np.asarray(grp2, dtype=np.float32),
        }
    else:
        raise UsageError(f"unknown model name {args.model!r}")
    _atomic_write(args.output, save_weights(tensors))
    return 0


# --- argument parsing ------------------------------------------------------------


def _add_io(p, output_required=True):
    p.add_argument("--input", required=True, help="input file")
    p.add_argument("--output", required=output_required, help="output file")


def _add_dims(p):
    p.add_argument("--width", type=int, help="luma width in samples")
    p.add_argument("--height", type=int, help="luma height in samples")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tvc", description="Toy video codec and analysis toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="derive a QPMAP plan and analysis report")
    _add_io(p, output_required=False)
    _add_dims(p)
    p.add_argument("--qp", type=int, default=37, help="base QP")
    p.add_argument("--ctu-size", type=int, default=128)
    p.add_argument("--search-range", type=int, default=8)
    p.add_argument("--probe-count", type=int, default=8)
    p.add_argument("--activity-threshold", type=float, default=2.0)
    p.add_argument("--slow-gain", type=float, default=1.0)
    p.add_argument("--slow-epsilon", type=float, default=0.05)
    p.add_argument("--enable-bim", action="store_true")
    p.add_argument("--enable-perceptual", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="JSON report path (stdout if omitted)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("encode", help="encode raw YUV to a TVC1 bitstream")
    _add_io(p)
    _add_dims(p)
    p.add_argument("--qp", type=int, default=37, help="uniform base QP when no --qpmap")
    p.add_argument("--qpmap", help="QPMAP sidecar produced by analyze")
    p.add_argument("--ctu-size", type=int, default=128)
    p.add_argument("--search-range", type=int, default=8)
    p.add_argument("--cnnlf-weights", help="NNWF file with luma.* and chroma.* models")
    p.add_argument("--nn-intra-weights", help="NNWF file with intra.* models")
    p.add_argument("--dump-aux", metavar="DIR", help="dump rec/pred/bs/orig planes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="JSON report path")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode a TVC1 bitstream to raw YUV")
    _add_io(p, output_required=False)
    p.add_argument("--cnnlf-weights")
    p.add_argument("--nn-intra-weights")
    p.add_argument("--report", help="JSON report path (stdout if omitted)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("metrics", help="per-frame and mean PSNR of two YUV clips")
    p.add_argument("--input", required=True, help="test clip (e.g. decoded)")
    p.add_argument("--ref", required=True, help="reference clip (source)")
    _add_dims(p)
    p.add_argument("--report", help="JSON report path (stdout if omitted)")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("filter", help="apply the loop filter to a YUV clip standalone")
    _add_io(p)
    _add_dims(p)
    p.add_argument("--qp", type=int, required=True)
    p.add_argument("--cnnlf-weights", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("nn-eval", help="run one named model forward on file tensors")
    _add_io(p)
    p.add_argument("--model", required=True, help="luma, chroma, or intra.<w>x<h>.qp<q>")
    p.add_argument("--qp", type=int, default=37)
    p.add_argument("--cnnlf-weights")
    p.add_argument("--nn-intra-weights")
    p.set_defaults(func=cmd_nn_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, FormatError, FileNotFoundError) as exc:
        print(f"tvc {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"tvc {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - unexpected internal faults
        print(f"tvc {args.command}: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

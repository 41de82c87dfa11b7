"""Minimal block codec: single key frame plus forward-P frames, 16x16 coding
blocks, 8x8 transforms, Exp-Golomb entropy coding.

The codec consumes a QpPlan, optionally hosts neural intra prediction as a
block mode and the CNN loop filter as its only in-loop filter, and emits a
self-contained TVC1 bitstream.  The decoder reproduces the encoder-side
reconstruction bit-exactly; the previous frame's final (post-filter)
reconstruction is the single inter reference.

Bitstream layout (little-endian multi-byte fields):
  magic `TVC1`, u8 version, u16 width, u16 height, u16 frame_count,
  u8 ctu_size_log2, u8 flags (bit0 cnnlf, bit1 nn-intra), u8 base_qp.
  Per frame: u16 poc, u8 is_key, then a bit-packed payload of per-CTU QPs
  (signed Exp-Golomb deltas from base_qp), the loop-filter frame flag and
  per-CTU flags when enabled, and per-block records (2-bit mode, signed EG
  motion vector for inter, four 8x8 coefficient sets as (zero-run, signed
  level) EG pairs closed by a (0, 0) end-of-block pair), zero-padded to a
  byte boundary per frame.

Everything the in-loop tools condition on is derived from signaled data:
the nn-intra model for a block is selected by that block's CTU QP, and the
loop filter conditions on the rounded mean of the frame's CTU QP grid, so
the decoder reproduces both without side information.

Frames whose dimensions are not multiples of 16 are coded with partial edge
blocks: prediction and distortion cover the real extent only, and the
residual is zero-padded to fill the fixed 8x8 transforms.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .bitio import BitReader, BitWriter, se_bits, ue_bits
from .cnnlf import CnnlfModel, cnnlf_forward
from .errors import BitstreamError
from .motion import BLOCK, MotionVector, compensate_block, estimate_motion
from .nn_intra import IntraModelSet, assemble_intra_context, nnintra_predict
from .qp_adapt import QpPlan
from .transform import ZIGZAG, dct8, dequantize, idct8, qstep, quantize, round_half_away
from .video_io import Frame420, Plane

__all__ = [
    "BlockMode",
    "CodedBlock",
    "FrameRecord",
    "CodecConfig",
    "EncodeResult",
    "DecodeResult",
    "rd_lambda",
    "rd_cost",
    "decide_cnnlf_flags",
    "encode_sequence",
    "decode_sequence",
]

MAGIC = b"TVC1"
VERSION = 1
_HEADER = struct.Struct("<4sBHHHBBB")


class BlockMode(IntEnum):
    INTRA_DC = 0
    INTRA_PLANAR = 1
    INTRA_NN = 2
    INTER = 3


@dataclass(frozen=True)
class CodedBlock:
    mode: BlockMode
    mv: MotionVector | None
    levels: np.ndarray  # (4, 64) int64, zigzag order per 8x8 sub-block


@dataclass(frozen=True)
class FrameRecord:
    poc: int
    is_key: bool
    ctu_qps: np.ndarray  # (ctu_rows, ctu_cols) int32
    cnnlf_frame_flag: bool
    cnnlf_ctu_flags: np.ndarray | None  # (ctu_rows, ctu_cols) bool
    planes: tuple  # 3 lists of CodedBlock (Y, Cb, Cr), raster block order


@dataclass
class CodecConfig:
    """Tool configuration for one encode."""

    search_range: int = 8
    cnnlf_luma: CnnlfModel | None = None
    cnnlf_chroma: CnnlfModel | None = None
    intra_models: IntraModelSet | None = None
    collect_aux: bool = False

    @property
    def cnnlf_enabled(self) -> bool:
        return self.cnnlf_luma is not None and self.cnnlf_chroma is not None

    @property
    def nn_intra_enabled(self) -> bool:
        return self.intra_models is not None


def rd_lambda(qp: int) -> float:
    """Lagrangian multiplier 0.85 * 2^((qp-12)/3)."""
    if not 0 <= qp <= 63:
        raise ValueError(f"qp must be in [0, 63], got {qp}")
    return 0.85 * 2.0 ** ((qp - 12) / 3.0)


def rd_cost(distortion: float, bits: int, lam: float) -> float:
    return distortion + lam * bits


def _cnnlf_qp(ctu_qps: np.ndarray) -> int:
    """Scalar QP the loop filter conditions on: rounded mean of the CTU grid."""
    mean = float(np.sum(ctu_qps, dtype=np.int64)) / ctu_qps.size
    return max(0, min(63, int(np.floor(mean + 0.5))))


# --- block-grid helpers -------------------------------------------------------


def _blocks(limit: int) -> int:
    return -(-limit // BLOCK)


def _extent(index: int, limit: int) -> tuple[int, int]:
    lo = index * BLOCK
    return lo, min(BLOCK, limit - lo)


def _quads(res16: np.ndarray) -> np.ndarray:
    """16x16 -> (4, 8, 8) sub-blocks in raster order (TL, TR, BL, BR)."""
    return res16.reshape(2, 8, 2, 8).transpose(0, 2, 1, 3).reshape(4, 8, 8)


def _unquads(quads: np.ndarray) -> np.ndarray:
    return quads.reshape(2, 2, 8, 8).transpose(0, 2, 1, 3).reshape(16, 16)


def _coef_bits(zz: np.ndarray) -> int:
    bits = 0
    run = 0
    for v in zz:
        if v:
            bits += ue_bits(run) + se_bits(int(v))
            run = 0
        else:
            run += 1
    return bits + ue_bits(0) + se_bits(0)


def _write_coeffs(bw: BitWriter, zz: np.ndarray) -> None:
    run = 0
    for v in zz:
        if v:
            bw.write_ue(run)
            bw.write_se(int(v))
            run = 0
        else:
            run += 1
    bw.write_ue(0)
    bw.write_se(0)


def _read_coeffs(br: BitReader) -> np.ndarray:
    zz = np.zeros(64, dtype=np.int64)
    pos = 0
    while True:
        start = br.bit_position
        run = br.read_ue()
        level = br.read_se()
        if level == 0:
            return zz
        pos += run
        if pos > 63:
            raise BitstreamError(
                f"coefficient run overflows the 8x8 block at bit offset {start}"
            )
        zz[pos] = level
        pos += 1


def _reconstruct_block(pred: np.ndarray, levels_zz: np.ndarray, qp: int) -> np.ndarray:
    """Inverse transform + add prediction; shared by encoder and decoder."""
    bh, bw_ = pred.shape
    step = qstep(qp)
    levels = np.zeros((4, 64), dtype=np.float64)
    levels[:, ZIGZAG] = levels_zz
    res = idct8(dequantize(levels.reshape(4, 8, 8), step))
    res16 = _unquads(res)
    recon = round_half_away(pred.astype(np.float64) + res16[:bh, :bw_])
    return np.clip(recon, 0, 255).astype(np.uint8)


# --- prediction ---------------------------------------------------------------


def _dc_predict(rec: np.ndarray, x: int, y: int, bw_: int, bh: int) -> np.ndarray:
    h, w = rec.shape
    total = 0
    count = 0
    if y > 0:
        row = rec[y - 1, x : min(x + bw_, w)]
        total += int(np.sum(row, dtype=np.int64))
        count += row.size
    if x > 0:
        col = rec[y : min(y + bh, h), x - 1]
        total += int(np.sum(col, dtype=np.int64))
        count += col.size
    dc = (2 * total + count) // (2 * count) if count else 128
    return np.full((bh, bw_), dc, dtype=np.int32)


def _planar_predict(rec: np.ndarray, x: int, y: int, bw_: int, bh: int) -> np.ndarray:
    h, w = rec.shape
    if y > 0:
        top = rec[y - 1, np.minimum(np.arange(x, x + bw_ + 1), w - 1)].astype(np.int64)
    elif x > 0:
        top = np.full(bw_ + 1, int(rec[y, x - 1]), dtype=np.int64)
    else:
        top = np.full(bw_ + 1, 128, dtype=np.int64)
    if x > 0:
        rows = np.minimum(np.arange(y, y + bh + 1), y + bh - 1)
        left = rec[np.minimum(rows, h - 1), x - 1].astype(np.int64)
    elif y > 0:
        left = np.full(bh + 1, int(rec[y - 1, x]), dtype=np.int64)
    else:
        left = np.full(bh + 1, 128, dtype=np.int64)
    jj = np.arange(bw_, dtype=np.int64)
    ii = np.arange(bh, dtype=np.int64)
    pred_h = (bw_ - 1 - jj)[None, :] * left[:bh, None] + (jj + 1)[None, :] * top[bw_]
    pred_v = (bh - 1 - ii)[:, None] * top[None, :bw_] + (ii + 1)[:, None] * left[bh]
    return ((pred_h * bh + pred_v * bw_ + bw_ * bh) // (2 * bw_ * bh)).astype(np.int32)


def _nn_predict(rec: np.ndarray, x: int, y: int, model) -> np.ndarray:
    above, left, mean = assemble_intra_context(
        rec, (x, y, model.w, model.h), model.n_a, model.n_l
    )
    pred, _, _ = nnintra_predict(model, above, left, mean)
    return round_half_away(pred).astype(np.int32)


def _predict(
    mode: BlockMode,
    rec: np.ndarray,
    prev: np.ndarray | None,
    x: int,
    y: int,
    bw_: int,
    bh: int,
    mv: MotionVector | None,
    nn_model,
) -> np.ndarray:
    if mode == BlockMode.INTRA_DC:
        return _dc_predict(rec, x, y, bw_, bh)
    if mode == BlockMode.INTRA_PLANAR:
        return _planar_predict(rec, x, y, bw_, bh)
    if mode == BlockMode.INTRA_NN:
        if nn_model is None:
            raise BitstreamError("nn-intra block present but no intra weights loaded")
        return _nn_predict(rec, x, y, nn_model)
    if prev is None:
        raise BitstreamError("inter block on a key frame")
    return compensate_block(prev, y, x, bh, bw_, mv.dy, mv.dx).astype(np.int32)


# --- plane coding ---------------------------------------------------------------


def _code_block(src_blk: np.ndarray, pred: np.ndarray, qp: int) -> tuple:
    """Transform-code one block; returns (levels_zz, recon, distortion, coef_bits)."""
    bh, bw_ = src_blk.shape
    res16 = np.zeros((16, 16), dtype=np.float64)
    res16[:bh, :bw_] = src_blk.astype(np.float64) - pred
    step = qstep(qp)
    levels = quantize(dct8(_quads(res16)), step)
    zz = levels.reshape(4, 64)[:, ZIGZAG]
    bits = sum(_coef_bits(zz[i]) for i in range(4))
    recon = _reconstruct_block(pred, zz, qp)
    d = src_blk.astype(np.int64) - recon.astype(np.int64)
    return zz, recon, int(np.sum(d * d)), bits


def _encode_plane(
    src: np.ndarray,
    prev: np.ndarray | None,
    qp_at,
    kind: str,
    cfg: CodecConfig,
):
    h, w = src.shape
    rows, cols = _blocks(h), _blocks(w)
    rec = np.zeros((h, w), dtype=np.uint8)
    pred_plane = np.zeros((h, w), dtype=np.uint8)
    field = estimate_motion(src, prev, cfg.search_range) if prev is not None else None
    blocks: list[CodedBlock] = []
    modes = np.zeros((rows, cols), dtype=np.int32)
    block_bits = np.zeros((rows, cols), dtype=np.int64)
    nn_set = cfg.intra_models if kind == "y" else None

    for br in range(rows):
        y0, bh = _extent(br, h)
        for bc in range(cols):
            x0, bw_ = _extent(bc, w)
            qp = qp_at(x0, y0)
            lam = rd_lambda(qp)
            src_blk = src[y0 : y0 + bh, x0 : x0 + bw_]

            nn_model = None
            if nn_set is not None and bh == BLOCK and bw_ == BLOCK:
                nn_model = nn_set.model_for(BLOCK, BLOCK, qp)
            candidates = [BlockMode.INTRA_DC, BlockMode.INTRA_PLANAR]
            if nn_model is not None:
                candidates.append(BlockMode.INTRA_NN)
            if prev is not None:
                candidates.append(BlockMode.INTER)

            best = None
            for mode in candidates:
                mv = field.vector(br, bc) if mode == BlockMode.INTER else None
                pred = _predict(mode, rec, prev, x0, y0, bw_, bh, mv, nn_model)
                zz, recon, dist, cbits = _code_block(src_blk, pred, qp)
                bits = 2 + cbits
                if mode == BlockMode.INTER:
                    bits += se_bits(mv.dx) + se_bits(mv.dy)
                cost = rd_cost(dist, bits, lam)
                if best is None or cost < best[0]:
                    best = (cost, mode, mv, zz, recon, pred, bits)
            _, mode, mv, zz, recon, pred, bits = best
            rec[y0 : y0 + bh, x0 : x0 + bw_] = recon
            pred_plane[y0 : y0 + bh, x0 : x0 + bw_] = np.clip(pred, 0, 255).astype(np.uint8)
            modes[br, bc] = int(mode)
            block_bits[br, bc] = bits
            blocks.append(CodedBlock(mode=mode, mv=mv, levels=zz))
    return blocks, rec, pred_plane, modes, block_bits


def _decode_plane(
    blocks: list[CodedBlock],
    shape: tuple[int, int],
    prev: np.ndarray | None,
    qp_at,
    nn_set: IntraModelSet | None,
):
    h, w = shape
    rows, cols = _blocks(h), _blocks(w)
    rec = np.zeros((h, w), dtype=np.uint8)
    pred_plane = np.zeros((h, w), dtype=np.uint8)
    modes = np.zeros((rows, cols), dtype=np.int32)
    i = 0
    for br in range(rows):
        y0, bh = _extent(br, h)
        for bc in range(cols):
            x0, bw_ = _extent(bc, w)
            blk = blocks[i]
            i += 1
            qp = qp_at(x0, y0)
            nn_model = None
            if blk.mode == BlockMode.INTRA_NN:
                if nn_set is None:
                    raise BitstreamError(
                        "nn-intra block present but no intra weights were provided"
                    )
                nn_model = nn_set.model_for(BLOCK, BLOCK, qp)
            pred = _predict(blk.mode, rec, prev, x0, y0, bw_, bh, blk.mv, nn_model)
            recon = _reconstruct_block(pred, blk.levels, qp)
            rec[y0 : y0 + bh, x0 : x0 + bw_] = recon
            pred_plane[y0 : y0 + bh, x0 : x0 + bw_] = np.clip(pred, 0, 255).astype(np.uint8)
            modes[br, bc] = int(blk.mode)
    return rec, pred_plane, modes


def _bs_plane(shape: tuple[int, int], modes: np.ndarray) -> np.ndarray:
    """Boundary strengths: 2 on intra block edges, 1 on inter, 0 interior."""
    h, w = shape
    bs = np.zeros((h, w), dtype=np.uint8)
    rows, cols = modes.shape
    for br in range(rows):
        y0, bh = _extent(br, h)
        for bc in range(cols):
            x0, bw_ = _extent(bc, w)
            s = 1 if modes[br, bc] == int(BlockMode.INTER) else 2
            bs[y0, x0 : x0 + bw_] = s
            bs[y0 : y0 + bh, x0] = s
    return bs


# --- loop-filter decision --------------------------------------------------------


def decide_cnnlf_flags(
    rec_planes,
    filtered_planes,
    orig_planes,
    lam: float,
    ctu_size: int,
    subsampling=None,
):
    """RD on/off decision for the loop filter at CTU and frame level.

    Each argument is a list of planes (same length); subsampling gives each
    plane's CTU scale divisor (e.g. (1, 2, 2) for Y, Cb, Cr).  A CTU flag
    costs one bit either way, so a CTU picks the filtered samples iff they
    strictly lower its SSE; the frame flag weighs the per-CTU best against
    leaving the frame unfiltered, charging one bit for the frame flag plus
    one per CTU flag when on.  Returns (frame_flag, ctu_flags, costs).
    """
    if subsampling is None:
        subsampling = (1,) * len(rec_planes)
    h, w = np.asarray(rec_planes[0]).shape
    rows, cols = -(-h // ctu_size), -(-w // ctu_size)
    sse_u = np.zeros((rows, cols), dtype=np.float64)
    sse_f = np.zeros((rows, cols), dtype=np.float64)
    for rec, filt, orig, sub in zip(rec_planes, filtered_planes, orig_planes, subsampling):
        rec = np.asarray(rec, dtype=np.int64)
        filt = np.asarray(filt, dtype=np.int64)
        orig = np.asarray(orig, dtype=np.int64)
        cs = ctu_size // sub
        for r in range(rows):
            for c in range(cols):
                sl = np.s_[r * cs : (r + 1) * cs, c * cs : (c + 1) * cs]
                du = orig[sl] - rec[sl]
                df = orig[sl] - filt[sl]
                sse_u[r, c] += float(np.sum(du * du))
                sse_f[r, c] += float(np.sum(df * df))
    ctu_flags = sse_f < sse_u
    best = np.where(ctu_flags, sse_f, sse_u)
    n_ctu = rows * cols
    cost_on = float(np.sum(best)) + lam * (1 + n_ctu)
    cost_off = float(np.sum(sse_u)) + lam * 1
    frame_flag = cost_on < cost_off
    if not frame_flag:
        ctu_flags = np.zeros_like(ctu_flags)
    costs = {"on": cost_on, "off": cost_off, "chosen": cost_on if frame_flag else cost_off}
    return bool(frame_flag), ctu_flags, costs


def _apply_cnnlf_flags(planes, filtered, ctu_flags, ctu_size, subsampling):
    out = []
    for plane, filt, sub in zip(planes, filtered, subsampling):
        res = plane.copy()
        cs = ctu_size // sub
        rows, cols = ctu_flags.shape
        for r in range(rows):
            for c in range(cols):
                if ctu_flags[r, c]:
                    sl = np.s_[r * cs : (r + 1) * cs, c * cs : (c + 1) * cs]
                    res[sl] = filt[sl]
        out.append(res)
    return out


def _run_cnnlf(cfg: CodecConfig, qp: int, recs, preds, bs_y, bs_c) -> list[np.ndarray]:
    filt_y = cnnlf_forward(cfg.cnnlf_luma, recs[0], preds[0], bs_y, qp)
    filt_c = cnnlf_forward(
        cfg.cnnlf_chroma, np.stack(recs[1:]), np.stack(preds[1:]), bs_c, qp
    )
    return [
        round_half_away(filt_y).astype(np.uint8),
        round_half_away(filt_c[0]).astype(np.uint8),
        round_half_away(filt_c[1]).astype(np.uint8),
    ]


# --- sequence encode/decode --------------------------------------------------------


@dataclass(frozen=True)
class EncodeResult:
    bitstream: bytes
    recon_frames: list
    stats: dict
    aux: list | None


@dataclass(frozen=True)
class DecodeResult:
    frames: list
    header: dict
    stats: dict


def _qp_lookup(grid: np.ndarray, ctu_size: int, scale: int):
    rows, cols = grid.shape

    def qp_at(x: int, y: int) -> int:
        r = min((y * scale) // ctu_size, rows - 1)
        c = min((x * scale) // ctu_size, cols - 1)
        return int(grid[r, c])

    return qp_at


def encode_sequence(frames: list[Frame420], plan: QpPlan, cfg: CodecConfig) -> EncodeResult:
    """Encode a clip under a QP plan."""
    if not frames:
        raise ValueError("no frames to encode")
    w, h = frames[0].width, frames[0].height
    if plan.width != w or plan.height != h:
        raise ValueError(f"plan is for {plan.width}x{plan.height}, frames are {w}x{h}")
    if plan.frame_count < len(frames):
        raise ValueError(f"plan covers {plan.frame_count} frames, clip has {len(frames)}")
    for i, f in enumerate(frames):
        if f.poc != i:
            raise ValueError(f"frame pocs must be consecutive from 0, got {f.poc} at {i}")
    ctu = plan.ctu_size
    if ctu < 16 or ctu & (ctu - 1):
        raise ValueError(f"ctu_size must be a power of two >= 16, got {ctu}")
    if max(w, h, len(frames)) > 0xFFFF:
        raise ValueError("dimensions or frame count exceed the 16-bit header fields")

    records: list[FrameRecord] = []
    recon_frames: list[Frame420] = []
    stats_frames: list[dict] = []
    aux: list[dict] = []
    prev: list[np.ndarray] | None = None

    for f in frames:
        fp = plan.frame(f.poc)
        is_key = f.poc == 0
        srcs = [f.y.samples, f.cb.samples, f.cr.samples]
        lookups = [
            _qp_lookup(fp.grid, ctu, 1),
            _qp_lookup(fp.grid, ctu, 2),
            _qp_lookup(fp.grid, ctu, 2),
        ]
        ctu_rows, ctu_cols = fp.grid.shape
        ctu_bits = np.zeros((ctu_rows, ctu_cols), dtype=np.int64)
        plane_blocks, recs, preds, all_modes = [], [], [], []
        for idx, (src, qp_at) in enumerate(zip(srcs, lookups)):
            ref = prev[idx] if prev is not None and not is_key else None
            blocks, rec, predp, modes, bbits = _encode_plane(
                src, ref, qp_at, "y" if idx == 0 else "c", cfg
            )
            plane_blocks.append(blocks)
            recs.append(rec)
            preds.append(predp)
            all_modes.append(modes)
            scale = 1 if idx == 0 else 2
            for br in range(modes.shape[0]):
                for bc in range(modes.shape[1]):
                    r = min((br * BLOCK * scale) // ctu, ctu_rows - 1)
                    c = min((bc * BLOCK * scale) // ctu, ctu_cols - 1)
                    ctu_bits[r, c] += int(bbits[br, bc])

        bs_y = _bs_plane(recs[0].shape, all_modes[0])
        bs_c = np.maximum(
            _bs_plane(recs[1].shape, all_modes[1]),
            _bs_plane(recs[2].shape, all_modes[2]),
        )

        if cfg.collect_aux:
            aux.append(
                {
                    "poc": f.poc,
                    "qp": fp.frame_qp,
                    "is_key": is_key,
                    "y": {
                        "rec": recs[0].copy(),
                        "pred": preds[0].copy(),
                        "bs": bs_y.copy(),
                        "orig": srcs[0].copy(),
                    },
                    "chroma": {
                        "rec": np.stack([recs[1], recs[2]]),
                        "pred": np.stack([preds[1], preds[2]]),
                        "bs": bs_c.copy(),
                        "orig": np.stack([srcs[1], srcs[2]]),
                    },
                }
            )

        frame_flag = False
        ctu_flags = None
        if cfg.cnnlf_enabled:
            lf_qp = _cnnlf_qp(fp.grid)
            filtered = _run_cnnlf(cfg, lf_qp, recs, preds, bs_y, bs_c)
            frame_flag, flags, _ = decide_cnnlf_flags(
                recs, filtered, srcs, rd_lambda(lf_qp), ctu, (1, 2, 2)
            )
            if frame_flag:
                ctu_flags = flags
                recs = _apply_cnnlf_flags(recs, filtered, flags, ctu, (1, 2, 2))

        records.append(
            FrameRecord(
                poc=f.poc,
                is_key=is_key,
                ctu_qps=fp.grid.astype(np.int32),
                cnnlf_frame_flag=frame_flag,
                cnnlf_ctu_flags=ctu_flags,
                planes=tuple(plane_blocks),
            )
        )
        recon_frames.append(Frame420(Plane(recs[0]), Plane(recs[1]), Plane(recs[2]), f.poc))
        stats_frames.append(
            {
                "poc": f.poc,
                "is_key": is_key,
                "cnnlf_frame_flag": frame_flag,
                "ctu_bits": ctu_bits.tolist(),
            }
        )
        prev = recs

    data, frame_sizes = _serialize(records, plan, cfg, w, h)
    for st, (payload_bits, nbytes) in zip(stats_frames, frame_sizes):
        st["payload_bits"] = payload_bits
        st["bytes"] = nbytes
    stats = {
        "width": w,
        "height": h,
        "ctu_size": ctu,
        "base_qp": plan.base_qp,
        "total_bytes": len(data),
        "frames": stats_frames,
    }
    return EncodeResult(data, recon_frames, stats, aux if cfg.collect_aux else None)


def _serialize(records, plan: QpPlan, cfg: CodecConfig, w: int, h: int):
    flags = (1 if cfg.cnnlf_enabled else 0) | (2 if cfg.nn_intra_enabled else 0)
    ctu_log2 = plan.ctu_size.bit_length() - 1
    out = bytearray(
        _HEADER.pack(MAGIC, VERSION, w, h, len(records), ctu_log2, flags, plan.base_qp)
    )
    sizes = []
    for rec in records:
        out += struct.pack("<HB", rec.poc, 1 if rec.is_key else 0)
        bw = BitWriter()
        for q in rec.ctu_qps.reshape(-1):
            bw.write_se(int(q) - plan.base_qp)
        if cfg.cnnlf_enabled:
            bw.write_bit(1 if rec.cnnlf_frame_flag else 0)
            if rec.cnnlf_frame_flag:
                for b in rec.cnnlf_ctu_flags.reshape(-1):
                    bw.write_bit(1 if b else 0)
        for blocks in rec.planes:
            for blk in blocks:
                bw.write_bits(int(blk.mode), 2)
                if blk.mode == BlockMode.INTER:
                    bw.write_se(blk.mv.dx)
                    bw.write_se(blk.mv.dy)
                for i in range(4):
                    _write_coeffs(bw, blk.levels[i])
        payload_bits = bw.bit_length
        bw.byte_align()
        payload = bw.getvalue()
        out += payload
        sizes.append((payload_bits + 24, 3 + len(payload)))
    return bytes(out), sizes


def decode_sequence(
    data: bytes,
    cnnlf_luma: CnnlfModel | None = None,
    cnnlf_chroma: CnnlfModel | None = None,
    intra_models: IntraModelSet | None = None,
) -> DecodeResult:
    """Decode a TVC1 bitstream; the output equals the encoder reconstruction."""
    if len(data) < _HEADER.size:
        raise BitstreamError(
            f"truncated stream: {len(data)} bytes, header needs {_HEADER.size}"
        )
    magic, version, w, h, n_frames, ctu_log2, flags, base_qp = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BitstreamError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise BitstreamError(f"unsupported bitstream version {version}")
    ctu = 1 << ctu_log2
    cnnlf_enabled = bool(flags & 1)
    nn_enabled = bool(flags & 2)
    ctu_rows, ctu_cols = -(-h // ctu), -(-w // ctu)
    cw, ch = (w + 1) // 2, (h + 1) // 2
    plane_shapes = [(h, w), (ch, cw), (ch, cw)]
    plane_nblocks = [(_blocks(s[0]), _blocks(s[1])) for s in plane_shapes]

    pos = _HEADER.size
    records: list[FrameRecord] = []
    frame_sizes = []
    for k in range(n_frames):
        if pos + 3 > len(data):
            raise BitstreamError(
                f"truncated stream: frame {k} header missing at byte offset {pos}"
            )
        poc, is_key = struct.unpack_from("<HB", data, pos)
        if is_key not in (0, 1):
            raise BitstreamError(f"frame {k}: invalid key flag {is_key}")
        br = BitReader(data, bit_offset=(pos + 3) * 8)
        qps = np.empty((ctu_rows, ctu_cols), dtype=np.int32)
        for i in range(ctu_rows * ctu_cols):
            q = base_qp + br.read_se()
            if not 0 <= q <= 63:
                raise BitstreamError(
                    f"frame {k}: decoded CTU qp {q} out of range at byte offset "
                    f"{br.byte_position}"
                )
            qps[i // ctu_cols, i % ctu_cols] = q
        frame_flag = False
        ctu_flags = None
        if cnnlf_enabled:
            frame_flag = bool(br.read_bit())
            if frame_flag:
                ctu_flags = np.array(
                    [bool(br.read_bit()) for _ in range(ctu_rows * ctu_cols)]
                ).reshape(ctu_rows, ctu_cols)
        planes = []
        for p_idx, (rows, cols) in enumerate(plane_nblocks):
            blocks = []
            for _ in range(rows * cols):
                mode = BlockMode(br.read_bits(2))
                mv = None
                if mode == BlockMode.INTER:
                    if is_key:
                        raise BitstreamError(
                            f"frame {k}: inter block on a key frame at byte offset "
                            f"{br.byte_position}"
                        )
                    mv = MotionVector(br.read_se(), br.read_se())
                if mode == BlockMode.INTRA_NN and (p_idx != 0 or not nn_enabled):
                    raise BitstreamError(
                        f"frame {k}: nn-intra block where it is not allowed at "
                        f"byte offset {br.byte_position}"
                    )
                levels = np.stack([_read_coeffs(br) for _ in range(4)])
                blocks.append(CodedBlock(mode=mode, mv=mv, levels=levels))
            planes.append(blocks)
        payload_bits = br.bit_position - (pos + 3) * 8
        br.byte_align()
        frame_sizes.append((payload_bits + 24, br.byte_position - pos))
        pos = br.byte_position
        records.append(
            FrameRecord(poc, bool(is_key), qps, frame_flag, ctu_flags, tuple(planes))
        )
    if pos != len(data):
        raise BitstreamError(
            f"trailing garbage: {len(data) - pos} bytes after the last frame at "
            f"byte offset {pos}"
        )

    cfg = CodecConfig(
        cnnlf_luma=cnnlf_luma, cnnlf_chroma=cnnlf_chroma, intra_models=intra_models
    )
    frames = []
    stats_frames = []
    prev = None
    for rec, (payload_bits, nbytes) in zip(records, frame_sizes):
        lookups = [
            _qp_lookup(rec.ctu_qps, ctu, 1),
            _qp_lookup(rec.ctu_qps, ctu, 2),
            _qp_lookup(rec.ctu_qps, ctu, 2),
        ]
        recs, preds, all_modes = [], [], []
        for idx, shape in enumerate(plane_shapes):
            ref = prev[idx] if prev is not None and not rec.is_key else None
            r, p, m = _decode_plane(
                rec.planes[idx], shape, ref, lookups[idx],
                intra_models if idx == 0 else None,
            )
            recs.append(r)
            preds.append(p)
            all_modes.append(m)
        if rec.cnnlf_frame_flag:
            if cnnlf_luma is None or cnnlf_chroma is None:
                raise BitstreamError(
                    f"frame {rec.poc} has loop-filter flags set but no loop-filter "
                    "weights were provided"
                )
            bs_y = _bs_plane(recs[0].shape, all_modes[0])
            bs_c = np.maximum(
                _bs_plane(recs[1].shape, all_modes[1]),
                _bs_plane(recs[2].shape, all_modes[2]),
            )
            filtered = _run_cnnlf(cfg, _cnnlf_qp(rec.ctu_qps), recs, preds, bs_y, bs_c)
            recs = _apply_cnnlf_flags(recs, filtered, rec.cnnlf_ctu_flags, ctu, (1, 2, 2))
        frames.append(Frame420(Plane(recs[0]), Plane(recs[1]), Plane(recs[2]), rec.poc))
        stats_frames.append(
            {
                "poc": rec.poc,
                "is_key": rec.is_key,
                "payload_bits": payload_bits,
                "bytes": nbytes,
                "cnnlf_frame_flag": rec.cnnlf_frame_flag,
                "cnnlf_ctus_on": int(rec.cnnlf_ctu_flags.sum())
                if rec.cnnlf_ctu_flags is not None
                else 0,
            }
        )
        prev = recs

    header = {
        "width": w,
        "height": h,
        "frame_count": n_frames,
        "ctu_size": ctu,
        "cnnlf_enabled": cnnlf_enabled,
        "nn_intra_enabled": nn_enabled,
        "base_qp": base_qp,
    }
    return DecodeResult(frames, header, {"frames": stats_frames, "total_bytes": len(data)})

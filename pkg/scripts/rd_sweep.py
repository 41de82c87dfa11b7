#!/usr/bin/env python3
"""Encode a YUV clip at several QPs and print a rate/distortion table.

Example:
    python scripts/rd_sweep.py --input /tmp/moving.yuv --width 96 --height 64
"""

import argparse
import sys
import time

import numpy as np

from tvc.codec import CodecConfig, decode_sequence, encode_sequence
from tvc.qp_adapt import uniform_plan
from tvc.video_io import psnr, read_yuv420


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--input", required=True)
    ap.add_argument("--width", type=int, required=True)
    ap.add_argument("--height", type=int, required=True)
    ap.add_argument("--qps", type=int, nargs="+", default=[22, 27, 32, 37, 43])
    ap.add_argument("--ctu-size", type=int, default=64)
    ap.add_argument("--search-range", type=int, default=8)
    args = ap.parse_args()

    with open(args.input, "rb") as fh:
        clip = read_yuv420(fh.read(), args.width, args.height)
    if not clip:
        print("empty clip", file=sys.stderr)
        return 2

    print(f"{'qp':>4} {'bytes':>10} {'bits/frame':>11} {'Y-PSNR':>8} {'enc s':>7}")
    for qp in args.qps:
        plan = uniform_plan(qp, args.width, args.height, len(clip), args.ctu_size)
        t0 = time.perf_counter()
        res = encode_sequence(clip, plan, CodecConfig(search_range=args.search_range))
        elapsed = time.perf_counter() - t0
        dec = decode_sequence(res.bitstream)
        mean_p = float(np.mean([psnr(c.y, d.y) for c, d in zip(clip, dec.frames)]))
        bits = len(res.bitstream) * 8 / len(clip)
        print(f"{qp:>4} {len(res.bitstream):>10} {bits:>11.0f} {mean_p:>8.2f} {elapsed:>7.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

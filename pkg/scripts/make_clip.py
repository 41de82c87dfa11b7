#!/usr/bin/env python3
"""Generate a synthetic raw YUV 4:2:0 clip for experiments.

Example:
    python scripts/make_clip.py --kind moving --width 96 --height 64 \
        --frames 9 --output /tmp/moving.yuv
"""

import argparse
import sys

from tvc.synth import flat_clip, moving_texture_clip, noise_clip, transient_clip
from tvc.video_io import write_yuv420

MAKERS = {
    "flat": lambda a: flat_clip(a.width, a.height, a.frames, a.value),
    "noise": lambda a: noise_clip(a.width, a.height, a.frames, a.seed),
    "moving": lambda a: moving_texture_clip(a.width, a.height, a.frames, a.seed),
    "transient": lambda a: transient_clip(a.width, a.height, a.frames, a.seed),
}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kind", choices=sorted(MAKERS), required=True)
    ap.add_argument("--width", type=int, default=96)
    ap.add_argument("--height", type=int, default=64)
    ap.add_argument("--frames", type=int, default=9)
    ap.add_argument("--value", type=int, default=128, help="luma value for flat clips")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--output", required=True)
    args = ap.parse_args()
    clip = MAKERS[args.kind](args)
    with open(args.output, "wb") as fh:
        fh.write(write_yuv420(clip))
    print(f"wrote {len(clip)} frames of {args.width}x{args.height} to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

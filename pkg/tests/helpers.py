"""Shared test helpers: tiny model builders and brute-force reference code."""

from __future__ import annotations

import numpy as np

from tvc.nn_intra import context_dims

TRUNK_WIDTH = 96


def make_cnnlf_tensors(kind, channels=2, blocks=1, rng=None, zero_tail=True, scale=0.1):
    """Random (or zero-tail) loop-filter weights with canonical names."""
    rng = rng or np.random.default_rng(0)
    cc = 1 if kind == "luma" else 2
    in_ch = cc * 2 + 2
    c = channels

    def w(shape, s=scale):
        return rng.normal(0, s, shape).astype(np.float32)

    t = {
        f"{kind}.head.weight": w((c, in_ch, 3, 3)),
        f"{kind}.head.bias": w((c,)),
    }
    for i in range(blocks):
        p = f"{kind}.block{i}."
        t[p + "expand.weight"] = w((2 * c, c, 1, 1))
        t[p + "expand.bias"] = w((2 * c,))
        t[p + "act.alpha"] = np.full((2 * c,), 0.25, np.float32)
        t[p + "sep_v.weight"] = w((2 * c, 2 * c, 3, 1))
        t[p + "sep_v.bias"] = np.zeros((2 * c,), np.float32)
        t[p + "sep_h.weight"] = w((2 * c, 2 * c, 1, 3))
        t[p + "sep_h.bias"] = np.zeros((2 * c,), np.float32)
        t[p + "project.weight"] = w((c, 2 * c, 1, 1))
        t[p + "project.bias"] = np.zeros((c,), np.float32)
    if zero_tail:
        t[f"{kind}.tail.weight"] = np.zeros((cc, c, 3, 3), np.float32)
        t[f"{kind}.tail.bias"] = np.zeros((cc,), np.float32)
    else:
        t[f"{kind}.tail.weight"] = w((cc, c, 3, 3), 0.002)
        t[f"{kind}.tail.bias"] = np.zeros((cc,), np.float32)
    return t


def make_intra_tensors(w, h, qp, rng=None, zero=False, trunk=TRUNK_WIDTH):
    """Random (or all-zero) intra-model weights with canonical names."""
    rng = rng or np.random.default_rng(0)
    n_a, n_l = context_dims(w, h)
    fa = 16 * n_a * (n_l + 2 * w)
    fl = 16 * 2 * h * n_l
    pre = f"intra.{w}x{h}.qp{qp}."

    def mk(shape, s=0.05):
        if zero:
            return np.zeros(shape, np.float32)
        return rng.normal(0, s, shape).astype(np.float32)

    t = {}
    for br in ("branch_above", "branch_left"):
        t[pre + br + ".conv1.weight"] = mk((8, 1, 3, 3))
        t[pre + br + ".conv1.bias"] = np.zeros(8, np.float32)
        t[pre + br + ".conv1.alpha"] = np.full(8, 0.25, np.float32)
        t[pre + br + ".conv2.weight"] = mk((16, 8, 3, 3))
        t[pre + br + ".conv2.bias"] = np.zeros(16, np.float32)
        t[pre + br + ".conv2.alpha"] = np.full(16, 0.25, np.float32)
    t[pre + "trunk.fc1.weight"] = mk((trunk, fa + fl), 0.01)
    t[pre + "trunk.fc1.bias"] = np.zeros(trunk, np.float32)
    t[pre + "trunk.fc1.alpha"] = np.full(trunk, 0.25, np.float32)
    t[pre + "trunk.fc2.weight"] = mk((trunk, trunk))
    t[pre + "trunk.fc2.bias"] = np.zeros(trunk, np.float32)
    t[pre + "trunk.fc2.alpha"] = np.full(trunk, 0.25, np.float32)
    t[pre + "head_pred.weight"] = mk((w * h, trunk))
    t[pre + "head_pred.bias"] = np.zeros(w * h, np.float32)
    t[pre + "head_grp1.weight"] = mk((4, trunk))
    t[pre + "head_grp1.bias"] = np.zeros(4, np.float32)
    t[pre + "head_grp2.weight"] = mk((4, trunk))
    t[pre + "head_grp2.bias"] = np.zeros(4, np.float32)
    return t


def conv2d_reference(x, weight, bias=None, dilation=1):
    """Direct sextuple-loop cross-correlation with zero padding, stride 1."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(weight, dtype=np.float64)
    cin, h, wd = x.shape
    co, _, kh, kw = w.shape
    dh, dw = (dilation, dilation) if np.isscalar(dilation) else dilation
    ph, pw = dh * (kh - 1) // 2, dw * (kw - 1) // 2
    out = np.zeros((co, h, wd))
    for o in range(co):
        for yy in range(h):
            for xx in range(wd):
                acc = 0.0
                for c in range(cin):
                    for i in range(kh):
                        for j in range(kw):
                            sy = yy + i * dh - ph
                            sx = xx + j * dw - pw
                            if 0 <= sy < h and 0 <= sx < wd:
                                acc += x[c, sy, sx] * w[o, c, i, j]
                out[o, yy, xx] = acc + (bias[o] if bias is not None else 0.0)
    return out


def brute_force_motion(cur, ref, search_range):
    """Exhaustive full-resolution block search (same metric and tie-breaks)."""
    cur = np.asarray(cur, dtype=np.int64)
    ref = np.asarray(ref, dtype=np.int64)
    h, w = cur.shape
    rows, cols = -(-h // 16), -(-w // 16)
    out = []
    for r in range(rows):
        y0, y1 = r * 16, min(r * 16 + 16, h)
        row = []
        for c in range(cols):
            x0, x1 = c * 16, min(c * 16 + 16, w)
            best = None
            for dy in range(-search_range, search_range + 1):
                for dx in range(-search_range, search_range + 1):
                    ssd = 0
                    for yy in range(y0, y1):
                        for xx in range(x0, x1):
                            sy = min(max(yy + dy, 0), h - 1)
                            sx = min(max(xx + dx, 0), w - 1)
                            d = int(cur[yy, xx]) - int(ref[sy, sx])
                            ssd += d * d
                    key = (ssd, abs(dx) + abs(dy), dy, dx)
                    if best is None or key < best:
                        best = key
            row.append(best)
        out.append(row)
    return out


def context_reference(pic, rect, n_a, n_l):
    """Per-coordinate context extraction mirroring the documented rule."""
    pic = np.asarray(pic)
    ph, pw = pic.shape
    x, y, w, h = rect

    def available(px, py):
        if px < 0 or py < 0 or px >= pw or py >= ph:
            return False
        return py < y or (py < y + h and px < x)

    def fetch(px, py):
        py2 = min(max(py, 0), y + h - 1)
        if py2 < y:
            return int(pic[py2, min(max(px, 0), pw - 1)])
        if x > 0:
            return int(pic[py2, min(max(px, 0), x - 1)])
        return int(pic[y - 1, min(max(px, 0), pw - 1)])

    above_xy = [
        [(x - n_l + j, y - n_a + i) for j in range(n_l + 2 * w)] for i in range(n_a)
    ]
    left_xy = [[(x - n_l + j, y + i) for j in range(n_l)] for i in range(2 * h)]

    if x == 0 and y == 0:
        above = [[128] * (n_l + 2 * w) for _ in range(n_a)]
        left = [[128] * n_l for _ in range(2 * h)]
        mean = 128.0
    else:
        total, count = 0, 0
        for coords in (above_xy, left_xy):
            for row in coords:
                for px, py in row:
                    if available(px, py):
                        total += int(pic[py, px])
                        count += 1
        mean = total / count if count else 128.0
        above = [[fetch(px, py) for px, py in row] for row in above_xy]
        left = [[fetch(px, py) for px, py in row] for row in left_xy]
    above_n = (np.array(above, dtype=np.float64) - mean) / 127.0
    left_n = (np.array(left, dtype=np.float64) - mean) / 127.0
    return above_n, left_n, mean

"""Numpy implementations of the hot pixel kernels.

This is the fallback selected when the compiled extension is unavailable.
Both implementations must agree bit-for-bit: triangle membership is decided
with exact int64 edge functions on 1/256-px fixed-point coordinates, and
every floating-point expression is written in the same evaluation order as
the compiled kernel (which is built with FMA contraction disabled).
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

# Fixed-point scale for triangle vertex coordinates.
QUANT = 256
_HALF = QUANT // 2
_BIG = QUANT * 1_000_000  # makes floor division well-defined near zero


def _pixel_range(lo_q: int, hi_q: int, limit: int) -> tuple[int, int]:
    """Pixels whose centers fall in the closed quantized span [lo_q, hi_q]."""
    first = (lo_q - _HALF + QUANT - 1 + _BIG) // QUANT - _BIG // QUANT
    last = (hi_q - _HALF + _BIG) // QUANT - _BIG // QUANT
    return max(first, 0), min(last, limit - 1)


def _edge_keep(dx, dy, e):
    # Strictly inside, or on a boundary the top-left rule assigns to us.
    on_edge_ours = (dy < 0) | ((dy == 0) & (dx > 0))
    return (e > 0) | ((e == 0) & on_edge_ours)


def _inside_mask(tri_q: np.ndarray, x0: int, x1: int, y0: int, y1: int) -> np.ndarray:
    """Membership of pixel centers [x0..x1] x [y0..y1] in one triangle.

    tri_q holds (ax, ay, bx, by, cx, cy) quantized, oriented so the doubled
    signed area is positive.
    """
    ax, ay, bx, by, cx, cy = (int(v) for v in tri_q)
    xs = np.arange(x0, x1 + 1, dtype=np.int64) * QUANT + _HALF
    ys = np.arange(y0, y1 + 1, dtype=np.int64) * QUANT + _HALF
    px = xs[np.newaxis, :]
    py = ys[:, np.newaxis]

    keep = None
    for (ux, uy, vx, vy) in ((ax, ay, bx, by), (bx, by, cx, cy), (cx, cy, ax, ay)):
        dx = vx - ux
        dy = vy - uy
        e = dx * (py - uy) - dy * (px - ux)
        k = _edge_keep(dx, dy, e)
        keep = k if keep is None else (keep & k)
    return keep


def coverage_add(counts: np.ndarray, tris_q: np.ndarray) -> None:
    """Increment counts[y, x] once per triangle containing pixel (x, y)."""
    h, w = counts.shape
    for t in range(tris_q.shape[0]):
        tri = tris_q[t]
        x0, x1 = _pixel_range(int(min(tri[0], tri[2], tri[4])),
                              int(max(tri[0], tri[2], tri[4])), w)
        y0, y1 = _pixel_range(int(min(tri[1], tri[3], tri[5])),
                              int(max(tri[1], tri[3], tri[5])), h)
        if x1 < x0 or y1 < y0:
            continue
        mask = _inside_mask(tri, x0, x1, y0, y1)
        counts[y0 : y1 + 1, x0 : x1 + 1] += mask.astype(counts.dtype)


def _bilinear(src: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    """Bilinear sample of (h, w, c) u8 at float coords, edge-clamped.

    Continuous coordinates place pixel (i, j) at center (i+0.5, j+0.5).
    Returns u8 samples rounded half up, shape sx.shape + (c,).
    """
    h, w, c = src.shape
    u = sx - 0.5
    v = sy - 0.5
    fx0 = np.floor(u)
    fy0 = np.floor(v)
    dx = u - fx0
    dy = v - fy0
    x0 = np.clip(fx0.astype(np.int64), 0, w - 1)
    x1 = np.clip(fx0.astype(np.int64) + 1, 0, w - 1)
    y0 = np.clip(fy0.astype(np.int64), 0, h - 1)
    y1 = np.clip(fy0.astype(np.int64) + 1, 0, h - 1)

    out = np.empty(sx.shape + (c,), dtype=np.uint8)
    for ch in range(c):
        plane = src[:, :, ch].astype(np.float64)
        p00 = plane[y0, x0]
        p10 = plane[y0, x1]
        p01 = plane[y1, x0]
        p11 = plane[y1, x1]
        top = p00 + dx * (p10 - p00)
        bot = p01 + dx * (p11 - p01)
        val = top + dy * (bot - top)
        q = np.floor(val + 0.5)
        out[..., ch] = np.clip(q, 0.0, 255.0).astype(np.uint8)
    return out


def warp_triangles(src: np.ndarray, out: np.ndarray, tris_q: np.ndarray,
                   affines: np.ndarray) -> None:
    """Paint each destination triangle with affinely mapped source samples.

    src, out: (h, w, c) u8.  tris_q: (T, 6) int64 quantized destination
    vertices, positive orientation.  affines: (T, 6) f64 rows
    (m00, m01, m02, m10, m11, m12) taking destination pixel coordinates to
    source coordinates.
    """
    h, w, _ = src.shape
    for t in range(tris_q.shape[0]):
        tri = tris_q[t]
        x0, x1 = _pixel_range(int(min(tri[0], tri[2], tri[4])),
                              int(max(tri[0], tri[2], tri[4])), w)
        y0, y1 = _pixel_range(int(min(tri[1], tri[3], tri[5])),
                              int(max(tri[1], tri[3], tri[5])), h)
        if x1 < x0 or y1 < y0:
            continue
        mask = _inside_mask(tri, x0, x1, y0, y1)
        if not mask.any():
            continue
        yy, xx = np.nonzero(mask)
        px = (xx + x0) + 0.5
        py = (yy + y0) + 0.5
        m00, m01, m02, m10, m11, m12 = (float(v) for v in affines[t])
        sx = (m00 * px + m01 * py) + m02
        sy = (m10 * px + m11 * py) + m12
        samples = _bilinear(src, sx, sy)
        out[yy + y0, xx + x0, :] = samples


def bilinear_remap(src: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    """Dense resample: out[y, x] = src sampled at (sx[y, x], sy[y, x])."""
    return _bilinear(src, sx, sy)

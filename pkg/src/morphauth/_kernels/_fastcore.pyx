# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the pixel kernels in _pyfallback.

Must stay bit-identical with the fallback: integer edge functions decide
triangle membership, and float expressions keep the fallback's evaluation
order (the build disables FMA contraction).
"""

from libc.math cimport floor

BACKEND = "compiled"

cdef long long QUANT = 256
cdef long long HALF = 128
cdef long long BIG = 256000000


cdef inline long long _first_pixel(long long lo_q) noexcept nogil:
    return (lo_q - HALF + QUANT - 1 + BIG) / QUANT - BIG / QUANT


cdef inline long long _last_pixel(long long hi_q) noexcept nogil:
    return (hi_q - HALF + BIG) / QUANT - BIG / QUANT


cdef inline bint _edge_keep(long long dx, long long dy, long long e) noexcept nogil:
    if e > 0:
        return True
    if e != 0:
        return False
    return dy < 0 or (dy == 0 and dx > 0)


cdef inline bint _inside(long long ax, long long ay, long long bx, long long by,
                         long long cx, long long cy,
                         long long px, long long py) noexcept nogil:
    cdef long long dx, dy, e
    dx = bx - ax; dy = by - ay
    e = dx * (py - ay) - dy * (px - ax)
    if not _edge_keep(dx, dy, e):
        return False
    dx = cx - bx; dy = cy - by
    e = dx * (py - by) - dy * (px - bx)
    if not _edge_keep(dx, dy, e):
        return False
    dx = ax - cx; dy = ay - cy
    e = dx * (py - cy) - dy * (px - cx)
    return _edge_keep(dx, dy, e)


cdef inline long long _minll(long long a, long long b, long long c) noexcept nogil:
    cdef long long m = a
    if b < m:
        m = b
    if c < m:
        m = c
    return m


cdef inline long long _maxll(long long a, long long b, long long c) noexcept nogil:
    cdef long long m = a
    if b > m:
        m = b
    if c > m:
        m = c
    return m


cdef inline double _sample(const unsigned char[:, :, ::1] src, long long h,
                           long long w, long long ch,
                           double sx, double sy) noexcept nogil:
    cdef double u = sx - 0.5
    cdef double v = sy - 0.5
    cdef double fx0 = floor(u)
    cdef double fy0 = floor(v)
    cdef double dx = u - fx0
    cdef double dy = v - fy0
    cdef long long x0 = <long long> fx0
    cdef long long x1 = x0 + 1
    cdef long long y0 = <long long> fy0
    cdef long long y1 = y0 + 1
    if x0 < 0:
        x0 = 0
    elif x0 > w - 1:
        x0 = w - 1
    if x1 < 0:
        x1 = 0
    elif x1 > w - 1:
        x1 = w - 1
    if y0 < 0:
        y0 = 0
    elif y0 > h - 1:
        y0 = h - 1
    if y1 < 0:
        y1 = 0
    elif y1 > h - 1:
        y1 = h - 1
    cdef double p00 = <double> src[y0, x0, ch]
    cdef double p10 = <double> src[y0, x1, ch]
    cdef double p01 = <double> src[y1, x0, ch]
    cdef double p11 = <double> src[y1, x1, ch]
    cdef double top = p00 + dx * (p10 - p00)
    cdef double bot = p01 + dx * (p11 - p01)
    return top + dy * (bot - top)


cdef inline unsigned char _round_u8(double val) noexcept nogil:
    cdef double q = floor(val + 0.5)
    if q < 0.0:
        q = 0.0
    elif q > 255.0:
        q = 255.0
    return <unsigned char> <long long> q


def coverage_add(int[:, ::1] counts, const long long[:, ::1] tris_q):
    """Increment counts[y, x] once per triangle containing pixel (x, y)."""
    cdef long long h = counts.shape[0]
    cdef long long w = counts.shape[1]
    cdef Py_ssize_t t
    cdef long long ax, ay, bx, by, cx, cy, x0, x1, y0, y1, x, y
    with nogil:
        for t in range(tris_q.shape[0]):
            ax = tris_q[t, 0]; ay = tris_q[t, 1]
            bx = tris_q[t, 2]; by = tris_q[t, 3]
            cx = tris_q[t, 4]; cy = tris_q[t, 5]
            x0 = _first_pixel(_minll(ax, bx, cx))
            x1 = _last_pixel(_maxll(ax, bx, cx))
            y0 = _first_pixel(_minll(ay, by, cy))
            y1 = _last_pixel(_maxll(ay, by, cy))
            if x0 < 0:
                x0 = 0
            if y0 < 0:
                y0 = 0
            if x1 > w - 1:
                x1 = w - 1
            if y1 > h - 1:
                y1 = h - 1
            for y in range(y0, y1 + 1):
                for x in range(x0, x1 + 1):
                    if _inside(ax, ay, bx, by, cx, cy,
                               x * QUANT + HALF, y * QUANT + HALF):
                        counts[y, x] += 1


def warp_triangles(const unsigned char[:, :, ::1] src,
                   unsigned char[:, :, ::1] out,
                   const long long[:, ::1] tris_q,
                   const double[:, ::1] affines):
    """Paint each destination triangle with affinely mapped source samples."""
    cdef long long h = src.shape[0]
    cdef long long w = src.shape[1]
    cdef long long nch = src.shape[2]
    cdef Py_ssize_t t
    cdef long long ax, ay, bx, by, cx, cy, x0, x1, y0, y1, x, y, ch
    cdef double m00, m01, m02, m10, m11, m12, px, py, sx, sy
    with nogil:
        for t in range(tris_q.shape[0]):
            ax = tris_q[t, 0]; ay = tris_q[t, 1]
            bx = tris_q[t, 2]; by = tris_q[t, 3]
            cx = tris_q[t, 4]; cy = tris_q[t, 5]
            m00 = affines[t, 0]; m01 = affines[t, 1]; m02 = affines[t, 2]
            m10 = affines[t, 3]; m11 = affines[t, 4]; m12 = affines[t, 5]
            x0 = _first_pixel(_minll(ax, bx, cx))
            x1 = _last_pixel(_maxll(ax, bx, cx))
            y0 = _first_pixel(_minll(ay, by, cy))
            y1 = _last_pixel(_maxll(ay, by, cy))
            if x0 < 0:
                x0 = 0
            if y0 < 0:
                y0 = 0
            if x1 > w - 1:
                x1 = w - 1
            if y1 > h - 1:
                y1 = h - 1
            for y in range(y0, y1 + 1):
                for x in range(x0, x1 + 1):
                    if not _inside(ax, ay, bx, by, cx, cy,
                                   x * QUANT + HALF, y * QUANT + HALF):
                        continue
                    px = x + 0.5
                    py = y + 0.5
                    sx = (m00 * px + m01 * py) + m02
                    sy = (m10 * px + m11 * py) + m12
                    for ch in range(nch):
                        out[y, x, ch] = _round_u8(_sample(src, h, w, ch, sx, sy))


def bilinear_remap(const unsigned char[:, :, ::1] src,
                   const double[:, ::1] sx,
                   const double[:, ::1] sy,
                   unsigned char[:, :, ::1] out):
    """Dense resample: out[y, x] = src sampled at (sx[y, x], sy[y, x])."""
    cdef long long h = src.shape[0]
    cdef long long w = src.shape[1]
    cdef long long nch = src.shape[2]
    cdef long long oh = sx.shape[0]
    cdef long long ow = sx.shape[1]
    cdef long long x, y, ch
    with nogil:
        for y in range(oh):
            for x in range(ow):
                for ch in range(nch):
                    out[y, x, ch] = _round_u8(
                        _sample(src, h, w, ch, sx[y, x], sy[y, x]))

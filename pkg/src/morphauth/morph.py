"""Landmark-driven face morphing.

Pipeline: average two corresponding landmark sets, Delaunay-triangulate the
averaged set (plus four frame corners so triangles tile the whole frame),
warp both images onto that shared topology with per-triangle affine maps,
then alpha-blend.

Geometry is exact: landmark coordinates snap to a 1/256-px grid at
construction, triangle predicates use arbitrary-precision integer
arithmetic, and rasterization assigns every frame pixel center to exactly
one triangle (top-left boundary rule).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .raster import Image

QUANT = _kernels.QUANT


class MorphError(ValueError):
    pass


class CollinearPointsError(MorphError):
    """All input points lie on one line; no triangulation exists."""


class DuplicatePointsError(MorphError):
    """Two points coincide on the 1/256-px grid."""


class CorrespondenceError(MorphError):
    """Landmark sets differ in length or frame."""


class LandmarkSet:
    """Ordered 2-D control points in a (width, height) pixel frame.

    Coordinates are snapped to 1/256 px so geometric predicates can be
    evaluated exactly.  Two sets correspond when they have equal length and
    frame; point order carries the correspondence.
    """

    __slots__ = ("qpoints", "frame")

    def __init__(self, points, frame: tuple[int, int]):
        w, h = int(frame[0]), int(frame[1])
        if w < 1 or h < 1:
            raise MorphError(f"bad frame {frame}")
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
            raise MorphError("need at least 3 (x, y) points")
        q = np.floor(pts * QUANT + 0.5).astype(np.int64)
        if q[:, 0].min() < 0 or q[:, 1].min() < 0 \
                or q[:, 0].max() > w * QUANT or q[:, 1].max() > h * QUANT:
            raise MorphError("landmark outside frame")
        if _all_collinear(q):
            raise CollinearPointsError("landmarks are collinear")
        q.flags.writeable = False
        object.__setattr__(self, "qpoints", q)
        object.__setattr__(self, "frame", (w, h))

    def __setattr__(self, name, value):
        raise AttributeError("LandmarkSet is immutable")

    @property
    def points(self) -> np.ndarray:
        return self.qpoints / float(QUANT)

    def __len__(self) -> int:
        return self.qpoints.shape[0]

    def corresponds_to(self, other: "LandmarkSet") -> bool:
        return len(self) == len(other) and self.frame == other.frame

    def __eq__(self, other):
        if not isinstance(other, LandmarkSet):
            return NotImplemented
        return self.frame == other.frame and np.array_equal(self.qpoints, other.qpoints)

    def __hash__(self):
        return hash((self.frame, self.qpoints.tobytes()))


def landmarks_to_text(lms: LandmarkSet) -> str:
    """Sidecar format: line 1 is the point count, then one "x y" per line."""
    lines = [str(len(lms))]
    for x, y in lms.points:
        lines.append(f"{float(x)!r} {float(y)!r}")
    return "\n".join(lines) + "\n"


def landmarks_from_text(text: str, frame: tuple[int, int]) -> LandmarkSet:
    tokens = text.split()
    if not tokens:
        raise MorphError("empty landmark data")
    n = int(tokens[0])
    vals = [float(t) for t in tokens[1:]]
    if len(vals) != 2 * n:
        raise MorphError(f"expected {n} landmark points, got {len(vals) / 2}")
    pts = np.array(vals, dtype=np.float64).reshape(n, 2)
    return LandmarkSet(pts, frame)


def write_landmarks(lms: LandmarkSet, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(landmarks_to_text(lms))


def read_landmarks(path, frame: tuple[int, int]) -> LandmarkSet:
    with open(path, "r", encoding="ascii") as fh:
        return landmarks_from_text(fh.read(), frame)


def _all_collinear(q: np.ndarray) -> bool:
    p0 = (int(q[0, 0]), int(q[0, 1]))
    pivot = None
    for i in range(1, q.shape[0]):
        p = (int(q[i, 0]), int(q[i, 1]))
        if p != p0:
            pivot = p
            break
    if pivot is None:
        return True
    for i in range(1, q.shape[0]):
        p = (int(q[i, 0]), int(q[i, 1]))
        if _orient(p0, pivot, p) != 0:
            return False
    return True


def _orient(a, b, c) -> int:
    """Sign of the doubled signed area of (a, b, c); exact."""
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (v > 0) - (v < 0)


def _incircle(a, b, c, d) -> int:
    """For positively oriented (a, b, c): +1 if d strictly inside the
    circumcircle, 0 if cocircular, -1 outside.  Exact integer arithmetic."""
    adx = a[0] - d[0]
    ady = a[1] - d[1]
    bdx = b[0] - d[0]
    bdy = b[1] - d[1]
    cdx = c[0] - d[0]
    cdy = c[1] - d[1]
    ad = adx * adx + ady * ady
    bd = bdx * bdx + bdy * bdy
    cd = cdx * cdx + cdy * cdy
    det = (adx * (bdy * cd - bd * cdy)
           - ady * (bdx * cd - bd * cdx)
           + ad * (bdx * cdy - bdy * cdx))
    return (det > 0) - (det < 0)


@dataclass(frozen=True)
class Triangulation:
    """Index triangles over a point array (landmarks, then any corners)."""

    points_q: np.ndarray  # (N, 2) int64, 1/256-px units
    triangles: np.ndarray  # (T, 3) int32, positively oriented
    frame: tuple[int, int]
    corner_count: int  # 0 or 4 synthetic frame-corner points at the tail

    def __post_init__(self):
        self.points_q.flags.writeable = False
        self.triangles.flags.writeable = False


def _corner_points_q(frame: tuple[int, int]) -> np.ndarray:
    w, h = frame
    return np.array(
        [[0, 0], [w * QUANT, 0], [0, h * QUANT], [w * QUANT, h * QUANT]],
        dtype=np.int64,
    )


class _TriStore:
    """Mutable triangle soup with an edge adjacency map."""

    def __init__(self, pts):
        self.pts = pts
        self.tris = {}
        self.edge2tris = {}
        self.next_id = 0

    def add(self, a: int, b: int, c: int) -> int:
        if _orient(self.pts[a], self.pts[b], self.pts[c]) < 0:
            b, c = c, b
        tid = self.next_id
        self.next_id += 1
        self.tris[tid] = (a, b, c)
        for e in _tri_edges((a, b, c)):
            self.edge2tris.setdefault(e, set()).add(tid)
        return tid

    def remove(self, tid: int):
        tri = self.tris.pop(tid)
        for e in _tri_edges(tri):
            s = self.edge2tris[e]
            s.discard(tid)
            if not s:
                del self.edge2tris[e]


def _tri_edges(tri):
    a, b, c = tri
    return (
        (a, b) if a < b else (b, a),
        (b, c) if b < c else (c, b),
        (a, c) if a < c else (c, a),
    )


def _third_vertex(tri, edge):
    for v in tri:
        if v != edge[0] and v != edge[1]:
            return v
    raise AssertionError("edge not part of triangle")


def _scan_triangulate(store: _TriStore, order: list[int]):
    """Lex-order incremental triangulation of the convex hull."""
    pts = store.pts
    chain = [order[0], order[1]]
    i = 2
    n = len(order)
    while i < n and _orient(pts[chain[0]], pts[chain[1]], pts[order[i]]) == 0:
        chain.append(order[i])
        i += 1
    if i == n:
        raise CollinearPointsError("all points are collinear")
    apex = order[i]
    i += 1
    for j in range(len(chain) - 1):
        store.add(chain[j], chain[j + 1], apex)
    hull = chain + [apex]
    if _polygon_area2(pts, hull) < 0:
        hull.reverse()

    while i < n:
        q = order[i]
        i += 1
        m = len(hull)
        vis = [
            _orient(pts[hull[k]], pts[hull[(k + 1) % m]], pts[q]) < 0
            for k in range(m)
        ]
        for k in range(m):
            if vis[k]:
                store.add(hull[k], hull[(k + 1) % m], q)
        # The visible edges form one contiguous cyclic run; rotate it to the
        # front, then splice the new vertex over the run's interior chain.
        start = next(k for k in range(m) if vis[k] and not vis[k - 1])
        run = 1
        while vis[(start + run) % m]:
            run += 1
        rot = hull[start:] + hull[:start]
        hull = [rot[0], q] + rot[run:]


def _polygon_area2(pts, cycle):
    s = 0
    m = len(cycle)
    for k in range(m):
        a = pts[cycle[k]]
        b = pts[cycle[(k + 1) % m]]
        s += a[0] * b[1] - a[1] * b[0]
    return s


def _flip(store: _TriStore, edge, t1: int, t2: int):
    a, b = edge
    c = _third_vertex(store.tris[t1], edge)
    d = _third_vertex(store.tris[t2], edge)
    store.remove(t1)
    store.remove(t2)
    store.add(a, d, c)
    store.add(d, b, c)
    return c, d


def _lawson(store: _TriStore):
    """Flip strictly non-Delaunay edges until the empty-circle test holds."""
    pts = store.pts
    queue = deque(sorted(store.edge2tris.keys()))
    queued = set(queue)
    while queue:
        edge = queue.popleft()
        queued.discard(edge)
        ids = store.edge2tris.get(edge)
        if ids is None or len(ids) != 2:
            continue
        t1, t2 = sorted(ids)
        tri1 = store.tris[t1]
        d = _third_vertex(store.tris[t2], edge)
        if _incircle(pts[tri1[0]], pts[tri1[1]], pts[tri1[2]], pts[d]) > 0:
            c, dd = _flip(store, edge, t1, t2)
            a, b = edge
            for e in (_norm_edge(a, c), _norm_edge(c, b),
                      _norm_edge(b, dd), _norm_edge(dd, a)):
                if e not in queued:
                    queue.append(e)
                    queued.add(e)


def _norm_edge(a, b):
    return (a, b) if a < b else (b, a)


def _canonicalize_cocircular(store: _TriStore):
    """Deterministic diagonal choice inside cocircular quads.

    Either diagonal of a cocircular quad satisfies the empty-circle test;
    keep the one whose sorted index pair is lexicographically smaller.
    """
    pts = store.pts
    changed = True
    while changed:
        changed = False
        for edge in sorted(store.edge2tris.keys()):
            ids = store.edge2tris.get(edge)
            if ids is None or len(ids) != 2:
                continue
            t1, t2 = sorted(ids)
            tri1 = store.tris[t1]
            d = _third_vertex(store.tris[t2], edge)
            c = _third_vertex(tri1, edge)
            if _incircle(pts[tri1[0]], pts[tri1[1]], pts[tri1[2]], pts[d]) != 0:
                continue
            if _norm_edge(c, d) < edge:
                _flip(store, edge, t1, t2)
                changed = True
                break


def delaunay(lms: LandmarkSet, include_corners: bool = True) -> Triangulation:
    """Delaunay triangulation of the landmarks.

    With include_corners (the default) the four frame corners are appended
    as points N..N+3 and the result tiles the full frame.  Raises
    CollinearPointsError when no triangulation exists and
    DuplicatePointsError when two points coincide on the coordinate grid.
    """
    if include_corners:
        points_q = np.vstack([lms.qpoints, _corner_points_q(lms.frame)])
    else:
        points_q = lms.qpoints.copy()

    pts = [(int(x), int(y)) for x, y in points_q]
    order = sorted(range(len(pts)), key=lambda i: pts[i])
    for k in range(1, len(order)):
        if pts[order[k]] == pts[order[k - 1]]:
            raise DuplicatePointsError(
                f"points {order[k - 1]} and {order[k]} coincide"
            )

    store = _TriStore(pts)
    _scan_triangulate(store, order)
    _lawson(store)
    _canonicalize_cocircular(store)

    tris = []
    for (a, b, c) in store.tris.values():
        # Rotate the smallest index first, preserving orientation.
        if b <= a and b <= c:
            a, b, c = b, c, a
        elif c <= a and c <= b:
            a, b, c = c, a, b
        tris.append((a, b, c))
    tris.sort()
    return Triangulation(
        points_q=points_q,
        triangles=np.array(tris, dtype=np.int32),
        frame=lms.frame,
        corner_count=4 if include_corners else 0,
    )


def average_landmarks(a: LandmarkSet, b: LandmarkSet, alpha: float) -> LandmarkSet:
    """Pointwise (1-alpha)*a + alpha*b on corresponding sets."""
    _check_alpha(alpha)
    if not a.corresponds_to(b):
        raise CorrespondenceError(
            f"sets do not correspond: {len(a)}@{a.frame} vs {len(b)}@{b.frame}"
        )
    pts = (1.0 - alpha) * a.points + alpha * b.points
    return LandmarkSet(pts, a.frame)


def _check_alpha(alpha: float):
    if not (0.0 <= alpha <= 1.0):
        raise MorphError(f"alpha {alpha} outside [0, 1]")


def _as_3d(img: Image) -> np.ndarray:
    p = img.pixels
    return p[:, :, np.newaxis] if p.ndim == 2 else p


def _from_3d(arr: np.ndarray) -> Image:
    return Image(arr[:, :, 0]) if arr.shape[2] == 1 else Image(arr)


def _oriented_tris_q(points_q: np.ndarray, triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flatten triangles to (T, 6) coordinate rows with positive orientation.

    Returns (tris_q, vertex_indices) where vertex_indices is the (T, 3)
    index array after any orientation swap.
    """
    idx = triangles.astype(np.int64).copy()
    p = points_q
    ax = p[idx[:, 0], 0]
    ay = p[idx[:, 0], 1]
    bx = p[idx[:, 1], 0]
    by = p[idx[:, 1], 1]
    cx = p[idx[:, 2], 0]
    cy = p[idx[:, 2], 1]
    cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    flip = cross < 0
    idx[flip, 1], idx[flip, 2] = idx[flip, 2], idx[flip, 1]
    tris_q = np.stack(
        [p[idx[:, 0], 0], p[idx[:, 0], 1],
         p[idx[:, 1], 0], p[idx[:, 1], 1],
         p[idx[:, 2], 0], p[idx[:, 2], 1]],
        axis=1,
    ).astype(np.int64)
    return tris_q, idx


def _affine_rows(dst_pts: np.ndarray, src_pts: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Per-triangle affine coefficients mapping dst pixel coords to src."""
    d0 = dst_pts[idx[:, 0]]
    d1 = dst_pts[idx[:, 1]]
    d2 = dst_pts[idx[:, 2]]
    s0 = src_pts[idx[:, 0]]
    s1 = src_pts[idx[:, 1]]
    s2 = src_pts[idx[:, 2]]
    ux = d1[:, 0] - d0[:, 0]
    uy = d1[:, 1] - d0[:, 1]
    vx = d2[:, 0] - d0[:, 0]
    vy = d2[:, 1] - d0[:, 1]
    det = ux * vy - uy * vx
    a_ = s1[:, 0] - s0[:, 0]
    b_ = s2[:, 0] - s0[:, 0]
    c_ = s1[:, 1] - s0[:, 1]
    d_ = s2[:, 1] - s0[:, 1]
    m00 = (a_ * vy - b_ * uy) / det
    m01 = (b_ * ux - a_ * vx) / det
    m02 = s0[:, 0] - (m00 * d0[:, 0] + m01 * d0[:, 1])
    m10 = (c_ * vy - d_ * uy) / det
    m11 = (d_ * ux - c_ * vx) / det
    m12 = s0[:, 1] - (m10 * d0[:, 0] + m11 * d0[:, 1])
    return np.stack([m00, m01, m02, m10, m11, m12], axis=1)


def warp_to(img: Image, src: LandmarkSet, dst: LandmarkSet, tri: Triangulation) -> Image:
    """Warp img so src landmarks land on dst landmarks.

    tri must have been built on dst; its topology is reused, with each
    destination triangle sampling img under the affine map onto the
    corresponding source triangle (bilinear, edge-clamped).  A degenerate
    source triangle collapses the map onto its supporting line or point,
    which still yields defined samples.  Pixels outside every triangle
    (possible only without frame corners) stay 0.
    """
    if not src.corresponds_to(dst):
        raise CorrespondenceError("src and dst landmarks do not correspond")
    if (img.width, img.height) != src.frame:
        raise MorphError(
            f"image {img.width}x{img.height} does not match frame {src.frame}"
        )
    n = len(dst)
    if tri.frame != dst.frame or tri.points_q.shape[0] != n + tri.corner_count \
            or not np.array_equal(tri.points_q[:n], dst.qpoints):
        raise MorphError("triangulation was not built on dst")

    if tri.corner_count:
        src_q = np.vstack([src.qpoints, _corner_points_q(src.frame)])
    else:
        src_q = src.qpoints
    tris_q, idx = _oriented_tris_q(tri.points_q, tri.triangles)
    affines = _affine_rows(tri.points_q / float(QUANT), src_q / float(QUANT), idx)

    src3 = np.ascontiguousarray(_as_3d(img))
    out = np.zeros_like(src3)
    _kernels.warp_triangles(src3, out, tris_q, affines)
    return _from_3d(out)


def morph(a: Image, la: LandmarkSet, b: Image, lb: LandmarkSet, alpha: float) -> Image:
    """Blend a and b at mixing weight alpha over averaged landmarks.

    alpha 0 returns a's geometry and appearance; alpha 1 returns b's.  Both
    warps share one triangulation built on the averaged landmarks, and the
    per-pixel blend rounds half up.
    """
    _check_alpha(alpha)
    if a.pixels.shape != b.pixels.shape:
        raise MorphError(
            f"image shapes differ: {a.pixels.shape} vs {b.pixels.shape}"
        )
    mid = average_landmarks(la, lb, alpha)
    tri = delaunay(mid)
    wa = _as_3d(warp_to(a, la, mid, tri)).astype(np.float64)
    wb = _as_3d(warp_to(b, lb, mid, tri)).astype(np.float64)
    blended = (1.0 - alpha) * wa + alpha * wb
    out = np.clip(np.floor(blended + 0.5), 0.0, 255.0).astype(np.uint8)
    return _from_3d(out)

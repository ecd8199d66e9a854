"""Geometry suite: triangulation, warping, morph identities."""

import numpy as np
import pytest

from morphauth import _kernels
from morphauth.morph import (
    CollinearPointsError,
    CorrespondenceError,
    DuplicatePointsError,
    LandmarkSet,
    average_landmarks,
    delaunay,
    landmarks_from_text,
    landmarks_to_text,
    morph,
    read_landmarks,
    warp_to,
    write_landmarks,
)
from morphauth.raster import Image
from morphauth.rng import SeedStream
from morphauth.synthface import render_capture, sample_identity

QUANT = _kernels.QUANT


def exact_incircle(a, b, c, d):
    """Independent exact circumcircle test on quantized integer points."""
    if _orient_sign(a, b, c) < 0:
        b, c = c, b
    m = []
    for p in (a, b, c):
        dx, dy = p[0] - d[0], p[1] - d[1]
        m.append((dx, dy, dx * dx + dy * dy))
    det = (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
           - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
           + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))
    return det


def _orient_sign(a, b, c):
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (v > 0) - (v < 0)


def assert_delaunay(tri):
    pts = [tuple(int(v) for v in p) for p in tri.points_q]
    used = sorted({i for t in tri.triangles for i in t})
    for t in tri.triangles:
        a, b, c = (pts[i] for i in t)
        assert _orient_sign(a, b, c) != 0, "degenerate triangle"
        for j in used:
            if j in set(t):
                continue
            assert exact_incircle(a, b, c, pts[j]) <= 0, \
                f"point {j} strictly inside circumcircle of {tuple(t)}"


def random_landmarks(seed, n, frame=(128, 128)):
    s = SeedStream(seed).child("pts")
    w, h = frame
    while True:
        xs = s.uniform_block(0, n) * (w - 2) + 1
        ys = s.uniform_block(n, n) * (h - 2) + 1
        try:
            return LandmarkSet(np.stack([xs, ys], axis=1), frame)
        except CollinearPointsError:
            s = s.child("retry")


def test_three_points_single_triangle():
    lms = LandmarkSet([(10, 10), (100, 20), (50, 90)], (128, 128))
    tri = delaunay(lms, include_corners=False)
    assert tri.triangles.shape == (1, 3)


def test_spec_quad_three_triangles():
    lms = LandmarkSet([(0, 0), (3, 0), (0, 3), (1, 1)], (4, 4))
    tri = delaunay(lms, include_corners=False)
    assert tri.triangles.shape[0] == 3
    assert_delaunay(tri)
    # (1,1) sits inside the circumcircle of the outer triangle, so every
    # triangle must use it.
    assert all(3 in t for t in tri.triangles.tolist())


def test_collinear_points_rejected():
    with pytest.raises(CollinearPointsError):
        LandmarkSet([(1, 1), (2, 2), (3, 3)], (10, 10))
    lms = LandmarkSet([(1, 1), (2, 2), (3, 3), (1, 2)], (10, 10))
    assert len(lms) == 4


def test_duplicate_points_rejected():
    # (5, 5) and (5.001, 5.001) land on the same 1/256-px grid cell.
    lms = LandmarkSet([(5, 5), (5.001, 5.001), (9, 2), (2, 9)], (10, 10))
    with pytest.raises(DuplicatePointsError):
        delaunay(lms, include_corners=False)


def test_empty_circumcircle_brute_force_random_sets():
    stream = SeedStream(2024).child("sets")
    for trial in range(60):
        n = 3 + int(stream.uniform(trial) * 38)
        lms = random_landmarks(stream.u64(trial + 1000), n)
        tri = delaunay(lms, include_corners=False)
        assert_delaunay(tri)


def test_delaunay_with_corners_tiles_frame():
    stream = SeedStream(77).child("tile")
    for trial in range(12):
        n = 3 + int(stream.uniform(trial) * 20)
        lms = random_landmarks(stream.u64(trial), n, frame=(64, 48))
        tri = delaunay(lms)
        assert_delaunay(tri)
        counts = np.zeros((48, 64), dtype=np.int32)
        tris_q = _tris_q(tri)
        _kernels.coverage_add(counts, tris_q)
        assert counts.min() == 1 and counts.max() == 1


def _tris_q(tri):
    from morphauth.morph import _oriented_tris_q

    tq, _ = _oriented_tris_q(tri.points_q, tri.triangles)
    return tq


def test_delaunay_deterministic():
    lms = random_landmarks(5, 20)
    t1 = delaunay(lms)
    t2 = delaunay(lms)
    assert np.array_equal(t1.triangles, t2.triangles)


def test_cocircular_square_tie_rule():
    # A square's four corners are cocircular; the kept diagonal must be the
    # lexicographically smallest index pair, here (0, 3).
    lms = LandmarkSet([(10, 10), (30, 10), (10, 30), (30, 30)], (40, 40))
    tri = delaunay(lms, include_corners=False)
    edges = set()
    for t in tri.triangles.tolist():
        for e in ((t[0], t[1]), (t[1], t[2]), (t[0], t[2])):
            edges.add(tuple(sorted(e)))
    assert (0, 3) in edges
    assert (1, 2) not in edges


def test_average_landmarks_endpoints_and_midpoint():
    a = LandmarkSet([(0, 0), (10, 0), (0, 10)], (20, 30))
    b = LandmarkSet([(10, 20), (4, 6), (8, 2)], (20, 30))
    assert average_landmarks(a, b, 0.0) == a
    assert average_landmarks(a, b, 1.0) == b
    mid = average_landmarks(a, b, 0.5)
    assert tuple(mid.points[0]) == (5.0, 10.0)


def test_average_landmarks_mismatch():
    a = LandmarkSet([(0, 0), (10, 0), (0, 10)], (20, 20))
    b = LandmarkSet([(0, 0), (10, 0), (0, 10), (5, 5)], (20, 20))
    with pytest.raises(CorrespondenceError):
        average_landmarks(a, b, 0.5)


def _toy_pair(seed_a=11, seed_b=22):
    ca = render_capture(sample_identity(seed_a), 0, 0.0)
    cb = render_capture(sample_identity(seed_b), 0, 0.0)
    return ca, cb


def test_warp_identity_is_exact():
    cap, _ = _toy_pair()
    tri = delaunay(cap.landmarks)
    out = warp_to(cap.image, cap.landmarks, cap.landmarks, tri)
    assert np.array_equal(out.pixels, cap.image.pixels)


def test_warp_constant_image_stays_constant():
    cap, other = _toy_pair()
    const = Image(np.full((128, 128), 77, dtype=np.uint8))
    tri = delaunay(other.landmarks)
    out = warp_to(const, cap.landmarks, other.landmarks, tri)
    assert np.array_equal(out.pixels, const.pixels)


def test_affine_map_halves_coordinates():
    from morphauth.morph import _affine_rows

    dst = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]])
    src = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    rows = _affine_rows(dst, src, np.array([[0, 1, 2]]))
    m00, m01, m02, m10, m11, m12 = rows[0]
    px, py = 0.25, 0.25
    assert (m00 * px + m01 * py + m02, m10 * px + m11 * py + m12) == (0.125, 0.125)
    for (dx, dy), (sx, sy) in zip(dst, src):
        assert m00 * dx + m01 * dy + m02 == sx
        assert m10 * dx + m11 * dy + m12 == sy


def test_warp_requires_matching_triangulation():
    cap, other = _toy_pair()
    tri = delaunay(cap.landmarks)
    with pytest.raises(ValueError):
        warp_to(cap.image, cap.landmarks, other.landmarks, tri)


def test_morph_alpha_endpoints_exact():
    ca, cb = _toy_pair()
    m0 = morph(ca.image, ca.landmarks, cb.image, cb.landmarks, 0.0)
    m1 = morph(ca.image, ca.landmarks, cb.image, cb.landmarks, 1.0)
    assert np.array_equal(m0.pixels, ca.image.pixels)
    assert np.array_equal(m1.pixels, cb.image.pixels)


def test_morph_alpha_symmetry_exact():
    ca, cb = _toy_pair(31, 32)
    for alpha in (0.5, 0.25, 0.75):
        ab = morph(ca.image, ca.landmarks, cb.image, cb.landmarks, alpha)
        ba = morph(cb.image, cb.landmarks, ca.image, ca.landmarks, 1.0 - alpha)
        assert np.array_equal(ab.pixels, ba.pixels), f"alpha={alpha}"


def test_morph_deterministic():
    ca, cb = _toy_pair(41, 42)
    m1 = morph(ca.image, ca.landmarks, cb.image, cb.landmarks, 0.5)
    m2 = morph(ca.image, ca.landmarks, cb.image, cb.landmarks, 0.5)
    assert np.array_equal(m1.pixels, m2.pixels)


def test_morph_alpha_out_of_range():
    ca, cb = _toy_pair()
    with pytest.raises(ValueError):
        morph(ca.image, ca.landmarks, cb.image, cb.landmarks, 1.5)


def test_morph_rgb_images():
    s = SeedStream(88).child("rgb")
    shape = (64, 64, 3)
    a = Image((s.u64_block(0, 64 * 64 * 3) % np.uint64(256))
              .astype(np.uint8).reshape(shape))
    b = Image((s.u64_block(20000, 64 * 64 * 3) % np.uint64(256))
              .astype(np.uint8).reshape(shape))
    la = random_landmarks(1, 10, frame=(64, 64))
    lb = random_landmarks(2, 10, frame=(64, 64))
    out = morph(a, la, b, lb, 0.5)
    assert out.channels == 3
    m0 = morph(a, la, b, lb, 0.0)
    assert np.array_equal(m0.pixels, a.pixels)


def test_landmark_text_round_trip():
    lms = random_landmarks(9, 16)
    text = landmarks_to_text(lms)
    back = landmarks_from_text(text, lms.frame)
    assert back == lms


def test_landmark_file_round_trip(tmp_path):
    lms = random_landmarks(10, 16)
    path = tmp_path / "points.lms"
    write_landmarks(lms, path)
    assert read_landmarks(path, lms.frame) == lms
    first = path.read_text().splitlines()[0]
    assert first == "16"

"""The compiled kernels and the numpy fallback must agree bit for bit."""

import numpy as np
import pytest

from morphauth import _kernels
from morphauth._kernels import _pyfallback
from morphauth.morph import _affine_rows, _oriented_tris_q, delaunay
from morphauth.rng import SeedStream
from morphauth.synthface import render_capture, sample_identity

try:
    from morphauth._kernels import _fastcore
except ImportError:
    _fastcore = None

needs_ext = pytest.mark.skipif(_fastcore is None,
                               reason="compiled extension not built")


def _random_case(seed, w=64, h=48, n_pts=10):
    s = SeedStream(seed).child("case")
    from morphauth.morph import LandmarkSet

    while True:
        xs = s.uniform_block(0, n_pts) * (w - 2) + 1
        ys = s.uniform_block(n_pts, n_pts) * (h - 2) + 1
        try:
            dst = LandmarkSet(np.stack([xs, ys], axis=1), (w, h))
            break
        except ValueError:
            s = s.child("retry")
    tri = delaunay(dst)
    tris_q, idx = _oriented_tris_q(tri.points_q, tri.triangles)
    # random source points: destination points under a +-5 px shake
    jx = s.uniform_block(100, tri.points_q.shape[0]) * 10 - 5
    jy = s.uniform_block(200, tri.points_q.shape[0]) * 10 - 5
    src_pts = tri.points_q / 256.0 + np.stack([jx, jy], axis=1)
    affines = _affine_rows(tri.points_q / 256.0, src_pts, idx)
    img = (s.u64_block(300, h * w) % np.uint64(256)).astype(np.uint8) \
        .reshape(h, w, 1)
    return img, tris_q, affines


@needs_ext
def test_warp_triangles_bit_identical():
    for seed in range(8):
        img, tris_q, affines = _random_case(seed)
        out_fast = np.zeros_like(img)
        out_slow = np.zeros_like(img)
        _fastcore.warp_triangles(img, out_fast, tris_q, affines)
        _pyfallback.warp_triangles(img, out_slow, tris_q, affines)
        assert np.array_equal(out_fast, out_slow), f"seed {seed}"


@needs_ext
def test_coverage_add_bit_identical():
    for seed in range(8):
        img, tris_q, _ = _random_case(seed)
        h, w = img.shape[:2]
        c_fast = np.zeros((h, w), dtype=np.int32)
        c_slow = np.zeros((h, w), dtype=np.int32)
        _fastcore.coverage_add(c_fast, tris_q)
        _pyfallback.coverage_add(c_slow, tris_q)
        assert np.array_equal(c_fast, c_slow)
        assert c_fast.min() == 1 and c_fast.max() == 1


@needs_ext
def test_bilinear_remap_bit_identical():
    s = SeedStream(5).child("remap")
    img = (s.u64_block(0, 40 * 30) % np.uint64(256)).astype(np.uint8) \
        .reshape(30, 40, 1)
    sx = s.uniform_block(2000, 30 * 40).reshape(30, 40) * 44.0 - 2.0
    sy = s.uniform_block(4000, 30 * 40).reshape(30, 40) * 34.0 - 2.0
    out_slow = _pyfallback.bilinear_remap(img, sx, sy)
    out_fast = np.empty_like(out_slow)
    _fastcore.bilinear_remap(img, sx, sy, out_fast)
    assert np.array_equal(out_fast, out_slow)


def test_facade_coverage_matches_selected_backend():
    cap = render_capture(sample_identity(1), 0, 0.0)
    tri = delaunay(cap.landmarks)
    tris_q, _ = _oriented_tris_q(tri.points_q, tri.triangles)
    counts = np.zeros((128, 128), dtype=np.int32)
    _kernels.coverage_add(counts, tris_q)
    assert counts.min() == 1 and counts.max() == 1


def test_pixel_range_helper_conventions():
    # Pixels whose centers land in the closed quantized span.
    assert _pyfallback._pixel_range(0, 256, 100) == (0, 0)
    assert _pyfallback._pixel_range(128, 384, 100) == (0, 1)
    assert _pyfallback._pixel_range(129, 383, 100) == (1, 0)  # empty
    assert _pyfallback._pixel_range(0, 25600, 10) == (0, 9)

"""Benchmark the compiled kernels against the numpy fallback.

Runs the hot paths (triangle warping, the full morph, dense bilinear
remapping) on representative workloads through both backends and prints a
timing table plus a bit-exactness check.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from morphauth._kernels import _pyfallback
from morphauth.morph import _affine_rows, _oriented_tris_q, delaunay, morph
from morphauth.rng import SeedStream
from morphauth.synthface import render_capture, sample_identity

try:
    from morphauth._kernels import _fastcore
except ImportError:
    _fastcore = None


def warp_workload():
    ca = render_capture(sample_identity(1), 0, 0.0)
    cb = render_capture(sample_identity(2), 0, 0.0)
    tri = delaunay(ca.landmarks)
    tris_q, idx = _oriented_tris_q(tri.points_q, tri.triangles)
    src_q = np.vstack([cb.landmarks.qpoints, tri.points_q[-4:]])
    affines = _affine_rows(tri.points_q / 256.0, src_q / 256.0, idx)
    img = ca.image.pixels.reshape(128, 128, 1)
    return img, tris_q, affines


def remap_workload():
    s = SeedStream(3).child("bench")
    img = (s.u64_block(0, 128 * 128) % np.uint64(256)).astype(np.uint8) \
        .reshape(128, 128, 1)
    sx = s.uniform_block(20000, 128 * 128).reshape(128, 128) * 127.0
    sy = s.uniform_block(40000, 128 * 128).reshape(128, 128) * 127.0
    return img, sx, sy


def run_warp(impl, img, tris_q, affines):
    out = np.zeros_like(img)
    impl.warp_triangles(img, out, tris_q, affines)
    return out


def run_remap(impl, img, sx, sy):
    if impl is _pyfallback:
        return impl.bilinear_remap(img, sx, sy)
    out = np.empty(sx.shape + (img.shape[2],), dtype=np.uint8)
    impl.bilinear_remap(img, sx, sy, out)
    return out


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_morph(repeats):
    ca = render_capture(sample_identity(1), 0, 0.0)
    cb = render_capture(sample_identity(2), 0, 0.0)
    return timeit(lambda: morph(ca.image, ca.landmarks, cb.image,
                                cb.landmarks, 0.5), repeats)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    if _fastcore is None:
        print("compiled extension not built; showing fallback only")

    img, tris_q, affines = warp_workload()
    rimg, sx, sy = remap_workload()

    rows = []
    t_py = timeit(lambda: run_warp(_pyfallback, img, tris_q, affines),
                  args.repeats)
    t_remap_py = timeit(lambda: run_remap(_pyfallback, rimg, sx, sy),
                        args.repeats)
    rows.append(("warp_triangles 128x128x38tri", "python", t_py))
    rows.append(("bilinear_remap 128x128", "python", t_remap_py))

    if _fastcore is not None:
        t_c = timeit(lambda: run_warp(_fastcore, img, tris_q, affines),
                     args.repeats)
        t_remap_c = timeit(lambda: run_remap(_fastcore, rimg, sx, sy),
                           args.repeats)
        rows.append(("warp_triangles 128x128x38tri", "compiled", t_c))
        rows.append(("bilinear_remap 128x128", "compiled", t_remap_c))
        same_warp = np.array_equal(run_warp(_fastcore, img, tris_q, affines),
                                   run_warp(_pyfallback, img, tris_q, affines))
        same_remap = np.array_equal(run_remap(_fastcore, rimg, sx, sy),
                                    run_remap(_pyfallback, rimg, sx, sy))
        print(f"bit-exact across backends: warp={same_warp} remap={same_remap}")

    import morphauth

    rows.append((f"full morph (active: {morphauth.kernel_backend})", "active",
                 bench_morph(args.repeats)))

    print(f"{'workload':38s} {'backend':9s} {'best ms':>9s}")
    for name, backend, secs in rows:
        print(f"{name:38s} {backend:9s} {secs * 1e3:9.3f}")
    if _fastcore is not None:
        print(f"speedup warp: {t_py / t_c:.1f}x, remap: {t_remap_py / t_remap_c:.1f}x")


if __name__ == "__main__":
    main()

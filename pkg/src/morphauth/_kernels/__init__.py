"""Pixel kernel backend selection.

Imports the compiled extension when present, otherwise the numpy fallback.
Set MORPHAUTH_KERNELS=python (or =compiled) to force a backend; forcing
"compiled" raises if the extension was not built.  Both backends produce
bit-identical output.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pyfallback

_requested = os.environ.get("MORPHAUTH_KERNELS", "").strip().lower()

_impl = None
if _requested in ("", "compiled"):
    try:
        from . import _fastcore as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "MORPHAUTH_KERNELS=compiled but the extension is not built; "
                "run: python setup.py build_ext --inplace"
            )
        _impl = None
if _impl is None:
    _impl = _pyfallback

BACKEND: str = _impl.BACKEND
QUANT: int = _pyfallback.QUANT


def coverage_add(counts: np.ndarray, tris_q: np.ndarray) -> None:
    counts_c = np.ascontiguousarray(counts, dtype=np.int32)
    tris_c = np.ascontiguousarray(tris_q, dtype=np.int64)
    if counts_c is not counts:
        raise ValueError("counts must be a C-contiguous int32 array")
    _impl.coverage_add(counts_c, tris_c)


def warp_triangles(src: np.ndarray, out: np.ndarray, tris_q: np.ndarray,
                   affines: np.ndarray) -> None:
    src_c = np.ascontiguousarray(src, dtype=np.uint8)
    tris_c = np.ascontiguousarray(tris_q, dtype=np.int64)
    aff_c = np.ascontiguousarray(affines, dtype=np.float64)
    _impl.warp_triangles(src_c, out, tris_c, aff_c)


def bilinear_remap(src: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    src_c = np.ascontiguousarray(src, dtype=np.uint8)
    sx_c = np.ascontiguousarray(sx, dtype=np.float64)
    sy_c = np.ascontiguousarray(sy, dtype=np.float64)
    if _impl is _pyfallback:
        return _pyfallback.bilinear_remap(src_c, sx_c, sy_c)
    out = np.empty(sx_c.shape + (src_c.shape[2],), dtype=np.uint8)
    _impl.bilinear_remap(src_c, sx_c, sy_c, out)
    return out

"""Baseline cancelable transforms, each repeatable from a stored seed.

These are the static-key protection schemes the rotating morph scheme is
compared against: additive Gaussian or Laplace noise, a local pixel
shuffle ("spread"), and a radial contraction toward the image center
("implode").  The seed is the auxiliary data: the same spec applied to the
same image always yields the identical output, which is what makes the
template repeatable across verifications (and revocable by reseeding).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .raster import Image
from .rng import SeedStream

KINDS = ("none", "gaussian", "laplacian", "spread", "implode")

DEFAULT_STRENGTHS = {
    "none": 0.0,
    "gaussian": 30.0,  # additive sigma, intensity levels
    "laplacian": 20.0,  # scale b, intensity levels
    "spread": 4.0,  # Chebyshev radius, px
    "implode": 0.06,  # contraction amount
}


@dataclass(frozen=True)
class TransformSpec:
    kind: str
    seed: int = 0
    strength: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.strength is not None and self.strength < 0:
            raise ValueError(f"strength must be >= 0, got {self.strength}")

    @property
    def effective_strength(self) -> float:
        return DEFAULT_STRENGTHS[self.kind] if self.strength is None else self.strength

    def to_json(self) -> dict:
        return {"kind": self.kind, "seed": self.seed,
                "strength": self.effective_strength}

    @classmethod
    def from_json(cls, obj: dict) -> "TransformSpec":
        return cls(kind=obj["kind"], seed=int(obj.get("seed", 0)),
                   strength=obj.get("strength"))


def _as_3d(img: Image) -> np.ndarray:
    p = img.pixels
    return p[:, :, np.newaxis] if p.ndim == 2 else p


def _from_3d(arr: np.ndarray, channels: int) -> Image:
    return Image(arr[:, :, 0]) if channels == 1 else Image(arr)


def _additive(img: Image, noise: np.ndarray) -> Image:
    vals = img.pixels.astype(np.float64)
    if img.channels == 3:
        noise = noise.reshape(img.height, img.width, 3)
    else:
        noise = noise.reshape(img.height, img.width)
    out = np.clip(np.floor(vals + noise + 0.5), 0.0, 255.0).astype(np.uint8)
    return Image(out)


def _spread(img: Image, radius: int, stream: SeedStream) -> Image:
    h, w = img.height, img.width
    n = h * w
    dx = stream.child("dx").integer_block(0, n, -radius, radius).reshape(h, w)
    dy = stream.child("dy").integer_block(0, n, -radius, radius).reshape(h, w)
    xs = np.clip(np.arange(w)[np.newaxis, :] + dx, 0, w - 1)
    ys = np.clip(np.arange(h)[:, np.newaxis] + dy, 0, h - 1)
    return _from_3d(_as_3d(img)[ys, xs, :], img.channels)


def _implode(img: Image, amount: float) -> Image:
    h, w = img.height, img.width
    cx = w / 2.0
    cy = h / 2.0
    norm = min(w, h) / 2.0
    px = np.arange(w, dtype=np.float64)[np.newaxis, :] + 0.5
    py = np.arange(h, dtype=np.float64)[:, np.newaxis] + 0.5
    ox = px - cx
    oy = (py - cy) * np.ones_like(px)
    ox = ox * np.ones_like(py)
    rho = np.sqrt(ox * ox + oy * oy) / norm
    # Destination radius rho samples source radius rho^(1/(1+amount)); the
    # ratio form avoids any angle computation and fixes rho=0 exactly.
    exponent = 1.0 / (1.0 + amount) - 1.0
    with np.errstate(divide="ignore"):
        ratio = np.where(rho > 0.0, rho**exponent, 1.0)
    sx = cx + ox * ratio
    sy = cy + oy * ratio
    out = _kernels.bilinear_remap(_as_3d(img), sx, sy)
    return _from_3d(out, img.channels)


def apply_transform(img: Image, spec: TransformSpec) -> Image:
    """Apply a baseline transform; bit-identical for identical (img, spec)."""
    stream = SeedStream(spec.seed).child("transform", spec.kind)
    s = spec.effective_strength
    n = img.height * img.width * img.channels
    if spec.kind == "none":
        return img
    if spec.kind == "gaussian":
        if s == 0.0:
            return img
        return _additive(img, stream.gaussian_block(0, n, s))
    if spec.kind == "laplacian":
        if s == 0.0:
            return img
        return _additive(img, stream.laplace_block(0, n, s))
    if spec.kind == "spread":
        radius = int(s)
        if radius == 0:
            return img
        return _spread(img, radius, stream)
    if spec.kind == "implode":
        return _implode(img, s)
    raise AssertionError(spec.kind)

"""Cancelable face verification with one-time morph templates.

A hermetic simulator: procedural toy faces stand in for datasets, a
deterministic grid embedder stands in for CNN feature extractors, and an
optional HTTP embedding service bridges to real models.  The package
implements the morphing transform, the baseline noise transforms, the
three-party rotation protocol, a score-leakage hill-climbing attacker,
and the evaluation metrics tying them together.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as kernel_backend
from .matcher import Embedding, MatchDecision, distance, embed_remote, embed_toy, match
from .metrics import asr, build_report, eer, frr_at_far
from .morph import (
    LandmarkSet,
    Triangulation,
    average_landmarks,
    delaunay,
    morph,
    read_landmarks,
    warp_to,
    write_landmarks,
)
from .raster import Image, mse, read_image, ssim, write_image
from .synthface import Capture, IdentityParams, render_capture, sample_identity
from .transforms import TransformSpec, apply_transform

__all__ = [
    "Capture",
    "Embedding",
    "IdentityParams",
    "Image",
    "LandmarkSet",
    "MatchDecision",
    "TransformSpec",
    "Triangulation",
    "apply_transform",
    "asr",
    "average_landmarks",
    "build_report",
    "delaunay",
    "distance",
    "eer",
    "embed_remote",
    "embed_toy",
    "frr_at_far",
    "kernel_backend",
    "match",
    "morph",
    "mse",
    "read_image",
    "read_landmarks",
    "render_capture",
    "sample_identity",
    "ssim",
    "warp_to",
    "write_image",
    "write_landmarks",
    "__version__",
]

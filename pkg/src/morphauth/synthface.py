"""Procedural toy faces with ground-truth landmarks.

Stands in for face datasets so the whole pipeline runs hermetically: each
identity is a parameter vector drawn from a seed, rendered as antialiased
ellipses on a 128x128 gray canvas.  Captures of one identity vary by a
seeded jitter model (feature displacement, global intensity offset,
per-pixel noise), which is what gives genuine score distributions their
spread.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .morph import LandmarkSet
from .raster import Image
from .rng import SeedStream

CANVAS = 128
LANDMARK_COUNT = 16

# Landmark order: 8 face-oval points at 45-degree steps starting at angle 0,
# then left-eye outer/inner corner, right-eye inner/outer corner, nose apex,
# mouth left corner, mouth mid (curve point), mouth right corner.
_OVAL_ANGLES = np.arange(8) * (np.pi / 4.0)

MAX_JITTER = 0.2
PIXEL_NOISE_SIGMA = 2.0


class JitterRangeError(ValueError):
    pass


@dataclass(frozen=True)
class IdentityParams:
    seed: int
    oval_cx: float
    oval_cy: float
    oval_ax: float
    oval_ay: float
    eye_dx: float
    eye_y: float
    eye_rx: float
    eye_ry: float
    nose_x: float
    nose_y: float
    nose_r: float
    mouth_y: float
    mouth_w: float
    mouth_h: float
    mouth_curve: float
    bg_level: float
    skin_level: float
    eye_level: float
    nose_level: float
    mouth_level: float

    @property
    def identity_id(self) -> str:
        return f"id{self.seed:016x}"


@dataclass(frozen=True)
class Capture:
    image: Image
    landmarks: LandmarkSet
    identity_id: str


def _lerp(u: float, lo: float, hi: float) -> float:
    return lo + u * (hi - lo)


def sample_identity(seed: int) -> IdentityParams:
    """Deterministic identity parameters; all features keep a 4 px margin."""
    s = SeedStream(seed).child("identity")
    u = [s.uniform(i) for i in range(16)]
    return IdentityParams(
        seed=seed & (2**64 - 1),
        oval_cx=_lerp(u[0], 62.0, 66.0),
        oval_cy=_lerp(u[1], 62.0, 66.0),
        oval_ax=_lerp(u[2], 38.0, 46.0),
        oval_ay=_lerp(u[3], 46.0, 54.0),
        eye_dx=_lerp(u[4], 15.0, 21.0),
        eye_y=_lerp(u[5], 44.0, 52.0),
        eye_rx=_lerp(u[6], 4.5, 6.5),
        eye_ry=_lerp(u[7], 3.0, 4.5),
        nose_x=_lerp(u[8], 61.0, 67.0),
        nose_y=_lerp(u[9], 70.0, 78.0),
        nose_r=_lerp(u[10], 3.0, 5.0),
        mouth_y=_lerp(u[11], 86.0, 96.0),
        mouth_w=_lerp(u[12], 16.0, 24.0),
        mouth_h=_lerp(u[13], 2.5, 4.5),
        mouth_curve=_lerp(u[14], -2.0, 4.0),
        bg_level=_lerp(u[15], 25.0, 45.0),
        skin_level=_lerp(s.uniform(16), 140.0, 200.0),
        eye_level=_lerp(s.uniform(17), 25.0, 65.0),
        nose_level=_lerp(s.uniform(18), 95.0, 130.0),
        mouth_level=_lerp(s.uniform(19), 40.0, 80.0),
    )


def sample_auxiliary_identity(seed: int) -> IdentityParams:
    """Identity parameters for the one-time auxiliary faces.

    Geometry matches the client population, but the intensity polarity is
    inverted (bright background, dark skin, bright features).  Morphing
    with such a face pushes every protected reference far away from any
    plausible probe image while successive references stay mutually
    similar, which is what blunts iterative attacks between rotations; the
    shared random face still cancels out of genuine comparisons.
    """
    s = SeedStream(seed).child("aux-identity")
    u = [s.uniform(i) for i in range(20)]
    return IdentityParams(
        seed=seed & (2**64 - 1),
        oval_cx=_lerp(u[0], 62.0, 66.0),
        oval_cy=_lerp(u[1], 62.0, 66.0),
        oval_ax=_lerp(u[2], 38.0, 46.0),
        oval_ay=_lerp(u[3], 46.0, 54.0),
        eye_dx=_lerp(u[4], 15.0, 21.0),
        eye_y=_lerp(u[5], 44.0, 52.0),
        eye_rx=_lerp(u[6], 4.5, 6.5),
        eye_ry=_lerp(u[7], 3.0, 4.5),
        nose_x=_lerp(u[8], 61.0, 67.0),
        nose_y=_lerp(u[9], 70.0, 78.0),
        nose_r=_lerp(u[10], 3.0, 5.0),
        mouth_y=_lerp(u[11], 86.0, 96.0),
        mouth_w=_lerp(u[12], 16.0, 24.0),
        mouth_h=_lerp(u[13], 2.5, 4.5),
        mouth_curve=_lerp(u[14], -2.0, 4.0),
        bg_level=_lerp(u[15], 195.0, 245.0),
        skin_level=_lerp(u[16], 10.0, 55.0),
        eye_level=_lerp(u[17], 175.0, 235.0),
        nose_level=_lerp(u[18], 135.0, 195.0),
        mouth_level=_lerp(u[19], 165.0, 225.0),
    )


_XX, _YY = np.meshgrid(
    np.arange(CANVAS, dtype=np.float64) + 0.5,
    np.arange(CANVAS, dtype=np.float64) + 0.5,
)


def _paint_ellipse(canvas, cx, cy, ax, ay, level):
    # ~1 px antialiased edge from the normalized radial field.
    r = np.sqrt(((_XX - cx) / ax) ** 2 + ((_YY - cy) / ay) ** 2)
    alpha = np.clip((1.0 - r) * min(ax, ay) + 0.5, 0.0, 1.0)
    canvas += alpha * (level - canvas)


@dataclass(frozen=True)
class _Geometry:
    """Identity parameters after capture jitter; landmark source of truth."""

    oval_cx: float
    oval_cy: float
    oval_ax: float
    oval_ay: float
    leye: tuple[float, float]
    reye: tuple[float, float]
    eye_rx: float
    eye_ry: float
    nose: tuple[float, float]
    nose_r: float
    mouth: tuple[float, float]
    mouth_w: float
    mouth_h: float
    mouth_curve: float


def _jittered_geometry(ident: IdentityParams, stream: SeedStream, jitter: float) -> _Geometry:
    g = stream.gaussian_block(0, 12)
    # Clip bounds are frame-safety driven (every landmark stays >= 4 px
    # inside the frame) and preserve the eyes-above-nose-above-mouth order.
    oval_cx = float(np.clip(ident.oval_cx + jitter * 8.0 * g[0], 40.0, 88.0))
    oval_cy = float(np.clip(ident.oval_cy + jitter * 8.0 * g[1], 44.0, 80.0))
    oval_ax = float(np.clip(ident.oval_ax * (1.0 + jitter * 0.3 * g[10]),
                            24.0, min(56.0, 124.0 - oval_cx, oval_cx - 4.0)))
    oval_ay = float(np.clip(ident.oval_ay * (1.0 + jitter * 0.3 * g[11]),
                            32.0, min(56.0, 124.0 - oval_cy, oval_cy - 4.0)))
    eye_y = float(np.clip(ident.eye_y + jitter * 10.0 * g[2], 30.0, 58.0))
    leye_x = float(np.clip(oval_cx - ident.eye_dx + jitter * 10.0 * g[3],
                           20.0, oval_cx - 3.0))
    reye_x = float(np.clip(oval_cx + ident.eye_dx + jitter * 10.0 * g[4],
                           oval_cx + 3.0, 108.0))
    nose_x = float(np.clip(ident.nose_x + jitter * 10.0 * g[5], 40.0, 88.0))
    nose_y = float(np.clip(ident.nose_y + jitter * 10.0 * g[6], 60.0, 84.0))
    mouth_x = float(np.clip(ident.oval_cx + jitter * 10.0 * g[7], 44.0, 84.0))
    mouth_y = float(np.clip(ident.mouth_y + jitter * 10.0 * g[8], 86.0, 104.0))
    mouth_w = float(ident.mouth_w * np.clip(1.0 + jitter * 1.5 * g[9], 0.7, 1.3))
    return _Geometry(
        oval_cx=oval_cx,
        oval_cy=oval_cy,
        oval_ax=oval_ax,
        oval_ay=oval_ay,
        leye=(leye_x, eye_y),
        reye=(reye_x, eye_y),
        eye_rx=ident.eye_rx,
        eye_ry=ident.eye_ry,
        nose=(nose_x, nose_y),
        nose_r=ident.nose_r,
        mouth=(mouth_x, mouth_y),
        mouth_w=mouth_w,
        mouth_h=ident.mouth_h,
        mouth_curve=ident.mouth_curve,
    )


def _landmarks_from_geometry(geo: _Geometry) -> LandmarkSet:
    pts = []
    for th in _OVAL_ANGLES:
        pts.append((geo.oval_cx + geo.oval_ax * np.cos(th),
                    geo.oval_cy + geo.oval_ay * np.sin(th)))
    pts.append((geo.leye[0] - geo.eye_rx, geo.leye[1]))
    pts.append((geo.leye[0] + geo.eye_rx, geo.leye[1]))
    pts.append((geo.reye[0] - geo.eye_rx, geo.reye[1]))
    pts.append((geo.reye[0] + geo.eye_rx, geo.reye[1]))
    pts.append(geo.nose)
    pts.append((geo.mouth[0] - geo.mouth_w / 2.0, geo.mouth[1]))
    pts.append((geo.mouth[0], geo.mouth[1] + geo.mouth_curve))
    pts.append((geo.mouth[0] + geo.mouth_w / 2.0, geo.mouth[1]))
    return LandmarkSet(np.array(pts, dtype=np.float64), (CANVAS, CANVAS))


def render_capture(ident: IdentityParams, capture_seed: int, jitter: float) -> Capture:
    """Render one capture of an identity.

    Deterministic in (ident, capture_seed, jitter).  jitter=0 disables every
    noise component, so it reproduces the identity's canonical capture
    bit-exactly regardless of capture_seed.
    """
    if not (0.0 <= jitter <= MAX_JITTER):
        raise JitterRangeError(f"jitter {jitter} outside [0, {MAX_JITTER}]")
    stream = SeedStream(ident.seed).child("capture", capture_seed)
    geo = _jittered_geometry(ident, stream.child("geometry"), jitter)

    canvas = np.full((CANVAS, CANVAS), ident.bg_level, dtype=np.float64)
    _paint_ellipse(canvas, geo.oval_cx, geo.oval_cy, geo.oval_ax, geo.oval_ay,
                   ident.skin_level)
    _paint_ellipse(canvas, geo.leye[0], geo.leye[1], geo.eye_rx, geo.eye_ry,
                   ident.eye_level)
    _paint_ellipse(canvas, geo.reye[0], geo.reye[1], geo.eye_rx, geo.eye_ry,
                   ident.eye_level)
    _paint_ellipse(canvas, geo.nose[0], geo.nose[1], geo.nose_r, geo.nose_r * 1.4,
                   ident.nose_level)
    _paint_ellipse(canvas, geo.mouth[0], geo.mouth[1], geo.mouth_w / 2.0,
                   geo.mouth_h, ident.mouth_level)
    if geo.mouth_curve != 0.0:
        _paint_ellipse(canvas, geo.mouth[0], geo.mouth[1] + geo.mouth_curve,
                       geo.mouth_w / 4.0, geo.mouth_h * 0.8, ident.mouth_level)

    if jitter > 0.0:
        offset = float(stream.child("intensity").gaussian_block(0, 1)[0])
        canvas += jitter * 50.0 * offset
        noise = stream.child("pixnoise").gaussian_block(
            0, CANVAS * CANVAS, PIXEL_NOISE_SIGMA
        ).reshape(CANVAS, CANVAS)
        canvas += noise

    img = Image(np.clip(np.floor(canvas + 0.5), 0.0, 255.0).astype(np.uint8))
    return Capture(
        image=img,
        landmarks=_landmarks_from_geometry(geo),
        identity_id=ident.identity_id,
    )


class SyntheticFaceSource:
    """Endless deterministic stream of fresh random faces.

    Used as the pseudonym authority's source of one-time auxiliary faces;
    consecutive faces come from distinct wide-range identity seeds and are
    pairwise distinct with overwhelming probability.
    """

    def __init__(self, seed: int):
        self._stream = SeedStream(seed).child("facesource")
        self._count = 0

    def next_face(self) -> tuple[Image, LandmarkSet]:
        ident = sample_auxiliary_identity(self._stream.u64(self._count))
        self._count += 1
        cap = render_capture(ident, 0, 0.0)
        return cap.image, cap.landmarks


class FaceSourceExhausted(RuntimeError):
    """A directory-backed face source ran out of one-time faces."""


class DirectoryFaceSource:
    """One-time faces loaded from PGM files with landmark sidecars.

    Files pair as name.pgm / name.lms, served in sorted order; each face is
    handed out once, since reuse would break the one-time property.
    """

    def __init__(self, directory):
        import glob
        import os

        from .morph import read_landmarks
        from .raster import read_image

        self._faces = []
        for img_path in sorted(glob.glob(os.path.join(str(directory), "*.pgm"))):
            lms_path = img_path[:-4] + ".lms"
            if not os.path.exists(lms_path):
                continue
            img = read_image(img_path)
            self._faces.append((img, read_landmarks(lms_path,
                                                    (img.width, img.height))))
        if not self._faces:
            raise FileNotFoundError(f"no .pgm/.lms pairs under {directory}")
        self._next = 0

    def remaining(self) -> int:
        return len(self._faces) - self._next

    def next_face(self) -> tuple[Image, LandmarkSet]:
        if self._next >= len(self._faces):
            raise FaceSourceExhausted(
                f"all {len(self._faces)} directory faces consumed"
            )
        face = self._faces[self._next]
        self._next += 1
        return face

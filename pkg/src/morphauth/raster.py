"""8-bit raster images: netpbm binary I/O and full-reference quality metrics."""

from __future__ import annotations

import os

import numpy as np


class RasterError(Exception):
    """Base class for raster format problems."""


class HeaderError(RasterError):
    """Magic number or header tokens are not a binary PGM/PPM."""


class UnsupportedMaxvalError(RasterError):
    """File declares a maxval other than 255."""


class TruncatedPayloadError(RasterError):
    """Payload shorter than width*height*channels."""


class DimensionMismatchError(ValueError):
    """Metric inputs differ in size or channel count."""


class Image:
    """Immutable 8-bit raster, grayscale (h, w) or RGB (h, w, 3)."""

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels, dtype=np.uint8)
        if not (arr.ndim == 2 or (arr.ndim == 3 and arr.shape[2] == 3)):
            raise ValueError(f"expected (h, w) or (h, w, 3) array, got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Image is immutable")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3

    @property
    def data(self) -> bytes:
        """Row-major samples, channel-interleaved for RGB."""
        return self.pixels.tobytes()

    @classmethod
    def from_samples(cls, width: int, height: int, channels: int, data: bytes) -> "Image":
        expected = width * height * channels
        if len(data) != expected:
            raise ValueError(f"need {expected} samples, got {len(data)}")
        arr = np.frombuffer(data, dtype=np.uint8)
        shape = (height, width) if channels == 1 else (height, width, 3)
        return cls(arr.reshape(shape))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __hash__(self):
        return hash((self.pixels.shape, self.data))

    def __repr__(self):
        kind = "gray" if self.channels == 1 else "rgb"
        return f"Image({self.width}x{self.height} {kind})"


def _read_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    # Skip whitespace and '#' comment lines between header tokens.
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < n and buf[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise HeaderError("unexpected end of header")
    return buf[start:pos], pos


def image_from_pnm_bytes(buf: bytes) -> Image:
    """Decode binary PGM (P5) or PPM (P6) bytes with maxval 255."""
    if buf[:2] == b"P5":
        channels = 1
    elif buf[:2] == b"P6":
        channels = 3
    else:
        raise HeaderError(f"not a binary PGM/PPM: magic {buf[:2]!r}")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_token(buf, pos)
        if not tok.isdigit():
            raise HeaderError(f"non-numeric header token {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if maxval != 255:
        raise UnsupportedMaxvalError(f"maxval {maxval} unsupported, need 255")
    if width < 1 or height < 1:
        raise HeaderError(f"bad dimensions {width}x{height}")
    # Exactly one whitespace byte separates the header from the payload.
    if pos >= len(buf) or not buf[pos : pos + 1].isspace():
        raise HeaderError("missing separator before payload")
    pos += 1
    need = width * height * channels
    payload = buf[pos : pos + need]
    if len(payload) < need:
        raise TruncatedPayloadError(f"payload has {len(payload)} of {need} bytes")
    return Image.from_samples(width, height, channels, payload)


def image_to_pnm_bytes(img: Image) -> bytes:
    magic = b"P5" if img.channels == 1 else b"P6"
    header = b"%s %d %d 255\n" % (magic, img.width, img.height)
    return header + img.data


def read_image(path) -> Image:
    with open(path, "rb") as fh:
        return image_from_pnm_bytes(fh.read())


def write_image(img: Image, path) -> None:
    """Emit canonical binary PGM/PPM: single-space header tokens, maxval 255."""
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(image_to_pnm_bytes(img))
    os.replace(tmp, path)


def to_gray(img: Image) -> Image:
    """Fixed-luma grayscale (0.299, 0.587, 0.114), rounded half up."""
    if img.channels == 1:
        return img
    p = img.pixels.astype(np.float64)
    y = 0.299 * p[:, :, 0] + 0.587 * p[:, :, 1] + 0.114 * p[:, :, 2]
    return Image(np.floor(y + 0.5).astype(np.uint8))


def _check_same_shape(a: Image, b: Image):
    if a.pixels.shape != b.pixels.shape:
        raise DimensionMismatchError(
            f"shape mismatch: {a.pixels.shape} vs {b.pixels.shape}"
        )


def mse(a: Image, b: Image) -> float:
    """Mean squared sample difference, integer-exact before one division."""
    _check_same_shape(a, b)
    d = a.pixels.astype(np.int64) - b.pixels.astype(np.int64)
    total = int(np.sum(d * d))
    return total / d.size


SSIM_WINDOW = 8
SSIM_C1 = (0.01 * 255.0) ** 2
SSIM_C2 = (0.03 * 255.0) ** 2


def ssim(a: Image, b: Image) -> float:
    """Mean SSIM over uniform 8x8 windows, stride 1.

    RGB inputs are converted with the fixed luma weights first.  Window
    statistics come from integer integral images, so they are exact; each
    window evaluates the standard two-factor formula with C1=(0.01*255)^2
    and C2=(0.03*255)^2 and the per-window values are averaged.
    """
    _check_same_shape(a, b)
    ga = to_gray(a).pixels.astype(np.int64)
    gb = to_gray(b).pixels.astype(np.int64)
    h, w = ga.shape
    k = SSIM_WINDOW
    if h < k or w < k:
        raise DimensionMismatchError(f"image {w}x{h} smaller than {k}x{k} window")

    def win_sums(m):
        c = np.zeros((h + 1, w + 1), dtype=np.int64)
        c[1:, 1:] = np.cumsum(np.cumsum(m, axis=0), axis=1)
        return c[k:, k:] - c[:-k, k:] - c[k:, :-k] + c[:-k, :-k]

    n = k * k
    sa = win_sums(ga)
    sb = win_sums(gb)
    saa = win_sums(ga * ga)
    sbb = win_sums(gb * gb)
    sab = win_sums(ga * gb)

    # n^2 * (co)variance, exact in int64 before the float division.
    va = (n * saa - sa * sa).astype(np.float64)
    vb = (n * sbb - sb * sb).astype(np.float64)
    cab = (n * sab - sa * sb).astype(np.float64)
    n2 = float(n * n)
    mu_ab = (sa * sb).astype(np.float64) / n2
    mu_sq = (sa * sa + sb * sb).astype(np.float64) / n2

    num = (2.0 * mu_ab + SSIM_C1) * (2.0 * cab / n2 + SSIM_C2)
    den = (mu_sq + SSIM_C1) * ((va + vb) / n2 + SSIM_C2)
    return float(np.mean(num / den))

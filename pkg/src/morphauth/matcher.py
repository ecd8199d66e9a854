"""Embedding extraction and dissimilarity scoring.

Scores are Euclidean distances between unit-norm embeddings; lower means
more similar, and a probe is accepted when its score is at or below the
threshold.  The built-in embedder is a deterministic 16x16 grid of block
mean intensities; a remote embedder client speaks the embedding service
HTTP protocol.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from dataclasses import dataclass

import numpy as np

from .raster import Image, image_to_pnm_bytes, to_gray

GRID = 16


class MatcherError(Exception):
    pass


class EmbeddingDimMismatchError(MatcherError):
    pass


class RemoteTransportError(MatcherError):
    """Service unreachable or HTTP-level failure."""


class RemoteResponseError(MatcherError):
    """Service answered with something other than the documented schema."""


@dataclass(frozen=True)
class Embedding:
    values: np.ndarray  # float64, unit L2 norm
    source: str  # "toy" or "remote"

    def __post_init__(self):
        self.values.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class MatchDecision:
    score: float
    threshold: float
    accepted: bool


def _normalize(v: np.ndarray, source: str) -> Embedding:
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        # Zero-variance input: fall back to the first basis vector.
        v = np.zeros_like(v)
        v[0] = 1.0
        return Embedding(values=v, source=source)
    return Embedding(values=v / norm, source=source)


def embed_toy(img: Image) -> Embedding:
    """Grid embedding: 16x16 block mean intensities, centered, unit norm."""
    g = to_gray(img).pixels.astype(np.int64)
    h, w = g.shape
    ys = [(i * h) // GRID for i in range(GRID + 1)]
    xs = [(j * w) // GRID for j in range(GRID + 1)]
    vals = np.empty(GRID * GRID, dtype=np.float64)
    k = 0
    for i in range(GRID):
        for j in range(GRID):
            block = g[ys[i]:ys[i + 1], xs[j]:xs[j + 1]]
            vals[k] = int(block.sum()) / block.size if block.size else 0.0
            k += 1
    vals = vals - np.mean(vals)
    return _normalize(vals, "toy")


def distance(a: Embedding, b: Embedding) -> float:
    if a.dim != b.dim:
        raise EmbeddingDimMismatchError(f"dims differ: {a.dim} vs {b.dim}")
    return float(np.linalg.norm(a.values - b.values))


def match(probe: Embedding, reference: Embedding, threshold: float) -> MatchDecision:
    """Accept when the dissimilarity is at or below the threshold."""
    score = distance(probe, reference)
    return MatchDecision(score=score, threshold=threshold, accepted=score <= threshold)


class RemoteEmbedder:
    """Client for the embedding service HTTP protocol.

    Fetches /v1/info once to learn the advertised dimension, then posts
    image bytes to /v1/embed.  Never falls back to the toy embedder; every
    failure mode raises a distinct error.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._info = None

    def info(self) -> dict:
        if self._info is None:
            self._info = self._get_json(f"{self.endpoint}/v1/info")
            if not isinstance(self._info.get("embedding_dim"), int) \
                    or self._info["embedding_dim"] < 1:
                raise RemoteResponseError(f"bad service info: {self._info!r}")
        return self._info

    def embed(self, img: Image) -> Embedding:
        dim = self.info()["embedding_dim"]
        body = self._post_json(f"{self.endpoint}/v1/embed", image_to_pnm_bytes(img))
        vec = body.get("embedding")
        if not isinstance(vec, list) or not all(isinstance(x, (int, float)) for x in vec):
            raise RemoteResponseError(f"embed response missing vector: {body!r}")
        if len(vec) != dim:
            raise EmbeddingDimMismatchError(
                f"service advertised dim {dim} but returned {len(vec)}"
            )
        arr = np.asarray(vec, dtype=np.float64)
        norm = float(np.linalg.norm(arr))
        if norm == 0.0:
            raise RemoteResponseError("service returned a zero embedding")
        if abs(norm - 1.0) > 1e-6:
            arr = arr / norm
        return Embedding(values=arr, source="remote")

    def landmarks(self, img: Image) -> list[tuple[float, float]]:
        body = self._post_json(f"{self.endpoint}/v1/landmarks",
                               image_to_pnm_bytes(img))
        pts = body.get("points")
        if not isinstance(pts, list) or any(len(p) != 2 for p in pts):
            raise RemoteResponseError(f"landmark response malformed: {body!r}")
        return [(float(x), float(y)) for x, y in pts]

    def _get_json(self, url: str) -> dict:
        req = urllib.request.Request(url, method="GET")
        return self._run(req)

    def _post_json(self, url: str, payload: bytes) -> dict:
        req = urllib.request.Request(
            url, data=payload, method="POST",
            headers={"Content-Type": "application/octet-stream"},
        )
        return self._run(req)

    def _run(self, req) -> dict:
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                raw = resp.read()
        except urllib.error.HTTPError as exc:
            raise RemoteTransportError(
                f"{req.full_url}: HTTP {exc.code}: {exc.read()[:200]!r}"
            ) from exc
        except (urllib.error.URLError, OSError) as exc:
            raise RemoteTransportError(f"{req.full_url}: {exc}") from exc
        try:
            body = json.loads(raw)
        except ValueError as exc:
            raise RemoteResponseError(f"{req.full_url}: not JSON: {raw[:200]!r}") from exc
        if not isinstance(body, dict):
            raise RemoteResponseError(f"{req.full_url}: non-object response")
        return body


def embed_remote(img: Image, endpoint: str) -> Embedding:
    return RemoteEmbedder(endpoint).embed(img)

"""Embeddings, distances, and match decisions."""

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from morphauth.matcher import (
    Embedding,
    EmbeddingDimMismatchError,
    RemoteEmbedder,
    RemoteResponseError,
    RemoteTransportError,
    distance,
    embed_remote,
    embed_toy,
    match,
)
from morphauth.raster import Image
from morphauth.rng import SeedStream
from morphauth.synthface import render_capture, sample_identity


def test_embed_constant_image_falls_back_to_basis_vector():
    img = Image(np.full((64, 64), 131, dtype=np.uint8))
    emb = embed_toy(img)
    assert emb.values[0] == 1.0
    assert np.all(emb.values[1:] == 0.0)


def test_embed_deterministic_and_normalized():
    cap = render_capture(sample_identity(1), 0, 0.05)
    e1 = embed_toy(cap.image)
    e2 = embed_toy(cap.image)
    assert np.array_equal(e1.values, e2.values)
    assert e1.dim == 256
    assert abs(np.linalg.norm(e1.values) - 1.0) <= 1e-6


def test_distance_identities():
    e = embed_toy(render_capture(sample_identity(2), 0, 0.0).image)
    assert distance(e, e) == 0.0
    a = np.zeros(4)
    a[0] = 1.0
    b = np.zeros(4)
    b[1] = 1.0
    assert distance(Embedding(a, "toy"), Embedding(b, "toy")) == pytest.approx(2**0.5)


def test_distance_symmetric_and_triangle_inequality():
    stream = SeedStream(9).child("tri")
    for k in range(20):
        caps = [render_capture(sample_identity(stream.u64(3 * k + j)), 0, 0.0)
                for j in range(3)]
        ea, eb, ec = (embed_toy(c.image) for c in caps)
        assert distance(ea, eb) == distance(eb, ea)
        assert distance(ea, ec) <= distance(ea, eb) + distance(eb, ec) + 1e-12


def test_distance_dim_mismatch():
    a = Embedding(np.ones(4) / 2.0, "toy")
    b = Embedding(np.ones(9) / 3.0, "toy")
    with pytest.raises(EmbeddingDimMismatchError):
        distance(a, b)


def test_match_boundary_inclusive_and_monotone():
    a = Embedding(np.eye(4)[0], "toy")
    b = Embedding(np.eye(4)[1], "toy")
    d = distance(a, b)
    assert match(a, b, d).accepted
    assert not match(a, b, np.nextafter(d, 0.0)).accepted
    assert match(a, a, 0.0).accepted
    assert match(a, a, 1.0).accepted


class _StubHandler(BaseHTTPRequestHandler):
    dim = 8
    deterministic_vec = [0.5, 0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0]
    mode = "ok"

    def log_message(self, *args):
        pass

    def do_GET(self):
        if self.path == "/v1/info":
            body = json.dumps({
                "model_name": "stub", "embedding_dim": self.dim,
                "landmark_count": 68, "version": "1",
            }).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.end_headers()
            self.wfile.write(body)
        else:
            self.send_response(404)
            self.end_headers()

    def do_POST(self):
        n = int(self.headers.get("Content-Length", 0))
        self.rfile.read(n)
        mode = type(self).mode
        if mode == "ok":
            payload = {"embedding": self.deterministic_vec}
        elif mode == "short":
            payload = {"embedding": [1.0, 0.0]}
        elif mode == "junk":
            self.send_response(200)
            self.end_headers()
            self.wfile.write(b"not json")
            return
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(json.dumps(payload).encode())


@pytest.fixture()
def stub_service():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


def test_remote_embed_normalizes(stub_service):
    _StubHandler.mode = "ok"
    img = render_capture(sample_identity(1), 0, 0.0).image
    emb = embed_remote(img, stub_service)
    assert emb.source == "remote"
    assert emb.dim == 8
    assert abs(np.linalg.norm(emb.values) - 1.0) <= 1e-9


def test_remote_dim_mismatch(stub_service):
    _StubHandler.mode = "short"
    img = render_capture(sample_identity(1), 0, 0.0).image
    with pytest.raises(EmbeddingDimMismatchError):
        embed_remote(img, stub_service)


def test_remote_malformed_response(stub_service):
    _StubHandler.mode = "junk"
    img = render_capture(sample_identity(1), 0, 0.0).image
    with pytest.raises(RemoteResponseError):
        embed_remote(img, stub_service)


def test_remote_transport_error():
    img = render_capture(sample_identity(1), 0, 0.0).image
    client = RemoteEmbedder("http://127.0.0.1:9", timeout=0.5)
    with pytest.raises(RemoteTransportError):
        client.embed(img)

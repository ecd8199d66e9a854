"""Toy face generator: determinism, invariants, separability."""

import numpy as np
import pytest

from morphauth.matcher import distance, embed_toy
from morphauth.rng import SeedStream
from morphauth.synthface import (
    CANVAS,
    LANDMARK_COUNT,
    JitterRangeError,
    SyntheticFaceSource,
    render_capture,
    sample_auxiliary_identity,
    sample_identity,
)


def test_sample_identity_deterministic():
    assert sample_identity(42) == sample_identity(42)
    assert sample_identity(1) != sample_identity(2)


def test_identity_geometric_invariants():
    for seed in range(1, 101):
        p = sample_identity(seed)
        # 4 px frame margin on the widest extents
        assert p.oval_cx - p.oval_ax >= 4 and p.oval_cx + p.oval_ax <= CANVAS - 4
        assert p.oval_cy - p.oval_ay >= 4 and p.oval_cy + p.oval_ay <= CANVAS - 4
        # left eye left of right eye; eyes above nose above mouth
        assert p.eye_dx > 0
        assert p.eye_y < p.nose_y < p.mouth_y


def test_render_canonical_capture_ignores_capture_seed():
    ident = sample_identity(7)
    a = render_capture(ident, 1, 0.0)
    b = render_capture(ident, 99, 0.0)
    assert np.array_equal(a.image.pixels, b.image.pixels)
    assert a.landmarks == b.landmarks


def test_render_deterministic_with_jitter():
    ident = sample_identity(8)
    a = render_capture(ident, 5, 0.08)
    b = render_capture(ident, 5, 0.08)
    assert np.array_equal(a.image.pixels, b.image.pixels)
    assert a.landmarks == b.landmarks


def test_render_different_capture_seeds_differ():
    ident = sample_identity(9)
    a = render_capture(ident, 1, 0.05)
    b = render_capture(ident, 2, 0.05)
    assert a.identity_id == b.identity_id
    assert not np.array_equal(a.image.pixels, b.image.pixels)


def test_render_jitter_out_of_range():
    with pytest.raises(JitterRangeError):
        render_capture(sample_identity(1), 0, 0.25)
    with pytest.raises(JitterRangeError):
        render_capture(sample_identity(1), 0, -0.01)


def test_capture_shape_and_landmark_count():
    cap = render_capture(sample_identity(3), 0, 0.1)
    assert cap.image.width == CANVAS and cap.image.height == CANVAS
    assert cap.image.channels == 1
    assert len(cap.landmarks) == LANDMARK_COUNT


def test_landmarks_inside_frame():
    for seed in range(20):
        cap = render_capture(sample_identity(seed), seed, 0.2)
        pts = cap.landmarks.points
        assert pts.min() >= 0.0
        assert pts[:, 0].max() <= CANVAS and pts[:, 1].max() <= CANVAS


def test_landmarks_track_rendered_features():
    # Eye landmarks straddle a region darker than the surrounding skin, and
    # the midpoint of each eye's corner pair is the rendered eye center.
    cap = render_capture(sample_identity(11), 0, 0.0)
    px = cap.image.pixels
    pts = cap.landmarks.points
    for a, b in ((8, 9), (10, 11)):
        cx = (pts[a][0] + pts[b][0]) / 2.0
        cy = (pts[a][1] + pts[b][1]) / 2.0
        eye_val = px[int(cy), int(cx)]
        skin_val = px[int(cy) + 10, int(cx)]
        assert eye_val < skin_val - 30


def test_identity_separability():
    # Same-identity captures embed closer than cross-identity captures for
    # nearly all of 50 seeded trials.
    stream = SeedStream(1234).child("sep")
    wins = 0
    for trial in range(50):
        ia = sample_identity(stream.u64(2 * trial))
        ib = sample_identity(stream.u64(2 * trial + 1))
        a1 = embed_toy(render_capture(ia, 1, 0.05).image)
        a2 = embed_toy(render_capture(ia, 2, 0.05).image)
        b1 = embed_toy(render_capture(ib, 3, 0.05).image)
        if distance(a1, a2) < distance(a1, b1):
            wins += 1
    assert wins >= 45, f"separability won only {wins}/50 trials"


def test_auxiliary_faces_distinct_and_inverted():
    src = SyntheticFaceSource(5)
    faces = [src.next_face() for _ in range(12)]
    digests = {img.data for img, _ in faces}
    assert len(digests) == len(faces)
    # Inverted polarity: background brighter than face interior.
    img, lms = faces[0]
    assert img.pixels[0, 0] > img.pixels[64, 64]


def test_auxiliary_identity_deterministic():
    assert sample_auxiliary_identity(3) == sample_auxiliary_identity(3)

"""Wire layout pinned by golden vectors plus round-trip checks."""

import json
import pathlib

import pytest

from morphauth import wire

VECTORS = json.loads(
    (pathlib.Path(__file__).parent / "data" / "wire_vectors.json").read_text()
)


def _sample_messages():
    m1 = wire.M1(client_id=b"client-A", nonce_c=bytes(range(16)),
                 pseudonym=b"PNBYTES",
                 tid_prev=bytes.fromhex("00112233445566778899aabbccddeeff"))
    m2 = wire.M2(server_id=b"server-B", nonce_s=bytes(range(16, 32)),
                 resp_s=b"RESP")
    m3 = wire.M3(resp_c=b"\x01\x02\x03")
    m4 = wire.M4(resp_s=b"")
    return m1, m2, m3, m4


def test_golden_vectors_pin_layout():
    m1, m2, m3, m4 = _sample_messages()
    assert m1.encode().hex() == VECTORS["m1"]
    assert m2.encode().hex() == VECTORS["m2"]
    assert m3.encode().hex() == VECTORS["m3"]
    assert m4.encode().hex() == VECTORS["m4"]
    pn_fields = [b"TID0TID0TID0TID0", b"ENCRF-PAYLOAD", b"authority-1",
                 wire.encode_int(123456), b"SIGSIGSIG"]
    pn = wire.encode_fields(wire.TAG_PSEUDONYM, pn_fields)
    assert pn.hex() == VECTORS["pseudonym"]


def test_round_trips():
    m1, m2, m3, m4 = _sample_messages()
    assert wire.M1.decode(m1.encode()) == m1
    assert wire.M2.decode(m2.encode()) == m2
    assert wire.M3.decode(m3.encode()) == m3
    assert wire.M4.decode(m4.encode()) == m4


def test_decode_rejects_wrong_tag():
    m1, _, _, _ = _sample_messages()
    with pytest.raises(wire.WireError):
        wire.M2.decode(m1.encode())


def test_decode_rejects_truncation_and_trailing():
    m1, _, _, _ = _sample_messages()
    buf = m1.encode()
    with pytest.raises(wire.WireError):
        wire.M1.decode(buf[:-1])
    with pytest.raises(wire.WireError):
        wire.M1.decode(buf + b"\x00")


def test_int_encoding():
    for v in (0, 1, -1, 123456, -(2**62), 2**62):
        assert wire.decode_int(wire.encode_int(v)) == v
    with pytest.raises(wire.WireError):
        wire.decode_int(b"\x00" * 7)

"""Binary message encoding for the verification protocol.

Every message is a one-byte type tag followed by length-prefixed fields in
a fixed order: each field is a 4-byte big-endian length then that many
bytes.  Integers travel as 8-byte big-endian two's complement.  A golden
test vector pins this layout.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass


class WireError(ValueError):
    pass


TAG_PSEUDONYM = 0x01
TAG_HYBRID = 0x02
TAG_M1 = 0x11
TAG_M2 = 0x12
TAG_M3 = 0x13
TAG_M4 = 0x14
TAG_FACE_PAYLOAD = 0x21
TAG_VERIFY_PAYLOAD = 0x22


def encode_fields(tag: int, fields: list[bytes]) -> bytes:
    out = bytearray([tag])
    for f in fields:
        out += struct.pack(">I", len(f))
        out += f
    return bytes(out)


def decode_fields(buf: bytes, tag: int, count: int) -> list[bytes]:
    if not buf or buf[0] != tag:
        raise WireError(f"expected tag {tag:#x}, got {buf[:1]!r}")
    fields = []
    pos = 1
    for _ in range(count):
        if pos + 4 > len(buf):
            raise WireError("truncated field length")
        (n,) = struct.unpack(">I", buf[pos : pos + 4])
        pos += 4
        if pos + n > len(buf):
            raise WireError("truncated field body")
        fields.append(buf[pos : pos + n])
        pos += n
    if pos != len(buf):
        raise WireError(f"{len(buf) - pos} trailing bytes")
    return fields


def encode_int(v: int) -> bytes:
    return struct.pack(">q", v)


def decode_int(b: bytes) -> int:
    if len(b) != 8:
        raise WireError(f"bad integer field length {len(b)}")
    return struct.unpack(">q", b)[0]


@dataclass(frozen=True)
class M1:
    client_id: bytes
    nonce_c: bytes
    pseudonym: bytes  # encoded Pseudonym
    tid_prev: bytes

    def encode(self) -> bytes:
        return encode_fields(TAG_M1, [self.client_id, self.nonce_c,
                                      self.pseudonym, self.tid_prev])

    @classmethod
    def decode(cls, buf: bytes) -> "M1":
        return cls(*decode_fields(buf, TAG_M1, 4))


@dataclass(frozen=True)
class M2:
    server_id: bytes
    nonce_s: bytes
    resp_s: bytes

    def encode(self) -> bytes:
        return encode_fields(TAG_M2, [self.server_id, self.nonce_s, self.resp_s])

    @classmethod
    def decode(cls, buf: bytes) -> "M2":
        return cls(*decode_fields(buf, TAG_M2, 3))


@dataclass(frozen=True)
class M3:
    resp_c: bytes

    def encode(self) -> bytes:
        return encode_fields(TAG_M3, [self.resp_c])

    @classmethod
    def decode(cls, buf: bytes) -> "M3":
        return cls(*decode_fields(buf, TAG_M3, 1))


@dataclass(frozen=True)
class M4:
    resp_s: bytes

    def encode(self) -> bytes:
        return encode_fields(TAG_M4, [self.resp_s])

    @classmethod
    def decode(cls, buf: bytes) -> "M4":
        return cls(*decode_fields(buf, TAG_M4, 1))

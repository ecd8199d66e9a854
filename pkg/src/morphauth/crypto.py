"""Injected cryptography interface and its deterministic test double.

The protocol code only relies on the structural guarantees below:

- authenticated symmetric encryption (tampering or a wrong key is detected),
- signatures that verify under the matching public key and break on any
  bit flip,
- a deterministic key-derivation function over length-prefixed inputs,
- fresh nonces / identifiers / keys.

StubCrypto provides all of that from keyed BLAKE2b constructions seeded by
an explicit integer, so protocol traces are fully reproducible.  It is a
simulator double, not a hardened implementation: signatures and the
public-key box derive their keys from public material and offer no real
confidentiality or unforgeability.  Production use would inject a provider
backed by an actual cryptographic library.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from typing import Protocol

from .rng import SeedStream

TAG_LEN = 16
NONCE_LEN = 8
KEY_LEN = 32
ID_LEN = 16


class CryptoFailure(Exception):
    """Authenticated decryption failed (wrong key or tampered ciphertext)."""


@dataclass(frozen=True)
class KeyPair:
    private: bytes
    public: bytes


class CryptoProvider(Protocol):
    def keypair(self) -> KeyPair: ...

    def asym_encrypt(self, public: bytes, message: bytes) -> bytes: ...

    def asym_decrypt(self, private: bytes, ciphertext: bytes) -> bytes: ...

    def sign(self, private: bytes, message: bytes) -> bytes: ...

    def verify(self, public: bytes, message: bytes, signature: bytes) -> bool: ...

    def sym_encrypt(self, key: bytes, message: bytes) -> bytes: ...

    def sym_decrypt(self, key: bytes, ciphertext: bytes) -> bytes: ...

    def kdf(self, *parts: bytes) -> bytes: ...

    def random_nonce(self) -> bytes: ...

    def random_key(self) -> bytes: ...

    def random_id(self) -> bytes: ...


def _h(key: bytes, *parts: bytes, size: int = 32) -> bytes:
    mac = hashlib.blake2b(key=key[:64], digest_size=size)
    for p in parts:
        mac.update(len(p).to_bytes(4, "big") + p)
    return mac.digest()


def _keystream(key: bytes, nonce: bytes, length: int) -> bytes:
    blocks = []
    for i in range((length + 63) // 64):
        blocks.append(_h(key, b"ks", nonce, i.to_bytes(8, "big"), size=64))
    return b"".join(blocks)[:length]


class StubCrypto:
    """Deterministic provider; see the module docstring for its scope."""

    def __init__(self, seed: int):
        self._stream = SeedStream(seed).child("crypto")
        self._counter = 0

    def _fresh(self, n: int) -> bytes:
        out = bytearray()
        while len(out) < n:
            out += self._stream.u64(self._counter).to_bytes(8, "little")
            self._counter += 1
        return bytes(out[:n])

    def keypair(self) -> KeyPair:
        private = self._fresh(KEY_LEN)
        return KeyPair(private=private, public=self._public_of(private))

    @staticmethod
    def _public_of(private: bytes) -> bytes:
        return _h(private, b"public")

    def asym_encrypt(self, public: bytes, message: bytes) -> bytes:
        eph = self._fresh(NONCE_LEN)
        box_key = _h(public, b"box", eph)
        body = bytes(a ^ b for a, b in zip(message, _keystream(box_key, eph, len(message))))
        tag = _h(box_key, b"tag", eph, body, size=TAG_LEN)
        return eph + tag + body

    def asym_decrypt(self, private: bytes, ciphertext: bytes) -> bytes:
        if len(ciphertext) < NONCE_LEN + TAG_LEN:
            raise CryptoFailure("ciphertext too short")
        eph = ciphertext[:NONCE_LEN]
        tag = ciphertext[NONCE_LEN : NONCE_LEN + TAG_LEN]
        body = ciphertext[NONCE_LEN + TAG_LEN :]
        box_key = _h(self._public_of(private), b"box", eph)
        if not hmac.compare_digest(tag, _h(box_key, b"tag", eph, body, size=TAG_LEN)):
            raise CryptoFailure("public-key box authentication failed")
        return bytes(a ^ b for a, b in zip(body, _keystream(box_key, eph, len(body))))

    def sign(self, private: bytes, message: bytes) -> bytes:
        return _h(self._public_of(private), b"sig", message)

    def verify(self, public: bytes, message: bytes, signature: bytes) -> bool:
        return hmac.compare_digest(signature, _h(public, b"sig", message))

    def sym_encrypt(self, key: bytes, message: bytes) -> bytes:
        nonce = self._fresh(NONCE_LEN)
        body = bytes(a ^ b for a, b in zip(message, _keystream(key, nonce, len(message))))
        tag = _h(key, b"tag", nonce, body, size=TAG_LEN)
        return nonce + tag + body

    def sym_decrypt(self, key: bytes, ciphertext: bytes) -> bytes:
        if len(ciphertext) < NONCE_LEN + TAG_LEN:
            raise CryptoFailure("ciphertext too short")
        nonce = ciphertext[:NONCE_LEN]
        tag = ciphertext[NONCE_LEN : NONCE_LEN + TAG_LEN]
        body = ciphertext[NONCE_LEN + TAG_LEN :]
        if not hmac.compare_digest(tag, _h(key, b"tag", nonce, body, size=TAG_LEN)):
            raise CryptoFailure("symmetric authentication failed")
        return bytes(a ^ b for a, b in zip(body, _keystream(key, nonce, len(body))))

    def kdf(self, *parts: bytes) -> bytes:
        return _h(b"kdf-domain", *parts)

    def random_nonce(self) -> bytes:
        return self._fresh(ID_LEN)

    def random_key(self) -> bytes:
        return self._fresh(KEY_LEN)

    def random_id(self) -> bytes:
        return self._fresh(ID_LEN)

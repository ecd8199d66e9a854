"""Structural guarantees of the deterministic crypto double."""

import pytest

from morphauth.crypto import CryptoFailure, StubCrypto


@pytest.fixture()
def crypto():
    return StubCrypto(2025)


def test_sym_round_trip(crypto):
    key = crypto.random_key()
    msg = b"attack at dawn" * 100
    assert crypto.sym_decrypt(key, crypto.sym_encrypt(key, msg)) == msg


def test_sym_wrong_key_detected(crypto):
    k1 = crypto.random_key()
    k2 = crypto.random_key()
    ct = crypto.sym_encrypt(k1, b"payload")
    with pytest.raises(CryptoFailure):
        crypto.sym_decrypt(k2, ct)


def test_sym_tamper_detected(crypto):
    key = crypto.random_key()
    ct = bytearray(crypto.sym_encrypt(key, b"payload"))
    for pos in (0, 10, len(ct) - 1):
        bad = bytearray(ct)
        bad[pos] ^= 0x01
        with pytest.raises(CryptoFailure):
            crypto.sym_decrypt(key, bytes(bad))


def test_asym_round_trip_and_wrong_key(crypto):
    kp = crypto.keypair()
    other = crypto.keypair()
    ct = crypto.asym_encrypt(kp.public, b"secret face bytes")
    assert crypto.asym_decrypt(kp.private, ct) == b"secret face bytes"
    with pytest.raises(CryptoFailure):
        crypto.asym_decrypt(other.private, ct)


def test_signature_verifies_and_breaks_on_bit_flip(crypto):
    kp = crypto.keypair()
    msg = b"signed tuple"
    sig = crypto.sign(kp.private, msg)
    assert crypto.verify(kp.public, msg, sig)
    assert not crypto.verify(kp.public, msg + b"x", sig)
    bad_sig = bytes([sig[0] ^ 1]) + sig[1:]
    assert not crypto.verify(kp.public, msg, bad_sig)
    other = crypto.keypair()
    assert not crypto.verify(other.public, msg, sig)


def test_kdf_deterministic_and_length_prefixed(crypto):
    assert crypto.kdf(b"a", b"b") == crypto.kdf(b"a", b"b")
    # length prefixing: ("ab", "c") and ("a", "bc") must differ
    assert crypto.kdf(b"ab", b"c") != crypto.kdf(b"a", b"bc")


def test_freshness_and_determinism():
    c1 = StubCrypto(7)
    c2 = StubCrypto(7)
    seq1 = [c1.random_nonce() for _ in range(5)]
    seq2 = [c2.random_nonce() for _ in range(5)]
    assert seq1 == seq2
    assert len(set(seq1)) == 5
    assert StubCrypto(8).random_nonce() != seq1[0]

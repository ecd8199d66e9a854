"""Three-party verification with per-session template rotation.

Roles: a pseudonym authority issues signed temporary identities that each
carry an encrypted one-time random face; the client morphs its live face
with that random face; the server stores only the embedding of the morph.
Every accepted verification session atomically replaces the server record
(temporary id, reference embedding, session key) and the client
credentials, so the protected template never survives a successful login.

Check failures are terminal: the failing party logs a distinguishable
reason but emits nothing (a single opaque refusal on the wire), and the
in-flight pseudonym returns to the client pool.  Timestamps are injected
by callers; nothing reads ambient time.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass
from typing import Callable, Optional

from . import wire
from .crypto import CryptoFailure, CryptoProvider, KeyPair
from .matcher import Embedding, match
from .morph import LandmarkSet, landmarks_from_text, landmarks_to_text, morph
from .raster import Image, RasterError, image_from_pnm_bytes, image_to_pnm_bytes

MORPH_ALPHA = 0.5


class ProtocolError(Exception):
    pass


class EmptyPoolError(ProtocolError):
    """No unexpired pseudonym available to start a session."""


class SessionStateError(ProtocolError):
    """Operation called outside its phase."""


@dataclass(frozen=True)
class FacePayload:
    """A face image with its landmarks; the unit carried inside pseudonyms."""

    image: Image
    landmarks: LandmarkSet

    def encode(self) -> bytes:
        return wire.encode_fields(wire.TAG_FACE_PAYLOAD, [
            image_to_pnm_bytes(self.image),
            landmarks_to_text(self.landmarks).encode("ascii"),
        ])

    @classmethod
    def decode(cls, buf: bytes) -> "FacePayload":
        img_b, lms_b = wire.decode_fields(buf, wire.TAG_FACE_PAYLOAD, 2)
        img = image_from_pnm_bytes(img_b)
        lms = landmarks_from_text(lms_b.decode("ascii"), (img.width, img.height))
        return cls(image=img, landmarks=lms)

    def digest(self) -> str:
        return hashlib.blake2b(self.encode(), digest_size=16).hexdigest()


@dataclass(frozen=True)
class Pseudonym:
    tid: bytes
    enc_rf: bytes
    pid_ttp: bytes
    lifetime: int  # absolute expiry, seconds
    sig: bytes

    def signed_blob(self) -> bytes:
        # The signature covers everything but itself.
        return wire.encode_fields(wire.TAG_PSEUDONYM, [
            self.tid, self.enc_rf, self.pid_ttp, wire.encode_int(self.lifetime),
        ])

    def encode(self) -> bytes:
        return wire.encode_fields(wire.TAG_PSEUDONYM, [
            self.tid, self.enc_rf, self.pid_ttp,
            wire.encode_int(self.lifetime), self.sig,
        ])

    @classmethod
    def decode(cls, buf: bytes) -> "Pseudonym":
        tid, enc_rf, pid, lt, sig = wire.decode_fields(buf, wire.TAG_PSEUDONYM, 5)
        return cls(tid=tid, enc_rf=enc_rf, pid_ttp=pid,
                   lifetime=wire.decode_int(lt), sig=sig)


def hybrid_encrypt(crypto: CryptoProvider, public: bytes, payload: bytes) -> bytes:
    """Asymmetrically wrap a fresh content key, symmetrically carry the body."""
    content_key = crypto.random_key()
    return wire.encode_fields(wire.TAG_HYBRID, [
        crypto.asym_encrypt(public, content_key),
        crypto.sym_encrypt(content_key, payload),
    ])


def hybrid_decrypt(crypto: CryptoProvider, private: bytes, blob: bytes) -> bytes:
    wrapped, body = wire.decode_fields(blob, wire.TAG_HYBRID, 2)
    content_key = crypto.asym_decrypt(private, wrapped)
    return crypto.sym_decrypt(content_key, body)


class ProtocolLog:
    """Collects per-step check events; one dict per event, JSON-lines ready."""

    def __init__(self):
        self.events: list[dict] = []
        self.session_index: int = 0

    def add(self, party: str, step: str, check: str, outcome: str, **extra):
        ev = {"session": self.session_index, "party": party, "step": step,
              "check": check, "outcome": outcome}
        ev.update(extra)
        self.events.append(ev)


def _null_log() -> ProtocolLog:
    return ProtocolLog()


def verify_pseudonym(pn: Pseudonym, ttp_public: bytes, crypto: CryptoProvider,
                     now: int) -> bool:
    """Lifetime still valid and the signature covers the exact signed tuple."""
    if pn.lifetime <= now:
        return False
    return crypto.verify(ttp_public, pn.signed_blob(), pn.sig)


class TtpAuthority:
    """Trusted issuer of pseudonym sets with one-time random faces."""

    def __init__(self, crypto: CryptoProvider, face_source, ttl: int = 10**6,
                 pid: bytes = b"authority-1"):
        self.crypto = crypto
        self.face_source = face_source
        self.ttl = ttl
        self.pid = pid
        self.keys: KeyPair = crypto.keypair()

    @property
    def public_key(self) -> bytes:
        return self.keys.public

    def issue(self, client_id: bytes, client_public: bytes, n: int,
              now: int) -> list[Pseudonym]:
        if n < 1:
            raise ValueError("n must be >= 1")
        del client_id  # registration bookkeeping is out of simulator scope
        out = []
        for _ in range(n):
            img, lms = self.face_source.next_face()
            payload = FacePayload(image=img, landmarks=lms).encode()
            pn = Pseudonym(
                tid=self.crypto.random_id(),
                enc_rf=hybrid_encrypt(self.crypto, client_public, payload),
                pid_ttp=self.pid,
                lifetime=now + self.ttl,
                sig=b"",
            )
            sig = self.crypto.sign(self.keys.private, pn.signed_blob())
            out.append(Pseudonym(tid=pn.tid, enc_rf=pn.enc_rf, pid_ttp=pn.pid_ttp,
                                 lifetime=pn.lifetime, sig=sig))
        return out


@dataclass
class ClientCredentials:
    tid: bytes
    rf: FacePayload
    sk: bytes


@dataclass
class _ClientSession:
    pseudonym: Pseudonym
    nonce_c: bytes
    phase: str  # "m1-sent" -> "m3-sent"
    tid_new: Optional[bytes] = None
    rf_new: Optional[FacePayload] = None
    sk_new: Optional[bytes] = None


class Client:
    """Client-side state machine; holds the credential triple and the pool."""

    def __init__(self, crypto: CryptoProvider, client_id: bytes = b"client",
                 alpha: float = MORPH_ALPHA, log: Optional[ProtocolLog] = None):
        self.crypto = crypto
        self.client_id = client_id
        self.alpha = alpha
        self.keys: KeyPair = crypto.keypair()
        self.pool: list[Pseudonym] = []
        self.credentials: Optional[ClientCredentials] = None
        self.session: Optional[_ClientSession] = None
        self.committed_rf_digests: list[str] = []
        self.log = log if log is not None else _null_log()

    # -- pool helpers ------------------------------------------------------

    def add_pseudonyms(self, pns: list[Pseudonym]):
        self.pool.extend(pns)

    def _take_pseudonym(self, now: int) -> Pseudonym:
        # Expired pseudonyms are discarded as they surface.
        while self.pool:
            pn = self.pool.pop(0)
            if pn.lifetime > now:
                return pn
        raise EmptyPoolError("pseudonym pool is empty")

    def decrypt_rf(self, pn: Pseudonym) -> FacePayload:
        return FacePayload.decode(
            hybrid_decrypt(self.crypto, self.keys.private, pn.enc_rf)
        )

    # -- enrollment --------------------------------------------------------

    def enrollment_request(self, face_image: Image, face_landmarks: LandmarkSet,
                           now: int) -> tuple[Pseudonym, Image, FacePayload]:
        """Morph the presented face with a fresh pseudonym's random face."""
        pn = self._take_pseudonym(now)
        rf = self.decrypt_rf(pn)
        mf = morph(face_image, face_landmarks, rf.image, rf.landmarks, self.alpha)
        return pn, mf, rf

    def complete_enrollment(self, pn: Pseudonym, rf: FacePayload, sk: bytes):
        self.credentials = ClientCredentials(tid=pn.tid, rf=rf, sk=sk)

    def restore_pseudonym(self, pn: Pseudonym):
        self.pool.insert(0, pn)

    # -- verification ------------------------------------------------------

    def begin_session(self, now: int) -> wire.M1:
        if self.credentials is None:
            raise SessionStateError("client is not enrolled")
        if self.session is not None:
            raise SessionStateError("a session is already in flight")
        pn = self._take_pseudonym(now)
        nonce_c = self.crypto.random_nonce()
        self.session = _ClientSession(pseudonym=pn, nonce_c=nonce_c, phase="m1-sent")
        return wire.M1(client_id=self.client_id, nonce_c=nonce_c,
                       pseudonym=pn.encode(), tid_prev=self.credentials.tid)

    def handle_m2(self, m2: wire.M2, face_image: Image,
                  face_landmarks: LandmarkSet) -> Optional[wire.M3]:
        """Check the server's response, then build the double morph."""
        if self.session is None or self.session.phase != "m1-sent":
            raise SessionStateError("no session awaiting the server response")
        sess = self.session
        creds = self.credentials
        try:
            echoed = self.crypto.sym_decrypt(creds.sk, m2.resp_s)
        except CryptoFailure:
            self.log.add("client", "m2", "server-response-auth", "fail")
            self.abort_session()
            return None
        if echoed != creds.tid:
            self.log.add("client", "m2", "server-response-echo", "fail")
            self.abort_session()
            return None
        self.log.add("client", "m2", "server-response-echo", "ok")

        mf_cur = morph(face_image, face_landmarks,
                       creds.rf.image, creds.rf.landmarks, self.alpha)
        rf_new = self.decrypt_rf(sess.pseudonym)
        mf_new = morph(face_image, face_landmarks,
                       rf_new.image, rf_new.landmarks, self.alpha)
        sk_new = self.crypto.kdf(sess.pseudonym.tid, sess.nonce_c, m2.nonce_s)

        payload = wire.encode_fields(wire.TAG_VERIFY_PAYLOAD, [
            image_to_pnm_bytes(mf_cur), image_to_pnm_bytes(mf_new), sk_new,
        ])
        resp_c = self.crypto.sym_encrypt(creds.sk, payload)
        sess.phase = "m3-sent"
        sess.tid_new = sess.pseudonym.tid
        sess.rf_new = rf_new
        sess.sk_new = sk_new
        return wire.M3(resp_c=resp_c)

    def finalize(self, m4: wire.M4) -> str:
        """Outcome: "committed", "rejected", or "failed"."""
        if self.session is None or self.session.phase != "m3-sent":
            raise SessionStateError("no session awaiting the decision")
        sess = self.session
        try:
            echoed = self.crypto.sym_decrypt(sess.sk_new, m4.resp_s)
        except CryptoFailure:
            self.log.add("client", "m4", "decision-auth", "fail")
            self.abort_session()
            return "failed"
        if echoed == sess.tid_new:
            self.credentials = ClientCredentials(
                tid=sess.tid_new, rf=sess.rf_new, sk=sess.sk_new
            )
            self.committed_rf_digests.append(sess.rf_new.digest())
            self.session = None
            self.log.add("client", "m4", "decision", "committed")
            return "committed"
        self.log.add("client", "m4", "decision",
                     "rejected" if echoed == self.credentials.tid else "failed")
        self.abort_session()
        return "rejected" if echoed == self.credentials.tid else "failed"

    def abort_session(self):
        """Terminal failure path: the pseudonym survives for a retry."""
        if self.session is not None:
            self.restore_pseudonym(self.session.pseudonym)
            self.session = None


@dataclass
class ServerRecord:
    tid: bytes
    reference: Embedding
    sk: bytes
    epoch: int


@dataclass
class _ServerSession:
    tid_prev: bytes
    nonce_c: bytes
    nonce_s: bytes
    pseudonym: Pseudonym
    phase: str = "m2-sent"


@dataclass
class ServerDecision:
    m4: wire.M4
    accepted: bool
    score: float
    epoch: int


class Server:
    """Reference store plus per-temporary-id session handling.

    Distinct temporary ids may run sessions concurrently; a second session
    for an id already in flight is refused.  Rotation replaces the record
    atomically under the store lock.
    """

    def __init__(self, crypto: CryptoProvider, embedder: Callable[[Image], Embedding],
                 ttp_public: bytes, server_id: bytes = b"server",
                 log: Optional[ProtocolLog] = None):
        self.crypto = crypto
        self.embedder = embedder
        self.ttp_public = ttp_public
        self.server_id = server_id
        self.records: dict[bytes, ServerRecord] = {}
        self.sessions: dict[bytes, _ServerSession] = {}
        self.seen_tids: set[bytes] = set()
        self.reference_history: list[dict] = []
        self.log = log if log is not None else _null_log()
        self._lock = threading.Lock()

    # -- enrollment --------------------------------------------------------

    def enroll(self, pn: Pseudonym, morphed_face: Image, now: int) -> Optional[bytes]:
        """Verify the pseudonym and store the protected reference.

        Returns the fresh session key (delivered over the enrollment
        channel), or None with no state change.
        """
        if not verify_pseudonym(pn, self.ttp_public, self.crypto, now):
            self.log.add("server", "enroll", "pseudonym", "fail")
            return None
        with self._lock:
            if pn.tid in self.seen_tids:
                self.log.add("server", "enroll", "tid-unused", "fail")
                return None
            sk = self.crypto.random_key()
            self.records[pn.tid] = ServerRecord(
                tid=pn.tid, reference=self.embedder(morphed_face), sk=sk, epoch=0
            )
            self.seen_tids.add(pn.tid)
            self._note_reference(self.records[pn.tid])
        self.log.add("server", "enroll", "pseudonym", "ok")
        return sk

    def _note_reference(self, rec: ServerRecord):
        self.reference_history.append({
            "epoch": rec.epoch,
            "tid": rec.tid.hex(),
            "reference_digest": hashlib.blake2b(
                rec.reference.values.tobytes(), digest_size=16
            ).hexdigest(),
        })

    # -- verification ------------------------------------------------------

    def handle_m1(self, m1: wire.M1, now: int) -> Optional[wire.M2]:
        try:
            pn = Pseudonym.decode(m1.pseudonym)
        except wire.WireError:
            self.log.add("server", "m1", "pseudonym-decode", "fail")
            return None
        if pn.lifetime <= now:
            self.log.add("server", "m1", "pseudonym-lifetime", "fail")
            return None
        if not self.crypto.verify(self.ttp_public, pn.signed_blob(), pn.sig):
            self.log.add("server", "m1", "pseudonym-signature", "fail")
            return None
        with self._lock:
            rec = self.records.get(m1.tid_prev)
            if rec is None:
                self.log.add("server", "m1", "known-tid", "fail")
                return None
            if m1.tid_prev in self.sessions:
                self.log.add("server", "m1", "single-session", "fail")
                return None
            if pn.tid in self.seen_tids:
                self.log.add("server", "m1", "tid-unused", "fail")
                return None
            nonce_s = self.crypto.random_nonce()
            resp_s = self.crypto.sym_encrypt(rec.sk, m1.tid_prev)
            self.sessions[m1.tid_prev] = _ServerSession(
                tid_prev=m1.tid_prev, nonce_c=m1.nonce_c,
                nonce_s=nonce_s, pseudonym=pn,
            )
        self.log.add("server", "m1", "pseudonym-signature", "ok")
        return wire.M2(server_id=self.server_id, nonce_s=nonce_s, resp_s=resp_s)

    def handle_m3(self, tid_prev: bytes, m3: wire.M3,
                  threshold: float) -> Optional[ServerDecision]:
        with self._lock:
            sess = self.sessions.get(tid_prev)
            if sess is None or sess.phase != "m2-sent":
                raise SessionStateError("no session awaiting the client response")
            rec = self.records[tid_prev]

            try:
                payload = self.crypto.sym_decrypt(rec.sk, m3.resp_c)
            except CryptoFailure:
                self.log.add("server", "m3", "client-response-auth", "fail")
                del self.sessions[tid_prev]
                return None
            self.log.add("server", "m3", "client-response-auth", "ok")
            try:
                mf_cur_b, mf_new_b, sk_new = wire.decode_fields(
                    payload, wire.TAG_VERIFY_PAYLOAD, 3
                )
                mf_cur = image_from_pnm_bytes(mf_cur_b)
                mf_new = image_from_pnm_bytes(mf_new_b)
            except (wire.WireError, RasterError, ValueError):
                self.log.add("server", "m3", "payload-decode", "fail")
                del self.sessions[tid_prev]
                return None

            expected_sk = self.crypto.kdf(sess.pseudonym.tid, sess.nonce_c,
                                          sess.nonce_s)
            if expected_sk != sk_new:
                self.log.add("server", "m3", "session-key-confirm", "fail")
                del self.sessions[tid_prev]
                return None
            self.log.add("server", "m3", "session-key-confirm", "ok")

            decision = match(self.embedder(mf_cur), rec.reference, threshold)
            if not decision.accepted:
                self.log.add("server", "m3", "face-match", "reject",
                             score=decision.score)
                m4 = wire.M4(resp_s=self.crypto.sym_encrypt(sk_new, tid_prev))
                del self.sessions[tid_prev]
                return ServerDecision(m4=m4, accepted=False,
                                      score=decision.score, epoch=rec.epoch)

            self.log.add("server", "m3", "face-match", "accept",
                         score=decision.score)
            new_rec = ServerRecord(
                tid=sess.pseudonym.tid,
                reference=self.embedder(mf_new),
                sk=sk_new,
                epoch=rec.epoch + 1,
            )
            del self.records[tid_prev]
            self.records[new_rec.tid] = new_rec
            self.seen_tids.add(new_rec.tid)
            self._note_reference(new_rec)
            m4 = wire.M4(resp_s=self.crypto.sym_encrypt(sk_new, new_rec.tid))
            del self.sessions[tid_prev]
            return ServerDecision(m4=m4, accepted=True,
                                  score=decision.score, epoch=new_rec.epoch)

    def abort_session(self, tid_prev: bytes):
        with self._lock:
            self.sessions.pop(tid_prev, None)

    def current_record(self, tid: bytes) -> Optional[ServerRecord]:
        with self._lock:
            return self.records.get(tid)


def enroll(client: Client, server: Server, face_image: Image,
           face_landmarks: LandmarkSet, now: int) -> bool:
    """Run enrollment end to end; no state changes when the server refuses."""
    pn, mf, rf = client.enrollment_request(face_image, face_landmarks, now)
    sk = server.enroll(pn, mf, now)
    if sk is None:
        client.restore_pseudonym(pn)
        return False
    client.complete_enrollment(pn, rf, sk)
    return True


@dataclass
class SessionResult:
    outcome: str  # committed | rejected | refused | client_terminated |
    #               server_terminated | dropped_m1 | dropped_m2 | dropped_m3 |
    #               dropped_m4 | desync_m4_lost | failed
    accepted: Optional[bool] = None
    score: Optional[float] = None
    epoch: Optional[int] = None


def run_verification_session(client: Client, server: Server, face_image: Image,
                             face_landmarks: LandmarkSet, threshold: float,
                             now: int, faults: frozenset = frozenset()) -> SessionResult:
    """Drive one session, optionally dropping a message at any of the four
    steps.  Losing the decision message after the server rotated is the one
    interleaving that desynchronizes the two sides; it is detected here and
    logged, not repaired."""
    m1 = client.begin_session(now)
    if "drop_m1" in faults:
        client.abort_session()
        return SessionResult(outcome="dropped_m1")

    m2 = server.handle_m1(m1, now)
    if m2 is None:
        client.abort_session()
        return SessionResult(outcome="refused")
    if "drop_m2" in faults:
        client.abort_session()
        server.abort_session(m1.tid_prev)
        return SessionResult(outcome="dropped_m2")

    m3 = client.handle_m2(m2, face_image, face_landmarks)
    if m3 is None:
        server.abort_session(m1.tid_prev)
        return SessionResult(outcome="client_terminated")
    if "drop_m3" in faults:
        client.abort_session()
        server.abort_session(m1.tid_prev)
        return SessionResult(outcome="dropped_m3")

    decision = server.handle_m3(m1.tid_prev, m3, threshold)
    if decision is None:
        client.abort_session()
        return SessionResult(outcome="server_terminated")
    if "drop_m4" in faults:
        client.abort_session()
        if decision.accepted:
            server.log.add("server", "m4", "delivery",
                           "desync-window: server rotated, client did not")
            return SessionResult(outcome="desync_m4_lost", accepted=True,
                                 score=decision.score, epoch=decision.epoch)
        return SessionResult(outcome="dropped_m4", accepted=False,
                             score=decision.score, epoch=decision.epoch)

    outcome = client.finalize(decision.m4)
    return SessionResult(outcome=outcome, accepted=decision.accepted,
                         score=decision.score, epoch=decision.epoch)

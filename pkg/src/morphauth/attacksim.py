"""Score-leakage attack simulation across protection scenarios.

The adversary model: an attacker who learns one dissimilarity score per
verification session (the matcher leak) greedily perturbs an arbitrary
starting face, keeping a perturbation only when the leaked score drops.
Against a static protected template this converges; against the rotating
morph scheme the reference moves after every accepted genuine session,
which is the effect under test.

The attacker interface is a score oracle only: no images, embeddings, or
auxiliary data ever cross it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .crypto import StubCrypto
from .matcher import Embedding, distance, embed_toy
from .metrics import FAR_TARGETS, MetricsReport, build_report
from .protocol import Client, ProtocolLog, Server, TtpAuthority, enroll, \
    run_verification_session
from .raster import Image
from .rng import SeedStream
from .synthface import Capture, DirectoryFaceSource, SyntheticFaceSource, \
    render_capture, sample_identity
from .transforms import TransformSpec, apply_transform

SCENARIO_KINDS = ("unprotected", "gaussian", "laplacian", "spread", "implode", "otb")
BASELINE_KINDS = ("gaussian", "laplacian", "spread", "implode")

IMPOSTOR_PAIR_CAP = 128

# Capture-seed bands, so calibration, enrollment and live sessions never
# share a jitter draw.
_ENROLL_SEED = 10_000
_SESSION_SEED_BASE = 20_000


class ScenarioConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PopulationSpec:
    identities: int = 2
    captures_per_identity: int = 8
    jitter: float = 0.16
    seed: int = 1
    directory: str | None = None  # ingest id*_cap*.pgm/.lms instead of rendering

    def validate(self):
        if self.directory is not None:
            return  # counts come from the files
        if self.identities < 2:
            raise ScenarioConfigError("population needs at least 2 identities")
        if self.captures_per_identity < 2:
            raise ScenarioConfigError("need at least 2 captures per identity")


@dataclass(frozen=True)
class AttackConfig:
    budget: int = 180
    queries_per_session: int = 1
    step: float = 50.0
    patch: int = 16
    seed: int = 0

    def validate(self):
        if self.budget < 1:
            raise ScenarioConfigError("attack budget must be >= 1")
        if self.step <= 0:
            raise ScenarioConfigError("attack step must be > 0")
        if self.patch < 1:
            raise ScenarioConfigError("attack patch must be >= 1")
        if self.queries_per_session < 1:
            raise ScenarioConfigError("queries_per_session must be >= 1")


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    population: PopulationSpec = PopulationSpec()
    transform: TransformSpec | None = None
    alpha: float = 0.5
    face_source_seed: int = 7
    face_source_dir: str | None = None  # one-time faces from files instead
    embedder: str = "toy"
    threshold_policy: str = "eer"

    def validate(self):
        if self.kind not in SCENARIO_KINDS:
            raise ScenarioConfigError(f"unknown scenario kind {self.kind!r}")
        self.population.validate()
        if self.kind in BASELINE_KINDS:
            if self.transform is None or self.transform.kind != self.kind:
                raise ScenarioConfigError(
                    f"scenario {self.kind!r} needs a matching transform spec"
                )
        elif self.transform is not None:
            raise ScenarioConfigError(
                f"scenario {self.kind!r} does not take a transform"
            )
        if not (0.0 <= self.alpha <= 1.0):
            raise ScenarioConfigError("alpha must be in [0, 1]")
        if self.threshold_policy != "eer" and not any(
            self.threshold_policy == f"far={t}" for t in FAR_TARGETS
        ):
            raise ScenarioConfigError(
                f"unknown threshold policy {self.threshold_policy!r}"
            )
        if self.embedder != "toy" and not self.embedder.startswith("remote:"):
            raise ScenarioConfigError(f"unknown embedder {self.embedder!r}")


def resolve_embedder(spec: ScenarioSpec):
    if spec.embedder == "toy":
        return embed_toy
    from .matcher import RemoteEmbedder

    return RemoteEmbedder(spec.embedder[len("remote:"):]).embed


@dataclass
class AttackTrace:
    seed: int
    scenario: str
    threshold: float
    records: list[dict] = field(default_factory=list)

    def scores(self) -> list[float]:
        return [r["score"] for r in self.records]

    def final_best(self) -> float:
        return self.records[-1]["best_score"]

    def to_json(self) -> dict:
        return {"seed": self.seed, "scenario": self.scenario,
                "threshold": self.threshold, "records": self.records}


@dataclass
class ScoreRow:
    session: int
    role: str  # genuine | impostor | attacker
    score: float
    epoch: int
    scenario: str
    seed: int


def hill_climb_step(current: Image, current_score, oracle, cfg: AttackConfig,
                    stream: SeedStream, step_index: int):
    """One attacker move: shift a random square patch by one uniform draw
    in [-step, step], query the leaked score, keep the perturbation only on
    strict improvement.

    A None current_score means no score is known yet; the query is then
    spent on the current image itself.  Returns
    (retained_image, retained_score, queried_score).
    """
    if current_score is None:
        s = oracle(current)
        return current, s, s

    sub = stream.child("step", step_index)
    p = current.pixels
    h, w = p.shape[0], p.shape[1]
    patch = min(cfg.patch, w, h)
    x0 = sub.integer(0, 0, w - patch)
    y0 = sub.integer(1, 0, h - patch)
    delta = sub.uniform(2) * (2.0 * cfg.step) - cfg.step

    vals = p.astype(np.float64)
    vals[y0:y0 + patch, x0:x0 + patch] += delta
    proposal = Image(np.clip(np.floor(vals + 0.5), 0.0, 255.0).astype(np.uint8))

    q = oracle(proposal)
    if q < current_score:
        return proposal, q, q
    return current, current_score, q


def _per_identity_transform(base: TransformSpec, index: int) -> TransformSpec:
    # Each identity holds its own auxiliary-data seed.
    seed = SeedStream(base.seed).child("identity-ad", index).seed
    return TransformSpec(kind=base.kind, seed=seed, strength=base.strength)


class _BaselinePipeline:
    """Static-template scenarios: unprotected and the four noise transforms."""

    def __init__(self, spec: ScenarioSpec, embed_fn):
        self.spec = spec
        self.embed_fn = embed_fn

    def protect(self, img: Image, identity_index: int) -> Image:
        if self.spec.kind == "unprotected":
            return img
        return apply_transform(
            img, _per_identity_transform(self.spec.transform, identity_index)
        )

    def reference(self, cap: Capture, identity_index: int) -> Embedding:
        return self.embed_fn(self.protect(cap.image, identity_index))

    def probe_score(self, cap: Capture, identity_index: int,
                    reference: Embedding) -> float:
        return distance(self.embed_fn(self.protect(cap.image, identity_index)),
                        reference)


def impostor_pairs(captures_by_identity: list[list[Capture]], score_fn,
                   cap: int = IMPOSTOR_PAIR_CAP) -> list[float]:
    """Zero-effort impostor scores: every cross-identity (probe, reference)
    capture pair under the victim's protection, up to a pair cap."""
    if len(captures_by_identity) < 2:
        raise ScenarioConfigError("impostor pairs need at least 2 identities")
    out = []
    n = len(captures_by_identity)
    for vi in range(n):
        for oi in range(n):
            if oi == vi:
                continue
            for ref_cap in captures_by_identity[vi]:
                for probe_cap in captures_by_identity[oi]:
                    if len(out) >= cap:
                        return out
                    out.append(score_fn(vi, ref_cap, probe_cap))
    return out


def _load_directory_population(directory) -> list[list[Capture]]:
    """Captures from files named <identity>_<capture>.pgm with .lms sidecars."""
    import glob
    import os

    from .morph import read_landmarks
    from .raster import read_image

    groups: dict[str, list[Capture]] = {}
    for img_path in sorted(glob.glob(os.path.join(str(directory), "*.pgm"))):
        lms_path = img_path[:-4] + ".lms"
        if not os.path.exists(lms_path):
            continue
        stem = os.path.basename(img_path)[:-4]
        identity = stem.rsplit("_", 1)[0]
        img = read_image(img_path)
        lms = read_landmarks(lms_path, (img.width, img.height))
        groups.setdefault(identity, []).append(
            Capture(image=img, landmarks=lms, identity_id=identity)
        )
    captures = [groups[k] for k in sorted(groups)]
    if len(captures) < 2 or any(len(c) < 2 for c in captures):
        raise ScenarioConfigError(
            f"directory {directory} needs >=2 identities with >=2 captures each"
        )
    return captures


def _build_population(spec: ScenarioSpec, run_stream: SeedStream):
    """Returns (captures_by_identity, session_capture(identity, session))."""
    pop = spec.population
    if pop.directory is not None:
        captures = _load_directory_population(pop.directory)

        def session_capture(vi: int, session: int) -> Capture:
            group = captures[vi]
            return group[session % len(group)]

        return captures, session_capture

    identities = _population_identities(pop, run_stream)
    captures = [
        [render_capture(ident, k, pop.jitter)
         for k in range(pop.captures_per_identity)]
        for ident in identities
    ]

    def session_capture(vi: int, session: int) -> Capture:
        return render_capture(identities[vi], _SESSION_SEED_BASE + session,
                              pop.jitter)

    return captures, session_capture


def _make_face_source(spec: ScenarioSpec, seed: int):
    if spec.face_source_dir is not None:
        return DirectoryFaceSource(spec.face_source_dir)
    return SyntheticFaceSource(seed)


def _calibration_scores(spec: ScenarioSpec, embed_fn, captures, run_stream):
    """Genuine/impostor score lists, no attacker involved."""
    genuine: list[float] = []
    impostor: list[float] = []

    if spec.kind == "otb":
        source = _make_face_source(spec, run_stream.child("calib-faces").seed)

        def otb_score(ref_cap: Capture, probe_cap: Capture) -> float:
            from .morph import morph

            rf_img, rf_lms = source.next_face()
            ref = embed_fn(morph(ref_cap.image, ref_cap.landmarks,
                                 rf_img, rf_lms, spec.alpha))
            probe = embed_fn(morph(probe_cap.image, probe_cap.landmarks,
                                   rf_img, rf_lms, spec.alpha))
            return distance(probe, ref)

        for caps in captures:
            for i in range(len(caps)):
                for j in range(i + 1, len(caps)):
                    genuine.append(otb_score(caps[i], caps[j]))
        impostor = impostor_pairs(
            captures, lambda vi, ref_cap, probe_cap: otb_score(ref_cap, probe_cap)
        )
    else:
        pipeline = _BaselinePipeline(spec, embed_fn)
        embs = [
            [pipeline.reference(c, vi) for c in caps]
            for vi, caps in enumerate(captures)
        ]
        for vi, caps in enumerate(captures):
            for i in range(len(caps)):
                for j in range(i + 1, len(caps)):
                    genuine.append(distance(embs[vi][i], embs[vi][j]))
        impostor = impostor_pairs(
            captures,
            lambda vi, ref_cap, probe_cap: pipeline.probe_score(
                probe_cap, vi, pipeline.reference(ref_cap, vi)
            ),
        )
    return genuine, impostor


def calibrate(spec: ScenarioSpec, run_seed: int = 0) -> MetricsReport:
    """Pre-attack calibration: builds the population, scores genuine and
    impostor trials, and returns the metric block whose thresholds the
    attack run will snapshot."""
    spec.validate()
    embed_fn = resolve_embedder(spec)
    run_stream = SeedStream(spec.population.seed).child("run", run_seed)
    captures, _ = _build_population(spec, run_stream)
    genuine, impostor = _calibration_scores(spec, embed_fn, captures, run_stream)
    return build_report(genuine, impostor)


def _population_identities(pop: PopulationSpec, run_stream: SeedStream):
    ident_stream = run_stream.child("identities")
    return [sample_identity(ident_stream.u64(i)) for i in range(pop.identities)]


def _threshold_from_policy(spec: ScenarioSpec, report: MetricsReport) -> float:
    if spec.threshold_policy == "eer":
        return report.eer_threshold
    target = float(spec.threshold_policy.split("=", 1)[1])
    return report.threshold_at_far[target]


@dataclass
class RunResult:
    seed: int
    threshold: float
    report: MetricsReport
    rows: list[ScoreRow]
    trace: AttackTrace
    log: ProtocolLog


def run_scenario(spec: ScenarioSpec, attack: AttackConfig, seeds) -> list[RunResult]:
    """Run the scenario once per seed; see run_one for the session schedule."""
    spec.validate()
    attack.validate()
    return [run_one(spec, attack, s) for s in seeds]


def run_one(spec: ScenarioSpec, attack: AttackConfig, run_seed: int) -> RunResult:
    """One seeded run: calibrate, enroll the victim, then per session run a
    genuine verification (rotating the reference in the otb scenario) and
    grant the attacker exactly one score-oracle query."""
    spec.validate()
    attack.validate()
    embed_fn = resolve_embedder(spec)
    pop = spec.population
    run_stream = SeedStream(pop.seed).child("run", run_seed)
    captures, session_capture = _build_population(spec, run_stream)

    genuine_cal, impostor_cal = _calibration_scores(spec, embed_fn, captures,
                                                    run_stream)
    report = build_report(genuine_cal, impostor_cal)
    threshold = _threshold_from_policy(spec, report)

    rows: list[ScoreRow] = []
    for s in genuine_cal:
        rows.append(ScoreRow(0, "genuine", s, 0, spec.kind, run_seed))
    for s in impostor_cal:
        rows.append(ScoreRow(0, "impostor", s, 0, spec.kind, run_seed))

    log = ProtocolLog()
    if pop.directory is not None:
        enroll_cap = captures[0][0]
    else:
        victim = _population_identities(pop, run_stream)[0]
        enroll_cap = render_capture(victim, _ENROLL_SEED, pop.jitter)

    if spec.kind == "otb":
        crypto = StubCrypto(run_stream.child("crypto").seed)
        source = _make_face_source(
            spec, SeedStream(spec.face_source_seed).child("run", run_seed).seed
        )
        ttp = TtpAuthority(crypto, source)
        client = Client(crypto, alpha=spec.alpha, log=log)
        server = Server(crypto, embed_fn, ttp.public_key, log=log)
        client.add_pseudonyms(
            ttp.issue(client.client_id, client.keys.public, attack.budget + 8, now=0)
        )
        if not enroll(client, server, enroll_cap.image, enroll_cap.landmarks, now=0):
            raise RuntimeError("victim enrollment failed")

        def oracle(img: Image) -> float:
            rec = server.current_record(client.credentials.tid)
            return distance(embed_fn(img), rec.reference)

        def current_epoch() -> int:
            return server.current_record(client.credentials.tid).epoch
    else:
        pipeline = _BaselinePipeline(spec, embed_fn)
        reference = pipeline.reference(enroll_cap, 0)

        def oracle(img: Image) -> float:
            return distance(embed_fn(img), reference)

        def current_epoch() -> int:
            return 0

    attacker_ident = sample_identity(run_stream.child("attacker").u64(0))
    attacker_img = render_capture(attacker_ident, 0, 0.0).image
    attack_stream = SeedStream(attack.seed).child("run", run_seed)
    trace = AttackTrace(seed=run_seed, scenario=spec.kind, threshold=threshold)

    current = attacker_img
    retained: float | None = None

    for session in range(1, attack.budget + 1):
        log.session_index = session
        cap = session_capture(0, session)
        if spec.kind == "otb":
            result = run_verification_session(
                client, server, cap.image, cap.landmarks, threshold, now=session
            )
            if result.score is not None:
                rows.append(ScoreRow(session, "genuine", result.score,
                                     result.epoch, spec.kind, run_seed))
        else:
            score = pipeline.probe_score(cap, 0, reference)
            rows.append(ScoreRow(session, "genuine", score, 0, spec.kind, run_seed))

        epoch = current_epoch()
        for q in range(attack.queries_per_session):
            current, retained, queried = hill_climb_step(
                current, retained, oracle, attack, attack_stream,
                session * attack.queries_per_session + q,
            )
            trace.records.append({
                "session": session,
                "score": queried,
                "best_score": retained,
                "accepted": queried <= threshold,
                "epoch": epoch,
            })
            rows.append(ScoreRow(session, "attacker", queried, epoch,
                                 spec.kind, run_seed))

    return RunResult(seed=run_seed, threshold=threshold, report=report,
                     rows=rows, trace=trace, log=log)

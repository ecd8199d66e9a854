"""Command-line surface.

Subcommands: gen-synth (write toy captures), calibrate (pre-attack
metrics), attack (seeded attack runs), report (summarize runs), quality
(MSE/SSIM pair).  Exit codes: 0 success, 2 configuration error, 3 runtime
error.  Output files are written atomically (temp then rename) and are
byte-deterministic for fixed configs and seeds.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from . import __version__
from .attacksim import calibrate, run_one
from .config import ConfigError, load_scenario, scenario_to_json
from .metrics import build_report
from .morph import write_landmarks
from .raster import RasterError, mse, read_image, ssim, write_image
from .synthface import render_capture, sample_identity
from .rng import SeedStream


def _write_atomic(path: str, data: bytes):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _cmd_gen_synth(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    stream = SeedStream(args.seed).child("gen-synth")
    for i in range(args.identities):
        ident = sample_identity(stream.u64(i))
        for k in range(args.captures):
            cap = render_capture(ident, k, args.jitter)
            base = os.path.join(args.out, f"id{i:03d}_cap{k:02d}")
            write_image(cap.image, base + ".pgm")
            write_landmarks(cap.landmarks, base + ".lms")
    print(f"wrote {args.identities * args.captures} captures to {args.out}")
    return 0


def _cmd_calibrate(args) -> int:
    spec, _ = load_scenario(args.scenario)
    report = calibrate(spec, run_seed=args.run_seed)
    _write_atomic(args.out, _json_bytes(report.to_json()))
    print(f"calibration report written to {args.out}")
    return 0


def _cmd_attack(args) -> int:
    spec, attack = load_scenario(args.scenario)
    if args.budget is not None:
        from dataclasses import replace

        attack = replace(attack, budget=args.budget)
        attack.validate()
    seeds = list(range(args.seeds))
    os.makedirs(args.out, exist_ok=True)

    score_buf = io.StringIO()
    writer = csv.writer(score_buf, lineterminator="\n")
    writer.writerow(["session", "role", "score", "epoch", "scenario", "seed"])
    trace_lines = []
    protocol_lines = []
    calibration = {}
    for seed in seeds:
        result = run_one(spec, attack, seed)
        for row in result.rows:
            writer.writerow([row.session, row.role, repr(row.score),
                             row.epoch, row.scenario, row.seed])
        trace_lines.append(json.dumps(result.trace.to_json(), sort_keys=True))
        for event in result.log.events:
            protocol_lines.append(json.dumps({"seed": seed, **event},
                                             sort_keys=True))
        calibration[str(seed)] = {
            "threshold": result.threshold,
            "report": result.report.to_json(),
        }

    meta = {
        "scenario": scenario_to_json(spec, attack),
        "seeds": seeds,
        "budget": attack.budget,
    }
    _write_atomic(os.path.join(args.out, "scores.csv"),
                  score_buf.getvalue().encode("utf-8"))
    _write_atomic(os.path.join(args.out, "traces.jsonl"),
                  ("\n".join(trace_lines) + "\n").encode("utf-8"))
    if protocol_lines:
        # per-session protocol transcript with check outcomes (otb runs)
        _write_atomic(os.path.join(args.out, "protocol_events.jsonl"),
                      ("\n".join(protocol_lines) + "\n").encode("utf-8"))
    _write_atomic(os.path.join(args.out, "calibration.json"), _json_bytes(calibration))
    _write_atomic(os.path.join(args.out, "run_meta.json"), _json_bytes(meta))
    print(f"attack outputs written to {args.out}")
    return 0


class _TraceView:
    """Duck-typed trace for ASR computation from serialized records."""

    def __init__(self, obj: dict):
        self.obj = obj

    def scores(self):
        return [r["score"] for r in self.obj["records"]]

    def final_best(self):
        return self.obj["records"][-1]["best_score"]


def _cmd_report(args) -> int:
    in_dir = args.in_dir
    with open(os.path.join(in_dir, "run_meta.json"), "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    with open(os.path.join(in_dir, "traces.jsonl"), "r", encoding="utf-8") as fh:
        traces = [_TraceView(json.loads(line)) for line in fh if line.strip()]

    genuine, impostor, attacker_by_session = [], [], {}
    with open(os.path.join(in_dir, "scores.csv"), "r", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            score = float(row["score"])
            if row["role"] == "genuine":
                genuine.append(score)
            elif row["role"] == "impostor":
                impostor.append(score)
            else:
                attacker_by_session.setdefault(int(row["session"]), []).append(score)

    report = build_report(genuine, impostor, traces)
    finals = [t.final_best() for t in traces]
    summary = {
        "scenario": meta["scenario"],
        "seeds": meta["seeds"],
        "budget": meta["budget"],
        "metrics": report.to_json(),
        "attack": {
            "mean_final_best_score": sum(finals) / len(finals) if finals else None,
            "trace_thresholds": [t.obj["threshold"] for t in traces],
        },
    }

    evo_buf = io.StringIO()
    writer = csv.writer(evo_buf, lineterminator="\n")
    writer.writerow(["session", "mean_attacker_score", "min_attacker_score",
                     "max_attacker_score"])
    for session in sorted(attacker_by_session):
        scores = attacker_by_session[session]
        writer.writerow([
            session,
            repr(sum(scores) / len(scores)),
            repr(min(scores)),
            repr(max(scores)),
        ])

    _write_atomic(args.out, _json_bytes(summary))
    evo_path = os.path.join(os.path.dirname(os.path.abspath(args.out)),
                            "evolution.csv")
    _write_atomic(evo_path, evo_buf.getvalue().encode("utf-8"))
    print(f"summary written to {args.out}, series to {evo_path}")
    return 0


def _cmd_quality(args) -> int:
    a = read_image(args.a)
    b = read_image(args.b)
    print(json.dumps({"mse": mse(a, b), "ssim": ssim(a, b)}, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="morphauth",
        description="One-time morph template simulator and attack harness",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-synth", help="write toy captures as PGM + landmarks")
    g.add_argument("--identities", type=int, required=True)
    g.add_argument("--captures", type=int, required=True)
    g.add_argument("--jitter", type=float, default=0.05)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=_cmd_gen_synth)

    c = sub.add_parser("calibrate", help="pre-attack metrics for a scenario")
    c.add_argument("--scenario", required=True)
    c.add_argument("--run-seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=_cmd_calibrate)

    a = sub.add_parser("attack", help="seeded attack runs for a scenario")
    a.add_argument("--scenario", required=True)
    a.add_argument("--budget", type=int, default=None,
                   help="override the scenario's session budget")
    a.add_argument("--seeds", type=int, default=20,
                   help="number of seeded runs (seeds 0..K-1)")
    a.add_argument("--out", required=True)
    a.set_defaults(fn=_cmd_attack)

    r = sub.add_parser("report", help="summarize attack outputs")
    r.add_argument("--in", dest="in_dir", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(fn=_cmd_report)

    q = sub.add_parser("quality", help="MSE/SSIM between two images")
    q.add_argument("--a", required=True)
    q.add_argument("--b", required=True)
    q.set_defaults(fn=_cmd_quality)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, RasterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

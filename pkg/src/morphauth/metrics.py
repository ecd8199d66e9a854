"""Verification metrics on dissimilarity scores.

Conventions: lower score means more similar; a probe is accepted when its
score is at or below the threshold.  FAR(t) is the fraction of impostor
scores <= t, FRR(t) the fraction of genuine scores > t.  Thresholds sweep
the midpoints between consecutive distinct values of the merged score set,
plus minus/plus infinity, so every achievable operating point is visited
exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FAR_TARGETS = (0.1, 0.01, 0.001)


class EmptyScoresError(ValueError):
    pass


def _candidate_thresholds(genuine, impostor) -> np.ndarray:
    merged = np.unique(np.concatenate([np.asarray(genuine, dtype=np.float64),
                                       np.asarray(impostor, dtype=np.float64)]))
    mids = (merged[:-1] + merged[1:]) / 2.0
    return np.concatenate([[-np.inf], mids, [np.inf]])


def _rates(genuine, impostor, thresholds):
    g = np.sort(np.asarray(genuine, dtype=np.float64))
    i = np.sort(np.asarray(impostor, dtype=np.float64))
    far = np.searchsorted(i, thresholds, side="right") / i.size
    frr = (g.size - np.searchsorted(g, thresholds, side="right")) / g.size
    return far, frr


def _check_nonempty(genuine, impostor):
    if len(genuine) == 0 or len(impostor) == 0:
        raise EmptyScoresError("genuine and impostor score lists must be non-empty")


def eer(genuine, impostor) -> tuple[float, float]:
    """Equal error rate and its threshold.

    Returns ((FAR+FRR)/2, t) at the sweep point minimizing |FAR-FRR|, ties
    broken toward the smaller threshold.
    """
    _check_nonempty(genuine, impostor)
    ts = _candidate_thresholds(genuine, impostor)
    far, frr = _rates(genuine, impostor, ts)
    k = int(np.argmin(np.abs(far - frr)))
    return float((far[k] + frr[k]) / 2.0), float(ts[k])


def frr_at_far(genuine, impostor, far_target: float) -> tuple[float, float]:
    """FRR at the largest threshold whose FAR stays within the target."""
    _check_nonempty(genuine, impostor)
    if not (0.0 < far_target < 1.0):
        raise ValueError(f"far_target must be in (0, 1), got {far_target}")
    ts = _candidate_thresholds(genuine, impostor)
    far, frr = _rates(genuine, impostor, ts)
    ok = np.nonzero(far <= far_target)[0]
    k = int(ok[-1])
    return float(frr[k]), float(ts[k])


def asr(traces, threshold: float) -> float:
    """Fraction of attack traces that cross the threshold at least once."""
    if len(traces) == 0:
        raise EmptyScoresError("need at least one attack trace")
    hits = sum(
        1 for t in traces if any(s <= threshold for s in t.scores())
    )
    return hits / len(traces)


@dataclass
class MetricsReport:
    eer: float
    eer_threshold: float
    frr_at_far: dict[float, float]  # far target -> frr
    threshold_at_far: dict[float, float]  # far target -> threshold
    asr_at: dict[str, float | None]  # "eer" and "far=X" -> asr (None = not reported)
    genuine_count: int
    impostor_count: int
    trace_count: int

    def to_json(self) -> dict:
        return {
            "eer": self.eer,
            "eer_threshold": self.eer_threshold,
            "frr_at_far": {str(k): v for k, v in self.frr_at_far.items()},
            "threshold_at_far": {str(k): v for k, v in self.threshold_at_far.items()},
            "asr_at": dict(self.asr_at),
            "counts": {
                "genuine": self.genuine_count,
                "impostor": self.impostor_count,
                "attack_traces": self.trace_count,
            },
        }


def build_report(genuine, impostor, traces=()) -> MetricsReport:
    """Full metric block; ASR cells are filled only when traces exist.

    The ASR cell at FAR=0.1 is withheld (None) when the EER exceeds the
    FRR at that operating point, mirroring how such cells are left blank
    in comparative result tables.
    """
    rate, t_eer = eer(genuine, impostor)
    frrs = {}
    thresholds = {}
    for target in FAR_TARGETS:
        f, t = frr_at_far(genuine, impostor, target)
        frrs[target] = f
        thresholds[target] = t

    asr_at: dict[str, float | None] = {}
    if len(traces):
        asr_at["eer"] = asr(traces, t_eer)
        for target in FAR_TARGETS:
            key = f"far={target}"
            if target == 0.1 and rate > frrs[target]:
                asr_at[key] = None
            else:
                asr_at[key] = asr(traces, thresholds[target])
    return MetricsReport(
        eer=rate,
        eer_threshold=t_eer,
        frr_at_far=frrs,
        threshold_at_far=thresholds,
        asr_at=asr_at,
        genuine_count=len(genuine),
        impostor_count=len(impostor),
        trace_count=len(traces),
    )

"""Detector scoring (ROC/AUC), reception statistics, latency accounting.

ROC sweeps every distinct score value as a threshold (predicted positive
means score >= threshold); tied scores collapse into one vertex and the
area comes from the trapezoid rule, which equals the Mann-Whitney pair
statistic with half credit for ties.  Pixels lost in transmission score 0
before the sweep.

Ground-truth masks live in pre-georectification (line, sample) space, and
curves are computed there.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

ACQUISITION_S = 1000 / 249  # one cube at the fixed line rate


@dataclass(frozen=True, eq=False)
class RocCurve:
    """Operating points ordered from (0, 0) to (1, 1), plus the area."""

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


def roc_curve(
    scores: np.ndarray,
    mask: np.ndarray,
    lost: np.ndarray | None = None,
) -> RocCurve:
    """ROC of ``scores`` against boolean ``mask`` (True = anomalous).

    ``lost`` marks pixels dropped by the link; they are scored zero, the
    same value the ground side renders for them.
    """
    s = np.asarray(scores, dtype=np.float64).ravel().copy()
    y = np.asarray(mask, dtype=bool).ravel()
    if s.shape != y.shape:
        raise ValueError(f"scores {s.shape} and mask {y.shape} differ")
    if lost is not None:
        lost = np.asarray(lost, dtype=bool).ravel()
        if lost.shape != s.shape:
            raise ValueError("lost mask shape differs from scores")
        s[lost] = 0.0
    pos = int(y.sum())
    neg = y.size - pos
    if pos == 0 or neg == 0:
        raise ValueError("undefined ROC: mask needs at least one of each class")

    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(~y_sorted)
    # keep one vertex per distinct score: the last position of each run
    last = np.nonzero(np.diff(s_sorted))[0]
    idx = np.concatenate([last, [s.size - 1]])
    thresholds = np.concatenate([[np.inf], s_sorted[idx]])
    tpr = np.concatenate([[0.0], tp[idx] / pos])
    fpr = np.concatenate([[0.0], fp[idx] / neg])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(thresholds=thresholds, fpr=fpr, tpr=tpr, auc=auc)


def auc_delta(curve_a: RocCurve, curve_b: RocCurve) -> float:
    """Relative AUC difference (a - b) / b."""
    return (curve_a.auc - curve_b.auc) / curve_b.auc


@dataclass(frozen=True)
class ReceptionStats:
    mean_pct: float
    std_pct: float
    fraction_complete: float


def reception_stats(completions: Iterable[float]) -> ReceptionStats:
    """Population statistics of per-cube completion fractions."""
    c = np.asarray(list(completions), dtype=np.float64)
    if c.size == 0:
        raise ValueError("need at least one cube")
    return ReceptionStats(
        mean_pct=float(c.mean() * 100.0),
        std_pct=float(c.std() * 100.0),
        fraction_complete=float((c >= 1.0).mean()),
    )


@dataclass(frozen=True)
class StageTiming:
    """Seconds spent on one cube in each air-side stage."""

    save_s: float
    calibrate_s: float
    detect_s: float
    transmit_s: float

    STAGES = ("save", "calibrate", "detect", "transmit")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.save_s, self.calibrate_s, self.detect_s, self.transmit_s)


@dataclass(frozen=True)
class LatencyReport:
    """Latency accounting: acquisition plus the sum of stage means.

    ``real_time`` holds when every stage mean (plus ``k_sigma`` standard
    deviations) stays under the acquisition time.
    """

    stage_means: dict
    stage_stds: dict
    acquisition_s: float
    latency_s: float
    real_time: bool


def latency_report(
    timings: Sequence[StageTiming],
    acquisition_s: float = ACQUISITION_S,
    k_sigma: float = 0.0,
) -> LatencyReport:
    if not timings:
        raise ValueError("need at least one cube of timings")
    table = np.array([t.as_tuple() for t in timings], dtype=np.float64)
    means = table.mean(axis=0)
    stds = table.std(axis=0)
    latency = acquisition_s + float(means.sum())
    real_time = bool(np.all(means + k_sigma * stds < acquisition_s))
    names = StageTiming.STAGES
    return LatencyReport(
        stage_means=dict(zip(names, means.tolist())),
        stage_stds=dict(zip(names, stds.tolist())),
        acquisition_s=acquisition_s,
        latency_s=latency,
        real_time=real_time,
    )


def roc_to_csv(curve: RocCurve, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["threshold", "fpr", "tpr"])
        for t, fp, tp in zip(curve.thresholds, curve.fpr, curve.tpr):
            w.writerow([repr(float(t)), repr(float(fp)), repr(float(tp))])


def timings_to_csv(report: LatencyReport, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["stage", "mean_s", "std_s"])
        for name in StageTiming.STAGES:
            w.writerow(
                [name, repr(report.stage_means[name]), repr(report.stage_stds[name])]
            )


def summary_text(
    roc: RocCurve | None,
    reception: ReceptionStats | None,
    latency: LatencyReport | None,
) -> str:
    lines = []
    if roc is not None:
        lines.append(f"auc {roc.auc:.6f}")
    if reception is not None:
        lines.append(
            f"reception mean {reception.mean_pct:.2f}% std {reception.std_pct:.2f}% "
            f"complete {reception.fraction_complete * 100:.1f}%"
        )
    if latency is not None:
        stages = " ".join(
            f"{k} {latency.stage_means[k]:.3f}s" for k in StageTiming.STAGES
        )
        lines.append(
            f"latency {latency.latency_s:.2f}s ({stages}) "
            f"real_time {'yes' if latency.real_time else 'no'}"
        )
    return "\n".join(lines) + "\n"

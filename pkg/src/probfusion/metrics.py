"""Evaluation metrics: banded TPR, per-axis MAE, selection-completeness
guarantee, and one-sided t-tests.

Note on naming: wrong mappings are reported as "TN" to stay traceable
to the upstream reports even though they are false positives in the
standard confusion-matrix sense.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyInput, LengthMismatch, TooFewSamples, UnknownClass
from .stats import student_t_sf

DEFAULT_OBJECT_LENGTHS = {"car": 4.5, "escooter_rider": 1.5,
                          "pedestrian": 0.6, "other": 1.0}


@dataclass(frozen=True)
class ToleranceConfig:
    fraction: float = 0.15
    object_length_m: dict = field(
        default_factory=lambda: dict(DEFAULT_OBJECT_LENGTHS))

    def __post_init__(self):
        if self.fraction <= 0:
            raise ValueError("fraction must be positive")
        if any(v <= 0 for v in self.object_length_m.values()):
            raise ValueError("object lengths must be positive")


@dataclass(frozen=True)
class TprResult:
    tp: int
    tn: int

    @property
    def rate(self) -> float:
        return self.tp / (self.tp + self.tn)


@dataclass(frozen=True)
class GuaranteeConfig:
    t1: float = 1.0          # per-frame missed-point count threshold
    t2: float = 0.9          # required probability
    t1_fraction: Optional[float] = None  # if set, t1 = fraction of true count

    def __post_init__(self):
        if self.t1 < 0:
            raise ValueError("t1 must be nonnegative")
        if not 0.0 < self.t2 <= 1.0:
            raise ValueError("t2 must lie in (0, 1]")


def tolerance_band(gt_range: float, class_label: str,
                   cfg: ToleranceConfig) -> tuple[float, float]:
    """Valid range interval around ground truth: +-fraction * object length."""
    if gt_range <= 0:
        raise ValueError("ground-truth range must be positive")
    if class_label not in cfg.object_length_m:
        raise UnknownClass(f"no object length configured for {class_label!r}")
    half = cfg.fraction * cfg.object_length_m[class_label]
    return gt_range - half, gt_range + half


def tpr(point_ranges: Sequence[float], gt_range: float, class_label: str,
        cfg: ToleranceConfig) -> TprResult:
    """Correct vs wrong mappings judged by the tolerance band (inclusive)."""
    ranges = np.asarray(list(point_ranges), dtype=float)
    if len(ranges) == 0:
        raise EmptyInput("no point ranges to evaluate")
    low, high = tolerance_band(gt_range, class_label, cfg)
    tp = int(((ranges >= low) & (ranges <= high)).sum())
    return TprResult(tp=tp, tn=len(ranges) - tp)


def mae_axis(estimates: Sequence[float],
             ground_truths: Sequence[float]) -> float:
    """Mean absolute error between aligned series."""
    est = np.asarray(list(estimates), dtype=float)
    gt = np.asarray(list(ground_truths), dtype=float)
    if len(est) != len(gt):
        raise LengthMismatch(f"{len(est)} estimates vs {len(gt)} ground truths")
    if len(est) == 0:
        raise EmptyInput("empty series")
    return float(np.mean(np.abs(est - gt)))


@dataclass(frozen=True)
class GuaranteeResult:
    empirical_probability: float
    passed: bool
    per_frame_missed: list


def selection_completeness(per_frame: Sequence[tuple],
                           g: GuaranteeConfig) -> GuaranteeResult:
    """Check the missed-point guarantee over frames.

    per_frame holds (selected_indices, true_member_indices) pairs; a
    frame succeeds when |true| - |selected intersect true| < t1. Passes
    when the empirical success fraction reaches t2.
    """
    if not per_frame:
        raise EmptyInput("no frames to evaluate")
    missed = []
    ok = 0
    for selected, true_members in per_frame:
        true_set = set(int(i) for i in true_members)
        hit = len(true_set & set(int(i) for i in selected))
        m = len(true_set) - hit
        missed.append(m)
        t1 = g.t1 if g.t1_fraction is None else g.t1_fraction * len(true_set)
        if m < t1:
            ok += 1
    prob = ok / len(per_frame)
    return GuaranteeResult(empirical_probability=prob,
                           passed=prob >= g.t2,
                           per_frame_missed=missed)


def _one_sided_p(t_stat: float, dof: int) -> float:
    return student_t_sf(t_stat, dof)


def paired_t_test(before: Sequence[float],
                  after: Sequence[float]) -> tuple[float, float, int]:
    """Paired one-sided t-test of H1: mean(after - before) > 0.

    Returns (t, p_value, n). Zero-variance differences degenerate to
    t = +-inf (p 0 or 1) or t = 0 (p 0.5).
    """
    b = np.asarray(list(before), dtype=float)
    a = np.asarray(list(after), dtype=float)
    if len(a) != len(b):
        raise LengthMismatch(f"{len(b)} before vs {len(a)} after")
    n = len(a)
    if n < 2:
        raise TooFewSamples("paired t-test needs at least 2 pairs")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 0.5, n
        t_stat = math.inf if mean > 0 else -math.inf
        return t_stat, (0.0 if mean > 0 else 1.0), n
    t_stat = mean / (sd / math.sqrt(n))
    return t_stat, _one_sided_p(t_stat, n - 1), n


def one_sample_right_tail_t_test(sample: Sequence[float],
                                 mu0: float = 0.5) -> tuple[float, float, int]:
    """One-sample right-tailed t-test of H1: mean > mu0."""
    x = np.asarray(list(sample), dtype=float)
    n = len(x)
    if n < 2:
        raise TooFewSamples("one-sample t-test needs at least 2 values")
    mean = float(x.mean())
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        if mean == mu0:
            return 0.0, 0.5, n
        t_stat = math.inf if mean > mu0 else -math.inf
        return t_stat, (0.0 if mean > mu0 else 1.0), n
    t_stat = (mean - mu0) / (sd / math.sqrt(n))
    return t_stat, _one_sided_p(t_stat, n - 1), n

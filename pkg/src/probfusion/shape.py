"""Shape-similarity cluster selection.

A cluster's 2-D projection is summarized by a 3x3 occupancy grid over
its bounding rectangle; candidates are de-rotated with a constrained
PCA, compared to a per-class benchmark with KL divergence, and ranked
by a sigmoid similarity score.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cluster import CandidateCluster
from .errors import DegenerateCluster, EmptyInput

MAX_ROTATION_DEG = 40.0


@dataclass(frozen=True)
class ShapeDescriptor:
    weights: np.ndarray  # 9 nonnegative reals, row-major 3x3, sum 1

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.shape != (9,):
            raise ValueError("descriptor needs exactly 9 weights")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class RotationEstimate:
    angle_deg: float
    rejected: bool = False


@dataclass(frozen=True)
class ShapeFilterConfig:
    sigmoid_gain: float = 1.0
    kl_smoothing: float = 1e-6
    benchmark_min_samples: int = 10

    def __post_init__(self):
        if self.sigmoid_gain <= 0:
            raise ValueError("sigmoid_gain must be positive")
        if self.kl_smoothing <= 0:
            raise ValueError("kl_smoothing must be positive")


@dataclass
class BenchmarkShapeRegistry:
    shapes: dict = field(default_factory=dict)        # class -> ShapeDescriptor
    sample_counts: dict = field(default_factory=dict)  # class -> int

    def get(self, class_label: str) -> Optional[ShapeDescriptor]:
        return self.shapes.get(class_label)

    def save(self, path) -> None:
        payload = {cls: [float(x) for x in d.weights]
                   for cls, d in self.shapes.items()}
        payload["_sample_counts"] = self.sample_counts
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "BenchmarkShapeRegistry":
        with open(path) as fh:
            raw = json.load(fh)
        counts = raw.pop("_sample_counts", {})
        shapes = {name: ShapeDescriptor(np.asarray(w)) for name, w in raw.items()}
        return cls(shapes=shapes, sample_counts=counts)


def principal_axis_angle(points_2d: np.ndarray) -> RotationEstimate:
    """Signed angle between the first principal axis and the vertical.

    Mapped to (-90, 90]; estimates beyond +-40 degrees are marked
    rejected and no rotation is applied downstream.
    """
    pts = np.asarray(points_2d, dtype=float).reshape(-1, 2)
    if len(np.unique(pts, axis=0)) < 2:
        raise DegenerateCluster("need at least 2 distinct points for PCA")
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / len(pts)
    eigvals, eigvecs = np.linalg.eigh(cov)
    major = eigvecs[:, np.argmax(eigvals)]  # (e_u, e_v)
    # Counter-clockwise rotation (in u-v) that tilted the axis off vertical;
    # the eigenvector's sign ambiguity cancels under the mod-180 mapping.
    angle = math.degrees(math.atan2(-major[0], major[1]))
    if angle <= -90.0:
        angle += 180.0
    elif angle > 90.0:
        angle -= 180.0
    # Tiny epsilon keeps an exactly-40-degree tilt on the accepted side
    # despite eigensolver rounding.
    return RotationEstimate(angle_deg=angle,
                            rejected=abs(angle) > MAX_ROTATION_DEG + 1e-9)


def derotate(points_2d: np.ndarray, est: RotationEstimate) -> np.ndarray:
    """Rotate by -angle about the centroid; identity for rejected estimates."""
    pts = np.asarray(points_2d, dtype=float).reshape(-1, 2)
    if est.rejected or est.angle_deg == 0.0:
        return pts.copy()
    theta = math.radians(-est.angle_deg)
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    centroid = pts.mean(axis=0)
    return (pts - centroid) @ rot.T + centroid


def compute_descriptor(points_2d: np.ndarray) -> ShapeDescriptor:
    """3x3 occupancy fractions over the points' bounding rectangle.

    Cells are half-open except the final row/column; rows follow the
    second coordinate, columns the first.
    """
    pts = np.asarray(points_2d, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise DegenerateCluster("cannot describe an empty point set")
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    idx = np.zeros_like(pts, dtype=int)
    for d in range(2):
        if span[d] > 0:
            idx[:, d] = np.minimum((3 * (pts[:, d] - lo[d]) / span[d]).astype(int), 2)
    cells = idx[:, 1] * 3 + idx[:, 0]  # row from v, column from u
    weights = np.bincount(cells, minlength=9).astype(float) / len(pts)
    return ShapeDescriptor(weights=weights)


def kl_divergence(p: ShapeDescriptor, q: ShapeDescriptor,
                  smoothing: float = 1e-6) -> float:
    """KL(P || Q) in nats after additive smoothing of both distributions."""
    pw = p.weights + smoothing
    qw = q.weights + smoothing
    pw = pw / pw.sum()
    qw = qw / qw.sum()
    return float(np.sum(pw * np.log(pw / qw)))


def similarity_score(d_kl: float, k: float = 1.0) -> float:
    """Map a KL distance onto (0, 1]: 2 / (1 + exp(k * d))."""
    if d_kl < 0:
        raise ValueError("KL divergence cannot be negative")
    return 2.0 / (1.0 + math.exp(k * d_kl))


def build_benchmark(descriptors: Sequence[ShapeDescriptor],
                    min_samples: int = 10) -> ShapeDescriptor:
    """Per-bin mean of sample descriptors, renormalized."""
    if not descriptors:
        raise EmptyInput("no descriptors to average")
    if len(descriptors) < min_samples:
        warnings.warn(
            f"benchmark built from only {len(descriptors)} samples "
            f"(recommended minimum {min_samples})", stacklevel=2)
    mean = np.mean([d.weights for d in descriptors], axis=0)
    return ShapeDescriptor(weights=mean / mean.sum())


@dataclass(frozen=True)
class CandidateScore:
    cluster: CandidateCluster
    pre_rotation_score: float
    post_rotation_score: float
    distance_m: float
    rotation_deg: float
    rotation_rejected: bool
    degenerate: bool


def score_candidate(points_2d: np.ndarray, center_range: float,
                    benchmark: ShapeDescriptor, cfg: ShapeFilterConfig,
                    cluster: CandidateCluster) -> CandidateScore:
    try:
        pre = compute_descriptor(points_2d)
        est = principal_axis_angle(points_2d)
        post = compute_descriptor(derotate(points_2d, est))
    except DegenerateCluster:
        return CandidateScore(cluster=cluster, pre_rotation_score=0.0,
                              post_rotation_score=0.0, distance_m=center_range,
                              rotation_deg=0.0, rotation_rejected=False,
                              degenerate=True)
    k = cfg.sigmoid_gain
    return CandidateScore(
        cluster=cluster,
        pre_rotation_score=similarity_score(
            kl_divergence(pre, benchmark, cfg.kl_smoothing), k),
        post_rotation_score=similarity_score(
            kl_divergence(post, benchmark, cfg.kl_smoothing), k),
        distance_m=center_range,
        rotation_deg=est.angle_deg,
        rotation_rejected=est.rejected,
        degenerate=False,
    )


def select_cluster(candidates: Sequence[CandidateCluster],
                   points_2d_per_candidate: Sequence[np.ndarray],
                   benchmark: ShapeDescriptor,
                   cfg: ShapeFilterConfig) -> tuple[CandidateCluster, list[CandidateScore]]:
    """Pick the candidate most similar to the class benchmark.

    A single candidate wins unconditionally. Ties (including degenerate
    candidates scoring 0) break toward smaller center range. Returns the
    winner plus all per-candidate scores for diagnostics.
    """
    if not candidates:
        raise EmptyInput("no candidate clusters")
    scores = [score_candidate(pts, cand.center_range, benchmark, cfg, cand)
              for cand, pts in zip(candidates, points_2d_per_candidate)]
    if len(candidates) == 1:
        return candidates[0], scores
    best = min(range(len(scores)),
               key=lambda i: (-scores[i].post_rotation_score,
                              scores[i].distance_m))
    return candidates[best], scores

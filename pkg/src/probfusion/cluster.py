"""Mode-based clustering of AOI points over a range histogram.

Ranges are planar XY distances. K-Means finds high-density distance
centers which anchor the histogram bins; remaining bins fill the span
sequentially at the configured granularity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyInput, NoQualifiedCluster

DEFAULT_GRANULARITY = {"pedestrian": 0.5, "escooter_rider": 0.5,
                       "car": 2.0, "other": 1.0}


@dataclass(frozen=True)
class ClusteringConfig:
    granularity: dict = field(default_factory=lambda: dict(DEFAULT_GRANULARITY))
    kmeans_k: int = 3
    kmeans_max_iter: int = 50
    min_peak_count: int = 5
    peak_ratio: float = 0.3
    rng_seed: int = 0

    def __post_init__(self):
        if any(g <= 0 for g in self.granularity.values()):
            raise ValueError("granularity must be positive")
        if self.kmeans_k < 1:
            raise ValueError("kmeans_k must be at least 1")
        if not 0.0 < self.peak_ratio <= 1.0:
            raise ValueError("peak_ratio must lie in (0, 1]")

    def granularity_for(self, class_label: str) -> float:
        return self.granularity.get(class_label,
                                    DEFAULT_GRANULARITY.get(class_label, 1.0))


@dataclass(frozen=True)
class RangeHistogram:
    bin_centers: np.ndarray  # ascending, meters
    counts: np.ndarray       # per bin
    assignments: np.ndarray  # point index -> bin index
    anchor_mask: np.ndarray  # True where a bin came from a K-Means center


@dataclass(frozen=True)
class CandidateCluster:
    member_indices: np.ndarray  # indices into the AOI point list
    center_range: float
    count: int


def planar_ranges(xyz: np.ndarray) -> np.ndarray:
    xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
    return np.hypot(xyz[:, 0], xyz[:, 1])


def _kmeans_pp_init(values: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [values[rng.integers(len(values))]]
    for _ in range(1, k):
        d2 = np.min((values[:, None] - np.asarray(centers)[None, :]) ** 2, axis=1)
        total = d2.sum()
        if total <= 0:
            centers.append(values[rng.integers(len(values))])
            continue
        centers.append(values[rng.choice(len(values), p=d2 / total)])
    return np.asarray(centers, dtype=float)


def seed_bin_centers(ranges: np.ndarray, cfg: ClusteringConfig) -> np.ndarray:
    """1-D K-Means centers over the range values, sorted ascending."""
    values = np.asarray(ranges, dtype=float).ravel()
    if len(values) == 0:
        raise EmptyInput("no ranges to cluster")
    distinct = np.unique(values)
    k = min(cfg.kmeans_k, len(distinct))
    if k == 1:
        return np.array([values.mean()])
    rng = np.random.default_rng(cfg.rng_seed)
    centers = _kmeans_pp_init(values, k, rng)
    for _ in range(cfg.kmeans_max_iter):
        labels = np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)
        new_centers = centers.copy()
        for j in range(k):
            members = values[labels == j]
            if len(members):
                new_centers[j] = members.mean()
        if np.allclose(new_centers, centers, atol=1e-12):
            centers = new_centers
            break
        centers = new_centers
    return np.sort(centers)


def merge_close_centers(centers: np.ndarray, granularity: float,
                        weights: Optional[np.ndarray] = None) -> np.ndarray:
    """Collapse anchor centers closer than one bin width.

    Two anchors inside the same granularity window would split a single
    object's points across bins; they are replaced by their (optionally
    weighted) mean.
    """
    centers = np.asarray(centers, dtype=float).ravel()
    order = np.argsort(centers)
    centers = centers[order]
    if weights is None:
        weights = np.ones_like(centers)
    else:
        weights = np.asarray(weights, dtype=float).ravel()[order]
    groups: list[list[int]] = [[0]]
    for i in range(1, len(centers)):
        g = groups[-1]
        mean = np.average(centers[g], weights=weights[g])
        if centers[i] - mean < granularity:
            g.append(i)
        else:
            groups.append([i])
    return np.array([np.average(centers[g], weights=weights[g])
                     for g in groups])


def build_range_histogram(ranges: np.ndarray, centers: np.ndarray,
                          cfg: ClusteringConfig,
                          granularity: float) -> RangeHistogram:
    """Bins anchored at K-Means centers, filled outward at fixed width.

    Anchors closer than one granularity are merged first. Every point is
    assigned to exactly one bin: the nearest center, ties to the lower
    bin index.
    """
    values = np.asarray(ranges, dtype=float).ravel()
    if len(values) == 0:
        raise EmptyInput("no ranges to histogram")
    raw_anchors = np.sort(np.asarray(centers, dtype=float).ravel())
    nearest = np.argmin(np.abs(values[:, None] - raw_anchors[None, :]), axis=1)
    anchor_weights = np.bincount(nearest, minlength=len(raw_anchors)) + 1.0
    anchors = merge_close_centers(raw_anchors, granularity, anchor_weights)
    g = float(granularity)

    bin_centers: list[float] = []
    anchor_flags: list[bool] = []
    lo, hi = values.min(), values.max()

    # Extend to the left of the first anchor.
    left = []
    c = anchors[0] - g
    while c + g / 2.0 > lo:
        left.append(c)
        c -= g
    bin_centers.extend(reversed(left))
    anchor_flags.extend([False] * len(left))

    for j, a in enumerate(anchors):
        if j > 0:
            # Fill the gap after the previous anchor at fixed width,
            # stopping half a bin short of the next anchor so no filler
            # lands (nearly) on top of it.
            c = anchors[j - 1] + g
            while c < a - g / 2.0:
                bin_centers.append(c)
                anchor_flags.append(False)
                c += g
        bin_centers.append(float(a))
        anchor_flags.append(True)

    # Extend to the right of the last anchor.
    c = anchors[-1] + g
    while c - g / 2.0 < hi:
        bin_centers.append(c)
        anchor_flags.append(False)
        c += g

    centers_arr = np.asarray(bin_centers)
    dist = np.abs(values[:, None] - centers_arr[None, :])
    assignments = np.argmin(dist, axis=1)  # argmin takes the lower index on ties
    counts = np.bincount(assignments, minlength=len(centers_arr))
    return RangeHistogram(bin_centers=centers_arr,
                          counts=counts,
                          assignments=assignments,
                          anchor_mask=np.asarray(anchor_flags))


def select_candidate_clusters(hist: RangeHistogram,
                              cfg: ClusteringConfig) -> list[CandidateCluster]:
    """Qualified peaks of the histogram, ordered by descending count.

    Peaks are local maxima of the counts; they qualify when the count
    reaches min_peak_count and peak_ratio of the highest count. Ties in
    count are broken toward smaller range.
    """
    counts = hist.counts
    n = len(counts)
    padded = np.concatenate(([0], counts, [0]))
    is_peak = (padded[1:-1] >= padded[:-2]) & (padded[1:-1] >= padded[2:]) \
        & (padded[1:-1] > 0)
    max_count = int(counts.max(initial=0))
    clusters = []
    for i in range(n):
        if not is_peak[i]:
            continue
        c = int(counts[i])
        if c < cfg.min_peak_count or c < cfg.peak_ratio * max_count:
            continue
        members = np.nonzero(hist.assignments == i)[0]
        clusters.append(CandidateCluster(member_indices=members,
                                         center_range=float(hist.bin_centers[i]),
                                         count=c))
    if not clusters:
        raise NoQualifiedCluster(
            f"no peak met count >= {cfg.min_peak_count} "
            f"and ratio >= {cfg.peak_ratio}")
    clusters.sort(key=lambda cl: (-cl.count, cl.center_range))
    return clusters

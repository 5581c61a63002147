"""Trajectory outlier detection and smoothing.

Detection fits order-2 polynomials per dimension with RANSAC and flags
samples beyond twice the residual deviation in any dimension; smoothing
fits order-3 polynomials on the inliers and interpolates gaps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .errors import TooFewInliers, TooFewSamples

DETECT_ORDER = 2
SMOOTH_ORDER = 3


@dataclass(frozen=True)
class SmootherConfig:
    threshold_sigma: float = 2.0
    ransac_iterations: int = 100
    ransac_subset: int = DETECT_ORDER + 2
    min_samples: int = 8
    sigma_floor: float = 0.05  # meters
    rng_seed: int = 0

    def __post_init__(self):
        if self.threshold_sigma <= 0:
            raise ValueError("threshold_sigma must be positive")
        if self.min_samples <= SMOOTH_ORDER + 1:
            raise ValueError("min_samples must exceed smooth_order + 1")
        if self.ransac_subset < DETECT_ORDER + 1:
            raise ValueError("ransac_subset too small for an order-2 fit")


@dataclass(frozen=True)
class TrackSample:
    t: float
    x: float
    y: float
    z: float = 0.0
    outlier: bool = False
    interpolated: bool = False


@dataclass(frozen=True)
class SmoothedTrajectory:
    samples: list  # of TrackSample
    outlier_flags: np.ndarray  # over the raw input samples
    coefficients: dict = field(default_factory=dict)  # dim -> Polynomial


def _as_arrays(track: Sequence[TrackSample]) -> tuple[np.ndarray, np.ndarray]:
    t = np.array([s.t for s in track], dtype=float)
    xyz = np.array([[s.x, s.y, s.z] for s in track], dtype=float)
    if np.any(np.diff(t) <= 0):
        raise ValueError("timestamps must be strictly increasing")
    return t, xyz


def _ransac_best_fit(t: np.ndarray, values: np.ndarray,
                     cfg: SmootherConfig,
                     rng: np.random.Generator) -> Polynomial:
    """Best order-2 model over RANSAC trials.

    Trials are ranked by the median of squared residuals (least-median-
    of-squares), which needs no noise-scale estimate and tolerates up to
    half the samples being contaminated; ties break by lower RMS.
    """
    n = len(t)
    best_key = None
    best_model = None
    for _ in range(cfg.ransac_iterations):
        subset = rng.choice(n, size=min(cfg.ransac_subset, n), replace=False)
        try:
            model = Polynomial.fit(t[subset], values[subset], DETECT_ORDER)
        except np.linalg.LinAlgError:
            continue
        resid = np.abs(values - model(t))
        key = (float(np.median(resid ** 2)),
               float(np.sqrt(np.mean(resid ** 2))))
        if best_key is None or key < best_key:
            best_key = key
            best_model = model
    if best_model is None:
        raise TooFewSamples("no valid RANSAC trial")
    return best_model


def detect_outliers(track: Sequence[TrackSample],
                    cfg: SmootherConfig) -> np.ndarray:
    """Outlier flags: a sample is flagged when any dimension's residual
    against its best order-2 model exceeds threshold_sigma times the
    model's residual deviation (floored at sigma_floor)."""
    if len(track) < cfg.min_samples:
        raise TooFewSamples(
            f"need at least {cfg.min_samples} samples, got {len(track)}")
    t, xyz = _as_arrays(track)
    rng = np.random.default_rng(cfg.rng_seed)
    flags = np.zeros(len(track), dtype=bool)
    for d in range(3):
        model = _ransac_best_fit(t, xyz[:, d], cfg, rng)
        resid = xyz[:, d] - model(t)
        sigma = max(float(np.std(resid)), cfg.sigma_floor)
        flags |= np.abs(resid) > cfg.threshold_sigma * sigma
    return flags


def smooth_and_interpolate(track: Sequence[TrackSample],
                           flags: np.ndarray,
                           grid: Optional[Sequence[float]] = None,
                           missing_times: Sequence[float] = ()) -> SmoothedTrajectory:
    """Order-3 per-dimension fit on inliers, evaluated on the grid.

    The grid defaults to the union of input timestamps and declared
    missing-frame timestamps; non-measured grid times are marked
    interpolated.
    """
    t, xyz = _as_arrays(track)
    flags = np.asarray(flags, dtype=bool)
    inlier = ~flags
    if int(inlier.sum()) <= SMOOTH_ORDER + 1:
        raise TooFewInliers(
            f"{int(inlier.sum())} inliers cannot support an order-3 fit")
    models = {}
    for d, name in enumerate("xyz"):
        models[name] = Polynomial.fit(t[inlier], xyz[inlier, d], SMOOTH_ORDER)

    if grid is None:
        grid_t = np.union1d(t, np.asarray(list(missing_times), dtype=float))
    else:
        grid_t = np.asarray(list(grid), dtype=float)
    measured = np.isin(grid_t, t[inlier])
    samples = [
        TrackSample(t=float(gt),
                    x=float(models["x"](gt)),
                    y=float(models["y"](gt)),
                    z=float(models["z"](gt)),
                    outlier=False,
                    interpolated=not bool(m))
        for gt, m in zip(grid_t, measured)
    ]
    return SmoothedTrajectory(samples=samples, outlier_flags=flags,
                              coefficients=models)


def smooth_track(track: Sequence[TrackSample], cfg: SmootherConfig,
                 grid: Optional[Sequence[float]] = None,
                 missing_times: Sequence[float] = ()) -> SmoothedTrajectory:
    """Detect outliers then smooth; the usual two-phase entry point."""
    flags = detect_outliers(track, cfg)
    return smooth_and_interpolate(track, flags, grid=grid,
                                  missing_times=missing_times)

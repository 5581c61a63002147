"""Probabilistic LiDAR-camera fusion robust to mapping errors.

Library layout:
  calib     calibration data and pinhole projection
  ground    RANSAC ground-plane removal
  aoi       bounding-box enlargement and AOI point collection
  cluster   range-histogram mode clustering
  shape     3x3 shape descriptors, KL similarity, cluster selection
  localize  median-point distance and azimuth
  smoother  polynomial-RANSAC trajectory smoothing
  metrics   banded TPR, MAE, completeness guarantee, t-tests
  sim       deterministic synthetic-scene oracle
  pipeline  frame/sequence orchestration
  cli       command-line entry points
"""

from .calib import (CalibrationPair, CameraIntrinsics, ExtrinsicTransform,
                    LidarPoint, ProjectedPoint, load_calibration,
                    project_cloud, project_point)
from .errors import FusionError

__all__ = [
    "CalibrationPair", "CameraIntrinsics", "ExtrinsicTransform",
    "LidarPoint", "ProjectedPoint", "load_calibration",
    "project_cloud", "project_point", "FusionError",
]

__version__ = "0.1.0"

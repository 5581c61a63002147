"""Calibration data and LiDAR-to-pixel projection.

Conventions: LiDAR frame is x forward, y left, z up; camera frame is
z forward, x right, y down. The extrinsic transform absorbs the axis
permutation. Pixel coordinates stay real-valued (no rounding).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import CalibrationError

DEPTH_EPSILON = 1e-6  # meters along the optical axis; at or below is "behind"

# Rotation taking LiDAR axes (x fwd, y left, z up) to camera axes
# (x right, y down, z fwd) for colocated sensors.
LIDAR_TO_CAMERA_AXES = np.array(
    [[0.0, -1.0, 0.0],
     [0.0, 0.0, -1.0],
     [1.0, 0.0, 0.0]]
)


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    ox: float
    oy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise CalibrationError("focal lengths must be positive")
        if not (0 <= self.ox < self.width and 0 <= self.oy < self.height):
            raise CalibrationError("principal point must lie inside the image")


@dataclass(frozen=True)
class ExtrinsicTransform:
    rotation: np.ndarray  # (3, 3)
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-6):
            raise CalibrationError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > 1e-6:
            raise CalibrationError("rotation determinant is not +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)


@dataclass(frozen=True)
class LidarPoint:
    x: float
    y: float
    z: float
    intensity: Optional[float] = None

    def __post_init__(self):
        if not all(np.isfinite([self.x, self.y, self.z])):
            raise ValueError("LiDAR coordinates must be finite")


@dataclass(frozen=True)
class ProjectedPoint:
    source_index: int
    u: float
    v: float
    camera_depth: float


@dataclass(frozen=True)
class CalibrationPair:
    intrinsics: CameraIntrinsics
    extrinsic: ExtrinsicTransform


def project_point(intr: CameraIntrinsics, extr: ExtrinsicTransform,
                  p: LidarPoint, source_index: int = 0) -> Optional[ProjectedPoint]:
    """Pinhole projection of one LiDAR point; None when behind the camera.

    Points that project outside the image rectangle are still returned;
    callers clip as needed.
    """
    pc = extr.rotation @ np.array([p.x, p.y, p.z]) + extr.translation
    if pc[2] <= DEPTH_EPSILON:
        return None
    u = intr.fx * pc[0] / pc[2] + intr.ox
    v = intr.fy * pc[1] / pc[2] + intr.oy
    return ProjectedPoint(source_index=source_index, u=float(u), v=float(v),
                          camera_depth=float(pc[2]))


def project_cloud(intr: CameraIntrinsics, extr: ExtrinsicTransform,
                  cloud: Sequence[LidarPoint]) -> list[ProjectedPoint]:
    """Project a cloud, keeping only points in front of the camera.

    Output preserves source_index order; source_index refers to the
    position in the input cloud.
    """
    if not cloud:
        return []
    xyz = np.array([[p.x, p.y, p.z] for p in cloud])
    pc = xyz @ extr.rotation.T + extr.translation
    keep = pc[:, 2] > DEPTH_EPSILON
    u = intr.fx * pc[keep, 0] / pc[keep, 2] + intr.ox
    v = intr.fy * pc[keep, 1] / pc[keep, 2] + intr.oy
    idx = np.nonzero(keep)[0]
    return [ProjectedPoint(int(i), float(ui), float(vi), float(di))
            for i, ui, vi, di in zip(idx, u, v, pc[keep, 2])]


def project_xyz(intr: CameraIntrinsics, extr: ExtrinsicTransform,
                xyz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection of an (N, 3) array.

    Returns (uv, valid): uv is (N, 2) with NaN rows where invalid, valid is
    a boolean mask of points in front of the camera.
    """
    xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
    pc = xyz @ extr.rotation.T + extr.translation
    valid = pc[:, 2] > DEPTH_EPSILON
    uv = np.full((len(xyz), 2), np.nan)
    uv[valid, 0] = intr.fx * pc[valid, 0] / pc[valid, 2] + intr.ox
    uv[valid, 1] = intr.fy * pc[valid, 1] / pc[valid, 2] + intr.oy
    return uv, valid


def default_extrinsic(translation: Sequence[float] = (0.0, 0.0, 0.0)) -> ExtrinsicTransform:
    """Extrinsic for a camera colocated with the LiDAR, looking forward."""
    return ExtrinsicTransform(rotation=LIDAR_TO_CAMERA_AXES.copy(),
                              translation=np.asarray(translation, dtype=float))


def load_calibration(path) -> CalibrationPair:
    """Load a calibration JSON file.

    Expected keys: intrinsics{fx,fy,ox,oy,width,height},
    extrinsic{rotation: 9 row-major numbers, translation: 3 numbers},
    distortion: 5 numbers (must all be zero).
    """
    with open(path) as fh:
        raw = json.load(fh)
    try:
        intr = CameraIntrinsics(**raw["intrinsics"])
        ext_raw = raw["extrinsic"]
        extr = ExtrinsicTransform(
            rotation=np.asarray(ext_raw["rotation"], dtype=float).reshape(3, 3),
            translation=np.asarray(ext_raw["translation"], dtype=float),
        )
        distortion = np.asarray(raw.get("distortion", [0.0] * 5), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise CalibrationError(f"malformed calibration file {path}: {exc}") from exc
    if distortion.shape != (5,):
        raise CalibrationError("distortion must hold exactly 5 coefficients")
    if np.any(distortion != 0.0):
        raise CalibrationError("nonzero distortion coefficients are not supported")
    return CalibrationPair(intrinsics=intr, extrinsic=extr)


def save_calibration(path, calib: CalibrationPair) -> None:
    intr = calib.intrinsics
    payload = {
        "intrinsics": {"fx": intr.fx, "fy": intr.fy, "ox": intr.ox,
                       "oy": intr.oy, "width": intr.width, "height": intr.height},
        "extrinsic": {
            "rotation": [float(x) for x in calib.extrinsic.rotation.ravel()],
            "translation": [float(x) for x in calib.extrinsic.translation],
        },
        "distortion": [0.0] * 5,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)

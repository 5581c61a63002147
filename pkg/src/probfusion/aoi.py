"""Bounding-box enlargement and AOI point collection."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .calib import CameraIntrinsics, LidarPoint, ProjectedPoint

CLASS_LABELS = ("car", "pedestrian", "escooter_rider", "other")


@dataclass(frozen=True)
class BoundingBox:
    frame_id: int
    object_id: int
    class_label: str
    u_min: float
    v_min: float
    u_max: float
    v_max: float

    def __post_init__(self):
        if self.class_label not in CLASS_LABELS:
            raise ValueError(f"unknown class label {self.class_label!r}")
        if not (self.u_min < self.u_max and self.v_min < self.v_max):
            raise ValueError("box must have positive extent")

    @property
    def width(self) -> float:
        return self.u_max - self.u_min

    @property
    def height(self) -> float:
        return self.v_max - self.v_min

    def contains(self, u: float, v: float) -> bool:
        """Half-open containment: [u_min, u_max) x [v_min, v_max)."""
        return (self.u_min <= u < self.u_max) and (self.v_min <= v < self.v_max)


@dataclass(frozen=True)
class EnlargeRatios:
    left: float = 1.0
    right: float = 1.0
    up: float = 0.0
    down: float = 0.0

    def __post_init__(self):
        if min(self.left, self.right, self.up, self.down) < 0:
            raise ValueError("enlarge ratios must be nonnegative")


@dataclass(frozen=True)
class AoiPointSet:
    box: BoundingBox
    members: list  # of (source_index, u, v, LidarPoint)


def enlarge_aoi(box: BoundingBox, ratios: EnlargeRatios,
                intr: CameraIntrinsics) -> BoundingBox:
    """Grow the box by per-side fractions of its size, clamped to the image."""
    w = box.width
    h = box.height
    return replace(
        box,
        u_min=max(0.0, box.u_min - ratios.left * w),
        u_max=min(float(intr.width), box.u_max + ratios.right * w),
        v_min=max(0.0, box.v_min - ratios.up * h),
        v_max=min(float(intr.height), box.v_max + ratios.down * h),
    )


def collect_aoi_points(projections: Sequence[ProjectedPoint],
                       cloud: Sequence[LidarPoint],
                       box: BoundingBox) -> AoiPointSet:
    """Gather projections falling inside the box (half-open intervals)."""
    members = [(pp.source_index, pp.u, pp.v, cloud[pp.source_index])
               for pp in projections if box.contains(pp.u, pp.v)]
    return AoiPointSet(box=box, members=members)

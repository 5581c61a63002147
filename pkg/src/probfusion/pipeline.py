"""Frame- and sequence-level orchestration of the fusion pipeline.

Stage order per frame: crop -> ground fit/removal (skipped gracefully
when no acceptable plane exists) -> projection -> per detection:
enlarge AOI -> collect points -> mode clustering -> shape selection
(skipped for a single candidate) -> localization. Per-object failures
are soft: they are recorded in diagnostics and become trajectory gaps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import ground
from .aoi import enlarge_aoi
from .calib import CalibrationPair, load_calibration, project_xyz
from .cluster import (build_range_histogram, planar_ranges,
                      seed_bin_centers, select_candidate_clusters)
from .config import PipelineConfig
from .errors import (EmptyCluster, EmptyInput, EmptySequence,
                     InsufficientPoints, NoAcceptablePlane, NoQualifiedCluster)
from .io import FrameRecord, load_sequence, write_report, write_trajectory_csv
from .localize import ObjectLocalization, localize
from .metrics import (mae_axis, one_sample_right_tail_t_test,
                      paired_t_test, selection_completeness, tpr)
from .shape import BenchmarkShapeRegistry, select_cluster
from .smoother import TrackSample, smooth_and_interpolate, detect_outliers

log = logging.getLogger(__name__)


@dataclass
class ObjectDiagnostics:
    object_id: int
    class_label: str
    status: str = "ok"                  # or a soft-failure name
    aoi_point_count: int = 0
    candidate_count: int = 0
    selected_indices: list = field(default_factory=list)  # cloud indices
    selected_ranges: list = field(default_factory=list)
    baseline_indices: list = field(default_factory=list)
    baseline_ranges: list = field(default_factory=list)
    candidate_scores: list = field(default_factory=list)  # Fig-8 style rows


@dataclass
class FrameDiagnostics:
    frame_id: int
    cropped_count: int = 0
    ground_removed_count: int = 0
    ground_skipped: bool = False
    projected_count: int = 0
    objects: dict = field(default_factory=dict)  # object_id -> ObjectDiagnostics


def run_fusion_frame(frame: FrameRecord, calib: CalibrationPair,
                     cfg: PipelineConfig,
                     benchmarks: Optional[BenchmarkShapeRegistry] = None,
                     ) -> tuple[list[ObjectLocalization], FrameDiagnostics]:
    """Fuse one frame; returns localizations plus stage diagnostics."""
    diag = FrameDiagnostics(frame_id=frame.frame_id)
    cloud = np.asarray(frame.cloud, dtype=float).reshape(-1, 3)
    n = len(cloud)

    crop = ground.crop_mask(cloud, cfg.ransac_ground)
    diag.cropped_count = int(crop.sum())

    keep = crop.copy()
    try:
        model = ground.fit_ground_plane(cloud[crop], cfg.ransac_ground)
        removed = ground.ground_mask(cloud, model, cfg.ransac_ground.delta)
        keep &= ~removed
        diag.ground_removed_count = int((crop & removed).sum())
    except (InsufficientPoints, NoAcceptablePlane) as exc:
        diag.ground_skipped = True
        log.info("frame %d: ground removal skipped (%s)", frame.frame_id, exc)

    # Observed pixel mappings carry any upstream mapping error; recompute
    # from geometry only when the sequence provides none.
    if frame.observed_uv is not None:
        uv = np.asarray(frame.observed_uv, dtype=float).reshape(-1, 2)
        uv_valid = np.asarray(frame.uv_valid, dtype=bool)
    else:
        uv, uv_valid = project_xyz(calib.intrinsics, calib.extrinsic, cloud)
    diag.projected_count = int((keep & uv_valid).sum())

    ranges_all = planar_ranges(cloud)
    localizations = []
    for det in frame.detections:
        odiag = ObjectDiagnostics(object_id=det.object_id,
                                  class_label=det.class_label)
        diag.objects[det.object_id] = odiag

        # Baseline path: raw mapping, original AOI, no preprocessing.
        base_mask = uv_valid.copy()
        base_mask[uv_valid] = (
            (uv[uv_valid, 0] >= det.u_min) & (uv[uv_valid, 0] < det.u_max)
            & (uv[uv_valid, 1] >= det.v_min) & (uv[uv_valid, 1] < det.v_max))
        odiag.baseline_indices = np.nonzero(base_mask)[0].tolist()
        odiag.baseline_ranges = ranges_all[base_mask].tolist()

        big = enlarge_aoi(det, cfg.ratios_for(det.class_label),
                          calib.intrinsics)
        member_mask = keep & uv_valid
        member_mask[member_mask] = (
            (uv[member_mask, 0] >= big.u_min) & (uv[member_mask, 0] < big.u_max)
            & (uv[member_mask, 1] >= big.v_min) & (uv[member_mask, 1] < big.v_max))
        member_idx = np.nonzero(member_mask)[0]
        odiag.aoi_point_count = len(member_idx)
        if len(member_idx) == 0:
            odiag.status = "NoQualifiedCluster"
            continue

        member_ranges = ranges_all[member_idx]
        granularity = cfg.clustering.granularity_for(det.class_label)
        try:
            centers = seed_bin_centers(member_ranges, cfg.clustering)
            hist = build_range_histogram(member_ranges, centers,
                                         cfg.clustering, granularity)
            candidates = select_candidate_clusters(hist, cfg.clustering)
        except (EmptyInput, NoQualifiedCluster) as exc:
            odiag.status = type(exc).__name__
            continue
        odiag.candidate_count = len(candidates)

        benchmark = benchmarks.get(det.class_label) if benchmarks else None
        if len(candidates) > 1 and benchmark is not None:
            pts_per_cand = [uv[member_idx[c.member_indices]]
                            for c in candidates]
            chosen, scores = select_cluster(candidates, pts_per_cand,
                                            benchmark, cfg.shape_filter)
            odiag.candidate_scores = [
                {"pre_rotation_score": s.pre_rotation_score,
                 "distance_m": s.distance_m,
                 "post_rotation_score": s.post_rotation_score,
                 "rotation_deg": s.rotation_deg,
                 "rotation_rejected": s.rotation_rejected,
                 "count": s.cluster.count}
                for s in scores]
        else:
            chosen = candidates[0]

        chosen_cloud_idx = member_idx[chosen.member_indices]
        odiag.selected_indices = chosen_cloud_idx.tolist()
        odiag.selected_ranges = ranges_all[chosen_cloud_idx].tolist()
        try:
            loc = localize(frame.frame_id, det.object_id, det.class_label,
                           cloud[chosen_cloud_idx])
        except EmptyCluster:
            odiag.status = "EmptyCluster"
            continue
        localizations.append(loc)
    return localizations, diag


def _evaluate(frames, gt, cfg, frame_diags, smoothed) -> dict:
    """Per-object and aggregate metrics against simulator ground truth."""
    per_object: dict = {}
    for frame, diag in zip(frames, frame_diags):
        gt_frame = gt.get(frame.frame_id, {})
        for obj_id, odiag in diag.objects.items():
            gt_obj = gt_frame.get(obj_id)
            if gt_obj is None:
                continue
            entry = per_object.setdefault(obj_id, {
                "class": odiag.class_label,
                "baseline_tpr": [], "fusion_tpr": [],
                "guarantee_frames": [],
                "est_x": [], "est_y": [], "gt_x": [], "gt_y": [], "t": []})
            gt_range = gt_obj["range"]
            if odiag.baseline_ranges:
                entry["baseline_tpr"].append(
                    tpr(odiag.baseline_ranges, gt_range, odiag.class_label,
                        cfg.tolerance).rate)
            else:
                entry["baseline_tpr"].append(None)
            if odiag.selected_ranges:
                entry["fusion_tpr"].append(
                    tpr(odiag.selected_ranges, gt_range, odiag.class_label,
                        cfg.tolerance).rate)
            else:
                entry["fusion_tpr"].append(None)
            entry["guarantee_frames"].append(
                (odiag.selected_indices, gt_obj["members"]))

    targets = cfg.target_object_ids or sorted(per_object)
    report_objects = {}
    paired_baseline, paired_fusion = [], []
    mae_rows = {"x": ([], []), "y": ([], [])}
    guarantee_frames_all = []

    for obj_id, entry in sorted(per_object.items()):
        pairs = [(b, f) for b, f in zip(entry["baseline_tpr"],
                                        entry["fusion_tpr"])
                 if b is not None and f is not None]
        obj_report = {"class": entry["class"], "frames": len(entry["fusion_tpr"])}
        if pairs:
            b_vals = [p[0] for p in pairs]
            f_vals = [p[1] for p in pairs]
            obj_report["baseline_tpr_mean"] = float(np.mean(b_vals))
            obj_report["fusion_tpr_mean"] = float(np.mean(f_vals))
            if len(pairs) >= 2:
                t_stat, p_val, n_pairs = paired_t_test(b_vals, f_vals)
                obj_report["paired_t"] = {"t": t_stat, "p_value": p_val,
                                          "n": n_pairs}
        try:
            guard = selection_completeness(entry["guarantee_frames"],
                                           cfg.guarantee)
            obj_report["guarantee"] = {
                "probability": guard.empirical_probability,
                "passed": guard.passed}
        except EmptyInput:
            pass

        # MAE against the smoothed trajectory at ground-truth timestamps.
        if obj_id in smoothed:
            by_t = {round(s.t, 9): s for s in smoothed[obj_id].samples}
            gt_series = _gt_series(frames, gt, obj_id)
            est_x, est_y, gx, gy = [], [], [], []
            for t_val, gxv, gyv in gt_series:
                s = by_t.get(round(t_val, 9))
                if s is not None:
                    est_x.append(s.x)
                    est_y.append(s.y)
                    gx.append(gxv)
                    gy.append(gyv)
            if est_x:
                obj_report["mae_x"] = mae_axis(est_x, gx)
                obj_report["mae_y"] = mae_axis(est_y, gy)
                if obj_id in targets:
                    mae_rows["x"][0].extend(est_x)
                    mae_rows["x"][1].extend(gx)
                    mae_rows["y"][0].extend(est_y)
                    mae_rows["y"][1].extend(gy)
        if obj_id in targets and pairs:
            paired_baseline.extend(b_vals)
            paired_fusion.extend(f_vals)
            guarantee_frames_all.extend(entry["guarantee_frames"])
        report_objects[str(obj_id)] = obj_report

    aggregate: dict = {"target_object_ids": list(targets)}
    if paired_baseline:
        aggregate["baseline_tpr_mean"] = float(np.mean(paired_baseline))
        aggregate["fusion_tpr_mean"] = float(np.mean(paired_fusion))
        if len(paired_baseline) >= 2:
            t_stat, p_val, n_pairs = paired_t_test(paired_baseline,
                                                   paired_fusion)
            aggregate["paired_t"] = {"t": t_stat, "p_value": p_val,
                                     "n": n_pairs}
            t1, p1, n1 = one_sample_right_tail_t_test(paired_fusion, 0.5)
            aggregate["one_sample_t_vs_0.5"] = {"t": t1, "p_value": p1,
                                                "n": n1}
    if guarantee_frames_all:
        guard = selection_completeness(guarantee_frames_all, cfg.guarantee)
        aggregate["guarantee"] = {"probability": guard.empirical_probability,
                                  "passed": guard.passed}
    if mae_rows["x"][0]:
        aggregate["mae_x"] = mae_axis(*mae_rows["x"])
        aggregate["mae_y"] = mae_axis(*mae_rows["y"])
    return {"objects": report_objects, "aggregate": aggregate}


def _gt_series(frames, gt, obj_id):
    series = []
    for frame in frames:
        gt_obj = gt.get(frame.frame_id, {}).get(obj_id)
        if gt_obj is not None:
            series.append((frame.t, gt_obj["x"], gt_obj["y"]))
    return series


def run_sequence(seq_dir, cfg: PipelineConfig,
                 out_dir=None,
                 baseline_only: bool = False,
                 no_smoother: bool = False) -> dict:
    """Fuse a whole sequence directory; writes trajectories and a report.

    Returns the report dict (also written to <out>/report.json).
    """
    seq_dir = Path(seq_dir)
    out = Path(out_dir) if out_dir is not None else \
        (cfg.output_dir or seq_dir / "output")
    out.mkdir(parents=True, exist_ok=True)

    frames, gt = load_sequence(seq_dir)
    if not frames:
        raise EmptySequence(str(seq_dir))
    calib = load_calibration(cfg.calibration_path)
    benchmarks = None
    if cfg.benchmark_registry_path is not None:
        benchmarks = BenchmarkShapeRegistry.load(cfg.benchmark_registry_path)

    frame_diags = []
    tracks: dict = {}
    for frame in frames:
        locs, diag = run_fusion_frame(frame, calib, cfg, benchmarks)
        frame_diags.append(diag)
        if baseline_only:
            continue
        for loc in locs:
            tracks.setdefault(loc.object_id, []).append(
                TrackSample(t=frame.t, x=loc.x_m, y=loc.y_m, z=0.0))

    all_times = [f.t for f in frames]
    smoothed: dict = {}
    if not baseline_only:
        for obj_id, samples in sorted(tracks.items()):
            if no_smoother or len(samples) < cfg.smoother.min_samples:
                smoothed[obj_id] = _raw_trajectory(samples)
            else:
                flags = detect_outliers(samples, cfg.smoother)
                measured = {s.t for s in samples}
                missing = [t for t in all_times if t not in measured]
                smoothed[obj_id] = smooth_and_interpolate(
                    samples, flags, missing_times=missing)
            write_trajectory_csv(out / "trajectories" / f"object_{obj_id}.csv",
                                 smoothed[obj_id].samples)

    report: dict = {
        "sequence": seq_dir.name,
        "n_frames": len(frames),
        "rng_seed": cfg.rng_seed,
        "baseline_only": baseline_only,
        "smoother": not no_smoother,
        "soft_failures": sum(
            1 for d in frame_diags for o in d.objects.values()
            if o.status != "ok"),
        "ground_skipped_frames": sum(
            1 for d in frame_diags if d.ground_skipped),
    }
    if gt is not None:
        report["evaluation"] = _evaluate(frames, gt, cfg, frame_diags,
                                         smoothed)
    write_report(out / "report.json", report)
    return report


def _raw_trajectory(samples):
    from .smoother import SmoothedTrajectory
    return SmoothedTrajectory(samples=list(samples),
                              outlier_flags=np.zeros(len(samples), dtype=bool),
                              coefficients={})

"""Grasp-success metric and corpus-level reconstruction scoring.

A predicted rectangle succeeds against a scene when it overlaps any
annotated rectangle at or above an IoU threshold, optionally also within
an angular tolerance.  The angle criterion is off by default; pass
angle_tol to enable it.

reconstruct_and_score measures how much of the annotation set a builder's
maps can give back: for each scene it builds ground-truth maps, extracts
the single best grasp, and scores it against the scene's own annotations.
A lossier map construction shows up directly as a lower ceiling.
disentanglement_report runs the same build-then-extract loop on scenes
with shared-center annotations and counts how many distinct orientations
each builder can return.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from .annotations import AnnotationSet
from .geometry import GraspRect, angular_distance, normalize_angle, rect_iou
from .inference import (
    NoGraspError,
    extract_best,
    extract_legacy_best,
    extract_per_bin,
    suppression_radius_from_heights,
)
from .mapbuild import BuilderConfig, build_binned_maps, build_legacy_maps

BUILDERS = ("binned", "legacy")

_QUANT = 1e6


def config_fingerprint(cfg: BuilderConfig) -> str:
    """Short stable digest of a builder configuration.

    Hashes the canonical JSON form of the config; manifests and reports
    embed it so outputs produced under different configs are detectable.
    """
    payload = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("ascii")).hexdigest()[:12]


def grasp_success(
    pred: GraspRect,
    gts: Sequence[GraspRect],
    iou_threshold: float,
    angle_tol: float | None = None,
) -> bool:
    """Rectangle-metric success of one prediction against ground truth.

    True iff some ground-truth rectangle reaches the IoU threshold and,
    when angle_tol is given, also lies within that angular distance
    (computed on the half-turn circle).
    """
    if not gts:
        raise ValueError("gts must be non-empty")
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    if angle_tol is not None and angle_tol < 0:
        raise ValueError(f"angle_tol must be non-negative, got {angle_tol}")
    for gt in gts:
        if rect_iou(pred, gt) < iou_threshold:
            continue
        if angle_tol is not None and angular_distance(pred.phi, gt.phi) > angle_tol:
            continue
        return True
    return False


@dataclass(frozen=True)
class ThresholdResult:
    """Success count out of the evaluated scenes at one IoU threshold."""

    threshold: float
    successes: int
    total: int

    @property
    def accuracy(self) -> float:
        if self.total == 0:
            return 0.0
        return self.successes / self.total


@dataclass(frozen=True)
class EvalReport:
    """Per-threshold reconstruction accuracies for one builder and config."""

    builder: str
    config: BuilderConfig
    thresholds: tuple[float, ...]
    results: tuple[ThresholdResult, ...]
    skipped: int

    @property
    def fingerprint(self) -> str:
        return config_fingerprint(self.config)

    def accuracy_at(self, threshold: float) -> float:
        for r in self.results:
            if r.threshold == threshold:
                return r.accuracy
        raise KeyError(f"no result at threshold {threshold}")

    def to_dict(self) -> dict:
        config = dict(self.config.to_dict())
        config["fingerprint"] = self.fingerprint
        return {
            "builder": self.builder,
            "config": config,
            "thresholds": list(self.thresholds),
            "results": [
                {
                    "threshold": r.threshold,
                    "successes": r.successes,
                    "total": r.total,
                    "accuracy": r.accuracy,
                }
                for r in self.results
            ],
            "skipped": self.skipped,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _check_thresholds(thresholds: Sequence[float]) -> tuple[float, ...]:
    ts = tuple(float(t) for t in thresholds)
    if not ts:
        raise ValueError("thresholds must be non-empty")
    for t in ts:
        if not 0.0 < t <= 1.0:
            raise ValueError(f"threshold must be in (0, 1], got {t}")
    return ts


def reconstruct_and_score(
    scenes: Iterable[AnnotationSet],
    cfg: BuilderConfig,
    builder: str = "binned",
    thresholds: Sequence[float] = (0.25, 0.30, 0.50),
    angle_tol: float | None = None,
) -> EvalReport:
    """Score each scene's best reconstructed grasp against its annotations.

    Scenes must already be scaled to the config output size.  Scenes with
    no annotations, or whose maps yield no extractable grasp, are skipped
    and counted in the report.
    """
    if builder not in BUILDERS:
        raise ValueError(f"builder must be one of {BUILDERS}, got {builder!r}")
    ts = _check_thresholds(thresholds)
    successes = [0] * len(ts)
    total = 0
    skipped = 0
    for scene in scenes:
        gts = list(scene.rects)
        if not gts:
            skipped += 1
            continue
        try:
            if builder == "binned":
                pred, _ = extract_best(build_binned_maps(scene, cfg))
            else:
                pred, _ = extract_legacy_best(build_legacy_maps(scene, cfg))
        except NoGraspError:
            skipped += 1
            continue
        for j, t in enumerate(ts):
            if grasp_success(pred, gts, t, angle_tol):
                successes[j] += 1
        total += 1
    results = tuple(
        ThresholdResult(threshold=t, successes=successes[j], total=total)
        for j, t in enumerate(ts)
    )
    return EvalReport(
        builder=builder, config=cfg, thresholds=ts, results=results, skipped=skipped
    )


@dataclass(frozen=True)
class SceneDisentanglement:
    """Recovery counts for one scene's shared-center annotations."""

    scene_id: str
    shared_centers: int
    distinct_orientations: int
    binned_recovered: int
    legacy_recovered: int


@dataclass(frozen=True)
class DisentanglementReport:
    """Aggregated shared-center orientation recovery across a corpus."""

    scenes: tuple[SceneDisentanglement, ...]

    @property
    def total_distinct(self) -> int:
        return sum(s.distinct_orientations for s in self.scenes)

    @property
    def total_binned(self) -> int:
        return sum(s.binned_recovered for s in self.scenes)

    @property
    def total_legacy(self) -> int:
        return sum(s.legacy_recovered for s in self.scenes)


def _center_key(r: GraspRect) -> tuple[int, int]:
    return round(r.cx * _QUANT), round(r.cy * _QUANT)


def _shared_center_groups(
    rects: Sequence[GraspRect],
) -> dict[tuple[int, int], list[float]]:
    """Centers carrying at least two distinct orientations, with those phis."""
    by_center: dict[tuple[int, int], dict[int, float]] = defaultdict(dict)
    for r in rects:
        phi = normalize_angle(r.phi)
        by_center[_center_key(r)].setdefault(round(phi * _QUANT), phi)
    return {
        key: sorted(phis.values())
        for key, phis in by_center.items()
        if len(phis) >= 2
    }


def _matches(
    grasp: GraspRect, cx: float, cy: float, phi: float, center_tol: float, angle_tol: float
) -> bool:
    if math.hypot(grasp.cx - cx, grasp.cy - cy) > center_tol:
        return False
    return angular_distance(grasp.phi, phi) <= angle_tol


def disentanglement_report(
    scenes: Iterable[AnnotationSet],
    cfg: BuilderConfig,
    center_tol: float = 2.0,
    angle_tol: float = 1e-3,
) -> DisentanglementReport:
    """Count recovered orientations at shared centers, per builder.

    For each scene, centers annotated with two or more distinct
    orientations are collected; the binned builder is probed with per-bin
    extraction and the legacy builder with its single argmax.  An
    orientation counts as recovered when some extracted grasp lands within
    center_tol pixels of the shared center and within angle_tol of its
    angle.
    """
    per_scene: list[SceneDisentanglement] = []
    for scene in scenes:
        rects = list(scene.rects)
        groups = _shared_center_groups(rects)
        distinct = sum(len(phis) for phis in groups.values())
        binned_recovered = 0
        legacy_recovered = 0
        if groups:
            radius = suppression_radius_from_heights(r.height for r in rects)
            stack = build_binned_maps(scene, cfg)
            per_bin = extract_per_bin(stack, k=max(1, len(rects)), radius=radius)
            binned_grasps = [g for picks in per_bin for g, _ in picks]
            try:
                legacy_grasp, _ = extract_legacy_best(build_legacy_maps(scene, cfg))
            except NoGraspError:
                legacy_grasp = None
            for (kx, ky), phis in groups.items():
                cx, cy = kx / _QUANT, ky / _QUANT
                for phi in phis:
                    if any(
                        _matches(g, cx, cy, phi, center_tol, angle_tol)
                        for g in binned_grasps
                    ):
                        binned_recovered += 1
                    if legacy_grasp is not None and _matches(
                        legacy_grasp, cx, cy, phi, center_tol, angle_tol
                    ):
                        legacy_recovered += 1
        per_scene.append(
            SceneDisentanglement(
                scene_id=scene.scene_id,
                shared_centers=len(groups),
                distinct_orientations=distinct,
                binned_recovered=binned_recovered,
                legacy_recovered=legacy_recovered,
            )
        )
    return DisentanglementReport(scenes=tuple(per_scene))

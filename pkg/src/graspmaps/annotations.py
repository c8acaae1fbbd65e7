"""Annotation ingestion, rescaling and synthetic scene generation.

Two on-disk annotation formats are supported:

* Jacquard-style grasp files: one grasp per line,
  ``x;y;theta;opening;jaws_size`` with theta in degrees.
* Cornell-style rectangle files: groups of four ``x y`` lines, one vertex
  per line, first edge along the opening axis.

Parsed angles are converted into the package's y-down pixel convention and
normalized to [-pi/2, pi/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import (
    GraspRect,
    normalize_angle,
    points_to_rect,
    rect_corners,
)


class AnnotationError(ValueError):
    """Raised for malformed annotation text; message carries the line number."""


@dataclass(frozen=True)
class AnnotationSet:
    """All grasp rectangles of one scene plus the image dimensions."""

    scene_id: str
    image_width: int
    image_height: int
    rects: tuple[GraspRect, ...]

    def __post_init__(self) -> None:
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError(
                f"image dimensions must be positive, got "
                f"{self.image_width}x{self.image_height}"
            )
        object.__setattr__(self, "rects", tuple(self.rects))

    def __len__(self) -> int:
        return len(self.rects)


def parse_jacquard(
    text: str, image_width: int, image_height: int, scene_id: str = ""
) -> AnnotationSet:
    """Parse a Jacquard-style grasp file into an AnnotationSet.

    The file's theta is in degrees, counterclockwise in math convention;
    it is negated here to land in the y-down image convention.  Blank lines
    are skipped, duplicate lines preserved.
    """
    rects = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split(";")
        if len(fields) != 5:
            raise AnnotationError(
                f"line {lineno}: expected 5 ';'-separated fields, got {len(fields)}"
            )
        try:
            x, y, theta_deg, opening, jaw = (float(f) for f in fields)
        except ValueError as exc:
            raise AnnotationError(f"line {lineno}: non-numeric field ({exc})") from None
        if not all(math.isfinite(v) for v in (x, y, theta_deg, opening, jaw)):
            raise AnnotationError(f"line {lineno}: non-finite value")
        if opening <= 0 or jaw <= 0:
            raise AnnotationError(
                f"line {lineno}: opening and jaw size must be positive, "
                f"got {opening};{jaw}"
            )
        phi = normalize_angle(-math.radians(theta_deg))
        rects.append(GraspRect(cx=x, cy=y, phi=phi, width=opening, height=jaw))
    return AnnotationSet(
        scene_id=scene_id,
        image_width=image_width,
        image_height=image_height,
        rects=tuple(rects),
    )


def serialize_jacquard(annotations: AnnotationSet) -> str:
    """Inverse of parse_jacquard, used by the synthetic corpus writer."""
    lines = []
    for r in annotations.rects:
        theta_deg = -math.degrees(r.phi)
        lines.append(f"{r.cx!r};{r.cy!r};{theta_deg!r};{r.width!r};{r.height!r}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_cornell(
    text: str, image_width: int, image_height: int, scene_id: str = ""
) -> tuple[AnnotationSet, int]:
    """Parse a Cornell-style rectangle file.

    Returns (annotations, skipped) where skipped counts 4-point groups that
    were dropped because they contain NaN vertices (a known defect of the
    source data) or are geometrically degenerate.
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if len(lines) % 4 != 0:
        raise AnnotationError(
            f"vertex line count {len(lines)} is not divisible by 4"
        )
    rects = []
    skipped = 0
    for g in range(0, len(lines), 4):
        group = lines[g : g + 4]
        pts = np.empty((4, 2), dtype=float)
        try:
            for i, ln in enumerate(group):
                parts = ln.split()
                if len(parts) != 2:
                    raise AnnotationError(
                        f"line {g + i + 1}: expected 'x y', got {ln!r}"
                    )
                pts[i] = (float(parts[0]), float(parts[1]))
        except ValueError:
            raise AnnotationError(
                f"line {g + i + 1}: non-numeric coordinate in {ln!r}"
            ) from None
        if not np.all(np.isfinite(pts)):
            skipped += 1
            continue
        try:
            rects.append(points_to_rect(pts))
        except ValueError:
            skipped += 1
    annotations = AnnotationSet(
        scene_id=scene_id,
        image_width=image_width,
        image_height=image_height,
        rects=tuple(rects),
    )
    return annotations, skipped


def scale_annotations(
    annotations: AnnotationSet, target_w: int, target_h: int
) -> AnnotationSet:
    """Rescale an AnnotationSet to a new working resolution.

    Isotropic scales multiply centers and sides by the common factor and
    leave phi untouched.  Anisotropic scales transform all four corners and
    refit each rectangle, which adjusts phi and the side lengths exactly.
    """
    if target_w <= 0 or target_h <= 0:
        raise ValueError(f"target size must be positive, got {target_w}x{target_h}")
    sx = target_w / annotations.image_width
    sy = target_h / annotations.image_height
    if math.isclose(sx, sy, rel_tol=1e-12):
        rects = tuple(
            GraspRect(
                cx=r.cx * sx,
                cy=r.cy * sx,
                phi=r.phi,
                width=r.width * sx,
                height=r.height * sx,
            )
            for r in annotations.rects
        )
    else:
        scale = np.array([sx, sy])
        rects = tuple(
            points_to_rect(rect_corners(r) * scale) for r in annotations.rects
        )
    return replace(
        annotations, image_width=target_w, image_height=target_h, rects=rects
    )


@dataclass(frozen=True)
class SynthParams:
    """Knobs for the synthetic scene generator used by tests and the CLI.

    duplicate_center_fraction controls the disentanglement stressor: that
    fraction of rects is emitted as center-sharing pairs whose angles differ
    by more than one bin width (pi / bins).  half_jaw forces height equal to
    width / 2 so the extraction convention can reproduce boxes exactly, and
    snap_centers puts centers on pixel centers for the same reason.
    """

    seed: int
    num_rects: int
    image_width: int = 320
    image_height: int = 320
    center_min: float = 40.0
    center_max: float = 280.0
    width_min: float = 20.0
    width_max: float = 60.0
    height_min: float = 10.0
    height_max: float = 30.0
    angle_spread: float = math.pi
    duplicate_center_fraction: float = 0.0
    bins: int = 3
    non_overlapping: bool = False
    half_jaw: bool = False
    snap_centers: bool = False
    margin: float = 4.0

    def __post_init__(self) -> None:
        if self.num_rects < 0:
            raise ValueError("num_rects must be non-negative")
        if not 0.0 <= self.duplicate_center_fraction <= 1.0:
            raise ValueError("duplicate_center_fraction must lie in [0, 1]")
        if self.center_min > self.center_max:
            raise ValueError("empty center range")
        if self.width_min > self.width_max or self.width_min <= 0:
            raise ValueError("bad width range")
        if self.height_min > self.height_max or self.height_min <= 0:
            raise ValueError("bad height range")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if not 0.0 < self.angle_spread <= math.pi:
            raise ValueError("angle_spread must lie in (0, pi]")


def _sample_rect(rng: np.random.Generator, p: SynthParams) -> GraspRect:
    cx = rng.uniform(p.center_min, p.center_max)
    cy = rng.uniform(p.center_min, p.center_max)
    if p.snap_centers:
        cx = math.floor(cx) + 0.5
        cy = math.floor(cy) + 0.5
    phi = normalize_angle(rng.uniform(-p.angle_spread / 2, p.angle_spread / 2))
    w = rng.uniform(p.width_min, p.width_max)
    h = w / 2.0 if p.half_jaw else rng.uniform(p.height_min, p.height_max)
    return GraspRect(cx=cx, cy=cy, phi=phi, width=w, height=h)


def _half_diag(r: GraspRect) -> float:
    return math.hypot(r.width, r.height) / 2.0


def synth_scene(params: SynthParams, scene_id: str | None = None) -> AnnotationSet:
    """Generate a deterministic synthetic scene.

    Rects come in "center groups": singles, plus center-sharing pairs for
    the duplicate fraction.  Pair partners differ in phi by more than one
    bin width, so they always land in different orientation bins.  With
    non_overlapping=True, distinct groups keep a bounding-circle separation
    of at least ``margin`` pixels.
    """
    rng = np.random.default_rng(params.seed)
    n = params.num_rects
    num_paired = int(round(n * params.duplicate_center_fraction))
    num_pairs = num_paired // 2
    num_singles = n - 2 * num_pairs

    groups: list[list[GraspRect]] = []
    placed: list[tuple[float, float, float]] = []  # (cx, cy, half diagonal)

    def place(make_group) -> None:
        for _ in range(1000):
            group = make_group()
            radius = max(_half_diag(r) for r in group)
            cx, cy = group[0].cx, group[0].cy
            if params.non_overlapping:
                ok = all(
                    math.hypot(cx - px, cy - py) > radius + pr + params.margin
                    for px, py, pr in placed
                )
                if not ok:
                    continue
            groups.append(group)
            placed.append((cx, cy, radius))
            return
        raise RuntimeError(
            "could not place a non-overlapping rect; loosen SynthParams ranges"
        )

    bin_width = math.pi / params.bins

    if num_pairs > 0 and bin_width * 2.1 >= math.pi:
        raise ValueError("duplicate-center pairs need bins >= 3")

    def make_pair() -> list[GraspRect]:
        base = _sample_rect(rng, params)
        # Offset whose circular distance on the pi circle strictly exceeds
        # one bin width, so the partner always lands in a different bin.
        gap = rng.uniform(bin_width * 1.05, math.pi - bin_width * 1.05)
        partner_phi = normalize_angle(base.phi + gap)
        partner = replace(
            _sample_rect(rng, params), cx=base.cx, cy=base.cy, phi=partner_phi
        )
        return [base, partner]

    def make_single() -> list[GraspRect]:
        return [_sample_rect(rng, params)]

    for _ in range(num_pairs):
        place(make_pair)
    for _ in range(num_singles):
        place(make_single)

    rects = tuple(r for g in groups for r in g)
    if scene_id is None:
        scene_id = f"synth-{params.seed:08d}"
    return AnnotationSet(
        scene_id=scene_id,
        image_width=params.image_width,
        image_height=params.image_height,
        rects=rects,
    )


def load_depth(path) -> np.ndarray:
    """Thin adapter for single-channel depth images.

    Returns an (H, W) float64 grid.  Values pass through untouched; the
    toolkit never interprets depth units.
    """
    from PIL import Image

    with Image.open(path) as img:
        if img.mode not in ("F", "I", "I;16", "L"):
            img = img.convert("F")
        arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"depth image must be single-channel, got shape {arr.shape}")
    return arr

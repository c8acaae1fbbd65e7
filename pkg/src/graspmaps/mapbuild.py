"""Construction of pixel-wise grasp map stacks from annotations.

The binned builder is the heart of the package.  It partitions the
antipodal angle range [-pi/2, pi/2) into N uniform orientation bins and
writes, per bin, a soft quality plane, an angle plane encoded as
cos(2*phi) and sin(2*phi), an opening-width plane, and a binary occupancy
plane.  A single global graspability plane marks every pixel covered by
any bin.  Overlaps inside a bin are resolved deterministically in favor of
the smallest angle, which makes the construction invariant to annotation
order.  The legacy builder reproduces the older overwrite-in-list-order
construction for comparison; it is deliberately order-sensitive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .annotations import AnnotationSet
from .geometry import (
    GraspRect,
    HALF_PI,
    center_pixel,
    rasterize_rect,
)

JawPolicy = Literal["minimum", "maximum"]
QualityMode = Literal["soft", "binary"]
GammaMode = Literal["region", "centers"]


@dataclass(frozen=True)
class BuilderConfig:
    """Options controlling grasp map construction."""

    bins: int = 3
    jaw_policy: JawPolicy = "minimum"
    quality_mode: QualityMode = "soft"
    decay: str = "linear"
    out_width: int = 320
    out_height: int = 320
    gamma_mode: GammaMode = "region"

    def __post_init__(self) -> None:
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if self.out_width <= 0 or self.out_height <= 0:
            raise ValueError("output size must be positive")
        if self.jaw_policy not in ("minimum", "maximum"):
            raise ValueError(f"unknown jaw_policy {self.jaw_policy!r}")
        if self.quality_mode not in ("soft", "binary"):
            raise ValueError(f"unknown quality_mode {self.quality_mode!r}")
        if self.decay != "linear":
            raise ValueError(f"unknown decay profile {self.decay!r}")
        if self.gamma_mode not in ("region", "centers"):
            raise ValueError(f"unknown gamma_mode {self.gamma_mode!r}")

    def to_dict(self) -> dict:
        return {
            "bins": self.bins,
            "jaw_policy": self.jaw_policy,
            "quality_mode": self.quality_mode,
            "decay": self.decay,
            "out_width": self.out_width,
            "out_height": self.out_height,
            "gamma_mode": self.gamma_mode,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BuilderConfig":
        return cls(**d)


@dataclass(frozen=True)
class GraspMapStack:
    """Per-bin grasp maps plus the global graspability plane.

    Planes are float64 arrays: q, cos2phi, sin2phi, omega and o have shape
    (bins, height, width); gamma has shape (height, width).  Ground-truth
    stacks keep q in [0, 1] and o/gamma in {0, 1}; predicted stacks may
    hold arbitrary real values in the same layout.
    """

    bins: int
    height: int
    width: int
    q: np.ndarray
    cos2phi: np.ndarray
    sin2phi: np.ndarray
    omega: np.ndarray
    o: np.ndarray
    gamma: np.ndarray

    def __post_init__(self) -> None:
        per_bin = (self.bins, self.height, self.width)
        for name in ("q", "cos2phi", "sin2phi", "omega", "o"):
            shape = getattr(self, name).shape
            if shape != per_bin:
                raise ValueError(f"{name} has shape {shape}, expected {per_bin}")
        if self.gamma.shape != (self.height, self.width):
            raise ValueError(
                f"gamma has shape {self.gamma.shape}, expected "
                f"{(self.height, self.width)}"
            )


@dataclass(frozen=True)
class LegacyMapStack:
    """Single-orientation maps built the overwrite-in-order way."""

    height: int
    width: int
    q: np.ndarray
    angle: np.ndarray
    omega: np.ndarray

    def __post_init__(self) -> None:
        shape = (self.height, self.width)
        for name in ("q", "angle", "omega"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} must have shape {shape}")


def bin_index(phi: float, bins: int) -> int:
    """Index of the orientation bin holding phi; bins are half-open [lo, hi)."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if not -HALF_PI <= phi < HALF_PI:
        raise ValueError(f"phi {phi!r} outside [-pi/2, pi/2); normalize first")
    idx = int(math.floor((phi + HALF_PI) * bins / math.pi))
    return min(idx, bins - 1)


def bin_interval(i: int, bins: int) -> tuple[float, float]:
    """Half-open angle interval [lo, hi) of bin i."""
    if not 0 <= i < bins:
        raise ValueError(f"bin {i} outside [0, {bins})")
    width = math.pi / bins
    return -HALF_PI + i * width, -HALF_PI + (i + 1) * width


def encode_angle(phi: float) -> tuple[float, float]:
    """Map an antipodal angle to its (cos 2phi, sin 2phi) pair."""
    return math.cos(2.0 * phi), math.sin(2.0 * phi)


def decode_angle(c: float, s: float) -> float:
    """Invert encode_angle; raises ValueError at the undefined origin."""
    if c == 0.0 and s == 0.0:
        raise ValueError("angle undefined for (0, 0)")
    return _wrap_half_open(0.5 * math.atan2(s, c))


def _wrap_half_open(a: float) -> float:
    if a >= HALF_PI:
        return a - math.pi
    if a < -HALF_PI:
        return a + math.pi
    return a


def soft_quality_value(px: float, py: float, r: GraspRect) -> float:
    """Linearly decaying quality of a point inside a rect.

    In the rect frame (u along the opening axis, v along the jaw axis) the
    value is 1 - max(|u| / (w/2), |v| / (h/2)): exactly 1 at the center,
    exactly 0 on the boundary.  Points outside raise ValueError.
    """
    c, s = math.cos(r.phi), math.sin(r.phi)
    dx, dy = px - r.cx, py - r.cy
    u = dx * c + dy * s
    v = -dx * s + dy * c
    ratio = max(abs(u) / (r.width / 2.0), abs(v) / (r.height / 2.0))
    if ratio > 1.0 + 1e-9:
        raise ValueError(f"point ({px}, {py}) lies outside the rect")
    return max(1.0 - ratio, 0.0)


def _group_key(r: GraspRect) -> tuple[int, int, int]:
    # Quantize to 1e-6 so rescaling float noise cannot split a duplicate group.
    return (round(r.cx * 1e6), round(r.cy * 1e6), round(r.phi * 1e6))


def _select_by_jaw(rects: list[GraspRect], policy: JawPolicy) -> GraspRect:
    ordered = sorted(rects, key=lambda r: (r.height, r.width, r.cx, r.cy, r.phi))
    return ordered[0] if policy == "minimum" else ordered[-1]


def _dedupe_rects(
    rects: tuple[GraspRect, ...], policy: JawPolicy
) -> list[GraspRect]:
    """Collapse same-center same-angle duplicates to one jaw size."""
    groups: dict[tuple[int, int, int], list[GraspRect]] = {}
    for r in rects:
        groups.setdefault(_group_key(r), []).append(r)
    survivors = [_select_by_jaw(g, policy) for g in groups.values()]
    survivors.sort(key=lambda r: (r.phi, r.cy, r.cx, r.width, r.height))
    return survivors


def _check_inputs(annotations: AnnotationSet, cfg: BuilderConfig) -> None:
    if (annotations.image_width, annotations.image_height) != (
        cfg.out_width,
        cfg.out_height,
    ):
        raise ValueError(
            f"annotations are at {annotations.image_width}x"
            f"{annotations.image_height}, expected the configured "
            f"{cfg.out_width}x{cfg.out_height}; call scale_annotations first"
        )
    for r in annotations.rects:
        if not r.is_normalized:
            raise ValueError(f"rect has unnormalized phi {r.phi!r}")


def _soft_values(r: GraspRect, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    px = xs + 0.5
    py = ys + 0.5
    c, s = math.cos(r.phi), math.sin(r.phi)
    dx, dy = px - r.cx, py - r.cy
    u = dx * c + dy * s
    v = -dx * s + dy * c
    ratio = np.maximum(np.abs(u) / (r.width / 2.0), np.abs(v) / (r.height / 2.0))
    return np.maximum(1.0 - ratio, 0.0)


def build_binned_maps(annotations: AnnotationSet, cfg: BuilderConfig) -> GraspMapStack:
    """Build the orientation-binned grasp map stack of a scene.

    Construction steps:

    1. Same-center same-angle duplicates collapse to one rect per the jaw
       policy (minimum jaw by default).
    2. Each survivor goes into the bin holding its angle.
    3. Within a bin, rects are written in ascending-phi order (ties broken
       by center, width, height) and a pixel is never overwritten, so
       overlapping pixels keep the values of the smallest-angle rect.
    4. The quality plane is soft (linear decay) or binary; each rect's
       center pixel carries exactly 1 unless an earlier rect of the same
       bin already claimed that pixel.
    5. The graspability plane is the union of the per-bin occupancy planes
       (or only the center pixels under gamma_mode="centers").

    The output depends only on the set of annotations, not their order.
    """
    _check_inputs(annotations, cfg)
    n, h, w = cfg.bins, cfg.out_height, cfg.out_width
    q = np.zeros((n, h, w))
    cos2 = np.zeros((n, h, w))
    sin2 = np.zeros((n, h, w))
    omega = np.zeros((n, h, w))
    o = np.zeros((n, h, w))
    centers = np.zeros((h, w))

    survivors = _dedupe_rects(annotations.rects, cfg.jaw_policy)
    for r in survivors:
        i = bin_index(r.phi, n)
        region = rasterize_rect(r, h, w).mask
        cxp, cyp = center_pixel(r)
        center_inside = 0 <= cxp < w and 0 <= cyp < h
        if center_inside:
            # The grasp point itself always belongs to the rect's region,
            # even when the rect is too thin to cover its pixel center.
            region = region.copy()
            region[cyp, cxp] = True
        free = region & (o[i] == 0.0)
        if not free.any():
            continue
        ys, xs = np.nonzero(free)
        if cfg.quality_mode == "soft":
            q[i, ys, xs] = _soft_values(r, ys, xs)
        else:
            q[i, ys, xs] = 1.0
        c, s = encode_angle(r.phi)
        cos2[i, ys, xs] = c
        sin2[i, ys, xs] = s
        omega[i, ys, xs] = r.width
        o[i, ys, xs] = 1.0
        if center_inside and free[cyp, cxp]:
            q[i, cyp, cxp] = 1.0
            centers[cyp, cxp] = 1.0

    if cfg.gamma_mode == "region":
        gamma = (o.max(axis=0) > 0.0).astype(float)
    else:
        gamma = centers
    return GraspMapStack(
        bins=n, height=h, width=w, q=q, cos2phi=cos2, sin2phi=sin2,
        omega=omega, o=o, gamma=gamma,
    )


def build_legacy_maps(annotations: AnnotationSet, cfg: BuilderConfig) -> LegacyMapStack:
    """Build single-orientation maps the overwrite-in-list-order way.

    The quality plane is the binary union of all boxes, which equals using
    only the largest jaw size per grasp.  Angle and width planes are
    written box by box in annotation order, each overwriting whatever an
    earlier box left behind.  The result depends on annotation order
    whenever boxes with different values overlap.
    """
    _check_inputs(annotations, cfg)
    h, w = cfg.out_height, cfg.out_width
    q = np.zeros((h, w))
    angle = np.zeros((h, w))
    omega = np.zeros((h, w))
    for r in annotations.rects:
        region = rasterize_rect(r, h, w).mask
        q[region] = 1.0
        angle[region] = r.phi
        omega[region] = r.width
    return LegacyMapStack(height=h, width=w, q=q, angle=angle, omega=omega)

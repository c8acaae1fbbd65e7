"""Map fusion, grasp extraction and the training objective.

At inference time the per-bin quality planes are gated by the graspability
plane and the per-bin occupancy planes, which suppresses spurious quality
mass in empty bins and off-object pixels.  Grasp rectangles are then read
off quality maxima: the decoded angle and the width plane give the box,
and the jaw size follows the half-width convention.  The training
objective is exposed as a pure scalar function over two stacks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import GraspRect
from .mapbuild import GraspMapStack, LegacyMapStack, decode_angle

BCE_EPS = 1e-7


class NoGraspError(RuntimeError):
    """Raised when a fused quality map contains no positive value."""


@dataclass(frozen=True)
class FusedQuality:
    """Per-bin quality planes after graspability and occupancy gating."""

    planes: np.ndarray  # (bins, height, width)

    def __post_init__(self) -> None:
        if self.planes.ndim != 3:
            raise ValueError(f"expected (bins, H, W) planes, got {self.planes.shape}")


@dataclass(frozen=True)
class LossBreakdown:
    """Per-term objective values; total follows the fixed combination rule."""

    bce_o: float
    bce_gamma: float
    mse_q: float
    mse_cos: float
    mse_sin: float
    mse_omega: float
    mse_attentive: float
    total: float


def fuse_quality(stack: GraspMapStack) -> FusedQuality:
    """Gate each quality plane by graspability and bin occupancy.

    The o and gamma planes may be soft model outputs; they are binarized at
    0.5 before multiplying.  On a ground-truth stack the result equals the
    quality planes unchanged.
    """
    o_bin = (stack.o >= 0.5).astype(float)
    gamma_bin = (stack.gamma >= 0.5).astype(float)
    planes = stack.q * gamma_bin[np.newaxis, :, :] * o_bin
    return FusedQuality(planes=planes)


def reconstruct_box(cx: float, cy: float, phi: float, width: float) -> GraspRect:
    """Turn an extracted (center, angle, width) into a full rectangle.

    The jaw size is not represented in the maps; boxes are reconstructed
    with height = width / 2.
    """
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    return GraspRect(cx=cx, cy=cy, phi=phi, width=width, height=width / 2.0)


def _pixel_center(ix: int, iy: int) -> tuple[float, float]:
    return ix + 0.5, iy + 0.5


def extract_best(stack: GraspMapStack) -> tuple[GraspRect, float]:
    """Best grasp of a stack: global maximum of the fused quality planes.

    Ties break toward the lowest (bin, row, column).  Raises NoGraspError
    when the fused map is identically zero or negative.
    """
    fused = fuse_quality(stack).planes
    flat_idx = int(np.argmax(fused))
    i, iy, ix = np.unravel_index(flat_idx, fused.shape)
    score = float(fused[i, iy, ix])
    if score <= 0.0:
        raise NoGraspError("fused quality map has no positive value")
    phi = decode_angle(float(stack.cos2phi[i, iy, ix]), float(stack.sin2phi[i, iy, ix]))
    width = float(stack.omega[i, iy, ix])
    cx, cy = _pixel_center(int(ix), int(iy))
    return reconstruct_box(cx, cy, phi, width), score


def extract_legacy_best(stack: LegacyMapStack) -> tuple[GraspRect, float]:
    """Best grasp of a single-map stack: argmax of its quality plane.

    The angle and width planes are read at the argmax pixel and the box is
    reconstructed with the same half-width jaw convention.  Ties break
    toward the lowest (row, column).  Raises NoGraspError when the quality
    plane has no positive value or the width there is non-positive.
    """
    flat_idx = int(np.argmax(stack.q))
    iy, ix = np.unravel_index(flat_idx, stack.q.shape)
    score = float(stack.q[iy, ix])
    if score <= 0.0:
        raise NoGraspError("quality plane has no positive value")
    width = float(stack.omega[iy, ix])
    if width <= 0.0:
        raise NoGraspError("argmax pixel carries no positive width")
    phi = float(stack.angle[iy, ix])
    cx, cy = _pixel_center(int(ix), int(iy))
    return reconstruct_box(cx, cy, phi, width), score


def default_suppression_radius(stack: GraspMapStack) -> float:
    """Suppression radius from the stack alone.

    Half the median reconstructed jaw size over occupied pixels, with the
    half-width convention that is median(omega) / 4, floored at 2 px.
    """
    active = stack.omega[stack.o >= 0.5]
    if active.size == 0:
        return 2.0
    return max(2.0, float(np.median(active)) / 4.0)


def suppression_radius_from_heights(heights) -> float:
    """Suppression radius from annotated jaw sizes: half the median, min 2 px."""
    hs = np.asarray(list(heights), dtype=float)
    if hs.size == 0:
        return 2.0
    return max(2.0, float(np.median(hs)) / 2.0)


def extract_per_bin(
    stack: GraspMapStack, k: int, radius: float | None = None
) -> list[list[tuple[GraspRect, float]]]:
    """Up to k grasps per orientation bin by greedy peak picking.

    Each pick takes the highest remaining fused value in the bin and
    suppresses a disk of the given radius around it.  With radius=None the
    stack-derived default is used.  Returns one (grasp, score) list per
    bin; empty bins contribute empty lists.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if radius is None:
        radius = default_suppression_radius(stack)
    fused = fuse_quality(stack).planes
    h, w = stack.height, stack.width
    ys = np.arange(h)[:, np.newaxis]
    xs = np.arange(w)[np.newaxis, :]
    results: list[list[tuple[GraspRect, float]]] = []
    for i in range(stack.bins):
        plane = fused[i].copy()
        picks: list[tuple[GraspRect, float]] = []
        for _ in range(k):
            flat_idx = int(np.argmax(plane))
            iy, ix = np.unravel_index(flat_idx, plane.shape)
            score = float(plane[iy, ix])
            if score <= 0.0:
                break
            phi = decode_angle(
                float(stack.cos2phi[i, iy, ix]), float(stack.sin2phi[i, iy, ix])
            )
            width = float(stack.omega[i, iy, ix])
            cx, cy = _pixel_center(int(ix), int(iy))
            picks.append((reconstruct_box(cx, cy, phi, width), score))
            suppress = (ys - iy) ** 2 + (xs - ix) ** 2 <= radius * radius
            plane[suppress] = 0.0
        results.append(picks)
    return results


def _mean(a: np.ndarray) -> float:
    return float(np.mean(a, dtype=np.float64))


def _bce(pred: np.ndarray, target: np.ndarray) -> float:
    p = np.clip(pred, BCE_EPS, 1.0 - BCE_EPS)
    return _mean(-(target * np.log(p) + (1.0 - target) * np.log1p(-p)))


def _mse(pred: np.ndarray, target: np.ndarray) -> float:
    d = pred - target
    return _mean(d * d)


def total_loss(pred: GraspMapStack, gt: GraspMapStack) -> LossBreakdown:
    """Training objective between a predicted and a ground-truth stack.

    Binary cross-entropy supervises the occupancy and graspability planes
    (predictions clamped to [1e-7, 1 - 1e-7]); mean squared error
    supervises quality, the two angle planes and width.  The attentive
    term penalizes the occupancy-gated quality against the ground-truth
    quality.  All means run over every plane element; the five MSE terms
    are scaled by the bin count:

        total = bce_o + bce_gamma
                + bins * (mse_q + mse_cos + mse_sin + mse_omega + mse_attentive)
    """
    if (pred.bins, pred.height, pred.width) != (gt.bins, gt.height, gt.width):
        raise ValueError(
            f"stack shapes differ: {(pred.bins, pred.height, pred.width)} vs "
            f"{(gt.bins, gt.height, gt.width)}"
        )
    bce_o = _bce(pred.o, gt.o)
    bce_gamma = _bce(pred.gamma, gt.gamma)
    mse_q = _mse(pred.q, gt.q)
    mse_cos = _mse(pred.cos2phi, gt.cos2phi)
    mse_sin = _mse(pred.sin2phi, gt.sin2phi)
    mse_omega = _mse(pred.omega, gt.omega)
    mse_attentive = _mse(pred.q * pred.o, gt.q)
    total = bce_o + bce_gamma + pred.bins * (
        mse_q + mse_cos + mse_sin + mse_omega + mse_attentive
    )
    return LossBreakdown(
        bce_o=bce_o,
        bce_gamma=bce_gamma,
        mse_q=mse_q,
        mse_cos=mse_cos,
        mse_sin=mse_sin,
        mse_omega=mse_omega,
        mse_attentive=mse_attentive,
        total=total,
    )

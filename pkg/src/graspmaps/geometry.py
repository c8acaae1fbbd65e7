"""Oriented-rectangle primitives for antipodal grasps.

Conventions used throughout the package: image x grows rightward, y grows
downward, the origin sits at the top-left pixel corner, and a positive
rotation turns from +x toward +y.  Grasp angles are antipodal (a grasp and
its 180-degree twin are the same grasp), so every angle is reduced to the
half-open interval [-pi/2, pi/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

HALF_PI = math.pi / 2.0

# Corner sign pattern (along opening axis, along jaw axis), counterclockwise
# for an unrotated rect.
_CORNER_SIGNS = ((-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0))


def normalize_angle(a: float) -> float:
    """Reduce an angle to [-pi/2, pi/2), identifying antipodal twins.

    Raises ValueError on non-finite input.
    """
    if not math.isfinite(a):
        raise ValueError(f"angle must be finite, got {a!r}")
    r = a - math.pi * math.floor(a / math.pi + 0.5)
    # Guard against float rounding at the interval edges.
    if r >= HALF_PI:
        r -= math.pi
    elif r < -HALF_PI:
        r += math.pi
    return r


@dataclass(frozen=True)
class GraspRect:
    """One oriented grasp rectangle.

    cx, cy: grasp center in pixels.
    phi: rotation of the opening axis w.r.t. the image x-axis, radians.
    width: gripper opening, extent along the opening axis, pixels.
    height: jaw size, extent perpendicular to the opening axis, pixels.
    """

    cx: float
    cy: float
    phi: float
    width: float
    height: float

    def __post_init__(self) -> None:
        for name in ("cx", "cy", "phi", "width", "height"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"GraspRect.{name} must be finite, got {v!r}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(
                f"GraspRect sides must be positive, got width={self.width}, "
                f"height={self.height}"
            )

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def is_normalized(self) -> bool:
        return -HALF_PI <= self.phi < HALF_PI

    def normalized(self) -> "GraspRect":
        """Return the same rect with phi reduced to [-pi/2, pi/2)."""
        return replace(self, phi=normalize_angle(self.phi))

    def translated(self, dx: float, dy: float) -> "GraspRect":
        return replace(self, cx=self.cx + dx, cy=self.cy + dy)


@dataclass(frozen=True)
class PixelRegion:
    """Boolean pixel mask of shape (height, width)."""

    width: int
    height: int
    mask: np.ndarray

    def __post_init__(self) -> None:
        if self.mask.shape != (self.height, self.width):
            raise ValueError(
                f"mask shape {self.mask.shape} does not match "
                f"(height, width)=({self.height}, {self.width})"
            )

    @property
    def pixel_count(self) -> int:
        return int(np.count_nonzero(self.mask))


def rect_axes(r: GraspRect) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors of the opening axis and the jaw axis (phi + pi/2)."""
    c, s = math.cos(r.phi), math.sin(r.phi)
    return np.array([c, s]), np.array([-s, c])


def rect_corners(r: GraspRect) -> np.ndarray:
    """Four corner points of a rect, shape (4, 2), counterclockwise.

    Corner order starts at (-width/2, -height/2) in the rect frame, so an
    unrotated rect yields (-w/2,-h/2), (w/2,-h/2), (w/2,h/2), (-w/2,h/2).
    """
    u, v = rect_axes(r)
    center = np.array([r.cx, r.cy])
    hw, hh = r.width / 2.0, r.height / 2.0
    return np.array([center + su * hw * u + sv * hh * v for su, sv in _CORNER_SIGNS])


def polygon_area(points: np.ndarray) -> float:
    """Shoelace area of a simple polygon, absolute value."""
    if len(points) < 3:
        return 0.0
    x, y = points[:, 0], points[:, 1]
    return abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))) / 2.0


def clip_convex(subject: np.ndarray, clip: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Clip a convex polygon against another via Sutherland-Hodgman.

    Both polygons must be counterclockwise.  Returns the intersection
    polygon as an (K, 2) array, possibly empty.
    """
    output = [tuple(p) for p in subject]
    n = len(clip)
    for i in range(n):
        if not output:
            break
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay

        def side(px: float, py: float) -> float:
            return ex * (py - ay) - ey * (px - ax)

        inside = [side(px, py) >= -eps for px, py in output]
        clipped: list[tuple[float, float]] = []
        m = len(output)
        for j in range(m):
            cur, prev = output[j], output[j - 1]
            if inside[j]:
                if not inside[j - 1]:
                    clipped.append(_edge_intersection(prev, cur, (ax, ay), (bx, by)))
                clipped.append(cur)
            elif inside[j - 1]:
                clipped.append(_edge_intersection(prev, cur, (ax, ay), (bx, by)))
        output = clipped
    return np.array(output) if output else np.empty((0, 2))


def _edge_intersection(
    p: tuple[float, float],
    q: tuple[float, float],
    a: tuple[float, float],
    b: tuple[float, float],
) -> tuple[float, float]:
    """Intersection of line p-q with line a-b (caller guarantees crossing)."""
    dx1, dy1 = q[0] - p[0], q[1] - p[1]
    dx2, dy2 = b[0] - a[0], b[1] - a[1]
    denom = dx1 * dy2 - dy1 * dx2
    if denom == 0.0:
        # Parallel within float precision; fall back to the segment endpoint.
        return q
    t = ((a[0] - p[0]) * dy2 - (a[1] - p[1]) * dx2) / denom
    return (p[0] + t * dx1, p[1] + t * dy1)


def rect_iou(a: GraspRect, b: GraspRect) -> float:
    """Jaccard index of two oriented rectangles via exact polygon clipping."""
    area_a, area_b = a.area, b.area
    if area_a <= 0.0 or area_b <= 0.0:
        raise ValueError("rect_iou requires rectangles with positive area")
    inter_poly = clip_convex(rect_corners(a), rect_corners(b))
    inter = polygon_area(inter_poly)
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def rasterize_rect(r: GraspRect, height: int, width: int) -> PixelRegion:
    """Rasterize a rect into an image of the given size.

    A pixel (x, y) is inside iff its center (x+0.5, y+0.5) lies inside the
    rectangle, boundary inclusive within 1e-9.  Pixels outside the image are
    clipped away; a rect fully outside yields an empty mask.
    """
    if height <= 0 or width <= 0:
        raise ValueError(f"image size must be positive, got {height}x{width}")
    mask = np.zeros((height, width), dtype=bool)
    corners = rect_corners(r)
    x0 = max(int(math.floor(corners[:, 0].min() - 0.5)), 0)
    x1 = min(int(math.ceil(corners[:, 0].max() + 0.5)), width)
    y0 = max(int(math.floor(corners[:, 1].min() - 0.5)), 0)
    y1 = min(int(math.ceil(corners[:, 1].max() + 0.5)), height)
    if x0 >= x1 or y0 >= y1:
        return PixelRegion(width=width, height=height, mask=mask)

    xs = np.arange(x0, x1) + 0.5 - r.cx
    ys = np.arange(y0, y1) + 0.5 - r.cy
    gx, gy = np.meshgrid(xs, ys)
    c, s = math.cos(r.phi), math.sin(r.phi)
    u = gx * c + gy * s
    v = -gx * s + gy * c
    tol = 1e-9
    inside = (np.abs(u) <= r.width / 2.0 + tol) & (np.abs(v) <= r.height / 2.0 + tol)
    mask[y0:y1, x0:x1] = inside
    return PixelRegion(width=width, height=height, mask=mask)


def center_pixel(r: GraspRect) -> tuple[int, int]:
    """(x, y) index of the pixel containing the rect center."""
    return int(math.floor(r.cx)), int(math.floor(r.cy))


def points_to_rect(points: np.ndarray) -> GraspRect:
    """Fit a GraspRect to four corner points in annotation order.

    The first edge (p0 -> p1) runs along the opening axis.  For an exact
    rectangle this inverts rect_corners up to vertex ordering; for a
    slightly non-orthogonal quad it returns the best axis-extent fit.

    Raises ValueError for degenerate (collinear or duplicate) points.
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape != (4, 2):
        raise ValueError(f"expected 4 points of shape (4, 2), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("corner points must be finite")

    center = pts.mean(axis=0)
    # Average the two opening-axis edges for noise robustness.
    d = (pts[1] - pts[0]) + (pts[2] - pts[3])
    if float(np.hypot(*d)) < 1e-9:
        raise ValueError("degenerate quad: opening edges cancel or vanish")
    phi = normalize_angle(math.atan2(d[1], d[0]))

    c, s = math.cos(phi), math.sin(phi)
    rel = pts - center
    u = rel[:, 0] * c + rel[:, 1] * s
    v = -rel[:, 0] * s + rel[:, 1] * c
    w = float(u.max() - u.min())
    h = float(v.max() - v.min())
    if w < 1e-9 or h < 1e-9:
        raise ValueError("degenerate quad: collinear or duplicate points")
    return GraspRect(cx=float(center[0]), cy=float(center[1]), phi=phi, width=w, height=h)


def angular_distance(a: float, b: float) -> float:
    """Antipodal angular distance, min(|d|, pi - |d|) over d = a - b mod pi."""
    d = abs(a - b) % math.pi
    return min(d, math.pi - d)

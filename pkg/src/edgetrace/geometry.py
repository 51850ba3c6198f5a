"""Contour tracing and planar geometry on pixel masks.

Coordinates are (x, y) with x growing right and y growing down, matching the
raster layout used throughout. Angles are measured from the +x axis toward
+y, in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import EmptyInputError

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)

# Moore neighborhood in clockwise order starting east, as (dr, dc).
_TRACE_DIRS = (
    (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1),
)

# After a move in direction d, the cell examined just before the move was
# background; this maps d to the direction from the new pixel back to that
# cell, where the next clockwise scan resumes.
_TRACE_BACK = (6, 6, 0, 0, 2, 2, 4, 4)


class Point(NamedTuple):
    x: float
    y: float


def euclidean(a: Point | tuple[float, float], b: Point | tuple[float, float]) -> float:
    """Straight-line distance between two points."""
    return math.hypot(a[0] - b[0], a[1] - b[1])


def midpoint(a: Point | tuple[float, float], b: Point | tuple[float, float]) -> Point:
    """Midpoint of the segment ab."""
    return Point((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)


# ------------------------------------------------------------------ contours

def _trace_boundary(mask: np.ndarray, start: tuple[int, int]) -> list[Point]:
    """Moore-neighbor boundary trace, clockwise, starting at `start`.

    `start` must be the row-major first pixel of its component, so its west
    neighbor is background and the first scan proceeds clockwise from the
    north-west. The walk ends when the first move out of `start` is about
    to repeat; the move direction alone fixes the follow-up state, so the
    trace is periodic from that point and the loop is complete. Pixels on
    one-pixel-wide spurs appear twice, once per side.
    """
    height, width = mask.shape

    def is_fg(r: int, c: int) -> bool:
        return 0 <= r < height and 0 <= c < width and bool(mask[r, c])

    contour: list[Point] = []
    current = start
    back = 4  # west
    first = -1
    for _ in range(8 * mask.size):
        r, c = current
        nxt = -1
        for k in range(1, 9):
            d = (back + k) % 8
            dr, dc = _TRACE_DIRS[d]
            if is_fg(r + dr, c + dc):
                nxt = d
                break
        if nxt < 0:
            return [Point(float(c), float(r))]  # isolated pixel
        if contour and current == start and nxt == first:
            break
        if not contour:
            first = nxt
        contour.append(Point(float(c), float(r)))
        dr, dc = _TRACE_DIRS[nxt]
        current = (r + dr, c + dc)
        back = _TRACE_BACK[nxt]
    return contour


def find_contours(mask: np.ndarray, min_area: float = 25.0) -> list[list[Point]]:
    """Outer boundary of every 8-connected component, one clockwise loop each.

    Components smaller than `min_area` pixels are dropped; the default is
    tuned to suppress isolated edge-noise blobs. Loops are listed by their
    bounding box origin: ascending min x, then min y. Interior hole
    boundaries are not reported.
    """
    if min_area < 0:
        raise ValueError(f"min_area must be >= 0, got {min_area}")
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError("expected a 2-D mask")
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    if count == 0:
        return []
    areas = np.bincount(labels.ravel())
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    first = np.searchsorted(flat[order], np.arange(1, count + 1))
    contours = []
    for label in range(1, count + 1):
        if areas[label] < min_area:
            continue
        idx = int(order[first[label - 1]])
        start = (idx // mask.shape[1], idx % mask.shape[1])
        contours.append(_trace_boundary(labels == label, start))
    contours.sort(key=lambda pts: (min(p.x for p in pts), min(p.y for p in pts)))
    return contours


def contour_to_jsonable(contour: list[Point]) -> list[list[float]]:
    """Plain nested-list form of a contour for JSON serialization."""
    return [[float(p.x), float(p.y)] for p in contour]


# --------------------------------------------------------------- convex hull

def _cross(o: Point, a: Point, b: Point) -> float:
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


def convex_hull(points: list[Point] | list[tuple[float, float]]) -> list[Point]:
    """Convex hull by monotone chain.

    Vertices come back counter-clockwise in the usual mathematical sense
    (positive cross products), with collinear interior points dropped.
    Degenerate inputs collapse: one distinct point yields [p], collinear
    points yield the two extremes.
    """
    if len(points) == 0:
        raise EmptyInputError("convex hull of no points")
    unique = sorted({(float(p[0]), float(p[1])) for p in points})
    pts = [Point(x, y) for x, y in unique]
    if len(pts) == 1:
        return pts
    if len(pts) == 2:
        return pts

    def half(seq: list[Point]) -> list[Point]:
        chain: list[Point] = []
        for p in seq:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2:  # all points collinear
        return [pts[0], pts[-1]]
    return hull


# ------------------------------------------------------- min-area rectangles

@dataclass(frozen=True)
class RotatedBox:
    """Minimum-area enclosing rectangle.

    `angle` is the direction of the `width` axis in radians, in [0, pi);
    `width` >= `height`. Squares are reported with angle folded into
    [0, pi/2).
    """

    center: Point
    width: float
    height: float
    angle: float


def min_area_rect(points: list[Point] | list[tuple[float, float]]) -> RotatedBox:
    """Smallest-area enclosing rectangle of a point set.

    One edge of the optimum is collinear with a convex hull edge, so each
    hull edge direction is tried in turn. Degenerate inputs yield zero
    width and/or height.
    """
    hull = convex_hull(points)
    pts = np.array([[p.x, p.y] for p in hull], dtype=np.float64)
    if len(hull) == 1:
        return RotatedBox(hull[0], 0.0, 0.0, 0.0)
    if len(hull) == 2:
        dx, dy = pts[1] - pts[0]
        length = math.hypot(dx, dy)
        cx, cy = (pts[0] + pts[1]) / 2.0
        angle = math.atan2(dy, dx) % math.pi
        return RotatedBox(Point(float(cx), float(cy)), length, 0.0, angle)

    edges = np.roll(pts, -1, axis=0) - pts
    norms = np.hypot(edges[:, 0], edges[:, 1])
    units = edges / norms[:, None]

    best = None
    for ux, uy in units:
        vx, vy = -uy, ux
        xs = pts[:, 0] * ux + pts[:, 1] * uy
        ys = pts[:, 0] * vx + pts[:, 1] * vy
        w = xs.max() - xs.min()
        h = ys.max() - ys.min()
        area = w * h
        if best is None or area < best[0] - 1e-12:
            cu = (xs.max() + xs.min()) / 2.0
            cv = (ys.max() + ys.min()) / 2.0
            best = (area, w, h, (ux, uy), cu, cv)

    _, w, h, (ux, uy), cu, cv = best
    cx = float(cu * ux + cv * -uy)
    cy = float(cu * uy + cv * ux)
    angle = math.atan2(uy, ux)
    if w < h:
        w, h = h, w
        angle += math.pi / 2.0
    angle %= math.pi
    if abs(w - h) <= 1e-9 * max(1.0, w):
        angle %= math.pi / 2.0
    return RotatedBox(Point(cx, cy), float(w), float(h), float(angle))


class OrderedCorners(NamedTuple):
    tl: Point
    tr: Point
    br: Point
    bl: Point


def box_corners(box: RotatedBox) -> list[Point]:
    """The four rectangle corners, in no particular order."""
    ux, uy = math.cos(box.angle), math.sin(box.angle)
    vx, vy = -uy, ux
    hw, hh = box.width / 2.0, box.height / 2.0
    cx, cy = box.center
    return [
        Point(cx + sx * hw * ux + sy * hh * vx, cy + sx * hw * uy + sy * hh * vy)
        for sx, sy in ((1, 1), (-1, 1), (-1, -1), (1, -1))
    ]


def order_corners(box: RotatedBox) -> OrderedCorners:
    """Corners in top-left, top-right, bottom-right, bottom-left order.

    Top-left is the corner minimizing x + y (ties: smaller y, then smaller
    x); the cycle then proceeds clockwise on screen, which is
    counter-clockwise in y-up mathematics.
    """
    corners = box_corners(box)
    # shoelace > 0 in y-down coords means the cycle is clockwise on screen
    area2 = sum(
        corners[i].x * corners[(i + 1) % 4].y - corners[(i + 1) % 4].x * corners[i].y
        for i in range(4)
    )
    if area2 < 0:
        corners.reverse()
    scale = max(1.0, max(abs(c.x) + abs(c.y) for c in corners))
    eps = 1e-9 * scale
    best = 0
    for i in range(1, 4):
        key_b, key_i = corners[best], corners[i]
        sb, si = key_b.x + key_b.y, key_i.x + key_i.y
        if si < sb - eps:
            best = i
        elif abs(si - sb) <= eps and (
            key_i.y < key_b.y - eps
            or (abs(key_i.y - key_b.y) <= eps and key_i.x < key_b.x)
        ):
            best = i
    tl, tr, br, bl = (corners[(best + k) % 4] for k in range(4))
    return OrderedCorners(tl, tr, br, bl)


def box_center(corners: OrderedCorners) -> Point:
    """Arithmetic mean of the four corner points."""
    xs = sum(p.x for p in corners) / 4.0
    ys = sum(p.y for p in corners) / 4.0
    return Point(xs, ys)

"""
From binary mask to rotated boxes
=================================

Traces object outlines in a mask, then reduces each outline to a convex
hull, a minimum-area rotated rectangle, and ordered corner points.
"""

import math

import numpy as np

from edgetrace.geometry import (
    box_center,
    convex_hull,
    euclidean,
    find_contours,
    midpoint,
    min_area_rect,
    order_corners,
)

mask = np.zeros((120, 160), bool)
mask[20:60, 20:70] = True          # axis-aligned block
for r in range(70, 110):           # diamond, a rotated square
    half = 20 - abs(r - 90)
    mask[r, 110 - half:110 + half + 1] = True

contours = find_contours(mask, min_area=25.0)
print(f"traced {len(contours)} outlines, left to right")

for i, contour in enumerate(contours):
    hull = convex_hull(contour)
    rect = min_area_rect(contour)
    corners = order_corners(rect)
    print(f"\nobject {i}: {len(contour)} boundary points, "
          f"{len(hull)} hull vertices")
    print(f"  rect {rect.width:.1f} x {rect.height:.1f} px "
          f"at {math.degrees(rect.angle):.1f} degrees")
    print(f"  top-left corner ({corners.tl.x:.1f}, {corners.tl.y:.1f})")
    top_mid = midpoint(corners.tl, corners.tr)
    print(f"  top-edge midpoint ({top_mid.x:.1f}, {top_mid.y:.1f})")

centers = [box_center(order_corners(min_area_rect(c)))
           for c in contours]
print(f"\ncenter-to-center span: "
      f"{euclidean(centers[0], centers[-1]):.1f} px")

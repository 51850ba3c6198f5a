"""
Pixels-per-metric distance scoring
==================================

Scores a scene with two people standing 300 px apart, using a reference
object of known real size to convert pixels to metres.
"""

import numpy as np

from edgetrace.distancing import (
    all_pairs_distances,
    calibrate,
    chain_distances,
    distance_pipeline,
    extract_objects,
)

# two 40 px squares, left edges at x=100 and x=400, so centers 300 px apart
mask = np.zeros((480, 640), bool)
mask[220:260, 100:140] = True
mask[220:260, 400:440] = True

# the reference: an object 100 px wide is 0.5 m in the real world
profile = calibrate(reference_width_px=100.0, reference_width_m=0.5)
print(f"calibration: {profile.pixels_per_metre:.0f} px per metre")

objects = extract_objects(mask)
print(f"extracted {len(objects)} objects")

for pair in chain_distances(objects, profile):
    print(f"neighbors {pair.id_a}-{pair.id_b}: "
          f"{pair.px_distance:.0f} px = {pair.metric_distance:.2f} m")
for pair in all_pairs_distances(objects, profile):
    print(f"centers {pair.id_a}-{pair.id_b}: "
          f"{pair.px_distance:.0f} px = {pair.metric_distance:.2f} m")

# the same scene under a strict and a relaxed distancing rule
for threshold in (2.0, 1.0):
    report = distance_pipeline(mask, profile, threshold)
    print(f"\nthreshold {threshold} m: {report.violations} violation(s), "
          f"compliance score {report.score:.2f}")
    for pair in report.pairs:
        print(f"  pair {pair.id_a}-{pair.id_b} at "
              f"{pair.metric_distance:.2f} m -> {pair.label}")

"""
Detection and segmentation scoreboards
======================================

Walks the evaluation metrics with a tiny hand-checkable example: box IoU,
duplicate suppression, average precision, and segmentation mIoU.
"""

import numpy as np

from edgetrace.detection import (
    DetBox,
    average_precision,
    iou,
    mean_ap,
    miou,
    nms,
)

gt = [
    DetBox(100, 100, 40, 40, 1.0, "with-mask"),
    DetBox(300, 120, 40, 40, 1.0, "with-mask"),
    DetBox(500, 110, 40, 40, 1.0, "with-mask"),
]

# detector output: the three real people plus one stray box
dets = [
    DetBox(102, 98, 40, 40, 0.95, "with-mask"),
    DetBox(298, 121, 40, 40, 0.90, "with-mask"),
    DetBox(505, 108, 40, 40, 0.85, "with-mask"),
    DetBox(50, 400, 40, 40, 0.10, "with-mask"),
]

for d, g in zip(dets, gt):
    print(f"det at ({d.x:.0f},{d.y:.0f}) vs gt ({g.x:.0f},{g.y:.0f}): "
          f"IoU {iou(d, g):.3f}")

# a duplicate of the first detection is suppressed by its lower score
doubled = dets + [DetBox(101, 99, 40, 40, 0.60, "with-mask")]
kept = nms(doubled, 0.5)
print(f"\nnms keeps {len(kept)} of {len(doubled)} boxes")

ap = average_precision(dets, gt, iou_threshold=0.5)
print(f"average precision: {ap:.3f} "
      f"(the low-scored stray box costs nothing after full recall)")
print(f"mAP over classes: {mean_ap({'with-mask': ap}):.3f}")

# segmentation: one wrong pixel out of four
gt_map = np.array([[0, 0], [1, 1]], np.uint8)
pred_map = np.array([[0, 1], [1, 1]], np.uint8)
score = miou(pred_map, gt_map, num_classes=2)
print(f"\nmIoU of the 2x2 example: {score:.4f} "
      f"(mean of 1/2 for background and 2/3 for person)")

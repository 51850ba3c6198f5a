"""Detector/segmenter plug points plus evaluation metrics.

Real models run elsewhere; here the backends are annotation-driven stubs
that replay pre-recorded boxes and label maps, which keeps the rest of the
pipeline exercisable on any machine. The metric half implements IoU, greedy
NMS, all-points average precision, mAP, and mIoU.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadThresholdError,
    DimensionMismatchError,
    EmptyInputError,
    LabelOutOfRangeError,
    MalformedAnnotationError,
    MissingLabelMapError,
    UnknownClassError,
)
from .imgproc import load_pgm

CLASSES = ("person", "with-mask", "without-mask")

# label-map pixel values
BACKGROUND_ID = 0
PERSON_ID = 1


@dataclass(frozen=True)
class DetBox:
    """Axis-aligned detection: top-left corner, size, confidence, class."""

    x: float
    y: float
    w: float
    h: float
    score: float
    cls: str


@dataclass(frozen=True)
class SegmentationMap:
    """Per-pixel class ids, row-major, 0 = background."""

    labels: np.ndarray

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def person_mask(self) -> np.ndarray:
        return self.labels == PERSON_ID


class DetectorBackend:
    """Box-producing model interface."""

    def detect(self, frame_id: str, frame: np.ndarray) -> list[DetBox]:
        raise NotImplementedError


class SegmenterBackend:
    """Pixel-labelling model interface; output dims must match the frame."""

    def segment(self, frame_id: str, frame: np.ndarray) -> SegmentationMap:
        raise NotImplementedError


# ------------------------------------------------------------ stub backends

def _parse_box(obj: object) -> DetBox:
    if not isinstance(obj, dict):
        raise MalformedAnnotationError(f"box is not an object: {obj!r}")
    try:
        x, y = float(obj["x"]), float(obj["y"])
        w, h = float(obj["w"]), float(obj["h"])
        score = float(obj["score"])
        cls = obj["class"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedAnnotationError(f"bad box record {obj!r}: {exc}") from exc
    if w <= 0 or h <= 0:
        raise MalformedAnnotationError(f"non-positive box size {w}x{h}")
    if not 0.0 <= score <= 1.0:
        raise MalformedAnnotationError(f"score {score} outside [0, 1]")
    if cls not in CLASSES:
        raise UnknownClassError(f"unknown class {cls!r}")
    return DetBox(x, y, w, h, score, cls)


def load_annotations(path: str | Path) -> dict[str, list[DetBox]]:
    """Read frame annotations from NDJSON.

    Each line holds {"frame_id": ..., "boxes": [{x,y,w,h,score,class}, ...]};
    repeated frame ids accumulate.
    """
    frames: dict[str, list[DetBox]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedAnnotationError(
                    f"line {lineno}: invalid JSON: {exc}"
                ) from exc
            if not isinstance(record, dict):
                raise MalformedAnnotationError(f"line {lineno}: not an object")
            frame_id = record.get("frame_id")
            boxes = record.get("boxes")
            if not isinstance(frame_id, str) or not isinstance(boxes, list):
                raise MalformedAnnotationError(
                    f"line {lineno}: expected frame_id string and boxes list"
                )
            frames.setdefault(frame_id, []).extend(_parse_box(b) for b in boxes)
    return frames


class _AnnotationDetector(DetectorBackend):
    def __init__(self, frames: dict[str, list[DetBox]]):
        self._frames = {k: tuple(v) for k, v in frames.items()}

    def detect(self, frame_id: str, frame: np.ndarray) -> list[DetBox]:
        return list(self._frames.get(frame_id, ()))


def stub_detector_from_annotations(path: str | Path) -> DetectorBackend:
    """Detector that replays boxes recorded in an annotation NDJSON file."""
    return _AnnotationDetector(load_annotations(path))


class _LabelMapSegmenter(SegmenterBackend):
    def __init__(self, directory: Path):
        self._dir = directory

    def segment(self, frame_id: str, frame: np.ndarray) -> SegmentationMap:
        path = self._dir / f"{frame_id}.pgm"
        if not path.is_file():
            raise MissingLabelMapError(f"no label map for frame {frame_id!r}")
        labels = load_pgm(path.read_bytes())
        if labels.shape != frame.shape:
            raise DimensionMismatchError(
                f"label map {labels.shape} vs frame {frame.shape}"
            )
        return SegmentationMap(labels)


def stub_segmenter_from_labelmaps(directory: str | Path) -> SegmenterBackend:
    """Segmenter that replays <frame_id>.pgm label maps from a directory."""
    return _LabelMapSegmenter(Path(directory))


# ----------------------------------------------------------------- box IoU

def iou(a: DetBox, b: DetBox) -> float:
    """Intersection-over-union of two axis-aligned boxes, in [0, 1]."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.w * a.h + b.w * b.h - inter
    return inter / union


def nms(boxes: list[DetBox], iou_threshold: float) -> list[DetBox]:
    """Greedy non-maximum suppression, per class.

    Boxes are taken in descending score order (ties keep input order); a box
    is dropped when it overlaps an already-kept box of the same class with
    IoU strictly above the threshold. Survivors come back in input order.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise BadThresholdError(f"iou threshold {iou_threshold} outside [0, 1]")
    order = sorted(range(len(boxes)), key=lambda i: -boxes[i].score)
    kept: list[int] = []
    for i in order:
        candidate = boxes[i]
        if any(
            boxes[j].cls == candidate.cls and iou(boxes[j], candidate) > iou_threshold
            for j in kept
        ):
            continue
        kept.append(i)
    return [boxes[i] for i in sorted(kept)]


# --------------------------------------------------------- average precision

def _envelope_area(recall: list[float], precision: list[float]) -> float:
    """Area under the precision-recall curve, all-points interpolation."""
    mrec = [0.0, *recall, 1.0]
    mpre = [0.0, *precision, 0.0]
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    return sum(
        (mrec[i] - mrec[i - 1]) * mpre[i]
        for i in range(1, len(mrec))
        if mrec[i] != mrec[i - 1]
    )


def _match_greedy(
    ranked: list[tuple[object, DetBox]],
    gts_by_group: dict[object, list[DetBox]],
    iou_threshold: float,
) -> list[bool]:
    """True/false-positive flags for score-ranked detections.

    Each detection grabs the unmatched ground-truth box in its group with
    the highest IoU at or above the threshold; ties go to the earliest
    ground-truth box.
    """
    taken: dict[object, list[bool]] = {
        g: [False] * len(v) for g, v in gts_by_group.items()
    }
    flags = []
    for group, det in ranked:
        best_iou, best_idx = 0.0, -1
        for k, gt in enumerate(gts_by_group.get(group, [])):
            if taken[group][k]:
                continue
            overlap = iou(det, gt)
            if overlap >= iou_threshold and overlap > best_iou:
                best_iou, best_idx = overlap, k
        if best_idx >= 0:
            taken[group][best_idx] = True
            flags.append(True)
        else:
            flags.append(False)
    return flags


def _ap_from_flags(flags: list[bool], npos: int) -> float:
    if npos == 0:
        return 1.0 if not flags else 0.0
    if not flags:
        return 0.0
    tp = fp = 0
    recall, precision = [], []
    for flag in flags:
        tp += flag
        fp += not flag
        recall.append(tp / npos)
        precision.append(tp / (tp + fp))
    return _envelope_area(recall, precision)


def average_precision(
    dets: list[DetBox], gts: list[DetBox], iou_threshold: float = 0.5
) -> float:
    """All-points interpolated average precision for one class.

    Detections are ranked by descending score (ties keep input order) and
    greedily matched; each ground-truth box is claimed at most once. With
    no ground truth, AP is 1.0 when there are no detections and 0.0
    otherwise.
    """
    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    ranked = [(None, dets[i]) for i in order]
    flags = _match_greedy(ranked, {None: list(gts)}, iou_threshold)
    return _ap_from_flags(flags, len(gts))


@dataclass(frozen=True)
class EvalResult:
    """Per-class average precision and its mean."""

    per_class_ap: dict[str, float]
    map_value: float

    def to_jsonable(self) -> dict:
        return {"per_class_ap": dict(self.per_class_ap), "map": self.map_value}


def evaluate_detections(
    dets: dict[str, list[DetBox]],
    gts: dict[str, list[DetBox]],
    iou_threshold: float = 0.5,
) -> EvalResult:
    """Frame-aware mAP over annotation dicts keyed by frame id.

    Detections are pooled per class across frames, ranked globally by
    score, and matched only against ground truth of the same frame. Classes
    present in either side are evaluated.
    """
    classes = sorted(
        {b.cls for v in gts.values() for b in v}
        | {b.cls for v in dets.values() for b in v}
    )
    per_class: dict[str, float] = {}
    for cls in classes:
        ranked = sorted(
            (
                (frame, b)
                for frame, boxes in dets.items()
                for b in boxes
                if b.cls == cls
            ),
            key=lambda fb: -fb[1].score,
        )
        gt_groups = {
            frame: [b for b in boxes if b.cls == cls]
            for frame, boxes in gts.items()
        }
        npos = sum(len(v) for v in gt_groups.values())
        flags = _match_greedy(ranked, gt_groups, iou_threshold)
        per_class[cls] = _ap_from_flags(flags, npos)
    return EvalResult(per_class, mean_ap(per_class) if per_class else 0.0)


def mean_ap(per_class_ap: dict[str, float]) -> float:
    """Arithmetic mean of per-class average precisions."""
    if not per_class_ap:
        raise EmptyInputError("mean over no classes")
    return sum(per_class_ap.values()) / len(per_class_ap)


# --------------------------------------------------------------------- mIoU

def _labels_of(m: SegmentationMap | np.ndarray) -> np.ndarray:
    labels = m.labels if isinstance(m, SegmentationMap) else m
    return np.asarray(labels)


def miou(
    pred: SegmentationMap | np.ndarray,
    gt: SegmentationMap | np.ndarray,
    num_classes: int,
) -> float:
    """Mean intersection-over-union across classes.

    Only classes present in prediction or ground truth enter the mean, so
    absent classes never contribute 0/0 terms.
    """
    p = _labels_of(pred).astype(np.int64)
    g = _labels_of(gt).astype(np.int64)
    if p.shape != g.shape:
        raise DimensionMismatchError(f"pred {p.shape} vs gt {g.shape}")
    if p.size and (p.max() >= num_classes or g.max() >= num_classes):
        raise LabelOutOfRangeError(
            f"labels must be < {num_classes}, got max "
            f"{int(max(p.max(), g.max()))}"
        )
    joint = np.bincount(
        (g * num_classes + p).ravel(), minlength=num_classes * num_classes
    ).reshape(num_classes, num_classes)
    inter = np.diag(joint)
    gt_count = joint.sum(axis=1)
    pred_count = joint.sum(axis=0)
    union = gt_count + pred_count - inter
    present = union > 0
    return float((inter[present] / union[present]).mean())

"""Person-mask to social-distance compliance report.

The frame pipeline: close small gaps in the mask, trace object contours,
fit rotated boxes, order their corners, then measure inter-object distances
in pixels and convert to metres through a reference-object calibration.
Compliance is scored against a distance threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import NonPositiveCalibrationError, NonPositiveThresholdError
from .geometry import (
    OrderedCorners,
    Point,
    RotatedBox,
    box_center,
    euclidean,
    find_contours,
    midpoint,
    min_area_rect,
    order_corners,
)
from .imgproc import close_gaps, square_selem

LABEL_OK = "following-distance"
LABEL_VIOLATION = "not-following-distance"

KIND_CHAIN = "chain"
KIND_ALL_PAIRS = "all_pairs"


@dataclass(frozen=True)
class CalibrationProfile:
    """Pixel-to-metre conversion derived from a reference object."""

    reference_width_px: float
    reference_width_m: float
    pixels_per_metre: float

    def to_metres(self, px: float) -> float:
        return px / self.pixels_per_metre


def calibrate(reference_width_px: float, reference_width_m: float) -> CalibrationProfile:
    """Build a calibration from a reference object of known physical width."""
    if not (
        math.isfinite(reference_width_px)
        and math.isfinite(reference_width_m)
        and reference_width_px > 0
        and reference_width_m > 0
    ):
        raise NonPositiveCalibrationError(
            f"reference must be positive and finite, got "
            f"{reference_width_px} px, {reference_width_m} m"
        )
    return CalibrationProfile(
        reference_width_px=float(reference_width_px),
        reference_width_m=float(reference_width_m),
        pixels_per_metre=float(reference_width_px) / float(reference_width_m),
    )


@dataclass(frozen=True)
class ExtractConfig:
    """Mask-cleanup and contour-filter settings for object extraction."""

    selem: np.ndarray = field(default_factory=square_selem)
    close_iterations: int = 1
    min_area: float = 25.0


class SceneObject(NamedTuple):
    """One detected object: fitted box, ordered corners, and its center."""

    box: RotatedBox
    corners: OrderedCorners
    center: Point


def extract_objects(
    person_mask: np.ndarray, config: ExtractConfig | None = None
) -> list[SceneObject]:
    """Objects in a binary mask, left-to-right by top-left corner.

    Gap closing joins fragmented blobs first; each surviving contour yields
    a rotated box with ordered corners. Sort order is ascending corner tl.x,
    ties by tl.y, so index equals left-to-right rank.
    """
    if config is None:
        config = ExtractConfig()
    mask = np.asarray(person_mask, dtype=bool)
    if not mask.any():
        return []
    cleaned = close_gaps(mask, config.selem, config.close_iterations)
    objects = []
    for contour in find_contours(cleaned, config.min_area):
        box = min_area_rect(contour)
        corners = order_corners(box)
        objects.append(SceneObject(box, corners, box_center(corners)))
    objects.sort(key=lambda o: (o.corners.tl.x, o.corners.tl.y))
    return objects


@dataclass(frozen=True)
class DistancePair:
    """Distance between two objects, in pixels and metres.

    `id_a` and `id_b` are left-to-right ranks in the object list. `kind`
    says how the endpoints were chosen: "chain" compares top-edge midpoints
    of neighbors in the left-to-right order, "all_pairs" compares centers.
    `label` is attached by compliance classification.
    """

    id_a: int
    id_b: int
    px_distance: float
    metric_distance: float
    kind: str
    label: str | None = None


def chain_distances(
    objects: list[SceneObject], profile: CalibrationProfile
) -> list[DistancePair]:
    """Distances between consecutive objects' top-edge midpoints.

    Objects must already be sorted left-to-right; the left-most acts as the
    running reference, so n objects give n - 1 pairs.
    """
    pairs = []
    for i in range(len(objects) - 1):
        a = midpoint(objects[i].corners.tl, objects[i].corners.tr)
        b = midpoint(objects[i + 1].corners.tl, objects[i + 1].corners.tr)
        px = euclidean(a, b)
        pairs.append(
            DistancePair(i, i + 1, px, profile.to_metres(px), KIND_CHAIN)
        )
    return pairs


def all_pairs_distances(
    objects: list[SceneObject], profile: CalibrationProfile
) -> list[DistancePair]:
    """Center-to-center distance for every unordered object pair."""
    pairs = []
    for i in range(len(objects)):
        for j in range(i + 1, len(objects)):
            px = euclidean(objects[i].center, objects[j].center)
            pairs.append(
                DistancePair(i, j, px, profile.to_metres(px), KIND_ALL_PAIRS)
            )
    return pairs


@dataclass(frozen=True)
class ComplianceReport:
    """Per-frame social-distance verdict.

    `violations` and `score` are computed over `pairs` (center-to-center,
    all pairs); `chain_pairs` carries the left-to-right midpoint chain for
    auditing but does not influence the count, since adjacent-only checks
    miss diagonal violations.
    """

    frame_id: str
    object_count: int
    pairs: list[DistancePair]
    chain_pairs: list[DistancePair]
    threshold_m: float
    violations: int
    score: float


def _label(pair: DistancePair, threshold_m: float) -> DistancePair:
    ok = pair.metric_distance >= threshold_m
    return replace(pair, label=LABEL_OK if ok else LABEL_VIOLATION)


def classify_compliance(
    pairs: list[DistancePair],
    threshold_m: float,
    frame_id: str = "",
    *,
    object_count: int | None = None,
    chain_pairs: list[DistancePair] | None = None,
) -> ComplianceReport:
    """Label pairs against the threshold and score the frame.

    A pair violates when its metric distance is strictly below the
    threshold. The score is the compliant fraction, 1 - violations/pairs,
    and a frame with no pairs is vacuously compliant at 1.0.
    """
    if not threshold_m > 0:
        raise NonPositiveThresholdError(f"threshold must be > 0, got {threshold_m}")
    labeled = [_label(p, threshold_m) for p in pairs]
    labeled_chain = [_label(p, threshold_m) for p in (chain_pairs or [])]
    violations = sum(1 for p in labeled if p.label == LABEL_VIOLATION)
    score = 1.0 - violations / len(labeled) if labeled else 1.0
    if object_count is None:
        ids = [i for p in labeled for i in (p.id_a, p.id_b)]
        object_count = max(ids) + 1 if ids else 0
    return ComplianceReport(
        frame_id=frame_id,
        object_count=object_count,
        pairs=labeled,
        chain_pairs=labeled_chain,
        threshold_m=threshold_m,
        violations=violations,
        score=score,
    )


def distance_pipeline(
    person_mask: np.ndarray,
    profile: CalibrationProfile,
    threshold_m: float = 2.0,
    config: ExtractConfig | None = None,
    frame_id: str = "",
) -> ComplianceReport:
    """Mask to compliance report, end to end.

    Extracts objects, measures all center-to-center pair distances (the
    compliance basis) plus the left-to-right top-edge midpoint chain, and
    classifies both against the threshold. Deterministic for identical
    inputs.
    """
    if not threshold_m > 0:
        raise NonPositiveThresholdError(f"threshold must be > 0, got {threshold_m}")
    objects = extract_objects(person_mask, config)
    return classify_compliance(
        all_pairs_distances(objects, profile),
        threshold_m,
        frame_id,
        object_count=len(objects),
        chain_pairs=chain_distances(objects, profile),
    )

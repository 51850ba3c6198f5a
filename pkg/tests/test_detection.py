import json

import numpy as np
import pytest

from edgetrace.detection import (
    CLASSES,
    DetBox,
    SegmentationMap,
    average_precision,
    evaluate_detections,
    iou,
    load_annotations,
    mean_ap,
    miou,
    nms,
    stub_detector_from_annotations,
    stub_segmenter_from_labelmaps,
)
from edgetrace.errors import (
    BadThresholdError,
    DimensionMismatchError,
    EmptyInputError,
    LabelOutOfRangeError,
    MalformedAnnotationError,
    MissingLabelMapError,
    UnknownClassError,
)
from edgetrace.imgproc import write_pgm
from oracles import ap_bruteforce, iou_raster, nms_reference


def box(x, y, w=20, h=20, score=0.5, cls="person"):
    return DetBox(float(x), float(y), float(w), float(h), score, cls)


def write_ndjson(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records))


def random_ap_fixture(rng, spots=12):
    """Detection fixture whose matching outcome is unambiguous: boxes
    either coincide with a ground-truth box (IoU 1) or sit on a spot of
    their own (IoU 0), scores all distinct."""
    positions = [(10 + 60 * (i % 4), 10 + 60 * (i // 4))
                 for i in range(spots)]
    rng.shuffle(positions)
    n_gt = int(rng.integers(1, 6))
    gt_spots = positions[:n_gt]
    free_spots = positions[n_gt:]
    gts = [box(x, y) for x, y in gt_spots]
    n_det = int(rng.integers(0, 9))
    scores = rng.permutation(np.linspace(0.05, 0.95, n_det))
    dets = []
    for k in range(n_det):
        if rng.random() < 0.6 and gt_spots:
            x, y = gt_spots[int(rng.integers(0, len(gt_spots)))]
        else:
            x, y = free_spots[int(rng.integers(0, len(free_spots)))]
        dets.append(box(x, y, score=float(scores[k])))
    return dets, gts


def oracle_flags(dets, gts):
    """True-positive flags by claiming coincident ground-truth boxes in
    score order; valid only for fixtures where IoU is 0 or 1."""
    claimed = [False] * len(gts)
    flags = []
    for d in sorted(dets, key=lambda b: -b.score):
        hit = False
        for i, g in enumerate(gts):
            if not claimed[i] and (d.x, d.y, d.w, d.h) == (g.x, g.y, g.w, g.h):
                claimed[i] = True
                hit = True
                break
        flags.append((d.score, hit))
    return flags


class TestStubDetector:
    def test_lookup(self, tmp_path):
        path = tmp_path / "dets.ndjson"
        write_ndjson(path, [
            {"frame_id": "f1", "boxes": [
                {"x": 1, "y": 2, "w": 3, "h": 4, "score": 0.9,
                 "class": "with-mask"},
                {"x": 9, "y": 9, "w": 5, "h": 5, "score": 0.2,
                 "class": "person"}]},
        ])
        detector = stub_detector_from_annotations(path)
        boxes = detector.detect("f1", None)
        assert boxes == [DetBox(1, 2, 3, 4, 0.9, "with-mask"),
                         DetBox(9, 9, 5, 5, 0.2, "person")]

    def test_unknown_frame_empty(self, tmp_path):
        path = tmp_path / "dets.ndjson"
        write_ndjson(path, [{"frame_id": "f1", "boxes": []}])
        assert stub_detector_from_annotations(path).detect("absent", None) == []

    def test_unknown_class_rejected(self, tmp_path):
        path = tmp_path / "dets.ndjson"
        write_ndjson(path, [{"frame_id": "f1", "boxes": [
            {"x": 1, "y": 2, "w": 3, "h": 4, "score": 0.9, "class": "cat"}]}])
        with pytest.raises(UnknownClassError):
            load_annotations(path)

    @pytest.mark.parametrize("bad_box", [
        {"y": 2, "w": 3, "h": 4, "score": 0.9, "class": "person"},
        {"x": 1, "y": 2, "w": 0, "h": 4, "score": 0.9, "class": "person"},
        {"x": 1, "y": 2, "w": 3, "h": -4, "score": 0.9, "class": "person"},
        {"x": 1, "y": 2, "w": 3, "h": 4, "score": 1.5, "class": "person"},
        {"x": "a", "y": 2, "w": 3, "h": 4, "score": 0.9, "class": "person"},
        "not a dict",
    ])
    def test_malformed_boxes_rejected(self, tmp_path, bad_box):
        path = tmp_path / "dets.ndjson"
        write_ndjson(path, [{"frame_id": "f1", "boxes": [bad_box]}])
        with pytest.raises(MalformedAnnotationError):
            load_annotations(path)

    def test_unparseable_line_rejected(self, tmp_path):
        path = tmp_path / "dets.ndjson"
        path.write_text("{broken\n")
        with pytest.raises(MalformedAnnotationError):
            load_annotations(path)

    def test_repeated_frames_accumulate_and_blanks_skipped(self, tmp_path):
        path = tmp_path / "dets.ndjson"
        record = {"frame_id": "f1", "boxes": [
            {"x": 1, "y": 2, "w": 3, "h": 4, "score": 0.9, "class": "person"}]}
        path.write_text(json.dumps(record) + "\n\n" + json.dumps(record) + "\n")
        assert len(load_annotations(path)["f1"]) == 2


class TestStubSegmenter:
    def test_labelmap_lookup(self, tmp_path):
        labels = np.zeros((64, 64), np.uint8)
        labels[5:15, 20:30] = 1
        (tmp_path / "f1.pgm").write_bytes(write_pgm(labels))
        segmenter = stub_segmenter_from_labelmaps(tmp_path)
        seg = segmenter.segment("f1", np.zeros((64, 64), np.uint8))
        assert isinstance(seg, SegmentationMap)
        assert int(seg.person_mask().sum()) == 100

    def test_missing_map_rejected(self, tmp_path):
        segmenter = stub_segmenter_from_labelmaps(tmp_path)
        with pytest.raises(MissingLabelMapError):
            segmenter.segment("ghost", np.zeros((8, 8), np.uint8))

    def test_dimension_mismatch_rejected(self, tmp_path):
        (tmp_path / "f1.pgm").write_bytes(write_pgm(np.zeros((32, 32), np.uint8)))
        segmenter = stub_segmenter_from_labelmaps(tmp_path)
        with pytest.raises(DimensionMismatchError):
            segmenter.segment("f1", np.zeros((64, 64), np.uint8))


class TestIou:
    def test_identical(self):
        assert iou(box(10, 10), box(10, 10)) == 1.0

    def test_disjoint(self):
        assert iou(box(0, 0), box(100, 100)) == 0.0

    def test_touching_edges_are_disjoint(self):
        assert iou(box(0, 0, 10, 10), box(10, 0, 10, 10)) == 0.0

    def test_matches_raster_oracle(self, rng):
        for _ in range(500):
            a = [int(v) for v in (rng.integers(0, 100), rng.integers(0, 100),
                                  rng.integers(1, 41), rng.integers(1, 41))]
            b = [int(v) for v in (rng.integers(0, 100), rng.integers(0, 100),
                                  rng.integers(1, 41), rng.integers(1, 41))]
            da, db = box(*a), box(*b)
            assert iou(da, db) == iou_raster(a, b)
            assert iou(da, db) == iou(db, da)


class TestNms:
    def test_single_box_kept(self):
        b = box(0, 0, score=0.7)
        assert nms([b], 0.5) == [b]

    def test_total_overlap_keeps_highest_score(self):
        high = box(0, 0, score=0.9)
        low = box(0, 0, score=0.8)
        assert nms([low, high], 0.5) == [high]

    def test_classes_suppressed_independently(self):
        a = box(0, 0, score=0.9, cls="with-mask")
        b = box(0, 0, score=0.8, cls="without-mask")
        assert nms([a, b], 0.5) == [a, b]

    def test_bad_threshold_rejected(self):
        with pytest.raises(BadThresholdError):
            nms([], -0.1)
        with pytest.raises(BadThresholdError):
            nms([], 1.1)

    def test_matches_quadratic_reference(self, rng):
        for _ in range(50):
            n = int(rng.integers(0, 15))
            raw = []
            for _ in range(n):
                raw.append((float(rng.integers(0, 80)),
                            float(rng.integers(0, 80)),
                            float(rng.integers(5, 40)),
                            float(rng.integers(5, 40)),
                            float(rng.choice([0.2, 0.4, 0.6, 0.8])),
                            str(rng.choice(CLASSES))))
            boxes = [DetBox(*t) for t in raw]
            threshold = float(rng.choice([0.1, 0.3, 0.5, 0.7]))
            expected = [boxes[i] for i in nms_reference(raw, threshold)]
            assert nms(boxes, threshold) == expected

    def test_fixpoint(self, rng):
        boxes = [box(int(rng.integers(0, 60)), int(rng.integers(0, 60)),
                     30, 30, score=float(s))
                 for s in rng.uniform(0.1, 0.9, size=12)]
        kept = nms(boxes, 0.4)
        assert nms(kept, 0.4) == kept


class TestAveragePrecision:
    def test_perfect_detection(self, rng):
        gts = [box(10, 10), box(80, 80), box(150, 10)]
        dets = [DetBox(g.x, g.y, g.w, g.h, float(s), g.cls)
                for g, s in zip(gts, rng.uniform(0.1, 0.9, 3))]
        assert average_precision(dets, gts, 0.5) == 1.0

    def test_zero_detections(self):
        assert average_precision([], [box(0, 0)], 0.5) == 0.0

    def test_no_gt_conventions(self):
        assert average_precision([], [], 0.5) == 1.0
        assert average_precision([box(0, 0)], [], 0.5) == 0.0

    def test_false_positive_ranked_last(self):
        gts = [box(10, 10), box(80, 80), box(150, 10)]
        dets = [box(10, 10, score=0.9), box(80, 80, score=0.8),
                box(150, 10, score=0.7), box(300, 300, score=0.1)]
        expected = ap_bruteforce(oracle_flags(dets, gts), len(gts))
        got = average_precision(dets, gts, 0.5)
        assert abs(got - expected) <= 1e-12
        # a trailing false positive after full recall costs nothing
        assert got == 1.0

    def test_matches_envelope_oracle(self, rng):
        for _ in range(40):
            dets, gts = random_ap_fixture(rng)
            expected = ap_bruteforce(oracle_flags(dets, gts), len(gts))
            assert abs(average_precision(dets, gts, 0.5) - expected) <= 1e-12

    def test_removing_false_positive_never_hurts(self, rng):
        for _ in range(30):
            dets, gts = random_ap_fixture(rng)
            flags = dict()
            claimed = [False] * len(gts)
            for d in sorted(dets, key=lambda b: -b.score):
                hit = False
                for i, g in enumerate(gts):
                    if not claimed[i] and (d.x, d.y) == (g.x, g.y):
                        claimed[i] = True
                        hit = True
                        break
                flags[id(d)] = hit
            false_positives = [d for d in dets if not flags[id(d)]]
            if not false_positives:
                continue
            baseline = average_precision(dets, gts, 0.5)
            slimmer = [d for d in dets if d is not false_positives[0]]
            assert average_precision(slimmer, gts, 0.5) >= baseline - 1e-12


class TestMeanAp:
    def test_examples(self):
        assert mean_ap({"with-mask": 1.0, "without-mask": 1.0}) == 1.0
        assert mean_ap({"a": 0.0, "b": 1.0}) == 0.5
        assert mean_ap({"person": 0.25}) == 0.25

    def test_empty_rejected(self):
        with pytest.raises(EmptyInputError):
            mean_ap({})


class TestEvaluateDetections:
    def test_perfect_across_frames_and_classes(self):
        gts = {
            "f1": [box(10, 10, cls="with-mask"), box(90, 90, cls="person")],
            "f2": [box(30, 30, cls="without-mask")],
        }
        dets = {f: [DetBox(b.x, b.y, b.w, b.h, 0.9, b.cls) for b in bs]
                for f, bs in gts.items()}
        result = evaluate_detections(dets, gts, 0.5)
        assert result.map_value == 1.0
        assert set(result.per_class_ap) == {"with-mask", "person",
                                            "without-mask"}
        jsonable = result.to_jsonable()
        assert jsonable["map"] == 1.0
        assert jsonable["per_class_ap"]["person"] == 1.0

    def test_pooled_ranking_matches_oracle(self, rng):
        frames = {}
        gt_frames = {}
        pooled_flags = []
        npos = 0
        for frame in ("f1", "f2", "f3"):
            dets, gts = random_ap_fixture(rng)
            dets = [DetBox(d.x, d.y, d.w, d.h, d.score, "person")
                    for d in dets]
            gts = [DetBox(g.x, g.y, g.w, g.h, g.score, "person")
                   for g in gts]
            frames[frame] = dets
            gt_frames[frame] = gts
            pooled_flags.extend(oracle_flags(dets, gts))
            npos += len(gts)
        result = evaluate_detections(frames, gt_frames, 0.5)
        expected = ap_bruteforce(pooled_flags, npos)
        assert abs(result.per_class_ap["person"] - expected) <= 1e-12


class TestMiou:
    def test_perfect(self):
        labels = np.array([[0, 1], [1, 2]], np.uint8)
        assert miou(labels, labels, 3) == 1.0

    def test_worked_2x2(self):
        gt = np.array([[0, 0], [1, 1]], np.uint8)
        pred = np.array([[0, 1], [1, 1]], np.uint8)
        assert abs(miou(pred, gt, 2) - 7 / 12) <= 1e-12

    def test_disjoint_masks(self):
        gt = np.array([[1, 1, 0, 0]], np.uint8)
        pred = np.array([[0, 0, 1, 1]], np.uint8)
        assert miou(pred, gt, 2) == 0.0

    def test_absent_classes_excluded_from_mean(self):
        gt = np.zeros((4, 4), np.uint8)
        pred = np.zeros((4, 4), np.uint8)
        # only class 0 is present even with a 5-class vocabulary
        assert miou(pred, gt, 5) == 1.0

    def test_accepts_segmentation_map_wrapper(self):
        labels = np.array([[0, 1], [1, 1]], np.uint8)
        assert miou(SegmentationMap(labels), SegmentationMap(labels), 2) == 1.0

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(DimensionMismatchError):
            miou(np.zeros((2, 2), np.uint8), np.zeros((2, 3), np.uint8), 2)

    def test_label_out_of_range_rejected(self):
        with pytest.raises(LabelOutOfRangeError):
            miou(np.array([[5]], np.uint8), np.array([[0]], np.uint8), 2)

    def test_symmetry_and_permutation_invariance(self, rng):
        for _ in range(20):
            shape = (12, 12)
            gt = rng.integers(0, 4, size=shape).astype(np.uint8)
            pred = rng.integers(0, 4, size=shape).astype(np.uint8)
            assert miou(pred, gt, 4) == miou(gt, pred, 4)
            perm = rng.permutation(4).astype(np.uint8)
            assert miou(perm[pred], perm[gt], 4) == \
                pytest.approx(miou(pred, gt, 4), abs=1e-12)

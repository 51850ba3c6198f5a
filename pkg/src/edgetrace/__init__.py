"""Desk-scale edge pipeline: mask events and social-distance compliance.

Raster primitives and geometry feed a per-frame distance scorer; stub
detector/segmenter backends plus evaluation metrics stand in for the heavy
models; the edge node wires it all into an NDJSON event stream with a TCP
collector, and the bench module times the geometric core.
"""

from .bench import (
    FixtureRecord,
    TimingReport,
    load_fixtures,
    measure_pipeline,
    rank_fixtures,
    save_fixtures,
)
from .detection import (
    CLASSES,
    DetBox,
    DetectorBackend,
    EvalResult,
    SegmentationMap,
    SegmenterBackend,
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
from .distancing import (
    LABEL_OK,
    LABEL_VIOLATION,
    CalibrationProfile,
    ComplianceReport,
    DistancePair,
    ExtractConfig,
    SceneObject,
    all_pairs_distances,
    calibrate,
    chain_distances,
    classify_compliance,
    distance_pipeline,
    extract_objects,
)
from .edge_node import (
    Event,
    FrameRecord,
    PipelineConfig,
    emit_ndjson,
    load_config,
    load_manifest,
    report_jsonable,
    run_pipeline,
)
from .errors import EdgetraceError
from .geometry import (
    OrderedCorners,
    Point,
    RotatedBox,
    box_center,
    box_corners,
    convex_hull,
    euclidean,
    find_contours,
    midpoint,
    min_area_rect,
    order_corners,
)
from .imgproc import (
    canny,
    close_gaps,
    cross_selem,
    dilate,
    erode,
    gaussian_blur,
    load_pgm,
    square_selem,
    write_pgm,
)
from .transport import (
    Collector,
    DeliveryReport,
    TcpEventSender,
    send_tcp,
    serve_collector,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

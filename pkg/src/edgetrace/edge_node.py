"""Runnable edge pipeline: frame manifest in, NDJSON event stream out.

Frames listed in a manifest are pushed through detection (mask boxes),
segmentation (person mask), and the distance pipeline; every result becomes
one NDJSON event, appended to a local sink and optionally streamed to a
collector over TCP. Runs are deterministic: timestamps come from the
manifest, never the wall clock, and event fields serialize with sorted keys.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detection import (
    DetectorBackend,
    SegmenterBackend,
    stub_detector_from_annotations,
    stub_segmenter_from_labelmaps,
)
from .distancing import (
    ComplianceReport,
    DistancePair,
    ExtractConfig,
    calibrate,
    distance_pipeline,
)
from .errors import (
    ConfigInvalidError,
    EdgetraceError,
    IoFailureError,
    ManifestMissingError,
)
from .imgproc import load_pgm, square_selem
from .transport import TcpEventSender

log = logging.getLogger(__name__)

KIND_MASK = "mask_event"
KIND_DISTANCE = "distance_event"
KIND_ERROR = "error_event"
EVENT_KINDS = (KIND_MASK, KIND_DISTANCE, KIND_ERROR)

# boxes of this class mark a person not wearing a mask
NONCOMPLIANT_CLASS = "without-mask"


# ----------------------------------------------------------------- manifest

@dataclass(frozen=True)
class FrameRecord:
    frame_id: str
    image_path: Path
    timestamp_ms: int | None = None


def load_manifest(path: str | Path) -> list[FrameRecord]:
    """Read an ordered frame manifest (JSON array).

    Each entry holds frame_id, image_path, and an optional timestamp_ms.
    Relative image paths resolve against the manifest's directory.
    Frame ids must be unique; order is preserved.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestMissingError(f"manifest not found: {path}")
    try:
        entries = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigInvalidError(f"manifest {path}: invalid JSON: {exc}") from exc
    if not isinstance(entries, list):
        raise ConfigInvalidError(f"manifest {path}: expected a JSON array")
    records = []
    seen = set()
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ConfigInvalidError(f"manifest entry {i}: not an object")
        extra = set(entry) - {"frame_id", "image_path", "timestamp_ms"}
        if extra:
            raise ConfigInvalidError(f"manifest entry {i}: unknown keys {extra}")
        frame_id = entry.get("frame_id")
        image_path = entry.get("image_path")
        timestamp = entry.get("timestamp_ms")
        if not isinstance(frame_id, str) or not isinstance(image_path, str):
            raise ConfigInvalidError(
                f"manifest entry {i}: frame_id and image_path must be strings"
            )
        if timestamp is not None and not isinstance(timestamp, int):
            raise ConfigInvalidError(
                f"manifest entry {i}: timestamp_ms must be an integer"
            )
        if frame_id in seen:
            raise ConfigInvalidError(f"duplicate frame_id {frame_id!r}")
        seen.add(frame_id)
        records.append(
            FrameRecord(frame_id, (path.parent / image_path), timestamp)
        )
    return records


# ------------------------------------------------------------------- config

@dataclass(frozen=True)
class CannyConfig:
    low: float = 50.0
    high: float = 150.0
    sigma: float = 1.4


@dataclass(frozen=True)
class MorphologyConfig:
    se_size: int = 3
    iterations: int = 1


@dataclass(frozen=True)
class CalibrationConfig:
    reference_width_px: float
    reference_width_m: float


@dataclass(frozen=True)
class TcpSinkConfig:
    host: str
    port: int
    retry_max: int = 5
    backoff_ms: int = 100


@dataclass(frozen=True)
class SinkConfig:
    ndjson_path: Path
    tcp: TcpSinkConfig | None = None

    @property
    def spool_path(self) -> Path:
        return self.ndjson_path.with_name(self.ndjson_path.name + ".spool")


@dataclass(frozen=True)
class PipelineConfig:
    manifest: Path
    sink: SinkConfig
    calibration: CalibrationConfig
    annotations: Path | None = None
    labelmaps: Path | None = None
    threshold_m: float = 2.0
    canny: CannyConfig = CannyConfig()
    morphology: MorphologyConfig = MorphologyConfig()
    min_area: float = 25.0

    def extract_config(self) -> ExtractConfig:
        return ExtractConfig(
            selem=square_selem(self.morphology.se_size),
            close_iterations=self.morphology.iterations,
            min_area=self.min_area,
        )


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigInvalidError(f"{where}: missing required key {key!r}")
    return obj[key]


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    extra = set(obj) - allowed
    if extra:
        raise ConfigInvalidError(f"{where}: unknown keys {sorted(extra)}")


def _number(obj: dict, key: str, where: str, default=None):
    value = obj.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigInvalidError(f"{where}.{key}: expected a number, got {value!r}")
    return float(value)


def _integer(obj: dict, key: str, where: str, default=None):
    value = obj.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigInvalidError(f"{where}.{key}: expected an integer, got {value!r}")
    return value


def load_config(path: str | Path) -> PipelineConfig:
    """Parse and validate a pipeline config JSON document.

    Parsing is strict: unknown keys anywhere are rejected, and every numeric
    field must satisfy the domain of the stage it feeds. Relative paths
    resolve against the config file's directory.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigInvalidError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalidError(f"config {path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigInvalidError("config root must be a JSON object")
    _reject_unknown(
        raw,
        {
            "manifest", "annotations", "labelmaps", "calibration",
            "threshold_m", "canny", "morphology", "min_area", "sink",
        },
        "config",
    )
    base = path.parent

    def resolve(p) -> Path:
        if not isinstance(p, str):
            raise ConfigInvalidError(f"expected a path string, got {p!r}")
        return base / p

    manifest = resolve(_require(raw, "manifest", "config"))

    cal_raw = _require(raw, "calibration", "config")
    if not isinstance(cal_raw, dict):
        raise ConfigInvalidError("calibration: expected an object")
    _reject_unknown(
        cal_raw, {"reference_width_px", "reference_width_m"}, "calibration"
    )
    ref_px = _number(cal_raw, "reference_width_px", "calibration")
    ref_m = _number(cal_raw, "reference_width_m", "calibration")
    if ref_px is None or ref_m is None or ref_px <= 0 or ref_m <= 0:
        raise ConfigInvalidError("calibration: reference widths must be > 0")
    calibration = CalibrationConfig(ref_px, ref_m)

    threshold_m = _number(raw, "threshold_m", "config", default=2.0)
    if threshold_m <= 0:
        raise ConfigInvalidError(f"threshold_m must be > 0, got {threshold_m}")

    canny_raw = raw.get("canny", {})
    if not isinstance(canny_raw, dict):
        raise ConfigInvalidError("canny: expected an object")
    _reject_unknown(canny_raw, {"low", "high", "sigma"}, "canny")
    canny = CannyConfig(
        low=_number(canny_raw, "low", "canny", default=50.0),
        high=_number(canny_raw, "high", "canny", default=150.0),
        sigma=_number(canny_raw, "sigma", "canny", default=1.4),
    )
    if not 0 <= canny.low < canny.high:
        raise ConfigInvalidError(
            f"canny thresholds need 0 <= low < high, got {canny.low}, {canny.high}"
        )
    if canny.sigma <= 0:
        raise ConfigInvalidError(f"canny.sigma must be > 0, got {canny.sigma}")

    morph_raw = raw.get("morphology", {})
    if not isinstance(morph_raw, dict):
        raise ConfigInvalidError("morphology: expected an object")
    _reject_unknown(morph_raw, {"se_size", "iterations"}, "morphology")
    morphology = MorphologyConfig(
        se_size=_integer(morph_raw, "se_size", "morphology", default=3),
        iterations=_integer(morph_raw, "iterations", "morphology", default=1),
    )
    if morphology.se_size < 1 or morphology.se_size % 2 == 0:
        raise ConfigInvalidError(
            f"morphology.se_size must be odd and >= 1, got {morphology.se_size}"
        )
    if morphology.iterations < 1:
        raise ConfigInvalidError(
            f"morphology.iterations must be >= 1, got {morphology.iterations}"
        )

    min_area = _number(raw, "min_area", "config", default=25.0)
    if min_area < 0:
        raise ConfigInvalidError(f"min_area must be >= 0, got {min_area}")

    sink_raw = _require(raw, "sink", "config")
    if not isinstance(sink_raw, dict):
        raise ConfigInvalidError("sink: expected an object")
    _reject_unknown(sink_raw, {"ndjson_path", "tcp"}, "sink")
    ndjson_path = resolve(_require(sink_raw, "ndjson_path", "sink"))
    tcp = None
    if sink_raw.get("tcp") is not None:
        tcp_raw = sink_raw["tcp"]
        if not isinstance(tcp_raw, dict):
            raise ConfigInvalidError("sink.tcp: expected an object")
        _reject_unknown(
            tcp_raw, {"host", "port", "retry_max", "backoff_ms"}, "sink.tcp"
        )
        host = _require(tcp_raw, "host", "sink.tcp")
        if not isinstance(host, str):
            raise ConfigInvalidError(f"sink.tcp.host must be a string, got {host!r}")
        port = _integer(tcp_raw, "port", "sink.tcp")
        if port is None or not 1 <= port <= 65535:
            raise ConfigInvalidError(f"sink.tcp.port must be in 1..65535, got {port}")
        retry_max = _integer(tcp_raw, "retry_max", "sink.tcp", default=5)
        backoff_ms = _integer(tcp_raw, "backoff_ms", "sink.tcp", default=100)
        if retry_max < 1 or backoff_ms < 0:
            raise ConfigInvalidError("sink.tcp: retry_max >= 1 and backoff_ms >= 0")
        tcp = TcpSinkConfig(host, port, retry_max, backoff_ms)

    annotations = raw.get("annotations")
    labelmaps = raw.get("labelmaps")
    return PipelineConfig(
        manifest=manifest,
        sink=SinkConfig(ndjson_path, tcp),
        calibration=calibration,
        annotations=resolve(annotations) if annotations is not None else None,
        labelmaps=resolve(labelmaps) if labelmaps is not None else None,
        threshold_m=threshold_m,
        canny=canny,
        morphology=morphology,
        min_area=min_area,
    )


# ------------------------------------------------------------------- events

@dataclass(frozen=True)
class Event:
    """One telemetry record; seq is assigned per stream, strictly increasing."""

    kind: str
    frame_id: str
    seq: int
    payload: object
    timestamp_ms: int | None = None

    def to_line(self) -> str:
        body = {
            "kind": self.kind,
            "frame_id": self.frame_id,
            "seq": self.seq,
            "payload": self.payload,
        }
        if self.timestamp_ms is not None:
            body["timestamp_ms"] = self.timestamp_ms
        return json.dumps(body, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_line(cls, line: str) -> "Event":
        try:
            body = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ConfigInvalidError(f"bad event line: {exc}") from exc
        if not isinstance(body, dict):
            raise ConfigInvalidError("event line must hold a JSON object")
        extra = set(body) - {"kind", "frame_id", "seq", "payload", "timestamp_ms"}
        if extra:
            raise ConfigInvalidError(f"event line has unknown keys {sorted(extra)}")
        try:
            return cls(
                kind=body["kind"],
                frame_id=body["frame_id"],
                seq=body["seq"],
                payload=body["payload"],
                timestamp_ms=body.get("timestamp_ms"),
            )
        except KeyError as exc:
            raise ConfigInvalidError(f"event line missing {exc}") from exc


def emit_ndjson(event: Event, sink_path: str | Path) -> str:
    """Append one event line to a sink file; returns the written line."""
    line = event.to_line()
    try:
        with open(sink_path, "a", encoding="utf-8") as fh:
            fh.write(line)
    except OSError as exc:
        raise IoFailureError(f"cannot append to {sink_path}: {exc}") from exc
    return line


def _pair_jsonable(pair: DistancePair) -> dict:
    return {
        "id_a": pair.id_a,
        "id_b": pair.id_b,
        "px_distance": pair.px_distance,
        "metric_distance": pair.metric_distance,
        "kind": pair.kind,
        "label": pair.label,
    }


def report_jsonable(report: ComplianceReport) -> dict:
    """ComplianceReport as plain JSON-ready data."""
    return {
        "frame_id": report.frame_id,
        "object_count": report.object_count,
        "pairs": [_pair_jsonable(p) for p in report.pairs],
        "chain_pairs": [_pair_jsonable(p) for p in report.chain_pairs],
        "threshold_m": report.threshold_m,
        "violations": report.violations,
        "score": report.score,
    }


# ------------------------------------------------------------ pipeline run

def _build_backends(
    config: PipelineConfig,
) -> tuple[DetectorBackend, SegmenterBackend]:
    if config.annotations is None:
        raise ConfigInvalidError("pipeline requires an annotations path")
    if config.labelmaps is None:
        raise ConfigInvalidError("pipeline requires a labelmaps directory")
    try:
        detector = stub_detector_from_annotations(config.annotations)
    except (OSError, EdgetraceError) as exc:
        raise ConfigInvalidError(f"annotations {config.annotations}: {exc}") from exc
    if not Path(config.labelmaps).is_dir():
        raise ConfigInvalidError(f"labelmaps {config.labelmaps}: not a directory")
    return detector, stub_segmenter_from_labelmaps(config.labelmaps)


def run_pipeline(config: PipelineConfig) -> dict:
    """Process every manifest frame; returns {frames, events, violations}.

    Per frame: detect boxes and emit a mask_event, then segment, run the
    distance pipeline on the person mask, and emit a distance_event. A
    failing stage yields an error_event for that frame and the run moves
    on; TCP delivery trouble never aborts the run (the spool catches what
    the wire cannot take).
    """
    frames = load_manifest(config.manifest)
    detector, segmenter = _build_backends(config)
    profile = calibrate(
        config.calibration.reference_width_px,
        config.calibration.reference_width_m,
    )
    extract_cfg = config.extract_config()
    sender = None
    if config.sink.tcp is not None:
        tcp = config.sink.tcp
        sender = TcpEventSender(
            tcp.host, tcp.port, config.sink.spool_path,
            tcp.retry_max, tcp.backoff_ms,
        )

    seq = 0
    events = 0
    violations = 0
    try:
        with open(config.sink.ndjson_path, "w", encoding="utf-8") as sink:

            def emit(kind: str, frame: FrameRecord, payload) -> None:
                nonlocal seq, events
                event = Event(kind, frame.frame_id, seq, payload, frame.timestamp_ms)
                line = event.to_line()
                sink.write(line)
                seq += 1
                events += 1
                if sender is not None:
                    sender.send(line)

            for frame in frames:
                try:
                    image = load_pgm(frame.image_path.read_bytes())
                except (OSError, EdgetraceError) as exc:
                    emit(KIND_ERROR, frame, {"stage": "load", "error": str(exc)})
                    continue

                try:
                    boxes = detector.detect(frame.frame_id, image)
                    emit(
                        KIND_MASK,
                        frame,
                        [
                            {
                                "box": [b.x, b.y, b.w, b.h],
                                "class": b.cls,
                                "score": b.score,
                                "compliant": b.cls != NONCOMPLIANT_CLASS,
                            }
                            for b in boxes
                        ],
                    )
                except EdgetraceError as exc:
                    emit(KIND_ERROR, frame, {"stage": "detect", "error": str(exc)})

                try:
                    seg = segmenter.segment(frame.frame_id, image)
                    report = distance_pipeline(
                        seg.person_mask(),
                        profile,
                        config.threshold_m,
                        extract_cfg,
                        frame.frame_id,
                    )
                    violations += report.violations
                    emit(KIND_DISTANCE, frame, report_jsonable(report))
                except EdgetraceError as exc:
                    emit(KIND_ERROR, frame, {"stage": "segment", "error": str(exc)})
    except OSError as exc:
        raise IoFailureError(f"sink {config.sink.ndjson_path}: {exc}") from exc
    finally:
        if sender is not None:
            delivery = sender.close()
            log.info(
                "tcp delivery: %d sent, %d respooled, %d in spool",
                delivery.sent, delivery.respooled, delivery.spooled,
            )

    return {"frames": len(frames), "events": events, "violations": violations}

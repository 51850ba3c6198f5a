"""Latency harness for the geometric pipeline, plus benchmark fixture CSVs.

The harness times the per-frame edge-to-distances path (Canny, gap closing,
contours, rotated boxes, distance scoring) on frames named by a pipeline
config, with stub I/O kept outside the clocked region. Fixture records hold
published benchmark rows shipped as CSV; they are reference data for
parsing and ranking, not reproduction targets.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, fields
from pathlib import Path

from .distancing import calibrate, distance_pipeline
from .edge_node import PipelineConfig, load_manifest
from .errors import ConfigInvalidError, MalformedRowError, UnknownMetricError
from .imgproc import canny, load_pgm


@dataclass(frozen=True)
class TimingReport:
    """Per-frame latency summary; percentiles are nearest-rank."""

    frames: int
    wall_ms: float
    fps: float
    latency_p50_ms: float
    latency_p95_ms: float
    latency_p99_ms: float

    def to_jsonable(self) -> dict:
        return {
            "frames": self.frames,
            "wall_ms": self.wall_ms,
            "fps": self.fps,
            "latency_p50_ms": self.latency_p50_ms,
            "latency_p95_ms": self.latency_p95_ms,
            "latency_p99_ms": self.latency_p99_ms,
        }


def nearest_rank(sorted_values: list[float], percentile: float) -> float:
    """Nearest-rank percentile of an ascending-sorted nonempty list."""
    rank = max(1, math.ceil(percentile / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


def measure_pipeline(config: PipelineConfig, repetitions: int = 1) -> TimingReport:
    """Time the geometric pipeline over the manifest's frames.

    Frames are decoded up front and one full warm-up pass runs before any
    clock starts; the timed region per frame is edge detection through
    compliance classification, single-threaded on a monotonic clock.
    """
    if repetitions < 1:
        raise ConfigInvalidError(f"repetitions must be >= 1, got {repetitions}")
    manifest = load_manifest(config.manifest)
    if not manifest:
        raise ConfigInvalidError("manifest lists no frames to measure")
    frames = []
    for record in manifest:
        try:
            frames.append(load_pgm(record.image_path.read_bytes()))
        except OSError as exc:
            raise ConfigInvalidError(f"frame {record.frame_id}: {exc}") from exc
    profile = calibrate(
        config.calibration.reference_width_px,
        config.calibration.reference_width_m,
    )
    extract_cfg = config.extract_config()
    cc = config.canny

    def one_frame(image) -> None:
        edges = canny(image, cc.low, cc.high, cc.sigma)
        distance_pipeline(
            edges, profile, config.threshold_m, extract_cfg, frame_id="bench"
        )

    for image in frames:  # warm-up pass, unclocked
        one_frame(image)

    latencies = []
    for _ in range(repetitions):
        for image in frames:
            start = time.perf_counter()
            one_frame(image)
            latencies.append((time.perf_counter() - start) * 1000.0)

    latencies.sort()
    wall_ms = sum(latencies)
    count = len(latencies)
    return TimingReport(
        frames=count,
        wall_ms=wall_ms,
        fps=count / (wall_ms / 1000.0),
        latency_p50_ms=nearest_rank(latencies, 50),
        latency_p95_ms=nearest_rank(latencies, 95),
        latency_p99_ms=nearest_rank(latencies, 99),
    )


# ----------------------------------------------------------------- fixtures

@dataclass(frozen=True)
class FixtureRecord:
    """One published benchmark row; absent metrics stay None."""

    model: str
    train_iter_s: float | None = None
    inf_fps: float | None = None
    mem_gb: float | None = None
    ap_box: float | None = None
    ap_mask: float | None = None
    map_pct: float | None = None
    miou: float | None = None
    params_m: float | None = None
    realtime: bool | None = None


_FIELDS = tuple(f.name for f in fields(FixtureRecord))
NUMERIC_METRICS = tuple(f for f in _FIELDS if f not in ("model", "realtime"))


def _parse_cell(column: str, cell: str):
    cell = cell.strip()
    if cell in ("", "-"):
        return None
    if column == "realtime":
        lowered = cell.lower()
        if lowered in ("yes", "true"):
            return True
        if lowered in ("no", "false"):
            return False
        raise MalformedRowError(f"bad realtime value {cell!r}")
    # published tables write e.g. "63.4 %" and "1.5M"; accept both bare
    # numbers and those suffixes
    text = cell.rstrip("%Mm").strip()
    try:
        return float(text)
    except ValueError:
        raise MalformedRowError(f"bad {column} value {cell!r}")


def load_fixtures(path: str | Path) -> list[FixtureRecord]:
    """Read benchmark fixture rows from CSV.

    The header names FixtureRecord fields (any subset including `model`);
    "-" or an empty cell means the metric is absent. Every row must carry a
    model name and at least one metric.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        unknown = set(header) - set(_FIELDS)
        if unknown:
            raise MalformedRowError(f"unknown columns {sorted(unknown)}")
        if "model" not in header:
            raise MalformedRowError("missing required column 'model'")
        records = []
        for row_number, row in enumerate(reader, start=2):
            if None in row or any(v is None for v in row.values()):
                raise MalformedRowError(f"row {row_number}: wrong cell count")
            model = (row["model"] or "").strip()
            if not model:
                raise MalformedRowError(f"row {row_number}: empty model name")
            values = {
                column: _parse_cell(column, cell)
                for column, cell in row.items()
                if column != "model"
            }
            if all(v is None for v in values.values()):
                raise MalformedRowError(f"row {row_number}: no metric present")
            records.append(FixtureRecord(model=model, **values))
    return records


def save_fixtures(records: list[FixtureRecord], path: str | Path) -> None:
    """Write fixture rows as CSV with the full canonical header.

    Round-trips: load_fixtures(save_fixtures(records)) == records.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_FIELDS)
        for record in records:
            row = []
            for name in _FIELDS:
                value = getattr(record, name)
                if value is None:
                    row.append("-")
                elif name == "model":
                    row.append(value)
                elif name == "realtime":
                    row.append("yes" if value else "no")
                else:
                    row.append(f"{value:g}")
            writer.writerow(row)


def rank_fixtures(records: list[FixtureRecord], metric: str) -> list[FixtureRecord]:
    """Records holding `metric`, best first; ties keep input order."""
    if metric not in NUMERIC_METRICS:
        raise UnknownMetricError(f"unknown metric {metric!r}")
    eligible = [r for r in records if getattr(r, metric) is not None]
    if not eligible:
        raise UnknownMetricError(f"metric {metric!r} present in no record")
    return sorted(eligible, key=lambda r: getattr(r, metric), reverse=True)

"""
Timing the geometric path, and reading published scoreboards
============================================================

Measures per-frame latency of the edge-to-distances pipeline on synthetic
VGA frames, then loads the shipped benchmark tables and ranks models.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from edgetrace.bench import load_fixtures, measure_pipeline, rank_fixtures
from edgetrace.edge_node import (
    CalibrationConfig,
    PipelineConfig,
    SinkConfig,
)
from edgetrace.imgproc import write_pgm

root = Path(tempfile.mkdtemp(prefix="edgetrace_bench_"))
frames_dir = root / "frames"
frames_dir.mkdir()

rng = np.random.default_rng(7)
entries = []
for i in range(30):
    img = np.zeros((480, 640), np.uint8)
    for _ in range(2):
        x = int(rng.integers(0, 600))
        y = int(rng.integers(0, 440))
        img[y:y + 40, x:x + 40] = 230
    (frames_dir / f"s{i}.pgm").write_bytes(write_pgm(img))
    entries.append({"frame_id": f"s{i}", "image_path": f"frames/s{i}.pgm"})
(root / "manifest.json").write_text(json.dumps(entries))

config = PipelineConfig(
    manifest=root / "manifest.json",
    sink=SinkConfig(root / "unused.ndjson"),
    calibration=CalibrationConfig(100.0, 0.5),
)
report = measure_pipeline(config, repetitions=2)
print("timing on 640x480 synthetic frames:")
print(json.dumps(report.to_jsonable(), indent=2, sort_keys=True))

tables = Path(__file__).parent.parent / "tables"

print("\ndetectors by inference FPS:")
for record in rank_fixtures(load_fixtures(tables / "table5.csv"), "inf_fps"):
    tag = "realtime" if record.realtime else "offline "
    print(f"  {record.inf_fps:6.1f} FPS  {tag}  {record.model}")

print("\nsegmentation backbones by mIoU:")
ranked = rank_fixtures(load_fixtures(tables / "table6.csv"), "miou")
for record in ranked[:5]:
    params = "?" if record.params_m is None else f"{record.params_m:g}M"
    print(f"  {record.miou:5.1f}  {params:>6} params  {record.model}")

"""
Edge node to collector, end to end
==================================

Builds a three-frame scenario on disk, runs the frame pipeline with a TCP
sink, and shows the collector receiving the same NDJSON lines the node
logged locally.
"""

import json
import tempfile
import time
from pathlib import Path

import numpy as np

from edgetrace.edge_node import load_config, run_pipeline
from edgetrace.imgproc import write_pgm
from edgetrace.transport import Collector

root = Path(tempfile.mkdtemp(prefix="edgetrace_demo_"))
(root / "frames").mkdir()
(root / "labelmaps").mkdir()

blank = np.zeros((480, 640), np.uint8)
pair_scene = blank.copy()
pair_scene[220:260, 100:140] = 1
pair_scene[220:260, 400:440] = 1
solo_scene = blank.copy()
solo_scene[220:260, 300:340] = 1

for frame_id, labels in (("f1", pair_scene), ("f2", blank),
                         ("f3", solo_scene)):
    (root / "frames" / f"{frame_id}.pgm").write_bytes(write_pgm(blank))
    (root / "labelmaps" / f"{frame_id}.pgm").write_bytes(write_pgm(labels))

(root / "annotations.ndjson").write_text(json.dumps({
    "frame_id": "f1", "boxes": [
        {"x": 100, "y": 220, "w": 40, "h": 40, "score": 0.9,
         "class": "with-mask"},
        {"x": 400, "y": 220, "w": 40, "h": 40, "score": 0.8,
         "class": "without-mask"},
    ]}) + "\n")

(root / "manifest.json").write_text(json.dumps([
    {"frame_id": f, "image_path": f"frames/{f}.pgm",
     "timestamp_ms": 1000 * i}
    for i, f in enumerate(("f1", "f2", "f3"), start=1)]))

collector = Collector("127.0.0.1", 0, root / "collector.log").start()
print(f"collector listening on port {collector.port}")

(root / "config.json").write_text(json.dumps({
    "manifest": "manifest.json",
    "annotations": "annotations.ndjson",
    "labelmaps": "labelmaps",
    "calibration": {"reference_width_px": 100.0, "reference_width_m": 0.5},
    "threshold_m": 2.0,
    "sink": {
        "ndjson_path": "events.ndjson",
        "tcp": {"host": "127.0.0.1", "port": collector.port},
    },
}))

summary = run_pipeline(load_config(root / "config.json"))
print(f"pipeline summary: {summary}")

deadline = time.monotonic() + 5.0
while collector.received < summary["events"] and time.monotonic() < deadline:
    time.sleep(0.01)
collector.stop()

local = (root / "events.ndjson").read_text().splitlines()
remote = (root / "collector.log").read_text().splitlines()
print(f"local sink holds {len(local)} lines, collector got {len(remote)}")
print(f"streams identical: {local == remote}")

print("\nevent kinds in order:")
for line in local:
    event = json.loads(line)
    extra = ""
    if event["kind"] == "distance_event":
        extra = (f" violations={event['payload']['violations']}"
                 f" score={event['payload']['score']}")
    print(f"  seq {event['seq']}: {event['kind']} "
          f"frame {event['frame_id']}{extra}")

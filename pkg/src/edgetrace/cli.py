"""Command-line front end.

Subcommands: pipeline, distance, eval-map, eval-miou, bench, collect.
Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bench import measure_pipeline
from .detection import evaluate_detections, load_annotations, miou
from .distancing import calibrate, distance_pipeline
from .edge_node import load_config, report_jsonable, run_pipeline
from .errors import EdgetraceError
from .imgproc import load_pgm
from .transport import serve_collector


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors exit 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _cmd_pipeline(args) -> int:
    summary = run_pipeline(load_config(args.config))
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_distance(args) -> int:
    mask = load_pgm(open(args.mask, "rb").read()) > 0
    profile = calibrate(args.ref_px, args.ref_m)
    report = distance_pipeline(mask, profile, args.threshold)
    print(json.dumps(report_jsonable(report), sort_keys=True, indent=2))
    return 0


def _cmd_eval_map(args) -> int:
    result = evaluate_detections(
        load_annotations(args.dets), load_annotations(args.gts), args.iou
    )
    print(json.dumps(result.to_jsonable(), sort_keys=True))
    return 0


def _cmd_eval_miou(args) -> int:
    pred = load_pgm(open(args.pred, "rb").read())
    gt = load_pgm(open(args.gt, "rb").read())
    print(json.dumps(miou(pred, gt, args.classes)))
    return 0


def _cmd_bench(args) -> int:
    report = measure_pipeline(load_config(args.config))
    print(json.dumps(report.to_jsonable(), sort_keys=True))
    return 0


def _cmd_collect(args) -> int:
    serve_collector(args.bind, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="edgetrace")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pipeline", help="run the full event pipeline")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("distance", help="one-shot distance report for a mask")
    p.add_argument("--mask", required=True, help="binary person mask as PGM")
    p.add_argument("--ref-px", type=float, required=True)
    p.add_argument("--ref-m", type=float, required=True)
    p.add_argument("--threshold", type=float, default=2.0)
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("eval-map", help="mAP of detections vs ground truth")
    p.add_argument("--dets", required=True)
    p.add_argument("--gts", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.set_defaults(func=_cmd_eval_map)

    p = sub.add_parser("eval-miou", help="mIoU of two label maps")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--classes", type=int, required=True)
    p.set_defaults(func=_cmd_eval_miou)

    p = sub.add_parser("bench", help="time the geometric pipeline")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("collect", help="run the event collector")
    p.add_argument("--bind", required=True, help="host:port to listen on")
    p.add_argument("--out", required=True, help="file receiving event lines")
    p.set_defaults(func=_cmd_collect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except EdgetraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry points: serve, datasetgen, eval."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path

from push_sentinel import config as config_mod
from push_sentinel import datasetgen, metrics
from push_sentinel.detector import Behavior
from push_sentinel.flow import FlowEstimatorSpec, EstimatorKind
from push_sentinel.ingest import FrameSource, RoiSpec
from push_sentinel.patching import GridSpec

log = logging.getLogger(__name__)


def _parse_roi(text: str) -> RoiSpec:
    x0, y0, x1, y1 = (int(v) for v in text.replace(" ", "").split(","))
    return RoiSpec(top_left=(x0, y0), bottom_right=(x1, y1))


def _parse_grid(text: str) -> GridSpec:
    n, m = text.lower().replace(" ", "").split("x")
    return GridSpec(n=int(n), m=int(m))


def _cmd_serve(args) -> int:
    data = config_mod.load_config_file(args.config) if args.config else {}
    data = config_mod.apply_env_overrides(data)
    cfg = config_mod.build_pipeline_config(data)

    from push_sentinel.service import PushingService

    service = PushingService(cfg)
    if cfg.listen:
        addr = service.serve_clients(cfg.listen)
        print(f"event server listening on {addr[0]}:{addr[1]}")
    if args.archive_http is not None and cfg.store is not None:
        from push_sentinel.archive_http import serve_archive

        http_addr = serve_archive(cfg.store, ("127.0.0.1", args.archive_http))
        print(f"archive browser on http://{http_addr[0]}:{http_addr[1]}/")
    service.start(max_segments=args.max_segments)
    try:
        service.wait()
        time.sleep(0.5)  # let client writers drain the end event
    except KeyboardInterrupt:
        print("interrupted")
    finally:
        service.close()
    print(f"{service.segments_total} segments processed, {service.segments_ok} ok")
    return 0


def _cmd_datasetgen(args) -> int:
    source = FrameSource.from_file(args.video,
                                   downscale_factor=Fraction(args.downscale))
    estimator = FlowEstimatorSpec()
    if args.flow_model:
        estimator = FlowEstimatorSpec(kind=EstimatorKind.EXTERNAL_MODEL,
                                      model_path=Path(args.flow_model))
    offsets = tuple(float(v) for v in args.offsets.split(","))
    labeled, tally = datasetgen.generate_labeled_dataset(
        source=source,
        trajectories_path=args.trajectories,
        ground_truth_path=args.groundtruth,
        roi_native=_parse_roi(args.roi),
        grid=_parse_grid(args.grid),
        offsets=offsets,
        interval_s=args.interval,
        ped_radius_px=args.ped_radius_px,
        estimator=estimator,
    )
    sets = datasetgen.split_dataset(labeled, seed=args.seed)
    out = datasetgen.export_dataset(sets, args.out)
    print(f"labeled patches: {tally}")
    print(f"split sizes: train={len(sets['train'])} val={len(sets['val'])} "
          f"test={len(sets['test'])}")
    print(f"dataset written to {out}")
    return 0


def _read_label_csv(path: str) -> dict[str, str]:
    table = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#") or row[1].strip() == "label":
                continue
            table[row[0].strip()] = row[1].strip()
    return table


def _cmd_eval(args) -> int:
    truths = _read_label_csv(args.labels)
    scores: list[tuple[float, bool]] = []
    pairs: list[tuple[bool, bool]] = []
    with open(args.predictions, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#") or row[1].strip() == "delta":
                continue
            sample, delta = row[0].strip(), float(row[1])
            if sample not in truths:
                print(f"warning: no ground truth for {sample!r}", file=sys.stderr)
                continue
            actual = Behavior(truths[sample]) is Behavior.PUSHING
            scores.append((delta, actual))
            pairs.append((delta >= args.threshold, actual))
    counts = metrics.counts_from_verdicts(pairs)
    report = metrics.evaluate(counts, scores=scores)
    if args.json:
        print(report.to_json())
    else:
        print(metrics.format_report(report))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="push-sentinel",
        description="Detect pushing patches in crowded-entrance camera streams.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the live annotation service")
    p_serve.add_argument("--config", help="TOML config file")
    p_serve.add_argument("--max-segments", type=int, default=None)
    p_serve.add_argument("--archive-http", type=int, metavar="PORT", default=None,
                         help="also serve the archive directory over HTTP")
    p_serve.set_defaults(func=_cmd_serve)

    p_gen = sub.add_parser("datasetgen", help="regenerate the labeled patch dataset")
    p_gen.add_argument("--video", required=True)
    p_gen.add_argument("--trajectories", required=True,
                       help="whitespace-separated 'id frame x y [z]' file")
    p_gen.add_argument("--groundtruth", required=True, help="CSV 'id,frame,label'")
    p_gen.add_argument("--roi", required=True, metavar="X0,Y0,X1,Y1",
                       help="entrance rectangle in native pixels")
    p_gen.add_argument("--grid", required=True, metavar="NxM")
    p_gen.add_argument("--offsets", default="0,0.5,1,1.5")
    p_gen.add_argument("--interval", type=float, default=2.0)
    p_gen.add_argument("--downscale", default="1/2")
    p_gen.add_argument("--ped-radius-px", type=float, default=12.0)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--flow-model", default=None)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=_cmd_datasetgen)

    p_eval = sub.add_parser("eval", help="score predictions against ground truth")
    p_eval.add_argument("--predictions", required=True, help="CSV 'sample,delta'")
    p_eval.add_argument("--labels", required=True, help="CSV 'sample,label'")
    p_eval.add_argument("--threshold", type=float, default=0.5)
    p_eval.add_argument("--json", action="store_true")
    p_eval.set_defaults(func=_cmd_eval)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""TOML config loading with PUSH_SENTINEL_* environment overrides.

Recognized keys (TOML tables mirror the dotted names):

  source.mode          file_replay | live_device | network_stream
  source.path_or_url   file path, device index, or stream URL
  source.id            stream identifier (default: derived from the path)
  source.fps           native frames/second (probed from files if omitted)
  source.resolution    [width, height] (probed from files if omitted)
  downscale.factor     e.g. "1/2" (default) or 1.0
  roi.top_left         [x, y] in native pixels
  roi.bottom_right     [x, y] in native pixels
  grid.rows / grid.cols
  grid.px_per_meter    optional scene scale; warns if a cell covers < 1 m
  sample.interval_s    keyframe cadence, default 2.0
  deadline.segment_s   per-segment processing budget, default 2.0
  estimator.kind       reference_block_match | external_model
  estimator.model_path / estimator.search_radius / estimator.block_size
  classifier.kind      mean_intensity_stub | external_model
  classifier.model_path / classifier.threshold / classifier.input_side
  store.kind           none | local | s3
  store.root           local directory (local) or bucket (s3)
  server.listen        "host:port"

Environment variables named PUSH_SENTINEL_<TABLE>_<KEY> (e.g.
PUSH_SENTINEL_GRID_ROWS=3) override file values; values are parsed as TOML
fragments so numbers and arrays work.
"""

from __future__ import annotations

import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from push_sentinel.annotator import LocalDirectoryStore, S3ObjectStore
from push_sentinel.detector import ClassifierKind, ClassifierSpec
from push_sentinel.flow import EstimatorKind, FlowEstimatorSpec
from push_sentinel.ingest import FrameSource, RoiSpec, SourceMode
from push_sentinel.patching import GridSpec, check_ground_cell_size
from push_sentinel.service import PipelineConfig

__all__ = ["load_config_file", "apply_env_overrides", "build_pipeline_config",
           "ENV_PREFIX"]

ENV_PREFIX = "PUSH_SENTINEL_"


def load_config_file(path: str | Path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def apply_env_overrides(data: dict, environ: Mapping[str, str] | None = None) -> dict:
    """Overlay PUSH_SENTINEL_<TABLE>_<KEY> variables onto the config dict."""
    environ = os.environ if environ is None else environ
    out = {k: dict(v) if isinstance(v, dict) else v for k, v in data.items()}
    for name, raw in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        table, _, key = rest.partition("_")
        if not key:
            continue
        try:
            value = tomllib.loads(f"v = {raw}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw  # bare strings stay strings
        out.setdefault(table, {})[key] = value
    return out


def _parse_fraction(value: Any) -> Fraction:
    if isinstance(value, str):
        return Fraction(value)
    return Fraction(value).limit_denominator(1_000_000)


def build_pipeline_config(data: dict) -> PipelineConfig:
    """Turn a (possibly env-overlaid) config dict into a PipelineConfig."""
    src = data.get("source", {})
    mode = SourceMode(src.get("mode", "file_replay"))
    path_or_url = src.get("path_or_url")
    if path_or_url is None:
        raise ValueError("source.path_or_url is required")
    factor = _parse_fraction(data.get("downscale", {}).get("factor", "1/2"))

    if mode is SourceMode.FILE_REPLAY and ("fps" not in src or "resolution" not in src):
        source = FrameSource.from_file(path_or_url, source_id=src.get("id"),
                                       downscale_factor=factor)
    else:
        source = FrameSource(
            source_id=src.get("id") or str(path_or_url),
            mode=mode,
            path_or_url=path_or_url,
            native_fps=float(src["fps"]),
            resolution=tuple(src["resolution"]),
            downscale_factor=factor,
        )

    roi_tbl = data.get("roi", {})
    roi = RoiSpec(top_left=tuple(roi_tbl["top_left"]),
                  bottom_right=tuple(roi_tbl["bottom_right"]))
    grid_tbl = data.get("grid", {})
    grid = GridSpec(n=int(grid_tbl.get("rows", 1)), m=int(grid_tbl.get("cols", 1)))
    if "px_per_meter" in grid_tbl:
        # each cell should cover more than a meter of ground; warning only
        scaled = roi.scaled(factor)
        check_ground_cell_size(grid, (scaled.width, scaled.height),
                               float(grid_tbl["px_per_meter"]) * float(factor))

    est_tbl = data.get("estimator", {})
    estimator = FlowEstimatorSpec(
        kind=EstimatorKind(est_tbl.get("kind", "reference_block_match")),
        model_path=Path(est_tbl["model_path"]) if "model_path" in est_tbl else None,
        search_radius=int(est_tbl.get("search_radius", 8)),
        block_size=int(est_tbl.get("block_size", 7)),
    )
    cls_tbl = data.get("classifier", {})
    classifier = ClassifierSpec(
        kind=ClassifierKind(cls_tbl.get("kind", "mean_intensity_stub")),
        model_path=Path(cls_tbl["model_path"]) if "model_path" in cls_tbl else None,
        input_side=int(cls_tbl.get("input_side", 224)),
        threshold=float(cls_tbl.get("threshold", 0.5)),
    )

    store_tbl = data.get("store", {})
    store_kind = store_tbl.get("kind", "none")
    if store_kind == "local":
        store = LocalDirectoryStore(store_tbl["root"])
    elif store_kind == "s3":
        store = S3ObjectStore(bucket=store_tbl["root"],
                              prefix=store_tbl.get("prefix", ""))
    elif store_kind == "none":
        store = None
    else:
        raise ValueError(f"unknown store.kind {store_kind!r}")

    listen = None
    listen_str = data.get("server", {}).get("listen")
    if listen_str:
        host, _, port = str(listen_str).rpartition(":")
        listen = (host or "127.0.0.1", int(port))

    return PipelineConfig(
        source=source,
        roi=roi,
        grid=grid,
        estimator=estimator,
        classifier=classifier,
        interval_s=float(data.get("sample", {}).get("interval_s", 2.0)),
        segment_deadline_s=float(data.get("deadline", {}).get("segment_s", 2.0)),
        store=store,
        blur_radius=int(store_tbl.get("blur_radius", 4)),
        listen=listen,
    )

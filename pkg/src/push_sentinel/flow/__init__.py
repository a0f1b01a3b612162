"""Dense displacement estimation between consecutive ROI keyframes.

Two estimators sit behind one interface: a deterministic block-matching
reference (desk-scale, integer displacements) and an external serialized
flow model consumed through the model-runner contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from push_sentinel.errors import DimensionMismatch, SignatureMismatch
from push_sentinel.flow import kernels
from push_sentinel.flow.kernels import BACKEND, HAVE_NATIVE, block_match

__all__ = [
    "BACKEND",
    "HAVE_NATIVE",
    "DisplacementField",
    "EstimatorKind",
    "FlowEstimatorSpec",
    "FlowModelHandle",
    "block_match",
    "estimate_flow",
    "load_external_model",
    "reference_block_match",
]


class EstimatorKind(str, Enum):
    REFERENCE_BLOCK_MATCH = "reference_block_match"
    EXTERNAL_MODEL = "external_model"


@dataclass(frozen=True)
class FlowEstimatorSpec:
    """Which estimator to run and its parameters."""

    kind: EstimatorKind = EstimatorKind.REFERENCE_BLOCK_MATCH
    model_path: Path | None = None
    search_radius: int = 8
    block_size: int = 7

    def __post_init__(self):
        if self.kind is EstimatorKind.EXTERNAL_MODEL and self.model_path is None:
            raise ValueError("external_model estimator requires model_path")
        if self.search_radius < 1:
            raise ValueError("search_radius must be >= 1")
        if self.block_size < 3 or self.block_size % 2 == 0:
            raise ValueError("block_size must be odd and >= 3")


@dataclass(frozen=True)
class DisplacementField:
    """Per-pixel (u, v) vectors between ROI keyframes i and i+1."""

    i: int
    vectors: np.ndarray  # (h, w, 2), u = horizontal, v = vertical

    def __post_init__(self):
        if self.vectors.ndim != 3 or self.vectors.shape[2] != 2:
            raise ValueError("vectors must have shape (h, w, 2)")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("displacement field must be finite everywhere")

    @property
    def width(self) -> int:
        return self.vectors.shape[1]

    @property
    def height(self) -> int:
        return self.vectors.shape[0]


def _check_pair(prev, nxt):
    if prev.pixels.shape != nxt.pixels.shape:
        raise DimensionMismatch(
            f"ROI keyframe dimensions differ: {prev.pixels.shape} vs {nxt.pixels.shape}"
        )
    if nxt.i != prev.i + 1:
        raise ValueError(f"keyframes must be consecutive, got i={prev.i} then i={nxt.i}")


def reference_block_match(prev, nxt, search_radius: int = 8,
                          block_size: int = 7) -> DisplacementField:
    """Exhaustive SAD block search within |u|,|v| <= search_radius.

    Neighborhoods are zero-padded at borders; cost ties resolve to the
    smallest |u|+|v|, then smallest v, then smallest u, so a textureless
    pair yields an all-zero field.
    """
    _check_pair(prev, nxt)
    vectors = kernels.block_match(prev.pixels, nxt.pixels, search_radius, block_size)
    return DisplacementField(i=prev.i, vectors=vectors)


class FlowModelHandle:
    """Reusable handle around a serialized dense-flow model.

    The model contract: inputs "frame_prev" and "frame_next" as HxWx3
    float images normalized to [0, 1], output "flow" as HxWx2 float.
    """

    _PROBE_SIDE = 16

    def __init__(self, runner):
        self._runner = runner
        self._probe()

    def _probe(self):
        side = self._PROBE_SIDE
        img = np.zeros((side, side, 3), dtype=np.float32)
        out = self._runner.run({"frame_prev": img, "frame_next": img})
        flow = out.get("flow")
        if flow is None or tuple(flow.shape) != (side, side, 2):
            got = None if flow is None else tuple(flow.shape)
            raise SignatureMismatch(
                f"flow model must map two HxWx3 inputs to one HxWx2 output, got {got}"
            )

    def estimate(self, prev, nxt) -> DisplacementField:
        _check_pair(prev, nxt)
        feeds = {
            "frame_prev": prev.pixels.astype(np.float32) / 255.0,
            "frame_next": nxt.pixels.astype(np.float32) / 255.0,
        }
        out = self._runner.run(feeds)
        flow = np.asarray(out["flow"], dtype=np.float64)
        if flow.shape != (*prev.pixels.shape[:2], 2):
            raise SignatureMismatch(
                f"flow model returned shape {flow.shape} for input {prev.pixels.shape[:2]}"
            )
        return DisplacementField(i=prev.i, vectors=flow)


def load_external_model(model_path: str | Path) -> FlowModelHandle:
    """Load a serialized flow model and validate its tensor signature."""
    from push_sentinel import runners

    runner = runners.open_runner(model_path,
                                 input_names=("frame_prev", "frame_next"),
                                 output_names=("flow",))
    return FlowModelHandle(runner)


_handle_cache: dict[str, FlowModelHandle] = {}


def estimate_flow(prev, nxt, spec: FlowEstimatorSpec) -> DisplacementField:
    """Displacement field between consecutive ROI keyframes, per `spec`."""
    if spec.kind is EstimatorKind.REFERENCE_BLOCK_MATCH:
        return reference_block_match(prev, nxt, spec.search_radius, spec.block_size)
    key = str(spec.model_path)
    handle = _handle_cache.get(key)
    if handle is None:
        handle = _handle_cache[key] = load_external_model(spec.model_path)
    return handle.estimate(prev, nxt)

"""Per-patch pushing classification behind a pluggable runner.

A patch is resized to the classifier's square input, normalized to [0, 1],
and scored with a pushing probability delta; the label is pushing iff
delta >= threshold (closed on the pushing side). Besides the external
serialized model there is a deterministic stub (delta = 1 - mean intensity)
for end-to-end tests: a white patch means no motion, so it scores 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import cv2
import numpy as np

from push_sentinel.errors import EmptyPatch, SignatureMismatch
from push_sentinel.patching import MimPatch

__all__ = [
    "Behavior",
    "ClassifierKind",
    "ClassifierSpec",
    "PatchVerdict",
    "ClassifierHandle",
    "preprocess_patch",
    "classify",
    "classify_batch",
    "load_classifier",
]


class Behavior(str, Enum):
    PUSHING = "pushing"
    NON_PUSHING = "non_pushing"


class ClassifierKind(str, Enum):
    EXTERNAL_MODEL = "external_model"
    MEAN_INTENSITY_STUB = "mean_intensity_stub"


@dataclass(frozen=True)
class ClassifierSpec:
    kind: ClassifierKind = ClassifierKind.MEAN_INTENSITY_STUB
    model_path: Path | None = None
    input_side: int = 224
    threshold: float = 0.5

    def __post_init__(self):
        if self.kind is ClassifierKind.EXTERNAL_MODEL and self.model_path is None:
            raise ValueError("external_model classifier requires model_path")
        if not 0 <= self.threshold <= 1:
            raise ValueError("threshold must be in [0, 1]")
        if self.input_side <= 0:
            raise ValueError("input_side must be positive")


@dataclass(frozen=True)
class PatchVerdict:
    i: int
    k: int
    delta: float
    label: Behavior


def preprocess_patch(p: MimPatch, input_side: int = 224) -> np.ndarray:
    """Model input tensor: bilinear resize to a square, floats in [0, 1].

    The same function feeds both dataset export and inference, so the
    training-time and run-time preprocessing cannot drift apart.
    """
    if p.pixels.size == 0:
        raise EmptyPatch(f"patch i={p.i} k={p.k} has no pixels")
    pixels = p.pixels
    if pixels.shape[:2] != (input_side, input_side):
        pixels = cv2.resize(pixels, (input_side, input_side),
                            interpolation=cv2.INTER_LINEAR)
    return pixels.astype(np.float32) / 255.0


class ClassifierHandle:
    """Reusable handle around a serialized patch classifier.

    Contract: input "patch" as input_side x input_side x 3 floats in
    [0, 1], output "delta" as a post-sigmoid scalar in [0, 1].
    """

    def __init__(self, runner, input_side: int):
        self._runner = runner
        self._input_side = input_side
        self._probe()

    def _probe(self):
        side = self._input_side
        out = self._runner.run({"patch": np.zeros((side, side, 3), dtype=np.float32)})
        delta = out.get("delta")
        if delta is None or np.asarray(delta).size != 1:
            got = None if delta is None else tuple(np.asarray(delta).shape)
            raise SignatureMismatch(
                f"classifier must map one patch tensor to one scalar delta, got {got}"
            )

    def score(self, tensor: np.ndarray) -> float:
        out = self._runner.run({"patch": tensor})
        delta = float(np.asarray(out["delta"]).reshape(()))
        if not -1e-6 <= delta <= 1 + 1e-6:
            raise SignatureMismatch(f"classifier delta {delta} outside [0, 1]")
        return min(max(delta, 0.0), 1.0)


_handle_cache: dict[str, ClassifierHandle] = {}


def load_classifier(spec: ClassifierSpec) -> ClassifierHandle:
    """Load (and cache) the external classifier named by the spec."""
    from push_sentinel import runners

    key = str(spec.model_path)
    handle = _handle_cache.get(key)
    if handle is None:
        runner = runners.open_runner(spec.model_path, input_names=("patch",),
                                     output_names=("delta",))
        handle = _handle_cache[key] = ClassifierHandle(runner, spec.input_side)
    return handle


def classify(p: MimPatch, spec: ClassifierSpec) -> PatchVerdict:
    """Score one patch and apply the threshold rule."""
    tensor = preprocess_patch(p, spec.input_side)
    if spec.kind is ClassifierKind.MEAN_INTENSITY_STUB:
        delta = 1.0 - float(tensor.mean())
    else:
        delta = load_classifier(spec).score(tensor)
    label = Behavior.PUSHING if delta >= spec.threshold else Behavior.NON_PUSHING
    return PatchVerdict(i=p.i, k=p.k, delta=delta, label=label)


def classify_batch(patches: list[MimPatch], spec: ClassifierSpec) -> list[PatchVerdict]:
    """Classify a keyframe's patches, preserving k order.

    Equivalent to mapping classify(); batching only saves model-load and
    dispatch overhead. Per-patch failures are re-raised tagged with the
    offending patch's (i, k).
    """
    verdicts = []
    for p in patches:
        try:
            verdicts.append(classify(p, spec))
        except Exception as exc:
            raise type(exc)(f"patch i={p.i} k={p.k}: {exc}") from exc
    return verdicts

"""Inference boundary for serialized models.

Trained networks (the dense-flow estimator and the patch classifier) are
consumed as opaque model files through one small contract: named float
tensors in, named float tensors out. Two file formats are supported, each
behind a lazy import so neither runtime is a hard dependency:

  .onnx        ONNX, run with onnxruntime
  .pt / .pts   TorchScript, run with torch.jit

TorchScript modules do not carry tensor names, so the documented names are
supplied by the caller and mapped positionally onto forward()'s arguments
and results.
"""

from __future__ import annotations

from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from push_sentinel.errors import ModelLoadFailure, ModelRuntimeFailure

__all__ = ["ModelRunner", "open_runner"]


class ModelRunner(Protocol):
    input_names: tuple[str, ...]
    output_names: tuple[str, ...]

    def run(self, feeds: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        ...


class _OnnxRunner:
    def __init__(self, path: Path):
        try:
            import onnxruntime as ort
        except ImportError as exc:
            raise ModelLoadFailure(
                "onnxruntime is not installed; install the 'models' extra or "
                "provide a TorchScript (.pt) model"
            ) from exc
        try:
            self._session = ort.InferenceSession(str(path),
                                                 providers=["CPUExecutionProvider"])
        except Exception as exc:
            raise ModelLoadFailure(f"cannot load ONNX model {path}: {exc}") from exc
        self.input_names = tuple(i.name for i in self._session.get_inputs())
        self.output_names = tuple(o.name for o in self._session.get_outputs())

    def run(self, feeds):
        try:
            outs = self._session.run(None, {k: np.asarray(v, dtype=np.float32)
                                            for k, v in feeds.items()})
        except Exception as exc:
            raise ModelRuntimeFailure(f"ONNX inference failed: {exc}") from exc
        return dict(zip(self.output_names, (np.asarray(o) for o in outs)))


class _TorchScriptRunner:
    def __init__(self, path: Path, input_names: Sequence[str], output_names: Sequence[str]):
        try:
            import torch
        except ImportError as exc:
            raise ModelLoadFailure(
                "torch is not installed; install the 'models' extra to load "
                "TorchScript files"
            ) from exc
        self._torch = torch
        try:
            self._module = torch.jit.load(str(path), map_location="cpu")
            self._module.eval()
        except Exception as exc:
            raise ModelLoadFailure(f"cannot load TorchScript model {path}: {exc}") from exc
        self.input_names = tuple(input_names)
        self.output_names = tuple(output_names)

    def run(self, feeds):
        torch = self._torch
        try:
            args = [torch.from_numpy(np.ascontiguousarray(feeds[name], dtype=np.float32))
                    for name in self.input_names]
        except KeyError as exc:
            raise ModelRuntimeFailure(f"missing input tensor {exc}") from None
        try:
            with torch.no_grad():
                result = self._module(*args)
        except Exception as exc:
            raise ModelRuntimeFailure(f"TorchScript inference failed: {exc}") from exc
        if not isinstance(result, (tuple, list)):
            result = (result,)
        if len(result) != len(self.output_names):
            raise ModelRuntimeFailure(
                f"model returned {len(result)} tensors, expected {len(self.output_names)}"
            )
        return {name: out.detach().cpu().numpy()
                for name, out in zip(self.output_names, result)}


def open_runner(path: str | Path, *, input_names: Sequence[str],
                output_names: Sequence[str]) -> ModelRunner:
    """Open a serialized model file as a ModelRunner.

    The format is chosen by file suffix. Missing files raise
    ModelLoadFailure before any runtime import is attempted.
    """
    path = Path(path)
    if not path.is_file():
        raise ModelLoadFailure(f"model file not found: {path}")
    suffix = path.suffix.lower()
    if suffix == ".onnx":
        return _OnnxRunner(path)
    if suffix in (".pt", ".pts", ".ts"):
        return _TorchScriptRunner(path, input_names, output_names)
    raise ModelLoadFailure(f"unsupported model format {suffix!r} ({path})")

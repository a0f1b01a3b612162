from __future__ import annotations

import sys
from pathlib import Path

import cv2
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

from push_sentinel.ingest import Keyframe, RoiKeyframe
from push_sentinel.patching import MimPatch


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def texture(height: int, width: int, seed: int = 0) -> np.ndarray:
    """Deterministic random RGB texture."""
    return np.random.default_rng(seed).integers(0, 256, (height, width, 3),
                                                dtype=np.uint8)


def roi_pair_with_shift(height: int, width: int, u: int, v: int,
                        seed: int = 0) -> tuple[RoiKeyframe, RoiKeyframe]:
    """Two ROI keyframes where every pixel moved by exactly (u, v)."""
    margin = max(abs(u), abs(v)) + 2
    big = texture(height + 2 * margin, width + 2 * margin, seed)
    prev = big[margin:margin + height, margin:margin + width]
    nxt = big[margin - v:margin - v + height, margin - u:margin - u + width]
    return (RoiKeyframe(i=1, t=0.0, pixels=np.ascontiguousarray(prev)),
            RoiKeyframe(i=2, t=2.0, pixels=np.ascontiguousarray(nxt)))


def write_video(path: Path, frames: list[np.ndarray], fps: float = 25.0) -> Path:
    """Encode RGB frames into an MJPG container."""
    h, w = frames[0].shape[:2]
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"), fps, (w, h))
    assert writer.isOpened(), f"cannot open video writer for {path}"
    for frame in frames:
        writer.write(frame[:, :, ::-1])
    writer.release()
    return path


def scrolling_frames(n_frames: int, height: int, width: int,
                     step: tuple[int, int] = (2, 1), seed: int = 7) -> list[np.ndarray]:
    """Frames of one texture scrolling by `step` px per frame (with wrap)."""
    base = texture(height, width, seed)
    return [np.roll(base, (k * step[1], k * step[0]), axis=(0, 1))
            for k in range(n_frames)]


@pytest.fixture
def tiny_video(tmp_path):
    """A 3-second 25 fps 64x48 clip."""
    frames = scrolling_frames(75, 48, 64)
    return write_video(tmp_path / "tiny.avi", frames)


def make_patch(pixels: np.ndarray, i: int = 1, k: int = 1) -> MimPatch:
    h, w = pixels.shape[:2]
    return MimPatch(i=i, k=k, rect=(0, 0, w, h), pixels=pixels)


def make_keyframe(pixels: np.ndarray, t: float = 0.0, index: int = 0) -> Keyframe:
    return Keyframe(t=t, frame_index=index, pixels=pixels)


@pytest.fixture
def torch_models(tmp_path_factory):
    """TorchScript model files exercising the runner contract."""
    torch = pytest.importorskip("torch")
    root = tmp_path_factory.mktemp("models")

    class ZeroFlow(torch.nn.Module):
        def forward(self, prev: torch.Tensor, nxt: torch.Tensor) -> torch.Tensor:
            return torch.zeros((prev.shape[0], prev.shape[1], 2))

    class BadFlow(torch.nn.Module):
        def forward(self, prev: torch.Tensor, nxt: torch.Tensor) -> torch.Tensor:
            return torch.zeros((prev.shape[0], prev.shape[1], 3))

    class MeanClassifier(torch.nn.Module):
        def forward(self, patch: torch.Tensor) -> torch.Tensor:
            return 1.0 - patch.mean()

    class BadClassifier(torch.nn.Module):
        def forward(self, patch: torch.Tensor) -> torch.Tensor:
            return torch.zeros(2)

    paths = {}
    for name, module in [("zero_flow", ZeroFlow()), ("bad_flow", BadFlow()),
                         ("mean_classifier", MeanClassifier()),
                         ("bad_classifier", BadClassifier())]:
        path = root / f"{name}.pt"
        torch.jit.script(module).save(str(path))
        paths[name] = path
    return paths

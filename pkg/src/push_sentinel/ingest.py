"""Frame acquisition, keyframe sampling, and ROI cropping.

A frame source yields frames at its native cadence; every `interval_s`
seconds of stream time one frame is promoted to a keyframe, and the
configured entrance rectangle is cropped out of it for the rest of the
pipeline. File-backed sources can pace delivery to wall clock to stand in
for a live camera.
"""

from __future__ import annotations

import logging
import threading
import time
from collections import deque
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

import cv2
import numpy as np

from push_sentinel.errors import DecodeFailure, RoiOutOfBounds, SourceUnavailable

log = logging.getLogger(__name__)

__all__ = [
    "SourceMode",
    "FrameSource",
    "Frame",
    "FrameStream",
    "Keyframe",
    "RoiSpec",
    "RoiKeyframe",
    "open_source",
    "sample_keyframes",
    "crop_roi",
]


class SourceMode(str, Enum):
    FILE_REPLAY = "file_replay"
    LIVE_DEVICE = "live_device"
    NETWORK_STREAM = "network_stream"


@dataclass(frozen=True)
class FrameSource:
    """Where frames come from and how they are scaled."""

    source_id: str
    mode: SourceMode
    path_or_url: str | int
    native_fps: float
    resolution: tuple[int, int]  # native (width, height)
    downscale_factor: Fraction = Fraction(1, 2)

    def __post_init__(self):
        if self.native_fps <= 0:
            raise ValueError("native_fps must be positive")
        if self.resolution[0] <= 0 or self.resolution[1] <= 0:
            raise ValueError("resolution components must be positive")
        if not 0 < self.downscale_factor <= 1:
            raise ValueError("downscale_factor must be in (0, 1]")

    @property
    def output_resolution(self) -> tuple[int, int]:
        """Delivered frame size: native scaled by the downscale factor.

        Dimensions that do not divide evenly are floored, matching common
        video scaler behavior.
        """
        w, h = self.resolution
        f = self.downscale_factor
        return (int(w * f), int(h * f))

    @classmethod
    def from_file(cls, path: str | Path, source_id: str | None = None,
                  downscale_factor: Fraction = Fraction(1, 2)) -> "FrameSource":
        """Build a file_replay source by probing the container."""
        path = Path(path)
        if not path.is_file():
            raise SourceUnavailable(f"video file not found: {path}")
        cap = cv2.VideoCapture(str(path))
        try:
            if not cap.isOpened():
                raise DecodeFailure(f"cannot decode container: {path}")
            fps = cap.get(cv2.CAP_PROP_FPS)
            w = int(cap.get(cv2.CAP_PROP_FRAME_WIDTH))
            h = int(cap.get(cv2.CAP_PROP_FRAME_HEIGHT))
        finally:
            cap.release()
        if fps <= 0 or w <= 0 or h <= 0:
            raise DecodeFailure(f"container reports invalid geometry/fps: {path}")
        return cls(source_id=source_id or path.stem, mode=SourceMode.FILE_REPLAY,
                   path_or_url=str(path), native_fps=fps, resolution=(w, h),
                   downscale_factor=downscale_factor)


@dataclass(frozen=True)
class Frame:
    """One raw (downscaled) frame with its stream timestamp."""

    frame_index: int
    t: float
    pixels: np.ndarray


@dataclass(frozen=True)
class Keyframe:
    """Frame promoted by the sampler; t is its stream timestamp."""

    t: float
    frame_index: int
    pixels: np.ndarray


@dataclass(frozen=True)
class RoiSpec:
    """Entrance rectangle in pixel units, top-left inclusive, bottom-right exclusive."""

    top_left: tuple[int, int]
    bottom_right: tuple[int, int]

    def __post_init__(self):
        (x0, y0), (x1, y1) = self.top_left, self.bottom_right
        if not (0 <= x0 < x1 and 0 <= y0 < y1):
            raise ValueError(f"degenerate ROI {self.top_left}..{self.bottom_right}")

    @property
    def width(self) -> int:
        return self.bottom_right[0] - self.top_left[0]

    @property
    def height(self) -> int:
        return self.bottom_right[1] - self.top_left[1]

    def scaled(self, factor: Fraction) -> "RoiSpec":
        """ROI given at native resolution, mapped to downscaled frames.

        Coordinates are rounded to nearest (half away from zero).
        """
        def rn(value: int) -> int:
            return int(value * factor + Fraction(1, 2))

        return RoiSpec(top_left=(rn(self.top_left[0]), rn(self.top_left[1])),
                       bottom_right=(rn(self.bottom_right[0]), rn(self.bottom_right[1])))

    def validate_against(self, frame_width: int, frame_height: int):
        if self.bottom_right[0] > frame_width or self.bottom_right[1] > frame_height:
            raise RoiOutOfBounds(
                f"ROI {self.top_left}..{self.bottom_right} exceeds "
                f"{frame_width}x{frame_height} frame"
            )


@dataclass(frozen=True)
class RoiKeyframe:
    """Cropped entrance region of keyframe number i (i = 1, 2, 3, ...)."""

    i: int
    t: float
    pixels: np.ndarray

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


class FrameStream:
    """Iterator over a video source's frames at native cadence.

    With pace=True, frame delivery is slept onto the wall clock so a file
    behaves like a live camera. Timestamps are always stream time
    (frame_index / native_fps), never wall time.
    """

    def __init__(self, source: FrameSource, capture: cv2.VideoCapture, pace: bool):
        self._source = source
        self._capture = capture
        self._pace = pace
        self._closed = False

    @property
    def source(self) -> FrameSource:
        return self._source

    def __iter__(self) -> Iterator[Frame]:
        src = self._source
        out_w, out_h = src.output_resolution
        exp_w, exp_h = src.resolution
        start_wall = time.monotonic()
        index = 0
        while not self._closed:
            ok, bgr = self._capture.read()
            if not ok:
                if index == 0 and src.mode is SourceMode.FILE_REPLAY:
                    raise DecodeFailure(f"no frames decoded from {src.path_or_url}")
                break
            if bgr.shape[1] != exp_w or bgr.shape[0] != exp_h:
                raise DecodeFailure(
                    f"frame {index} is {bgr.shape[1]}x{bgr.shape[0]}, "
                    f"source declared {exp_w}x{exp_h}"
                )
            if (out_w, out_h) != (exp_w, exp_h):
                bgr = cv2.resize(bgr, (out_w, out_h), interpolation=cv2.INTER_AREA)
            t = index / src.native_fps
            if self._pace:
                due = start_wall + t
                delay = due - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            yield Frame(frame_index=index, t=t, pixels=bgr[:, :, ::-1])  # BGR -> RGB
            index += 1
        self.close()

    def buffered(self, maxlen: int = 64) -> Iterator[Frame]:
        """Decouple acquisition from consumption via a bounded buffer.

        A reader thread keeps pulling frames so a slow consumer never
        blocks acquisition; on overflow the oldest buffered frames are
        dropped (the sampler tolerates gaps: it takes the first surviving
        frame at or after each tick).
        """
        buf: deque[Frame] = deque(maxlen=maxlen)
        done = threading.Event()
        error: list[BaseException] = []

        def reader():
            try:
                for frame in self:
                    if len(buf) == buf.maxlen:
                        log.warning("frame buffer full; dropping oldest frame")
                    buf.append(frame)
            except BaseException as exc:  # noqa: BLE001 - surfaced to consumer
                error.append(exc)
            finally:
                done.set()

        threading.Thread(target=reader, name="frame-acquisition", daemon=True).start()
        while True:
            try:
                yield buf.popleft()
            except IndexError:
                if done.is_set():
                    if buf:
                        continue
                    if error:
                        raise error[0]
                    return
                time.sleep(0.001)

    def close(self):
        if not self._closed:
            self._closed = True
            self._capture.release()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_source(config: FrameSource, *, pace: bool | None = None,
                open_attempts: int = 3, attempt_delay_s: float = 0.5) -> FrameStream:
    """Open a frame source, retrying a bounded number of times.

    pace=None paces file replay (live-camera simulation) and leaves live
    sources at their natural rate; pass pace=False for batch processing.
    """
    if open_attempts < 1:
        raise ValueError("open_attempts must be >= 1")
    if config.mode is SourceMode.FILE_REPLAY:
        if not Path(str(config.path_or_url)).is_file():
            raise SourceUnavailable(f"video file not found: {config.path_or_url}")

    capture = None
    last_note = ""
    for attempt in range(open_attempts):
        if attempt:
            time.sleep(attempt_delay_s)
            log.warning("retrying open of %s (attempt %d/%d)",
                        config.path_or_url, attempt + 1, open_attempts)
        capture = cv2.VideoCapture(config.path_or_url)
        if capture.isOpened():
            break
        capture.release()
        capture = None
        last_note = f"attempt {attempt + 1} failed"
    if capture is None:
        if config.mode is SourceMode.FILE_REPLAY:
            raise DecodeFailure(f"cannot decode container {config.path_or_url} ({last_note})")
        raise SourceUnavailable(f"cannot open {config.mode.value} source "
                                f"{config.path_or_url!r} ({last_note})")

    if pace is None:
        pace = config.mode is SourceMode.FILE_REPLAY
    return FrameStream(config, capture, pace=pace)


def sample_keyframes(frames: Iterable[Frame], interval_s: float = 2.0,
                     offset_s: float = 0.0) -> Iterator[Keyframe]:
    """Promote the first frame at or after each sampling tick.

    Ticks sit at offset_s, offset_s + interval_s, ... in stream time; the
    first keyframe for offset 0 is the t=0 frame. Each physical frame is
    emitted at most once; the stream ending simply ends the iterator.
    """
    if interval_s <= 0:
        raise ValueError("sampling interval must be positive")
    if offset_s < 0:
        raise ValueError("offset must be non-negative")
    tick = offset_s
    slack = 1e-9  # float guard: a frame exactly on the tick counts
    for frame in frames:
        if frame.t >= tick - slack:
            yield Keyframe(t=frame.t, frame_index=frame.frame_index, pixels=frame.pixels)
            while frame.t >= tick - slack:
                tick += interval_s


def crop_roi(kf: Keyframe, roi: RoiSpec, i: int) -> RoiKeyframe:
    """Pixel-exact ROI crop of a keyframe, tagged with running ordinal i."""
    h, w = kf.pixels.shape[:2]
    roi.validate_against(w, h)
    (x0, y0), (x1, y1) = roi.top_left, roi.bottom_right
    return RoiKeyframe(i=i, t=kf.t, pixels=np.ascontiguousarray(kf.pixels[y0:y1, x0:x1]))

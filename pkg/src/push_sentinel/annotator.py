"""Annotation masks, overlay drawing, privacy blur, and archiving.

Archived keyframes must be privacy-blurred; blur_roi() returns a
BlurredImage wrapper and persist() refuses anything else, so an unblurred
frame cannot reach the store by construction. Persistence is retried with
backoff and is meant to run asynchronously (see AsyncArchiver) so the live
annotation path never waits on storage.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import cv2
import numpy as np

from push_sentinel.detector import Behavior, PatchVerdict
from push_sentinel.errors import (
    MissingVerdict,
    RectOutOfBounds,
    StoreUnavailable,
    WriteFailure,
)
from push_sentinel.patching import GridSpec, Rect, patch_rect

log = logging.getLogger(__name__)

__all__ = [
    "AnnotationMask",
    "OverlayStyle",
    "BlurredImage",
    "ArchiveRecord",
    "ObjectStore",
    "LocalDirectoryStore",
    "S3ObjectStore",
    "AsyncArchiver",
    "build_mask",
    "overlay",
    "blur_roi",
    "prepare_archive_image",
    "persist",
    "load_record",
]


@dataclass(frozen=True)
class AnnotationMask:
    """Per-patch pushing labels for one keyframe, with their ROI rects."""

    i: int
    grid: GridSpec
    labels: tuple[bool, ...]  # k order; True = pushing
    rects: tuple[Rect, ...]

    @property
    def pushing_count(self) -> int:
        return sum(self.labels)


@dataclass(frozen=True)
class OverlayStyle:
    pushing_color: tuple[int, int, int] = (255, 0, 0)
    non_pushing_color: tuple[int, int, int] = (0, 255, 0)
    line_width: int = 3


@dataclass(frozen=True)
class BlurredImage:
    """Proof-of-blur wrapper; only blur_roi() produces one."""

    pixels: np.ndarray
    kernel_radius: int


@dataclass(frozen=True)
class ArchiveRecord:
    stream_id: str
    i: int
    t: float
    image: BlurredImage
    mask: AnnotationMask


def build_mask(verdicts: list[PatchVerdict], grid: GridSpec,
               dims: tuple[int, int]) -> AnnotationMask:
    """Assemble the n x m annotation mask from one keyframe's verdicts.

    dims is the motion map's (width, height); a verdict must exist for
    every k in 1..n*m.
    """
    by_k = {v.k: v for v in verdicts}
    missing = [k for k in range(1, grid.cells + 1) if k not in by_k]
    if missing or len(verdicts) != grid.cells:
        raise MissingVerdict(
            f"expected one verdict per k in 1..{grid.cells}, missing {missing or 'none'}, "
            f"got {len(verdicts)}"
        )
    i = verdicts[0].i
    labels = tuple(by_k[k].label is Behavior.PUSHING for k in range(1, grid.cells + 1))
    rects = tuple(patch_rect(grid, dims, k) for k in range(1, grid.cells + 1))
    return AnnotationMask(i=i, grid=grid, labels=labels, rects=rects)


def overlay(image: np.ndarray, mask: AnnotationMask,
            style: OverlayStyle = OverlayStyle(),
            roi_offset: tuple[int, int] = (0, 0)) -> np.ndarray:
    """Draw the mask as box outlines: red = pushing, green = non-pushing.

    Outlines are drawn just inside each rect; interior pixels stay
    untouched, so drawing the same mask twice is a no-op. roi_offset
    translates rects when drawing on the full frame instead of the ROI.
    """
    out = image.copy()
    h, w = out.shape[:2]
    ox, oy = roi_offset
    lw = style.line_width
    for rect, pushing in zip(mask.rects, mask.labels):
        x0, y0, x1, y1 = rect[0] + ox, rect[1] + oy, rect[2] + ox, rect[3] + oy
        if x0 < 0 or y0 < 0 or x1 > w or y1 > h:
            raise RectOutOfBounds(f"rect {rect} with offset {roi_offset} "
                                  f"exceeds {w}x{h} image")
        color = style.pushing_color if pushing else style.non_pushing_color
        out[y0:y0 + lw, x0:x1] = color
        out[max(y1 - lw, y0):y1, x0:x1] = color
        out[y0:y1, x0:x0 + lw] = color
        out[y0:y1, max(x1 - lw, x0):x1] = color
    return out


def blur_roi(image: np.ndarray, kernel_radius: int = 4) -> BlurredImage:
    """Two-pass separable box blur with border renormalization.

    Each output pixel is the mean of its in-bounds window (window sums are
    built per axis, the division happens once), so a uniform image is a
    fixed point and results are exact integer-rational roundings. Output
    dimensions equal the input's.
    """
    if kernel_radius < 1:
        raise ValueError("kernel_radius must be >= 1")
    sums = image.astype(np.int64)
    for axis in (1, 0):
        sums = _window_sums_axis(sums, kernel_radius, axis)
    h, w = image.shape[:2]
    counts = np.outer(_window_counts(h, kernel_radius),
                      _window_counts(w, kernel_radius))
    if image.ndim == 3:
        counts = counts[..., None]
    pixels = np.rint(sums / counts).astype(image.dtype)
    return BlurredImage(pixels=pixels, kernel_radius=kernel_radius)


def _window_counts(n: int, radius: int) -> np.ndarray:
    idx = np.arange(n)
    return np.minimum(idx + radius + 1, n) - np.maximum(idx - radius, 0)


def _window_sums_axis(img: np.ndarray, radius: int, axis: int) -> np.ndarray:
    n = img.shape[axis]
    moved = np.moveaxis(img, axis, 0)
    csum = np.zeros((n + 1, *moved.shape[1:]), dtype=np.int64)
    np.cumsum(moved, axis=0, out=csum[1:])
    lo = np.maximum(np.arange(n) - radius, 0)
    hi = np.minimum(np.arange(n) + radius + 1, n)
    return np.moveaxis(csum[hi] - csum[lo], 0, axis)


class ObjectStore(Protocol):
    """Minimal blob interface the archiver writes through."""

    def put(self, name: str, data: bytes) -> None: ...

    def get(self, name: str) -> bytes: ...

    def exists(self, name: str) -> bool: ...


class LocalDirectoryStore:
    """Object store backed by a local directory tree."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def put(self, name: str, data: bytes) -> None:
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)

    def get(self, name: str) -> bytes:
        return (self.root / name).read_bytes()

    def exists(self, name: str) -> bool:
        return (self.root / name).is_file()


class S3ObjectStore:
    """S3-compatible object store (requires the 's3' extra)."""

    def __init__(self, bucket: str, prefix: str = "", **client_kwargs):
        try:
            import boto3
        except ImportError as exc:
            raise StoreUnavailable(
                "boto3 is not installed; install the 's3' extra for S3 archiving"
            ) from exc
        self._client = boto3.client("s3", **client_kwargs)
        self._bucket = bucket
        self._prefix = prefix.rstrip("/")

    def _key(self, name: str) -> str:
        return f"{self._prefix}/{name}" if self._prefix else name

    def put(self, name: str, data: bytes) -> None:
        self._client.put_object(Bucket=self._bucket, Key=self._key(name), Body=data)

    def get(self, name: str) -> bytes:
        resp = self._client.get_object(Bucket=self._bucket, Key=self._key(name))
        return resp["Body"].read()

    def exists(self, name: str) -> bool:
        try:
            self._client.head_object(Bucket=self._bucket, Key=self._key(name))
            return True
        except Exception:
            return False


def _mask_sidecar(record: ArchiveRecord) -> bytes:
    mask = record.mask
    doc = {
        "i": record.i,
        "t": record.t,
        "grid": {"n": mask.grid.n, "m": mask.grid.m},
        "labels": list(mask.labels),
        "rects": [list(r) for r in mask.rects],
    }
    return json.dumps(doc, sort_keys=True).encode()


def prepare_archive_image(roi_pixels: np.ndarray, mask: AnnotationMask,
                          kernel_radius: int = 4,
                          style: OverlayStyle = OverlayStyle()) -> BlurredImage:
    """Privacy-blur an ROI keyframe, then draw the annotation boxes on it.

    Blur comes first so people are unrecognizable while the box outlines
    stay crisp. The result keeps its proof-of-blur wrapper for persist().
    """
    blurred = blur_roi(roi_pixels, kernel_radius)
    annotated = overlay(blurred.pixels, mask, style)
    return BlurredImage(pixels=annotated, kernel_radius=kernel_radius)


def persist(record: ArchiveRecord, store: ObjectStore, *,
            retries: int = 3, backoff_s: float = 0.05) -> str:
    """Write the blurred annotated keyframe plus its mask sidecar.

    Objects are named {stream_id}/roi_{i:06}.png and .json. Returns the
    image object name. Failing writes are retried with linear backoff and
    then surfaced as StoreUnavailable.
    """
    if not isinstance(record.image, BlurredImage):
        raise TypeError("persist requires a BlurredImage; run blur_roi() first")
    ok, png = cv2.imencode(".png", record.image.pixels[:, :, ::-1])
    if not ok:
        raise WriteFailure("PNG encoding failed")
    base = f"{record.stream_id}/roi_{record.i:06}"
    sidecar = _mask_sidecar(record)
    last_exc: Exception | None = None
    for attempt in range(retries):
        if attempt:
            time.sleep(backoff_s * attempt)
        try:
            store.put(f"{base}.png", png.tobytes())
            store.put(f"{base}.json", sidecar)
            return f"{base}.png"
        except Exception as exc:  # noqa: BLE001 - retried, then surfaced
            last_exc = exc
            log.warning("archive write failed (attempt %d/%d): %s",
                        attempt + 1, retries, exc)
    raise StoreUnavailable(f"store rejected {base} after {retries} attempts") from last_exc


def load_record(store: ObjectStore, stream_id: str, i: int) -> tuple[np.ndarray, dict]:
    """Read back an archived keyframe image (RGB) and its mask metadata."""
    base = f"{stream_id}/roi_{i:06}"
    png = np.frombuffer(store.get(f"{base}.png"), dtype=np.uint8)
    bgr = cv2.imdecode(png, cv2.IMREAD_COLOR)
    meta = json.loads(store.get(f"{base}.json").decode())
    return bgr[:, :, ::-1], meta


class AsyncArchiver:
    """Single-writer background persistence so masks are never delayed.

    Records are queued; one worker thread serializes writes per stream.
    Errors are logged and counted, never raised into the pipeline.
    """

    def __init__(self, store: ObjectStore, maxsize: int = 256):
        self._store = store
        self._queue: queue.Queue[ArchiveRecord | None] = queue.Queue(maxsize=maxsize)
        self._worker = threading.Thread(target=self._run, name="archiver", daemon=True)
        self._started = False
        self.failures = 0
        self.written = 0

    def submit(self, record: ArchiveRecord) -> None:
        if not self._started:
            self._started = True
            self._worker.start()
        try:
            self._queue.put_nowait(record)
        except queue.Full:
            self.failures += 1
            log.warning("archive queue full; dropping record i=%d", record.i)

    def _run(self):
        while True:
            record = self._queue.get()
            if record is None:
                return
            try:
                persist(record, self._store)
                self.written += 1
            except Exception as exc:  # noqa: BLE001 - archiving must not kill the pipeline
                self.failures += 1
                log.error("failed to archive record i=%d: %s", record.i, exc)

    def close(self, timeout_s: float = 10.0) -> None:
        """Drain pending writes and stop the worker."""
        if self._started:
            self._queue.put(None)
            self._worker.join(timeout=timeout_s)

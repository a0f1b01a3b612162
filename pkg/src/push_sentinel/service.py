"""Live pipeline orchestration and the operator wire protocol.

One pipeline per stream. Stages (sampling, motion descriptor, detection +
annotation) run in separate threads connected by bounded queues, so up to
three segments are in flight while masks still come out strictly in order.
A segment whose processing exceeds the deadline is abandoned and reported
dropped so the pipeline keeps pace with the stream cadence.

Clients speak newline-delimited JSON over TCP: they subscribe to a stream,
receive the current config followed by mask/alert events, and may submit
config updates that take effect at the next segment boundary. Video pixels
never cross this wire; clients render their own source and only masks and
metadata are sent.
"""

from __future__ import annotations

import json
import logging
import queue
import socketserver
import threading
import time
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterator

from push_sentinel import flow as flow_mod
from push_sentinel import flowviz, ingest, patching
from push_sentinel.annotator import (
    AnnotationMask,
    ArchiveRecord,
    AsyncArchiver,
    ObjectStore,
    build_mask,
    prepare_archive_image,
)
from push_sentinel.detector import ClassifierSpec, classify_batch
from push_sentinel.errors import InvalidConfig, PushSentinelError
from push_sentinel.flow import FlowEstimatorSpec
from push_sentinel.ingest import FrameSource, Keyframe, RoiSpec
from push_sentinel.metrics import TimingReport
from push_sentinel.patching import GridSpec

log = logging.getLogger(__name__)

__all__ = [
    "PipelineConfig",
    "PipelineHooks",
    "SegmentStatus",
    "SegmentResult",
    "run_pipeline",
    "PushingService",
]


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one stream needs: source, ROI, grid, models, budgets."""

    source: FrameSource
    roi: RoiSpec  # native-resolution coordinates
    grid: GridSpec
    estimator: FlowEstimatorSpec = FlowEstimatorSpec()
    classifier: ClassifierSpec = ClassifierSpec()
    interval_s: float = 2.0
    segment_deadline_s: float = 2.0
    store: ObjectStore | None = None
    blur_radius: int = 4
    listen: tuple[str, int] | None = None

    def __post_init__(self):
        if self.segment_deadline_s <= 0:
            raise ValueError("segment_deadline_s must be positive")
        if self.interval_s <= 0:
            raise ValueError("interval_s must be positive")
        out_w, out_h = self.source.output_resolution
        self.roi.scaled(self.source.downscale_factor).validate_against(out_w, out_h)

    @property
    def stream_id(self) -> str:
        return self.source.source_id


@dataclass(frozen=True)
class PipelineHooks:
    """Test/ops instrumentation: injected stage delays, segment callback.

    delay_segment_i limits the injected delays to one segment ordinal;
    None applies them to every segment.
    """

    descriptor_delay_s: float = 0.0
    detect_delay_s: float = 0.0
    delay_segment_i: int | None = None
    on_segment: Callable | None = None

    def applies_to(self, segment_i: int) -> bool:
        return self.delay_segment_i is None or self.delay_segment_i == segment_i


class SegmentStatus(str, Enum):
    OK = "ok"
    DROPPED_DEADLINE = "dropped_deadline"
    ERROR = "error"


@dataclass(frozen=True)
class SegmentResult:
    i: int
    t: float
    mask: AnnotationMask | None
    timings: TimingReport
    status: SegmentStatus
    error: str | None = None
    latency_s: float = 0.0  # wall time from segment-ready to emission


@dataclass(frozen=True)
class _ActiveConfig:
    """The per-segment latched slice of the config (operator-steerable)."""

    roi: RoiSpec
    grid: GridSpec
    threshold: float


class ConfigBox:
    """Thread-safe holder for the steerable config slice.

    Updates are staged and applied when the producer latches the next
    segment, so a segment's grid/ROI/threshold never change mid-flight.
    """

    def __init__(self, config: PipelineConfig):
        self._lock = threading.Lock()
        self._config = config
        self._active = _ActiveConfig(roi=config.roi, grid=config.grid,
                                     threshold=config.classifier.threshold)
        self._pending: _ActiveConfig | None = None
        self._next_i = 1

    def snapshot(self) -> _ActiveConfig:
        with self._lock:
            return self._pending or self._active

    def latch(self, segment_i: int) -> _ActiveConfig:
        """Called by the producer when segment_i is created."""
        with self._lock:
            if self._pending is not None:
                self._active = self._pending
                self._pending = None
            self._next_i = segment_i + 1
            return self._active

    def update(self, roi: RoiSpec | None = None, grid: GridSpec | None = None,
               threshold: float | None = None) -> tuple[_ActiveConfig, int]:
        """Stage new values; returns the staged config and the first segment
        index that can still pick it up."""
        errors: dict[str, str] = {}
        cfg = self._config
        out_w, out_h = cfg.source.output_resolution
        if roi is not None:
            try:
                roi.scaled(cfg.source.downscale_factor).validate_against(out_w, out_h)
            except (PushSentinelError, ValueError) as exc:
                errors["roi"] = str(exc)
        if threshold is not None and not 0 <= threshold <= 1:
            errors["threshold"] = f"threshold {threshold} outside [0, 1]"
        with self._lock:
            base = self._pending or self._active
            candidate = _ActiveConfig(
                roi=roi if roi is not None else base.roi,
                grid=grid if grid is not None else base.grid,
                threshold=threshold if threshold is not None else base.threshold,
            )
            if "roi" not in errors:
                scaled = candidate.roi.scaled(cfg.source.downscale_factor)
                if scaled.width // candidate.grid.m == 0 or scaled.height // candidate.grid.n == 0:
                    errors["grid"] = (f"grid {candidate.grid.n}x{candidate.grid.m} "
                                      f"produces empty cells on a "
                                      f"{scaled.width}x{scaled.height} ROI")
            if errors:
                raise InvalidConfig(errors)
            self._pending = candidate
            return candidate, self._next_i


@dataclass(frozen=True)
class _SegmentJob:
    i: int
    prev_kf: Keyframe
    next_kf: Keyframe
    active: _ActiveConfig
    ready_at: float  # perf_counter when both keyframes were available
    preprocess_s: float


_END = object()


def run_pipeline(config: PipelineConfig, *, pace: bool | None = None,
                 hooks: PipelineHooks | None = None,
                 config_box: ConfigBox | None = None,
                 max_segments: int | None = None) -> Iterator[SegmentResult]:
    """Run the full per-segment pipeline, yielding results in i order.

    For each consecutive keyframe pair: crop -> displacement field ->
    motion map -> patches -> verdicts -> annotation mask. Archiving (when
    a store is configured) happens on a background writer and never delays
    mask emission. Per-segment failures yield status=error and the stream
    continues; losing the source ends the iterator.
    """
    hooks = hooks or PipelineHooks()
    box = config_box or ConfigBox(config)
    factor = config.source.downscale_factor
    deadline = config.segment_deadline_s
    archiver = AsyncArchiver(config.store) if config.store is not None else None

    q_desc: queue.Queue = queue.Queue(maxsize=2)
    q_out: queue.Queue = queue.Queue(maxsize=2)

    stop = threading.Event()

    def offer(q: queue.Queue, item) -> bool:
        """Bounded put that gives up when the pipeline is being torn down."""
        while not stop.is_set():
            try:
                q.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def producer():
        try:
            with ingest.open_source(config.source, pace=pace) as stream:
                frames = iter(stream)
                prev_kf = None
                segment_i = 0
                for kf in ingest.sample_keyframes(frames, config.interval_s):
                    if stop.is_set():
                        return
                    if prev_kf is not None:
                        segment_i += 1
                        active = box.latch(segment_i)
                        job = _SegmentJob(i=segment_i, prev_kf=prev_kf,
                                          next_kf=kf, active=active,
                                          ready_at=time.perf_counter(),
                                          preprocess_s=0.0)
                        if not offer(q_desc, job):
                            return
                        if max_segments is not None and segment_i >= max_segments:
                            break
                    prev_kf = kf
            offer(q_desc, _END)
        except PushSentinelError as exc:
            log.error("source lost: %s", exc)
            offer(q_desc, ("fatal", str(exc)))
        except Exception as exc:  # noqa: BLE001
            log.exception("unexpected producer failure")
            offer(q_desc, ("fatal", f"{type(exc).__name__}: {exc}"))

    def descriptor():
        while True:
            try:
                job = q_desc.get(timeout=0.1)
            except queue.Empty:
                if stop.is_set():
                    return
                continue
            if job is _END or isinstance(job, tuple):
                offer(q_out, job)
                return
            try:
                t0 = time.perf_counter()
                roi = job.active.roi.scaled(factor)
                prev_roi = ingest.crop_roi(job.prev_kf, roi, i=job.i)
                next_roi = ingest.crop_roi(job.next_kf, roi, i=job.i + 1)
                pre_s = time.perf_counter() - t0
                t1 = time.perf_counter()
                if hooks.descriptor_delay_s and hooks.applies_to(job.i):
                    time.sleep(hooks.descriptor_delay_s)
                field = flow_mod.estimate_flow(prev_roi, next_roi, config.estimator)
                mim = flowviz.render_mim(flowviz.to_polar(field), i=field.i)
                patches = patching.split(mim, job.active.grid)
                desc_s = time.perf_counter() - t1
                # the deadline governs this segment's own processing time;
                # waiting behind another segment in a queue does not count
                if pre_s + desc_s > deadline:
                    if not offer(q_out, ("dropped", job, pre_s, desc_s, None, None)):
                        return
                    continue
                if not offer(q_out, ("ok", job, pre_s, desc_s, prev_roi, patches)):
                    return
            except Exception as exc:  # noqa: BLE001 - segment error, stream continues
                log.error("descriptor failed on segment %d: %s", job.i, exc)
                if not offer(q_out, ("error", job, 0.0, 0.0, None, str(exc))):
                    return

    threading.Thread(target=producer, name="pipeline-producer", daemon=True).start()
    threading.Thread(target=descriptor, name="pipeline-descriptor", daemon=True).start()

    try:
        while True:
            item = q_out.get()
            if item is _END:
                return
            if isinstance(item, tuple) and item and item[0] == "fatal":
                raise PushSentinelError(item[1])
            kind, job, pre_s, desc_s, prev_roi, payload = item
            if kind == "error":
                timings = TimingReport(preprocess_s=pre_s, descriptor_s=desc_s,
                                       detect_annotate_s=0.0, deadline_met=False)
                yield SegmentResult(i=job.i, t=job.prev_kf.t, mask=None,
                                    timings=timings, status=SegmentStatus.ERROR,
                                    error=payload,
                                    latency_s=time.perf_counter() - job.ready_at)
                continue
            if kind == "dropped":
                timings = TimingReport(preprocess_s=pre_s, descriptor_s=desc_s,
                                       detect_annotate_s=0.0, deadline_met=False)
                yield SegmentResult(i=job.i, t=job.prev_kf.t, mask=None,
                                    timings=timings,
                                    status=SegmentStatus.DROPPED_DEADLINE,
                                    latency_s=time.perf_counter() - job.ready_at)
                continue

            patches = payload
            try:
                t2 = time.perf_counter()
                if hooks.detect_delay_s and hooks.applies_to(job.i):
                    time.sleep(hooks.detect_delay_s)
                spec = replace(config.classifier, threshold=job.active.threshold)
                verdicts = classify_batch(patches, spec)
                roi_scaled = job.active.roi.scaled(factor)
                dims = (roi_scaled.width, roi_scaled.height)
                mask = build_mask(verdicts, job.active.grid, dims)
                record = None
                if archiver is not None:
                    image = prepare_archive_image(prev_roi.pixels, mask,
                                                  config.blur_radius)
                    record = ArchiveRecord(stream_id=config.stream_id,
                                           i=job.i, t=job.prev_kf.t,
                                           image=image, mask=mask)
                det_s = time.perf_counter() - t2
            except Exception as exc:  # noqa: BLE001
                log.error("detection failed on segment %d: %s", job.i, exc)
                timings = TimingReport(preprocess_s=pre_s, descriptor_s=desc_s,
                                       detect_annotate_s=0.0, deadline_met=False)
                yield SegmentResult(i=job.i, t=job.prev_kf.t, mask=None,
                                    timings=timings, status=SegmentStatus.ERROR,
                                    error=str(exc),
                                    latency_s=time.perf_counter() - job.ready_at)
                continue

            met = pre_s + desc_s + det_s <= deadline
            if met and archiver is not None and record is not None:
                archiver.submit(record)
            timings = TimingReport(preprocess_s=pre_s, descriptor_s=desc_s,
                                   detect_annotate_s=det_s, deadline_met=met)
            status = SegmentStatus.OK if met else SegmentStatus.DROPPED_DEADLINE
            result = SegmentResult(i=job.i, t=job.prev_kf.t,
                                   mask=mask if met else None,
                                   timings=timings, status=status,
                                   latency_s=time.perf_counter() - job.ready_at)
            if hooks.on_segment is not None:
                hooks.on_segment(result)
            yield result
    finally:
        stop.set()
        if archiver is not None:
            archiver.close()


# --- wire protocol ----------------------------------------------------------


def _config_event(stream_id: str, active: _ActiveConfig, interval_s: float) -> dict:
    return {
        "type": "config",
        "stream_id": stream_id,
        "roi": {"top_left": list(active.roi.top_left),
                "bottom_right": list(active.roi.bottom_right)},
        "grid": {"n": active.grid.n, "m": active.grid.m},
        "threshold": active.threshold,
        "interval_s": interval_s,
    }


def _mask_event(result: SegmentResult) -> dict:
    timings = result.timings
    event = {
        "type": "mask",
        "i": result.i,
        "t": result.t,
        "labels": list(result.mask.labels) if result.mask else [],
        "rects": [list(r) for r in result.mask.rects] if result.mask else [],
        "timings": {
            "descriptor_s": timings.descriptor_s,
            "detect_s": timings.detect_annotate_s,
            "total_s": timings.total_s,
        },
        "status": result.status.value,
    }
    return event


class _ClientState:
    """Per-connection event buffers: bounded for masks, unbounded for control."""

    def __init__(self, events_maxlen: int):
        self.control: deque[dict] = deque()
        self.events: deque[dict] = deque(maxlen=events_maxlen)
        self.cond = threading.Condition()
        self.subscribed = False
        self.closed = False

    def push_event(self, event: dict):
        with self.cond:
            if len(self.events) == self.events.maxlen:
                log.debug("slow client: dropping oldest mask event")
            self.events.append(event)
            self.cond.notify()

    def push_control(self, event: dict):
        with self.cond:
            self.control.append(event)
            self.cond.notify()

    def next_event(self, timeout: float = 0.5) -> dict | None:
        with self.cond:
            if not self.control and not self.events:
                self.cond.wait(timeout)
            if self.control:
                return self.control.popleft()
            if self.events:
                return self.events.popleft()
            return None


class PushingService:
    """Owns one stream's pipeline and fans events out to TCP clients."""

    def __init__(self, config: PipelineConfig, *, pace: bool | None = None,
                 hooks: PipelineHooks | None = None,
                 client_buffer: int = 64):
        self.config = config
        self._pace = pace
        self._hooks = hooks
        self._box = ConfigBox(config)
        self._clients: list[_ClientState] = []
        self._clients_lock = threading.Lock()
        self._client_buffer = client_buffer
        self._server: socketserver.ThreadingTCPServer | None = None
        self._pipeline_thread: threading.Thread | None = None
        self._done = threading.Event()
        self.results: deque[SegmentResult] = deque(maxlen=256)
        self.segments_total = 0
        self.segments_ok = 0

    # -- pipeline side -------------------------------------------------------

    def start(self, max_segments: int | None = None):
        """Start the pipeline thread; returns immediately."""
        self._pipeline_thread = threading.Thread(
            target=self._run, args=(max_segments,), name="pipeline", daemon=True)
        self._pipeline_thread.start()

    def _run(self, max_segments):
        reason = "stream_ended"
        try:
            for result in run_pipeline(self.config, pace=self._pace,
                                       hooks=self._hooks, config_box=self._box,
                                       max_segments=max_segments):
                self.results.append(result)
                self.segments_total += 1
                if result.status is SegmentStatus.OK:
                    self.segments_ok += 1
                self._broadcast(_mask_event(result), control=False)
                if result.mask and result.mask.pushing_count > 0:
                    self._broadcast({"type": "alert", "i": result.i,
                                     "pushing_count": result.mask.pushing_count},
                                    control=False)
        except PushSentinelError as exc:
            reason = f"source_lost: {exc}"
        finally:
            self._broadcast({"type": "end", "reason": reason}, control=True)
            self._done.set()

    def wait(self, timeout: float | None = None) -> bool:
        self._done.wait(timeout)
        return self._done.is_set()

    def _broadcast(self, event: dict, *, control: bool):
        with self._clients_lock:
            clients = [c for c in self._clients if c.subscribed and not c.closed]
        for client in clients:
            (client.push_control if control else client.push_event)(event)

    # -- operator side -------------------------------------------------------

    def update_config(self, partial: dict) -> dict:
        """Validate and stage a config update; returns the acknowledgment."""
        try:
            roi = grid = threshold = None
            errors: dict[str, str] = {}
            if "roi" in partial:
                try:
                    r = partial["roi"]
                    roi = RoiSpec(top_left=tuple(r["top_left"]),
                                  bottom_right=tuple(r["bottom_right"]))
                except (KeyError, TypeError, ValueError) as exc:
                    errors["roi"] = f"malformed roi: {exc}"
            if "grid" in partial:
                try:
                    g = partial["grid"]
                    grid = GridSpec(n=int(g["n"]), m=int(g["m"]))
                except (KeyError, TypeError, ValueError) as exc:
                    errors["grid"] = f"malformed grid: {exc}"
            if "threshold" in partial:
                threshold = float(partial["threshold"])
            if errors:
                raise InvalidConfig(errors)
            active, effective_i = self._box.update(roi=roi, grid=grid,
                                                   threshold=threshold)
        except InvalidConfig as exc:
            return {"type": "config_ack", "ok": False, "errors": exc.field_errors}
        self._broadcast(_config_event(self.config.stream_id, active,
                                      self.config.interval_s), control=True)
        return {"type": "config_ack", "ok": True, "effective_i": effective_i}

    # -- network side --------------------------------------------------------

    def serve_clients(self, listen_addr: tuple[str, int]) -> tuple[str, int]:
        """Start the TCP event server; returns the bound address."""
        service = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                state = _ClientState(service._client_buffer)
                with service._clients_lock:
                    service._clients.append(state)
                writer = threading.Thread(target=self._write_loop, args=(state,),
                                          daemon=True)
                writer.start()
                try:
                    for raw in self.rfile:
                        try:
                            msg = json.loads(raw.decode())
                        except json.JSONDecodeError:
                            state.push_control({"type": "error",
                                                "reason": "malformed json"})
                            continue
                        self._dispatch(msg, state)
                finally:
                    state.closed = True
                    with state.cond:
                        state.cond.notify()
                    with service._clients_lock:
                        if state in service._clients:
                            service._clients.remove(state)

            def _dispatch(self, msg: dict, state: _ClientState):
                mtype = msg.get("type")
                if mtype == "subscribe":
                    state.subscribed = True
                    state.push_control(_config_event(
                        service.config.stream_id, service._box.snapshot(),
                        service.config.interval_s))
                elif mtype == "update_config":
                    state.push_control(service.update_config(msg))
                else:
                    state.push_control({"type": "error",
                                        "reason": f"unknown message type {mtype!r}"})

            def _write_loop(self, state: _ClientState):
                try:
                    while not state.closed:
                        event = state.next_event()
                        if event is None:
                            continue
                        line = (json.dumps(event) + "\n").encode()
                        self.wfile.write(line)
                        self.wfile.flush()
                except (OSError, ValueError):  # peer gone / handler torn down
                    state.closed = True

        self._server = socketserver.ThreadingTCPServer(listen_addr, Handler,
                                                       bind_and_activate=True)
        self._server.daemon_threads = True
        threading.Thread(target=self._server.serve_forever, name="event-server",
                         daemon=True).start()
        return self._server.server_address

    def close(self):
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()

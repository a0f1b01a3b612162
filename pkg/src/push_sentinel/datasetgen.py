"""Regenerate the labeled motion-map patch dataset from archive videos.

The motion pipeline runs four times per video with staggered start offsets
(default 0.5 s apart) to diversify samples. Patches are labeled against
per-pedestrian trajectories and behavior ground truth: a pedestrian's
footprint is modeled as a disk of ped_radius_px around the trajectory
point at the first frame of the keyframe pair.

Labeling rules, evaluated per patch rectangle:
  pushing      at least one pushing pedestrian's center inside the rect
  discarded    no pushing center inside, but a pushing pedestrian's disk
               partially overlaps the rect (only a portion visible)
  non_pushing  no pushing pedestrian's disk touches the rect
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import cv2
import numpy as np

from push_sentinel import flow, flowviz, ingest, patching
from push_sentinel.detector import Behavior
from push_sentinel.errors import EmptyClass, IoFailure, MissingGroundTruth
from push_sentinel.flow import FlowEstimatorSpec
from push_sentinel.ingest import FrameSource, RoiSpec
from push_sentinel.patching import GridSpec, MimPatch, Rect

__all__ = [
    "PatchLabel",
    "TrajectoryRecord",
    "GroundTruthRecord",
    "GeneratedPatch",
    "LabeledPatch",
    "read_trajectories",
    "read_ground_truth",
    "to_roi_coordinates",
    "generate_passes",
    "label_patch",
    "split_dataset",
    "export_dataset",
    "generate_labeled_dataset",
]

DEFAULT_OFFSETS = (0.0, 0.5, 1.0, 1.5)


class PatchLabel(str, Enum):
    PUSHING = "pushing"
    NON_PUSHING = "non_pushing"
    DISCARDED = "discarded"


@dataclass(frozen=True)
class TrajectoryRecord:
    pedestrian_id: int
    frame_index: int
    x: float
    y: float
    z: float | None = None


@dataclass(frozen=True)
class GroundTruthRecord:
    pedestrian_id: int
    frame_index: int
    behavior: Behavior


@dataclass(frozen=True)
class GeneratedPatch:
    """A motion-map patch plus the provenance needed to label it."""

    video: str
    pass_offset_s: float
    patch: MimPatch
    frame_span: tuple[int, int]  # frame indices of the keyframe pair


@dataclass(frozen=True)
class LabeledPatch:
    pixels: np.ndarray
    label: PatchLabel
    provenance: tuple[str, float, int, int]  # (video, pass_offset_s, i, k)


def read_trajectories(path: str | Path) -> list[TrajectoryRecord]:
    """Parse whitespace-separated 'id frame x y [z]' lines; '#' comments skipped."""
    records = []
    seen = set()
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (4, 5):
            raise ValueError(f"{path}:{lineno}: expected 'id frame x y [z]', got {line!r}")
        ped, frame = int(parts[0]), int(parts[1])
        if (ped, frame) in seen:
            raise ValueError(f"{path}:{lineno}: duplicate (id, frame) = ({ped}, {frame})")
        seen.add((ped, frame))
        records.append(TrajectoryRecord(
            pedestrian_id=ped, frame_index=frame,
            x=float(parts[2]), y=float(parts[3]),
            z=float(parts[4]) if len(parts) == 5 else None,
        ))
    return records


def read_ground_truth(path: str | Path) -> dict[tuple[int, int], Behavior]:
    """Parse 'id,frame,label' CSV into a (pedestrian, frame) -> behavior map."""
    table: dict[tuple[int, int], Behavior] = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if lineno == 1 and not row[0].strip().lstrip("-").isdigit():
                continue  # header row
            ped, frame, label = int(row[0]), int(row[1]), row[2].strip()
            if (ped, frame) in table:
                raise ValueError(f"{path}:{lineno}: duplicate (id, frame)")
            table[(ped, frame)] = Behavior(label)
    return table


def to_roi_coordinates(records: Iterable[TrajectoryRecord], roi_native: RoiSpec,
                       downscale_factor: Fraction) -> list[TrajectoryRecord]:
    """Map native-resolution trajectory points into ROI pixel coordinates."""
    scaled = roi_native.scaled(downscale_factor)
    f = float(downscale_factor)
    ox, oy = scaled.top_left
    return [
        TrajectoryRecord(pedestrian_id=r.pedestrian_id, frame_index=r.frame_index,
                         x=r.x * f - ox, y=r.y * f - oy, z=r.z)
        for r in records
    ]


def generate_passes(source: FrameSource, roi_native: RoiSpec, grid: GridSpec,
                    offsets: tuple[float, ...] = DEFAULT_OFFSETS,
                    interval_s: float = 2.0,
                    estimator: FlowEstimatorSpec | None = None) -> Iterator[GeneratedPatch]:
    """Run the motion pipeline once per start offset, yielding all patches."""
    if any(b <= a for a, b in zip(offsets, offsets[1:])):
        raise ValueError(f"offsets must be strictly increasing, got {offsets}")
    if any(o >= interval_s for o in offsets):
        raise ValueError(f"every offset must be below the {interval_s}s sampling interval")
    estimator = estimator or FlowEstimatorSpec()
    roi = roi_native.scaled(source.downscale_factor)

    for offset in offsets:
        with ingest.open_source(source, pace=False) as stream:
            prev_roi = None
            for ordinal, kf in enumerate(
                    ingest.sample_keyframes(stream, interval_s, offset_s=offset), start=1):
                roi_kf = ingest.crop_roi(kf, roi, i=ordinal)
                if prev_roi is not None:
                    field = flow.estimate_flow(prev_roi, roi_kf, estimator)
                    mim = flowviz.render_mim(flowviz.to_polar(field), i=field.i)
                    span = (prev_kf.frame_index, kf.frame_index)
                    for patch in patching.split(mim, grid):
                        yield GeneratedPatch(video=source.source_id,
                                             pass_offset_s=offset,
                                             patch=patch, frame_span=span)
                prev_roi, prev_kf = roi_kf, kf


def _dist_to_rect_sq(x: float, y: float, rect: Rect) -> float:
    x0, y0, x1, y1 = rect
    dx = max(x0 - x, x - x1, 0.0)
    dy = max(y0 - y, y - y1, 0.0)
    return dx * dx + dy * dy


def label_patch(rect: Rect, frame_span: tuple[int, int],
                trajectories: Iterable[TrajectoryRecord],
                ground_truth: Mapping[tuple[int, int], Behavior],
                ped_radius_px: float) -> PatchLabel:
    """Label one patch rect (ROI coordinates) from per-pedestrian data.

    Behavior is evaluated at the first frame of the keyframe pair, since
    the motion map describes motion starting there. Center containment is
    half-open ([x0, x1) x [y0, y1)) so a center on a shared patch edge
    belongs to exactly one patch; disk overlap uses strict distance < r.
    """
    frame = frame_span[0]
    x0, y0, x1, y1 = rect
    any_partial = False
    for r in trajectories:
        if r.frame_index != frame:
            continue
        behavior = ground_truth.get((r.pedestrian_id, r.frame_index))
        if behavior is None:
            raise MissingGroundTruth(
                f"pedestrian {r.pedestrian_id} has no behavior record at frame {frame}"
            )
        if behavior is not Behavior.PUSHING:
            continue
        if x0 <= r.x < x1 and y0 <= r.y < y1:
            return PatchLabel.PUSHING
        if _dist_to_rect_sq(r.x, r.y, rect) < ped_radius_px * ped_radius_px:
            any_partial = True
    return PatchLabel.DISCARDED if any_partial else PatchLabel.NON_PUSHING


def split_dataset(labeled: list[LabeledPatch],
                  ratios: tuple[float, float, float] = (0.70, 0.15, 0.15),
                  seed: int = 0) -> dict[str, list[LabeledPatch]]:
    """Random split stratified per (video, class), deterministic under seed.

    Within each stratum the validation and test sets get floor(ratio * n)
    samples each and training absorbs the remainder, which reproduces the
    usual 70/15/15 bookkeeping where train picks up the rounding slack.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    if any(p.label is PatchLabel.DISCARDED for p in labeled):
        raise ValueError("discarded patches must be filtered out before splitting")
    for cls in (PatchLabel.PUSHING, PatchLabel.NON_PUSHING):
        if not any(p.label is cls for p in labeled):
            raise EmptyClass(f"no samples of class {cls.value}")

    strata: dict[tuple[str, str], list[LabeledPatch]] = {}
    for p in labeled:
        strata.setdefault((p.provenance[0], p.label.value), []).append(p)

    rng = random.Random(seed)
    sets: dict[str, list[LabeledPatch]] = {"train": [], "val": [], "test": []}
    for key in sorted(strata):
        group = strata[key]
        rng.shuffle(group)
        n = len(group)
        n_val = math.floor(ratios[1] * n)
        n_test = math.floor(ratios[2] * n)
        sets["val"].extend(group[:n_val])
        sets["test"].extend(group[n_val:n_val + n_test])
        sets["train"].extend(group[n_val + n_test:])
    return sets


def export_dataset(sets: Mapping[str, list[LabeledPatch]], out_dir: str | Path) -> Path:
    """Write {out}/{split}/{class}/img_*.png plus a provenance manifest.

    File numbering follows the deterministic split order, so re-exporting
    the same split produces a byte-identical tree.
    """
    out = Path(out_dir)
    manifest_rows = []
    seq = 0
    try:
        for split in ("train", "val", "test"):
            for patch in sets.get(split, []):
                sub = out / split / patch.label.value
                sub.mkdir(parents=True, exist_ok=True)
                name = f"img_{seq:06}.png"
                ok, png = cv2.imencode(".png", patch.pixels[:, :, ::-1])
                if not ok:
                    raise IoFailure(f"PNG encoding failed for {name}")
                (sub / name).write_bytes(png.tobytes())
                video, offset, i, k = patch.provenance
                manifest_rows.append({
                    "filename": f"{split}/{patch.label.value}/{name}",
                    "split": split, "label": patch.label.value,
                    "video": video, "pass_offset_s": offset, "i": i, "k": k,
                })
                seq += 1
        with open(out / "manifest.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(manifest_rows[0]) if manifest_rows
                                    else ["filename", "split", "label", "video",
                                          "pass_offset_s", "i", "k"])
            writer.writeheader()
            writer.writerows(manifest_rows)
    except OSError as exc:
        raise IoFailure(f"cannot write dataset under {out}: {exc}") from exc
    return out


def generate_labeled_dataset(source: FrameSource, trajectories_path: str | Path,
                             ground_truth_path: str | Path, roi_native: RoiSpec,
                             grid: GridSpec,
                             offsets: tuple[float, ...] = DEFAULT_OFFSETS,
                             interval_s: float = 2.0,
                             ped_radius_px: float = 12.0,
                             estimator: FlowEstimatorSpec | None = None,
                             ) -> tuple[list[LabeledPatch], dict[str, int]]:
    """Full generation for one video: patches, labels, and tally by label."""
    trajectories = to_roi_coordinates(read_trajectories(trajectories_path),
                                      roi_native, source.downscale_factor)
    by_frame: dict[int, list[TrajectoryRecord]] = {}
    for r in trajectories:
        by_frame.setdefault(r.frame_index, []).append(r)
    ground_truth = read_ground_truth(ground_truth_path)

    labeled: list[LabeledPatch] = []
    tally = {label.value: 0 for label in PatchLabel}
    for gen in generate_passes(source, roi_native, grid, offsets, interval_s, estimator):
        label = label_patch(gen.patch.rect, gen.frame_span,
                            by_frame.get(gen.frame_span[0], ()), ground_truth,
                            ped_radius_px)
        tally[label.value] += 1
        if label is not PatchLabel.DISCARDED:
            labeled.append(LabeledPatch(
                pixels=gen.patch.pixels, label=label,
                provenance=(gen.video, gen.pass_offset_s, gen.patch.i, gen.patch.k),
            ))
    return labeled, tally

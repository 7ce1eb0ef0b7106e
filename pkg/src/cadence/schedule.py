"""Plan compiler: segments -> per-frame guidance schedule.

A plan is the frozen contract between audio analysis and frame
generation. Each entry fixes one frame: its timestamp, the guidance
embeddings steering it (weights always sum to 1), the segment it came
from and whether it sits inside a boundary transition. Compilation is
pure arithmetic over the segment table, so re-running it on the same
inputs reproduces the file byte for byte.

Frame budget: a segment's normalized intensity picks a frame rate on
[fps_min, fps_max] linearly, and the segment duration converts that
rate into a whole frame count (never below one). Louder passages
therefore get more frames and read as faster motion.

Guidance: in segment-locked mode a segment with a lyric is steered by
that lyric's text embedding for its whole span, otherwise by its own
audio embedding. Alternating mode interleaves audio and text guidance
frame by frame inside lyric segments. At a boundary where the guidance
id changes, entries in the configured scope average the two neighbors
half and half so scenes hand off instead of cutting.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Any

from .embed import EmbeddingStore

SCHEMA_VERSION = "1"
DEFAULT_FPS_MIN = 1.0
DEFAULT_FPS_MAX = 10.0

MODE_SEGMENT_LOCKED = "segment-locked"
MODE_ALTERNATING = "alternating"
MODES = (MODE_SEGMENT_LOCKED, MODE_ALTERNATING)

WEIGHT_SUM_TOL = 1e-9


class CompileError(ValueError):
    """Plan could not be compiled from the given segments and settings."""


def audio_guidance_id(segment_index: int) -> str:
    return f"audio/seg{segment_index:04d}"


def text_guidance_id(segment_index: int) -> str:
    return f"text/seg{segment_index:04d}"


@dataclass(frozen=True)
class Segment:
    """One beat-delimited span of the track and its analysis results.

    Only the time bounds are required; analysis stages fill the rest in
    via `dataclasses.replace`.
    """

    index: int
    start_s: float
    end_s: float
    mean_intensity_db: float | None = None
    normalized_intensity: float | None = None
    frame_count: int | None = None
    guidance_id: str | None = None
    lyric: str | None = None

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"segment index must be >= 0, got {self.index}")
        if not self.end_s > self.start_s:
            raise ValueError(
                f"segment {self.index} has non-positive span "
                f"[{self.start_s}, {self.end_s}]"
            )
        if self.normalized_intensity is not None and not (
            0.0 <= self.normalized_intensity <= 1.0
        ):
            raise ValueError(
                f"segment {self.index} normalized intensity "
                f"{self.normalized_intensity} outside [0, 1]"
            )
        if self.frame_count is not None and self.frame_count < 1:
            raise ValueError(
                f"segment {self.index} frame count must be >= 1, got {self.frame_count}"
            )

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class PlanEntry:
    """One frame of the schedule."""

    frame_index: int
    time_s: float
    guidance: tuple[tuple[str, float], ...]
    segment_index: int
    transition: bool = False


@dataclass(frozen=True)
class Plan:
    """A compiled schedule plus the settings that produced it."""

    audio_source: str
    duration_s: float
    fps_min: float
    fps_max: float
    mode: str
    blend_scope: str
    seed: int
    segments: tuple[Segment, ...]
    entries: tuple[PlanEntry, ...]
    embedding_manifest: str | None = None
    schema_version: str = SCHEMA_VERSION

    @property
    def n_frames(self) -> int:
        return len(self.entries)


def parse_blend_scope(scope: str) -> tuple[str, int | None]:
    """Parse 'full' or 'first:K' into (kind, k)."""
    if scope == "full":
        return "full", None
    if scope.startswith("first:"):
        tail = scope[len("first:"):]
        try:
            k = int(tail)
        except ValueError:
            raise CompileError(f"bad blend scope '{scope}': '{tail}' is not an integer")
        if k < 1:
            raise CompileError(f"bad blend scope '{scope}': K must be >= 1")
        return "first", k
    raise CompileError(f"bad blend scope '{scope}': expected 'full' or 'first:K'")


def normalize_intensities(segments: list[Segment]) -> list[Segment]:
    """Min-max map mean dB onto [0, 1]; a flat track maps everywhere to 0.5."""
    if not segments:
        return []
    for seg in segments:
        if seg.mean_intensity_db is None:
            raise CompileError(f"segment {seg.index} has no mean intensity")
    values = [seg.mean_intensity_db for seg in segments]
    lo, hi = min(values), max(values)
    if hi == lo:
        return [replace(seg, normalized_intensity=0.5) for seg in segments]
    span = hi - lo
    return [
        replace(seg, normalized_intensity=(seg.mean_intensity_db - lo) / span)
        for seg in segments
    ]


def allocate_frames(segment: Segment, fps_min: float, fps_max: float) -> int:
    """Frame count for one segment at its intensity-scaled rate.

    fps interpolates linearly between the bounds; the count rounds
    half-up and is floored at one so every segment is represented.
    """
    if fps_min <= 0:
        raise CompileError(f"fps_min must be positive, got {fps_min}")
    if fps_max < fps_min:
        raise CompileError(f"fps_max {fps_max} below fps_min {fps_min}")
    if segment.normalized_intensity is None:
        raise CompileError(f"segment {segment.index} has no normalized intensity")
    fps = fps_min + segment.normalized_intensity * (fps_max - fps_min)
    return max(1, math.floor(fps * segment.duration_s + 0.5))


def frame_times(segment: Segment) -> list[float]:
    """Uniformly spaced timestamps strictly inside the segment."""
    if segment.frame_count is None:
        raise CompileError(f"segment {segment.index} has no frame count")
    step = segment.duration_s / segment.frame_count
    return [segment.start_s + (j + 0.5) * step for j in range(segment.frame_count)]


def assign_guidance(
    segments: list[Segment],
    lyrics: list[str | None],
    mode: str,
    audio_ids: list[str] | None = None,
    text_ids: list[str | None] | None = None,
) -> list[Segment]:
    """Pick each segment's steering embedding id.

    `lyrics[i]` is the text attached to segment i or None. Id lists
    default to the audio/segNNNN and text/segNNNN conventions. The
    returned segments carry the segment-locked choice; alternating
    interleaving happens per frame in `build_entries`.
    """
    if mode not in MODES:
        raise CompileError(f"unknown guidance mode '{mode}'")
    if len(lyrics) != len(segments):
        raise CompileError(
            f"got {len(lyrics)} lyric slots for {len(segments)} segments"
        )
    if audio_ids is None:
        audio_ids = [audio_guidance_id(seg.index) for seg in segments]
    if text_ids is None:
        text_ids = [
            text_guidance_id(seg.index) if lyrics[i] is not None else None
            for i, seg in enumerate(segments)
        ]
    if len(audio_ids) != len(segments) or len(text_ids) != len(segments):
        raise CompileError("id lists must match the segment count")
    out = []
    for i, seg in enumerate(segments):
        if not audio_ids[i]:
            raise CompileError(f"segment {seg.index} has no audio embedding id")
        if lyrics[i] is not None:
            if not text_ids[i]:
                raise CompileError(
                    f"segment {seg.index} has a lyric but no text embedding id"
                )
            out.append(replace(seg, guidance_id=text_ids[i], lyric=lyrics[i]))
        else:
            out.append(replace(seg, guidance_id=audio_ids[i], lyric=None))
    return out


def build_entries(
    segments: list[Segment],
    mode: str,
    audio_ids: list[str] | None = None,
) -> list[PlanEntry]:
    """Expand segments into per-frame entries.

    Segment-locked: every frame of a segment uses its guidance_id.
    Alternating: lyric segments flip audio/text/audio/... per frame,
    starting on audio so adjacent frames never share a modality even
    across a boundary from a pure-audio segment.
    """
    if mode not in MODES:
        raise CompileError(f"unknown guidance mode '{mode}'")
    if audio_ids is None:
        audio_ids = [audio_guidance_id(seg.index) for seg in segments]
    entries: list[PlanEntry] = []
    frame_index = 0
    for i, seg in enumerate(segments):
        if seg.guidance_id is None:
            raise CompileError(f"segment {seg.index} has no guidance id")
        for j, t in enumerate(frame_times(seg)):
            if mode == MODE_ALTERNATING and seg.lyric is not None:
                guide = audio_ids[i] if j % 2 == 0 else seg.guidance_id
            else:
                guide = seg.guidance_id
            entries.append(
                PlanEntry(
                    frame_index=frame_index,
                    time_s=t,
                    guidance=((guide, 1.0),),
                    segment_index=seg.index,
                )
            )
            frame_index += 1
    return entries


def apply_transition_blend(
    entries: list[PlanEntry],
    segments: list[Segment],
    mode: str,
    blend_scope: str = "full",
) -> list[PlanEntry]:
    """Average guidance across segment boundaries where the id changes.

    Affected entries get ((prev_id, 0.5), (cur_id, 0.5)) and the
    transition flag. Scope 'full' covers the whole segment after the
    boundary, 'first:K' only its first K frames. Alternating mode skips
    blending entirely: its frames already interleave modalities and a
    segment-wide blend would glue neighboring frames back together.
    """
    kind, k = parse_blend_scope(blend_scope)
    if mode == MODE_ALTERNATING:
        return list(entries)
    guidance_by_index = {seg.index: seg.guidance_id for seg in segments}
    ordered = sorted(guidance_by_index)
    blended: dict[int, tuple[str, str]] = {}
    for prev_idx, cur_idx in zip(ordered[:-1], ordered[1:]):
        prev_id, cur_id = guidance_by_index[prev_idx], guidance_by_index[cur_idx]
        if prev_id != cur_id:
            blended[cur_idx] = (prev_id, cur_id)
    out = []
    seen_in_segment: dict[int, int] = {}
    for entry in entries:
        rank = seen_in_segment.get(entry.segment_index, 0)
        seen_in_segment[entry.segment_index] = rank + 1
        pair = blended.get(entry.segment_index)
        if pair is not None and (kind == "full" or rank < k):
            out.append(
                replace(
                    entry,
                    guidance=((pair[0], 0.5), (pair[1], 0.5)),
                    transition=True,
                )
            )
        else:
            out.append(entry)
    return out


def compile_plan(
    segments: list[Segment],
    lyrics: list[str | None],
    *,
    audio_source: str,
    duration_s: float,
    fps_min: float = DEFAULT_FPS_MIN,
    fps_max: float = DEFAULT_FPS_MAX,
    mode: str = MODE_SEGMENT_LOCKED,
    blend_scope: str = "full",
    seed: int = 0,
    embedding_manifest: str | None = None,
) -> Plan:
    """Run the whole compilation: normalize, allocate, assign, expand, blend."""
    if not segments:
        raise CompileError("cannot compile a plan with no segments")
    parse_blend_scope(blend_scope)  # validate up front
    normalized = normalize_intensities(segments)
    allocated = [
        replace(seg, frame_count=allocate_frames(seg, fps_min, fps_max))
        for seg in normalized
    ]
    guided = assign_guidance(allocated, lyrics, mode)
    entries = apply_transition_blend(
        build_entries(guided, mode), guided, mode, blend_scope
    )
    return Plan(
        audio_source=audio_source,
        duration_s=duration_s,
        fps_min=fps_min,
        fps_max=fps_max,
        mode=mode,
        blend_scope=blend_scope,
        seed=seed,
        segments=tuple(guided),
        entries=tuple(entries),
        embedding_manifest=embedding_manifest,
    )


def _segment_to_dict(seg: Segment) -> dict[str, Any]:
    return {
        "index": seg.index,
        "start_s": seg.start_s,
        "end_s": seg.end_s,
        "mean_intensity_db": seg.mean_intensity_db,
        "normalized_intensity": seg.normalized_intensity,
        "frame_count": seg.frame_count,
        "guidance_id": seg.guidance_id,
        "lyric": seg.lyric,
    }


def _segment_from_dict(d: dict[str, Any]) -> Segment:
    return Segment(
        index=int(d["index"]),
        start_s=float(d["start_s"]),
        end_s=float(d["end_s"]),
        mean_intensity_db=d.get("mean_intensity_db"),
        normalized_intensity=d.get("normalized_intensity"),
        frame_count=d.get("frame_count"),
        guidance_id=d.get("guidance_id"),
        lyric=d.get("lyric"),
    )


def plan_to_dict(plan: Plan) -> dict[str, Any]:
    return {
        "meta": {
            "schema_version": plan.schema_version,
            "audio_source": plan.audio_source,
            "duration_s": plan.duration_s,
            "fps_min": plan.fps_min,
            "fps_max": plan.fps_max,
            "mode": plan.mode,
            "blend_scope": plan.blend_scope,
            "seed": plan.seed,
            "embedding_manifest": plan.embedding_manifest,
            "segments": [_segment_to_dict(s) for s in plan.segments],
        },
        "entries": [
            {
                "frame_index": e.frame_index,
                "time_s": e.time_s,
                "guidance": [[gid, w] for gid, w in e.guidance],
                "segment_index": e.segment_index,
                "transition": e.transition,
            }
            for e in plan.entries
        ],
    }


def plan_to_json(plan: Plan) -> str:
    """Serialize deterministically: sorted keys, fixed separators."""
    return json.dumps(plan_to_dict(plan), sort_keys=True, indent=1) + "\n"


def plan_from_dict(doc: dict[str, Any]) -> Plan:
    try:
        meta = doc["meta"]
        entries = tuple(
            PlanEntry(
                frame_index=int(e["frame_index"]),
                time_s=float(e["time_s"]),
                guidance=tuple((str(g[0]), float(g[1])) for g in e["guidance"]),
                segment_index=int(e["segment_index"]),
                transition=bool(e.get("transition", False)),
            )
            for e in doc["entries"]
        )
        return Plan(
            audio_source=str(meta["audio_source"]),
            duration_s=float(meta["duration_s"]),
            fps_min=float(meta["fps_min"]),
            fps_max=float(meta["fps_max"]),
            mode=str(meta["mode"]),
            blend_scope=str(meta.get("blend_scope", "full")),
            seed=int(meta.get("seed", 0)),
            segments=tuple(_segment_from_dict(s) for s in meta["segments"]),
            entries=entries,
            embedding_manifest=meta.get("embedding_manifest"),
            schema_version=str(meta.get("schema_version", SCHEMA_VERSION)),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise CompileError(f"malformed plan document: {exc}") from exc


def load_plan(path) -> Plan:
    with open(path, "r", encoding="utf-8") as f:
        return plan_from_dict(json.load(f))


def validate_plan(plan: Plan, store: EmbeddingStore | None = None) -> list[str]:
    """Check schedule invariants; returns human-readable violations."""
    violations: list[str] = []
    if plan.schema_version != SCHEMA_VERSION:
        violations.append(
            f"unknown schema version '{plan.schema_version}' (expected '{SCHEMA_VERSION}')"
        )
    if plan.mode not in MODES:
        violations.append(f"unknown mode '{plan.mode}'")
    expected = sum(seg.frame_count or 0 for seg in plan.segments)
    if len(plan.entries) != expected:
        violations.append(
            f"entry count {len(plan.entries)} != allocated frame total {expected}"
        )
    prev_time = -math.inf
    for pos, entry in enumerate(plan.entries):
        tag = f"entry {pos}"
        if entry.frame_index != pos:
            violations.append(f"{tag}: frame_index {entry.frame_index} != position {pos}")
        if not (0.0 <= entry.time_s <= plan.duration_s):
            violations.append(
                f"{tag}: time {entry.time_s:.6f} outside [0, {plan.duration_s:.6f}]"
            )
        if entry.time_s < prev_time:
            violations.append(f"{tag}: time {entry.time_s:.6f} decreases")
        prev_time = entry.time_s
        if not entry.guidance:
            violations.append(f"{tag}: no guidance")
            continue
        total = 0.0
        for gid, weight in entry.guidance:
            total += weight
            if weight <= 0.0:
                violations.append(f"{tag}: non-positive weight {weight} for '{gid}'")
            if store is not None and gid not in store:
                violations.append(f"{tag}: unknown embedding id '{gid}'")
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            violations.append(f"{tag}: guidance weights sum to {total!r}, not 1")
    seg_indices = {seg.index for seg in plan.segments}
    for pos, entry in enumerate(plan.entries):
        if entry.segment_index not in seg_indices:
            violations.append(f"entry {pos}: unknown segment index {entry.segment_index}")
    for seg in plan.segments:
        if seg.normalized_intensity is None or seg.frame_count is None:
            violations.append(f"segment {seg.index}: missing intensity or frame count")
    ordered = sorted(plan.segments, key=lambda s: s.index)
    for prev, cur in zip(ordered[:-1], ordered[1:]):
        if abs(prev.end_s - cur.start_s) > 1e-9:
            violations.append(
                f"segment {cur.index} starts at {cur.start_s:.6f}, "
                f"previous ends at {prev.end_s:.6f}"
            )
    return violations

"""Plan compilation: intensity mapping, frame allocation, guidance,
transition blending, validation and deterministic serialization."""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from cadence import (
    CompileError,
    EmbeddingStore,
    PromptEmbedding,
    Segment,
    allocate_frames,
    apply_transition_blend,
    assign_guidance,
    audio_guidance_id,
    build_entries,
    compile_plan,
    frame_times,
    normalize_intensities,
    normalize_vector,
    plan_from_dict,
    plan_to_dict,
    plan_to_json,
    text_guidance_id,
    validate_plan,
)
from cadence.schedule import parse_blend_scope


def _segments(dbs: list[float], span: float = 1.0) -> list[Segment]:
    return [
        Segment(index=i, start_s=i * span, end_s=(i + 1) * span, mean_intensity_db=db)
        for i, db in enumerate(dbs)
    ]


def _store_for(segments, dim=8, seed=0):
    rng = np.random.default_rng(seed)
    embs = {}
    for i, seg in enumerate(segments):
        for gid in (audio_guidance_id(seg.index), text_guidance_id(seg.index)):
            embs[gid] = PromptEmbedding(
                id=gid,
                modality="audio" if gid.startswith("audio") else "text",
                vector=normalize_vector(rng.standard_normal(dim)),
            )
    return EmbeddingStore(dim=dim, embeddings=embs)


# --- intensity normalization -------------------------------------------------

def test_extremes_map_to_exactly_zero_and_one():
    segs = normalize_intensities(_segments([-30.0, -12.0, -3.0]))
    assert segs[0].normalized_intensity == 0.0
    assert segs[2].normalized_intensity == 1.0
    assert segs[1].normalized_intensity == pytest.approx((30 - 12) / 27.0)


def test_normalization_preserves_order_over_random_instances():
    rng = np.random.default_rng(77)
    for _ in range(1000):
        dbs = rng.uniform(-80.0, 0.0, rng.integers(2, 12)).tolist()
        segs = normalize_intensities(_segments(dbs))
        out = [s.normalized_intensity for s in segs]
        assert min(out) == 0.0 and max(out) == 1.0
        order_in = np.argsort(dbs, kind="stable")
        order_out = np.argsort(out, kind="stable")
        assert list(order_in) == list(order_out)
        assert all(0.0 <= v <= 1.0 for v in out)


def test_flat_track_normalizes_to_half():
    segs = normalize_intensities(_segments([-20.0, -20.0, -20.0]))
    assert [s.normalized_intensity for s in segs] == [0.5, 0.5, 0.5]


def test_missing_mean_db_is_a_compile_error():
    with pytest.raises(CompileError, match="segment 0"):
        normalize_intensities([Segment(index=0, start_s=0, end_s=1)])


# --- frame allocation --------------------------------------------------------

def test_frame_count_rounds_half_up_and_floors_at_one():
    seg = Segment(index=0, start_s=0.0, end_s=0.5, normalized_intensity=0.0)
    # fps 1 * 0.5 s = 0.5 frames -> rounds half-up to 1
    assert allocate_frames(seg, 1.0, 10.0) == 1
    seg = Segment(index=0, start_s=0.0, end_s=0.25, normalized_intensity=0.0)
    assert allocate_frames(seg, 1.0, 10.0) == 1  # floor at one frame
    seg = Segment(index=0, start_s=0.0, end_s=1.0, normalized_intensity=1.0)
    assert allocate_frames(seg, 1.0, 10.0) == 10
    seg = Segment(index=0, start_s=0.0, end_s=1.0, normalized_intensity=0.5)
    assert allocate_frames(seg, 1.0, 10.0) == 6  # 5.5 rounds up


def test_frame_count_is_monotone_in_intensity():
    seg = Segment(index=0, start_s=0.0, end_s=2.3)
    counts = [
        allocate_frames(replace(seg, normalized_intensity=v), 1.0, 10.0)
        for v in np.linspace(0.0, 1.0, 101)
    ]
    assert all(a <= b for a, b in zip(counts, counts[1:]))


def test_total_frames_monotone_in_any_single_segment_intensity():
    rng = np.random.default_rng(13)
    base = [
        Segment(
            index=i,
            start_s=float(i),
            end_s=float(i) + 1.0,
            normalized_intensity=float(rng.uniform()),
        )
        for i in range(6)
    ]
    for target in range(6):
        totals = []
        for v in np.linspace(0.0, 1.0, 21):
            segs = [
                replace(s, normalized_intensity=v) if i == target else s
                for i, s in enumerate(base)
            ]
            totals.append(sum(allocate_frames(s, 1.0, 10.0) for s in segs))
        assert all(a <= b for a, b in zip(totals, totals[1:]))


def test_bad_fps_bounds_are_compile_errors():
    seg = Segment(index=0, start_s=0.0, end_s=1.0, normalized_intensity=0.5)
    with pytest.raises(CompileError):
        allocate_frames(seg, 0.0, 10.0)
    with pytest.raises(CompileError):
        allocate_frames(seg, 5.0, 2.0)


def test_frame_times_are_uniform_and_inside_the_segment():
    seg = Segment(index=0, start_s=2.0, end_s=4.0, frame_count=5)
    times = frame_times(seg)
    assert len(times) == 5
    assert all(2.0 < t < 4.0 for t in times)
    steps = np.diff(times)
    np.testing.assert_allclose(steps, steps[0], atol=1e-12)
    assert times[0] - 2.0 == pytest.approx(4.0 - times[-1], abs=1e-12)


# --- guidance assignment -----------------------------------------------------

def test_exactly_lyric_segments_get_text_guidance():
    segs = [
        replace(s, normalized_intensity=0.5, frame_count=2)
        for s in _segments([0.0] * 10)
    ]
    lyrics = [None] * 10
    for i in (2, 5, 7):
        lyrics[i] = f"line {i}"
    out = assign_guidance(segs, lyrics, "segment-locked")
    text_ids = [s.guidance_id for s in out if s.guidance_id.startswith("text/")]
    assert len(text_ids) == 3
    assert out[2].guidance_id == text_guidance_id(2)
    assert out[0].guidance_id == audio_guidance_id(0)
    assert out[5].lyric == "line 5"


def test_lyric_slot_count_must_match():
    segs = _segments([0.0, 1.0])
    with pytest.raises(CompileError):
        assign_guidance(segs, [None], "segment-locked")


def test_unknown_mode_is_rejected():
    with pytest.raises(CompileError):
        assign_guidance(_segments([0.0]), [None], "shuffled")


def test_empty_audio_id_is_a_compile_error():
    segs = _segments([0.0])
    with pytest.raises(CompileError, match="segment 0"):
        assign_guidance(segs, [None], "segment-locked", audio_ids=[""])


# --- entry building ----------------------------------------------------------

def _guided(dbs, lyrics, mode="segment-locked", fps=(1.0, 10.0)):
    segs = normalize_intensities(_segments(dbs))
    segs = [replace(s, frame_count=allocate_frames(s, *fps)) for s in segs]
    return assign_guidance(segs, lyrics, mode)


def test_segment_locked_entries_use_one_id_per_segment():
    segs = _guided([-30.0, -10.0, -20.0], [None, "words", None])
    entries = build_entries(segs, "segment-locked")
    assert [e.frame_index for e in entries] == list(range(len(entries)))
    for e in entries:
        assert len(e.guidance) == 1
        gid, w = e.guidance[0]
        assert w == 1.0
        assert gid == segs[e.segment_index].guidance_id
    times = [e.time_s for e in entries]
    assert times == sorted(times)


def test_alternating_mode_interleaves_modalities_within_lyric_segments():
    segs = _guided([-30.0, -5.0, -20.0], [None, "chorus", None], mode="alternating")
    entries = build_entries(segs, "alternating")
    lyric_entries = [e for e in entries if e.segment_index == 1]
    assert len(lyric_entries) >= 4
    mods = ["audio" if e.guidance[0][0].startswith("audio") else "text" for e in lyric_entries]
    for a, b in zip(mods, mods[1:]):
        assert a != b
    assert mods[0] == "audio"
    # non-lyric segments stay on audio guidance
    for e in entries:
        if e.segment_index != 1:
            assert e.guidance[0][0].startswith("audio/")


# --- transition blending -----------------------------------------------------

def test_full_scope_blends_every_frame_after_a_change():
    segs = _guided([-30.0, -10.0], [None, "words"])
    entries = apply_transition_blend(build_entries(segs, "segment-locked"), segs, "segment-locked", "full")
    second = [e for e in entries if e.segment_index == 1]
    assert all(e.transition for e in second)
    for e in second:
        assert e.guidance == (
            (audio_guidance_id(0), 0.5),
            (text_guidance_id(1), 0.5),
        )
        assert sum(w for _, w in e.guidance) == 1.0
    first = [e for e in entries if e.segment_index == 0]
    assert not any(e.transition for e in first)


def test_first_k_scope_blends_only_the_first_k_frames():
    segs = _guided([-30.0, 0.0], [None, "words"])
    assert segs[1].frame_count >= 4
    entries = apply_transition_blend(build_entries(segs, "segment-locked"), segs, "segment-locked", "first:2")
    second = [e for e in entries if e.segment_index == 1]
    assert [e.transition for e in second] == [True, True] + [False] * (len(second) - 2)
    assert second[2].guidance == ((text_guidance_id(1), 1.0),)


def test_no_blend_when_guidance_id_does_not_change():
    segs = _guided([-30.0, -10.0], [None, None])
    segs = [replace(s, guidance_id="audio/shared") for s in segs]
    entries = apply_transition_blend(build_entries(segs, "segment-locked", audio_ids=["audio/shared"] * 2), segs, "segment-locked", "full")
    assert not any(e.transition for e in entries)


def test_alternating_mode_skips_blending():
    segs = _guided([-30.0, -10.0], [None, "words"], mode="alternating")
    entries = apply_transition_blend(build_entries(segs, "alternating"), segs, "alternating", "full")
    assert not any(e.transition for e in entries)
    mods = [e.guidance[0][0].split("/")[0] for e in entries if e.segment_index == 1]
    for a, b in zip(mods, mods[1:]):
        assert a != b


def test_blend_scope_parsing():
    assert parse_blend_scope("full") == ("full", None)
    assert parse_blend_scope("first:3") == ("first", 3)
    for bad in ("first:0", "first:x", "half", ""):
        with pytest.raises(CompileError):
            parse_blend_scope(bad)


# --- whole-plan compilation and serialization --------------------------------

def _compile(dbs, lyrics, **kw):
    return compile_plan(
        _segments(dbs),
        lyrics,
        audio_source="track.wav",
        duration_s=float(len(dbs)),
        seed=42,
        **kw,
    )


def test_compiled_plan_validates_cleanly():
    plan = _compile([-30.0, -10.0, -20.0, -5.0], [None, "one", None, "two"])
    store = _store_for(plan.segments)
    assert validate_plan(plan, store) == []
    assert plan.n_frames == sum(s.frame_count for s in plan.segments)


def test_plan_json_round_trips_byte_identically():
    plan = _compile([-30.0, -10.0, -20.0], [None, "words", None])
    text = plan_to_json(plan)
    again = plan_to_json(plan_from_dict(plan_to_dict(plan)))
    assert text == again
    import json

    reparsed = plan_from_dict(json.loads(text))
    assert plan_to_json(reparsed) == text


def test_plan_meta_records_settings():
    plan = _compile([-30.0, -10.0], [None, None], mode="alternating", blend_scope="first:2")
    doc = plan_to_dict(plan)
    meta = doc["meta"]
    assert meta["schema_version"] == "1"
    assert meta["mode"] == "alternating"
    assert meta["blend_scope"] == "first:2"
    assert meta["seed"] == 42
    assert len(meta["segments"]) == 2


def test_empty_segment_list_cannot_compile():
    with pytest.raises(CompileError):
        compile_plan([], [], audio_source="x", duration_s=1.0)


# --- validation --------------------------------------------------------------

def test_validate_flags_unknown_embedding_id():
    plan = _compile([-30.0, -10.0], [None, None])
    store = EmbeddingStore(dim=4, embeddings={})
    violations = validate_plan(plan, store)
    assert any("unknown embedding id" in v for v in violations)


def test_validate_flags_weight_sum_violation():
    plan = _compile([-30.0, -10.0], [None, None])
    doc = plan_to_dict(plan)
    doc["entries"][0]["guidance"] = [[audio_guidance_id(0), 0.7]]
    violations = validate_plan(plan_from_dict(doc))
    assert any("sum to" in v for v in violations)


def test_validate_flags_frame_index_gap():
    plan = _compile([-30.0, -10.0], [None, None])
    doc = plan_to_dict(plan)
    doc["entries"][1]["frame_index"] = 5
    violations = validate_plan(plan_from_dict(doc))
    assert any("frame_index" in v for v in violations)


def test_validate_flags_time_outside_duration():
    plan = _compile([-30.0, -10.0], [None, None])
    doc = plan_to_dict(plan)
    doc["entries"][0]["time_s"] = 99.0
    violations = validate_plan(plan_from_dict(doc))
    assert any("outside" in v for v in violations)


def test_validate_flags_unknown_schema_version():
    plan = _compile([-30.0, -10.0], [None, None])
    doc = plan_to_dict(plan)
    doc["meta"]["schema_version"] = "0"
    violations = validate_plan(plan_from_dict(doc))
    assert any("schema version" in v for v in violations)


def test_validate_flags_non_contiguous_segments():
    doc = plan_to_dict(_compile([-30.0, -10.0], [None, None]))
    doc["meta"]["segments"][1]["start_s"] = 1.5
    violations = validate_plan(plan_from_dict(doc))
    assert any("starts at" in v for v in violations)

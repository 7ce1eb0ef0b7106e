"""Fixtures: a planner-produced plan (via its CLI) and a hand-written one.

The planner package is used here only as an oracle and through its public
interfaces (CLI, file formats); the backend under test never imports it.
"""

import json
import subprocess
import sys

import numpy as np
import pytest
from scipy.io import wavfile

SR = 22050


def click_samples(bpm=120.0, duration_s=10.0, seed=5) -> np.ndarray:
    rng = np.random.default_rng(seed)
    samples = 0.01 * rng.standard_normal(int(SR * duration_s))
    period = 60.0 / bpm
    burst = rng.standard_normal(int(0.005 * SR))
    t = period
    while t < duration_s - 0.01:
        i = int(t * SR)
        samples[i : i + burst.size] += 0.8 * burst
        t += period
    return samples


def run_planner(*args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "cadence", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture(scope="session")
def planned_track(tmp_path_factory):
    """WAV + LRC + a real plan produced by the planner CLI."""
    root = tmp_path_factory.mktemp("planned")
    wav = root / "song.wav"
    wavfile.write(wav, SR, (click_samples() * 32767).astype(np.int16))
    lrc = root / "song.lrc"
    lrc.write_text("[00:02.0]neon rain\n[00:06.5]glass city\n")
    proc = run_planner(
        "plan", "--audio", "song.wav", "--lyrics", "song.lrc",
        "--seed", "3", "--fps-min", "1", "--fps-max", "4",
        "--out", "song.plan.json", cwd=root,
    )
    assert proc.returncode == 0, proc.stderr
    return {"root": root, "wav": wav, "plan": root / "song.plan.json"}


def _entry(frame_index, time_s, guidance, segment_index, transition=False):
    return {
        "frame_index": frame_index,
        "time_s": time_s,
        "guidance": guidance,
        "segment_index": segment_index,
        "transition": transition,
    }


def _segment(index, start_s, end_s, db, norm, count, guidance_id, lyric=None):
    return {
        "index": index,
        "start_s": start_s,
        "end_s": end_s,
        "mean_intensity_db": db,
        "normalized_intensity": norm,
        "frame_count": count,
        "guidance_id": guidance_id,
        "lyric": lyric,
    }


@pytest.fixture(scope="session")
def five_entry_plan(tmp_path_factory):
    """Minimal internally consistent plan: 2 segments, 5 frames, one blend."""
    root = tmp_path_factory.mktemp("handmade")
    blend = [["audio/seg0000", 0.5], ["text/seg0001", 0.5]]
    doc = {
        "meta": {
            "schema_version": "1",
            "audio_source": "handmade.synthetic",
            "duration_s": 5.0,
            "fps_min": 1.0,
            "fps_max": 2.0,
            "mode": "segment-locked",
            "blend_scope": "full",
            "seed": 5,
            "embedding_manifest": None,
            "segments": [
                _segment(0, 0.0, 2.5, -30.0, 0.0, 3, "audio/seg0000"),
                _segment(1, 2.5, 5.0, -10.0, 1.0, 2, "text/seg0001", "glass city"),
            ],
        },
        "entries": [
            _entry(0, 2.5 * 0.5 / 3, [["audio/seg0000", 1.0]], 0),
            _entry(1, 2.5 * 1.5 / 3, [["audio/seg0000", 1.0]], 0),
            _entry(2, 2.5 * 2.5 / 3, [["audio/seg0000", 1.0]], 0),
            _entry(3, 2.5 + 2.5 * 0.5 / 2, blend, 1, True),
            _entry(4, 2.5 + 2.5 * 1.5 / 2, blend, 1, True),
        ],
    }
    path = root / "hand.plan.json"
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    wav = root / "hand.wav"
    wavfile.write(wav, SR, (click_samples(duration_s=5.0, seed=8) * 32767).astype(np.int16))
    return {"root": root, "plan": path, "wav": wav}

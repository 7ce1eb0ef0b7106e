"""End-to-end walkthrough on a synthetic click track, library API only.

Synthesizes ten seconds of 126 BPM clicks over a quiet noise bed, runs the
full analysis chain, compiles a plan with two lyric lines, renders the SVG
timeline, and replays the plan against the deterministic stub backend.
Everything is seeded; run it twice and the artifacts are byte-identical.

Artifacts land in demos/out/.
"""

import pathlib
from dataclasses import replace

import numpy as np

from cadence import (
    AudioBuffer,
    DEFAULT_SAMPLE_RATE,
    EmbeddingStore,
    StepConfig,
    assign_lyrics,
    audio_guidance_id,
    compile_plan,
    estimate_tempo,
    make_stub_backend,
    mel_spectrogram,
    onset_strength,
    parse_lrc,
    plan_to_json,
    run_plan,
    save_svg,
    segment_band_means,
    segment_mean_intensity,
    segments_from_beats,
    stft,
    stub_audio_embedding,
    stub_text_embedding,
    text_guidance_id,
    track_beats,
    validate_plan,
)

out_dir = pathlib.Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

# --- synthesize: 126 BPM clicks, 5 ms noise bursts on a quiet bed -----------
sr = DEFAULT_SAMPLE_RATE
bpm = 126.0
duration_s = 10.0
rng = np.random.default_rng(2026)

samples = 0.01 * rng.standard_normal(int(sr * duration_s))
period_s = 60.0 / bpm
click = rng.standard_normal(int(0.005 * sr))
t = period_s
while t < duration_s - 0.01:
    i = int(t * sr)
    samples[i : i + click.size] += 0.8 * click
    t += period_s

print(f"synthesized {duration_s:.0f} s at {bpm:.0f} BPM "
      f"({int(duration_s / period_s)} clicks)")

# --- analyze -----------------------------------------------------------------
mel = mel_spectrogram(stft(AudioBuffer(samples, sr)))
env = onset_strength(mel)
tempo = estimate_tempo(env)
beats = track_beats(env, tempo)
segments = segments_from_beats(beats, duration_s)
segments = [
    replace(s, mean_intensity_db=segment_mean_intensity(mel, s.start_s, s.end_s))
    for s in segments
]

print(f"estimated tempo {tempo.bpm:.2f} BPM, {len(beats.beat_times_s)} beats, "
      f"{len(segments)} segments")
errs = [abs(b % period_s) for b in beats.beat_times_s]
errs = [min(e, period_s - e) for e in errs]
print(f"beat grid error vs truth: max {1000 * max(errs):.1f} ms")

# --- lyrics ------------------------------------------------------------------
lines = parse_lrc("[00:02.5]neon rain\n[00:07.0]glass city\n")
lyrics, warnings = assign_lyrics(lines, segments)
print(f"{sum(x is not None for x in lyrics)} segments carry lyric text")

# --- compile and validate ----------------------------------------------------
plan = compile_plan(
    segments,
    lyrics,
    audio_source="clicks-126bpm.synthetic",
    duration_s=duration_s,
    fps_min=2.0,
    fps_max=8.0,
    mode="segment-locked",
    blend_scope="full",
    seed=7,
    embedding_manifest="clicks.embeddings.json",
)

store = EmbeddingStore(dim=64)
for seg, lyric in zip(plan.segments, lyrics):
    feats = segment_band_means(mel, seg.start_s, seg.end_s)
    new = [stub_audio_embedding(feats, dim=64, seed=7, id=audio_guidance_id(seg.index))]
    if lyric is not None:
        new.append(stub_text_embedding(lyric, dim=64, seed=7, id=text_guidance_id(seg.index)))
    store = store.with_added(new)

violations = validate_plan(plan, store)
print(f"plan: {plan.n_frames} frames over {len(plan.segments)} segments, "
      f"{len(violations)} validation violations")

plan_path = out_dir / "clicks.plan.json"
plan_path.write_text(plan_to_json(plan))
save_svg(plan, out_dir / "clicks.svg")
print(f"wrote {plan_path.name} and clicks.svg")

# --- replay with the stub backend ---------------------------------------------
# gradient descent on the cosine term turns the latent at about lr/|z|^2
# per step, so a small-norm start makes 60 steps per frame visibly converge
backend = make_stub_backend(embed_dim=64, image_dim=256, latent_dim=96, seed=7)
config = StepConfig(lr=5e-3, iters=60, lambda_l1=0.05)
z0 = 0.05 * np.random.default_rng(7).standard_normal(backend.latent_dim)
results, snapshots = run_plan(plan, store, backend, config, z_init=z0)

cos = np.array([r.cosine for r in results])
drift = sum(r.l1_drift for r in results)
print(f"replayed {len(results)} frames: mean cosine {cos.mean():.4f}, "
      f"final cosine {cos[-1]:.4f}, total L1 drift {drift:.3f}")
print(f"latent snapshots: {snapshots.shape}")

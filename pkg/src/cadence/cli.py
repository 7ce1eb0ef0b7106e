"""Command-line front end.

Subcommands mirror the pipeline stages and communicate through files,
so each stage can be rerun or swapped independently:

    analyze   WAV -> analysis JSON (tempo, beats, segments, onset)
    plan      WAV [+ LRC] -> plan JSON + embedding manifest
    viz       plan JSON -> SVG timeline
    simulate  plan JSON + manifest -> per-frame metrics JSONL

Exit codes: 0 success, 2 I/O or decode failure, 3 insufficient data,
4 validation or configuration error. The CADENCE_LOG environment
variable sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .audio import DEFAULT_SAMPLE_RATE, AudioBuffer, WavDecodeError, decode_wav, resample
from .beat import (
    InsufficientDataError,
    estimate_tempo,
    segments_from_beats,
    track_beats,
)
from .dsp import (
    MelSpectrogram,
    mel_spectrogram,
    onset_strength,
    segment_band_means,
    segment_mean_intensity,
    stft,
)
from .embed import (
    DEFAULT_DIM,
    EmbeddingStore,
    StoreLoadError,
    load_store,
    save_store,
    stub_audio_embedding,
    stub_text_embedding,
)
from .lyrics import LrcParseError, assign_lyrics, parse_lrc
from .optim import (
    StepConfig,
    finite_diff_check,
    guidance_target,
    loss,
    loss_grad,
    make_stub_backend,
    run_plan,
)
from .schedule import (
    CompileError,
    Plan,
    Segment,
    audio_guidance_id,
    compile_plan,
    load_plan,
    plan_to_json,
    text_guidance_id,
    validate_plan,
)
from .viz import plan_svg

logger = logging.getLogger("cadence")

EXIT_OK = 0
EXIT_IO = 2
EXIT_INSUFFICIENT = 3
EXIT_INVALID = 4

STUB_IMAGE_DIM = 256
STUB_LATENT_DIM = 64


class _Parser(argparse.ArgumentParser):
    # usage mistakes are configuration errors, not I/O errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _load_audio(path: str) -> AudioBuffer:
    with open(path, "rb") as f:
        data = f.read()
    return resample(decode_wav(data), DEFAULT_SAMPLE_RATE)


def _analyze(buffer: AudioBuffer) -> dict:
    """Shared analysis pass: mel, onset, tempo, beats, dB-tagged segments."""
    mel = mel_spectrogram(stft(buffer))
    env = onset_strength(mel)
    tempo = estimate_tempo(env)
    beats = track_beats(env, tempo)
    segments = [
        replace(seg, mean_intensity_db=segment_mean_intensity(mel, seg.start_s, seg.end_s))
        for seg in segments_from_beats(beats, buffer.duration_s)
    ]
    return {"mel": mel, "env": env, "tempo": tempo, "beats": beats, "segments": segments}


def cmd_analyze(args) -> int:
    analysis = _analyze(_load_audio(args.audio))
    env = analysis["env"]
    doc = {
        "tempo_bpm": analysis["tempo"].bpm,
        "beats": [float(t) for t in analysis["beats"].beat_times_s],
        "segments": [
            {
                "index": seg.index,
                "start": seg.start_s,
                "end": seg.end_s,
                "mean_db": seg.mean_intensity_db,
            }
            for seg in analysis["segments"]
        ],
        "onset": {
            "frame_rate": env.frame_rate,
            "start_time_s": env.start_time_s,
            "values": [float(v) for v in env.values],
        },
    }
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(doc, f, sort_keys=True, indent=1)
        f.write("\n")
    print(
        f"tempo {doc['tempo_bpm']:.2f} bpm, {len(doc['beats'])} beats, "
        f"{len(doc['segments'])} segments"
    )
    return EXIT_OK


def _build_store(
    mel: MelSpectrogram,
    segments: list[Segment],
    lyrics: list[str | None],
    base: EmbeddingStore,
    seed: int,
) -> EmbeddingStore:
    """Fill in stub embeddings for every conventional id the base lacks."""
    stubs = []
    for i, seg in enumerate(segments):
        aid = audio_guidance_id(seg.index)
        if aid not in base:
            stats = segment_band_means(mel, seg.start_s, seg.end_s)
            stubs.append(stub_audio_embedding(stats, base.dim, seed, id=aid))
        if lyrics[i] is not None:
            tid = text_guidance_id(seg.index)
            if tid not in base:
                stubs.append(stub_text_embedding(lyrics[i], base.dim, seed, id=tid))
    return base.with_added(stubs)


def cmd_plan(args) -> int:
    buffer = _load_audio(args.audio)
    analysis = _analyze(buffer)
    segments = analysis["segments"]
    if args.lyrics:
        with open(args.lyrics, "r", encoding="utf-8") as f:
            lines = parse_lrc(f.read())
        lyrics, warnings = assign_lyrics(lines, segments)
        for w in warnings:
            logger.warning(w)
    else:
        lyrics = [None] * len(segments)
    out_path = Path(args.out)
    manifest_path = out_path.with_name(out_path.stem + ".embeddings.json")
    plan = compile_plan(
        segments,
        lyrics,
        audio_source=os.path.basename(args.audio),
        duration_s=buffer.duration_s,
        fps_min=args.fps_min,
        fps_max=args.fps_max,
        mode=args.mode,
        blend_scope=args.blend_scope,
        seed=args.seed,
        embedding_manifest=manifest_path.name,
    )
    base = load_store(args.embeddings) if args.embeddings else EmbeddingStore(dim=DEFAULT_DIM)
    store = _build_store(analysis["mel"], segments, lyrics, base, args.seed)
    violations = validate_plan(plan, store)
    if violations:
        for v in violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_INVALID
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(plan_to_json(plan))
    save_store(store, manifest_path)
    n_lyric = sum(1 for text in lyrics if text is not None)
    print(
        f"{len(plan.segments)} segments, {plan.n_frames} frames, "
        f"{n_lyric} lyric segments -> {out_path}"
    )
    return EXIT_OK


def _load_plan_or_invalid(path: str) -> Plan:
    try:
        return load_plan(path)
    except json.JSONDecodeError as exc:
        raise CompileError(f"malformed plan file {path}: {exc}") from exc


def cmd_viz(args) -> int:
    plan = _load_plan_or_invalid(args.plan)
    svg = plan_svg(plan)
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(svg)
    print(f"{len(plan.segments)} segments, {plan.n_frames} frames -> {args.out}")
    return EXIT_OK


def _resolve_store(args, plan: Plan, plan_path: Path) -> EmbeddingStore:
    if args.embeddings:
        return load_store(args.embeddings)
    if plan.embedding_manifest:
        return load_store(plan_path.parent / plan.embedding_manifest)
    raise CompileError("no embedding manifest: pass --embeddings or record one in the plan")


def cmd_simulate(args) -> int:
    plan_path = Path(args.plan)
    plan = _load_plan_or_invalid(args.plan)
    store = _resolve_store(args, plan, plan_path)
    violations = validate_plan(plan, store)
    if violations:
        for v in violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_INVALID
    backend = make_stub_backend(
        embed_dim=store.dim,
        image_dim=STUB_IMAGE_DIM,
        latent_dim=STUB_LATENT_DIM,
        seed=args.seed,
    )
    config = StepConfig(lr=args.lr, iters=args.iters_per_frame, lambda_l1=args.lambda_l1)
    if args.check_grad:
        err = _gradient_check(plan, store, backend, config, args.seed)
        print(f"finite-diff max relative error: {err:.3e}")
    started = time.perf_counter()
    results, _ = run_plan(plan, store, backend, config, seed=args.seed)
    wall = time.perf_counter() - started
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    # wall time deliberately left out: metrics must be byte-identical across runs
    with open(out_dir / "metrics.jsonl", "w", encoding="utf-8") as f:
        for r in results:
            f.write(
                json.dumps(
                    {
                        "frame_index": r.frame_index,
                        "time_s": r.time_s,
                        "guidance": list(r.guidance_ids),
                        "cosine": r.cosine,
                        "loss": r.loss,
                        "l1_drift": r.l1_drift,
                        "steps": r.steps,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    mean_cos = float(np.mean([r.cosine for r in results])) if results else 0.0
    total_drift = float(sum(r.l1_drift for r in results))
    print(
        f"frames={len(results)} mean_cosine={mean_cos:.4f} "
        f"total_l1_drift={total_drift:.4f} wall_time_s={wall:.2f}"
    )
    return EXIT_OK


def _gradient_check(plan, store, backend, config: StepConfig, seed: int) -> float:
    """FD-verify the analytic gradient at random latents for the first entry."""
    if not plan.entries:
        raise CompileError("cannot gradient-check an empty plan")
    g = guidance_target(plan.entries[0], store)
    rng = np.random.default_rng(seed)
    z_prev = rng.standard_normal(backend.latent_dim)
    worst = 0.0
    for _ in range(5):
        z = rng.standard_normal(backend.latent_dim)
        err = finite_diff_check(
            lambda v: loss(backend, v, g, z_prev, config.lambda_l1),
            lambda v: loss_grad(backend, v, g, z_prev, config.lambda_l1),
            z,
        )
        worst = max(worst, err)
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cadence", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analyze", help="tempo, beats and segments from a WAV")
    p_an.add_argument("--audio", required=True, help="input WAV file")
    p_an.add_argument("--out", required=True, help="analysis JSON path")
    p_an.set_defaults(func=cmd_analyze)

    p_pl = sub.add_parser("plan", help="compile a frame schedule from a WAV")
    p_pl.add_argument("--audio", required=True, help="input WAV file")
    p_pl.add_argument("--lyrics", help="LRC lyric file")
    p_pl.add_argument("--embeddings", help="existing embedding manifest to reuse")
    p_pl.add_argument("--out", required=True, help="plan JSON path")
    p_pl.add_argument("--fps-min", type=float, default=1.0)
    p_pl.add_argument("--fps-max", type=float, default=10.0)
    p_pl.add_argument(
        "--mode", choices=["segment-locked", "alternating"], default="segment-locked"
    )
    p_pl.add_argument("--blend-scope", default="full", help="'full' or 'first:K'")
    p_pl.add_argument("--seed", type=int, required=True)
    p_pl.set_defaults(func=cmd_plan)

    p_vz = sub.add_parser("viz", help="render a plan as an SVG timeline")
    p_vz.add_argument("--plan", required=True, help="plan JSON path")
    p_vz.add_argument("--out", required=True, help="output SVG path")
    p_vz.set_defaults(func=cmd_viz)

    p_sim = sub.add_parser("simulate", help="optimize latents against a plan")
    p_sim.add_argument("--plan", required=True, help="plan JSON path")
    p_sim.add_argument("--embeddings", help="embedding manifest (default: from plan)")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--lambda-l1", type=float, default=0.0)
    p_sim.add_argument("--lr", type=float, default=1e-3)
    p_sim.add_argument("--iters-per-frame", type=int, default=200)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--check-grad", action="store_true")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("CADENCE_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, WavDecodeError, LrcParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (CompileError, StoreLoadError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

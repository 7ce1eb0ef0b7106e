"""Shared fixtures: synthetic signals and hand-assembled WAV bytes.

The WAV builders here pack RIFF structures with `struct` directly and
never touch the package's encoder, so they can serve as an independent
oracle for the decoder. Signal generators return the ground truth
(beat times, tempo) alongside the samples.
"""

from __future__ import annotations

import struct

import numpy as np
import pytest

from cadence import AudioBuffer

SR = 22050


def make_click_track(
    bpm: float = 120.0,
    duration_s: float = 30.0,
    sr: int = SR,
    click_ms: float = 5.0,
    seed: int = 7,
) -> tuple[np.ndarray, list[float]]:
    """Noise bursts on an exact beat grid; returns (samples, true beat times)."""
    n = int(sr * duration_s)
    x = np.zeros(n)
    rng = np.random.default_rng(seed)
    burst = rng.uniform(-1.0, 1.0, int(click_ms / 1000.0 * sr))
    period_s = 60.0 / bpm
    truth = []
    t = 0.0
    while t < duration_s - 1e-9:
        s = int(round(t * sr))
        e = min(s + len(burst), n)
        x[s:e] = burst[: e - s]
        truth.append(t)
        t += period_s
    return x, truth


def make_am_track(
    bpm: float = 100.0,
    duration_s: float = 300.0,
    sr: int = SR,
    seed: int = 11,
) -> tuple[np.ndarray, list[float]]:
    """Amplitude-modulated tone bed with a burst on every beat."""
    n = int(sr * duration_s)
    t = np.arange(n) / sr
    am = 0.55 + 0.4 * np.sin(2 * np.pi * t / 17.0)
    bed = 0.2 * (
        np.sin(2 * np.pi * 220 * t)
        + 0.5 * np.sin(2 * np.pi * 440 * t)
        + 0.25 * np.sin(2 * np.pi * 880 * t)
    )
    x = am * bed
    rng = np.random.default_rng(seed)
    burst = rng.uniform(-1.0, 1.0, int(0.010 * sr))
    period_s = 60.0 / bpm
    truth = []
    tb = 0.0
    while tb < duration_s - 1e-9:
        s = int(round(tb * sr))
        e = min(s + len(burst), n)
        x[s:e] += (0.4 + 0.5 * am[s]) * burst[: e - s]
        truth.append(tb)
        tb += period_s
    return np.clip(x, -1.0, 1.0), truth


def _riff(chunks: list[bytes]) -> bytes:
    body = b"WAVE" + b"".join(chunks)
    return b"RIFF" + struct.pack("<I", len(body)) + body


def _chunk(tag: bytes, payload: bytes) -> bytes:
    out = tag + struct.pack("<I", len(payload)) + payload
    if len(payload) % 2:
        out += b"\x00"  # RIFF chunks are word-aligned
    return out


def _fmt_chunk(tag: int, channels: int, sr: int, bits: int) -> bytes:
    block = channels * bits // 8
    return _chunk(
        b"fmt ",
        struct.pack("<HHIIHH", tag, channels, sr, sr * block, block, bits),
    )


def wav_pcm16_bytes(ints: np.ndarray, sr: int = SR, channels: int = 1) -> bytes:
    payload = b"".join(struct.pack("<h", int(v)) for v in np.asarray(ints).ravel())
    return _riff([_fmt_chunk(1, channels, sr, 16), _chunk(b"data", payload)])


def wav_pcm24_bytes(ints: np.ndarray, sr: int = SR, channels: int = 1) -> bytes:
    payload = b"".join(
        struct.pack("<i", int(v) << 8)[1:] for v in np.asarray(ints).ravel()
    )
    return _riff([_fmt_chunk(1, channels, sr, 24), _chunk(b"data", payload)])


def wav_float32_bytes(vals: np.ndarray, sr: int = SR, channels: int = 1) -> bytes:
    payload = b"".join(struct.pack("<f", float(v)) for v in np.asarray(vals).ravel())
    return _riff([_fmt_chunk(3, channels, sr, 32), _chunk(b"data", payload)])


@pytest.fixture(scope="session")
def click_track() -> tuple[np.ndarray, list[float]]:
    return make_click_track()


@pytest.fixture(scope="session")
def click_buffer(click_track) -> AudioBuffer:
    return AudioBuffer(samples=click_track[0], sample_rate=SR)


@pytest.fixture(scope="session")
def am_track() -> tuple[np.ndarray, list[float]]:
    return make_am_track()


@pytest.fixture(scope="session")
def am_buffer(am_track) -> AudioBuffer:
    return AudioBuffer(samples=am_track[0], sample_rate=SR)

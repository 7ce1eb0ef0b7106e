"""WAV decoding and resampling.

Everything downstream works on a mono float buffer, so the decoder
averages channels and scales integer PCM into [-1, 1]. Only RIFF/WAVE
with PCM 16-bit, PCM 24-bit or IEEE float 32-bit payloads is accepted;
compressed codecs are out of scope.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

DEFAULT_SAMPLE_RATE = 22050

_FMT_PCM = 1
_FMT_IEEE_FLOAT = 3


class WavDecodeError(ValueError):
    """Malformed or truncated WAV data."""


class UnsupportedWavError(WavDecodeError):
    """Structurally valid WAV using a codec/bit depth we do not decode."""


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio samples in [-1, 1] at a known sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


def decode_wav(data: bytes) -> AudioBuffer:
    """Decode RIFF/WAVE bytes into a mono AudioBuffer.

    Supports little-endian PCM16, PCM24 and float32 payloads with 1 or 2
    channels. Stereo is downmixed by per-frame averaging; integer PCM is
    scaled by 1/2^(bits-1); float payloads are clipped into [-1, 1].

    Raises:
        WavDecodeError: malformed header or truncated chunk (message names
            the byte offset).
        UnsupportedWavError: codec, bit depth or channel count we reject.
    """
    if len(data) < 12:
        raise WavDecodeError(f"file too short for a RIFF header ({len(data)} bytes)")
    if data[0:4] != b"RIFF":
        raise WavDecodeError("missing 'RIFF' magic at offset 0")
    if data[8:12] != b"WAVE":
        raise WavDecodeError("missing 'WAVE' form type at offset 8")

    fmt = None
    raw = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if chunk_id == b"fmt ":
            if chunk_size < 16 or body_start + 16 > len(data):
                raise WavDecodeError(f"fmt chunk truncated at offset {pos}")
            fmt = struct.unpack_from("<HHIIHH", data, body_start)
        elif chunk_id == b"data":
            if body_start + chunk_size > len(data):
                raise WavDecodeError(
                    f"data chunk at offset {pos} declares {chunk_size} bytes, "
                    f"only {len(data) - body_start} available"
                )
            raw = data[body_start : body_start + chunk_size]
        # chunks are word-aligned: odd sizes carry a pad byte
        pos = body_start + chunk_size + (chunk_size & 1)

    if fmt is None:
        raise WavDecodeError("no 'fmt ' chunk found")
    if raw is None:
        raise WavDecodeError("no 'data' chunk found")

    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedWavError(f"unsupported channel count {channels} (want 1 or 2)")
    if sample_rate <= 0:
        raise WavDecodeError(f"invalid sample rate {sample_rate}")

    if audio_format == _FMT_PCM and bits == 16:
        frames = np.frombuffer(raw[: len(raw) - len(raw) % 2], dtype="<i2")
        samples = frames.astype(np.float64) / 2**15
    elif audio_format == _FMT_PCM and bits == 24:
        usable = len(raw) - len(raw) % 3
        b = np.frombuffer(raw[:usable], dtype=np.uint8).reshape(-1, 3)
        vals = (
            b[:, 0].astype(np.int32)
            | (b[:, 1].astype(np.int32) << 8)
            | (b[:, 2].astype(np.int32) << 16)
        )
        vals = np.where(vals >= 1 << 23, vals - (1 << 24), vals)
        samples = vals.astype(np.float64) / 2**23
    elif audio_format == _FMT_IEEE_FLOAT and bits == 32:
        frames = np.frombuffer(raw[: len(raw) - len(raw) % 4], dtype="<f4")
        if not np.all(np.isfinite(frames)):
            raise WavDecodeError("non-finite sample in float32 data chunk")
        samples = np.clip(frames.astype(np.float64), -1.0, 1.0)
    else:
        raise UnsupportedWavError(
            f"unsupported format code {audio_format} with {bits}-bit samples"
        )

    if channels == 2:
        usable = len(samples) - len(samples) % 2
        samples = samples[:usable].reshape(-1, 2).mean(axis=1)

    return AudioBuffer(samples=samples, sample_rate=int(sample_rate))


def encode_wav_pcm16(samples: np.ndarray, sample_rate: int) -> bytes:
    """Encode a mono float buffer as a 16-bit PCM WAV file.

    Utility for building fixtures and demo inputs; scales by 2^15 and
    saturates at the int16 limits.
    """
    x = np.asarray(samples, dtype=np.float64)
    ints = np.clip(np.rint(x * 2**15), -(2**15), 2**15 - 1).astype("<i2")
    raw = ints.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(raw),
        b"WAVE",
        b"fmt ",
        16,
        _FMT_PCM,
        1,
        sample_rate,
        sample_rate * 2,
        2,
        16,
        b"data",
        len(raw),
    )
    return header + raw


def resample(buffer: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Resample by linear interpolation to target_rate.

    Output length is round(n * target/source); a constant signal stays
    constant and an identity rate returns the buffer unchanged.
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == buffer.sample_rate:
        return buffer
    n_in = len(buffer.samples)
    n_out = int(round(n_in * target_rate / buffer.sample_rate))
    if n_in == 0 or n_out == 0:
        return AudioBuffer(samples=np.zeros(n_out), sample_rate=int(target_rate))
    positions = np.arange(n_out) * (buffer.sample_rate / target_rate)
    out = np.interp(positions, np.arange(n_in), buffer.samples)
    return AudioBuffer(samples=out, sample_rate=int(target_rate))

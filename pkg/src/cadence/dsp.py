"""Short-time spectral analysis: STFT, mel-dB spectrogram, onset strength.

Defaults assume the 22050 Hz analysis rate: n_fft=2048, hop=512, 80 mel
bands spanning 0..11025 Hz. Frame t covers samples [t*hop, t*hop+n_fft)
with no padding, so two time references exist per frame:

  * center time  t*hop + n_fft/2   -- where the window's energy sits;
    used for intensity averaging.
  * onset time   t*hop + n_fft - hop/2 -- midpoint of the hop of fresh
    audio the frame adds over frame t-1; spectral flux at frame t is
    caused by that slice, so onset/beat timestamps use this reference
    (center timestamps would date impulsive onsets half a window early).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer

N_FFT = 2048
HOP = 512
N_MELS = 80
FMIN = 0.0
FMAX = 11025.0

DB_FLOOR_POWER = 1e-10  # -100 dB clamp before referencing to the max


@dataclass(frozen=True)
class Spectrogram:
    """Power spectrogram, time-major (n_frames, n_fft//2 + 1)."""

    power: np.ndarray
    sample_rate: int
    n_fft: int
    hop: int

    @property
    def n_frames(self) -> int:
        return self.power.shape[0]


@dataclass(frozen=True)
class MelSpectrogram:
    """Mel-band magnitudes in dB, referenced so the global max is 0 dB."""

    db: np.ndarray  # (n_frames, n_mels)
    hop_s: float
    frame_rate: float
    center_offset_s: float  # center time of frame 0
    onset_offset_s: float  # onset time of frame 0

    @property
    def n_mels(self) -> int:
        return self.db.shape[1]

    @property
    def n_frames(self) -> int:
        return self.db.shape[0]

    def frame_centers(self) -> np.ndarray:
        return self.center_offset_s + np.arange(self.n_frames) * self.hop_s


@dataclass(frozen=True)
class OnsetEnvelope:
    """Half-wave-rectified mean spectral flux per frame (values >= 0)."""

    values: np.ndarray
    frame_rate: float
    start_time_s: float  # onset time of frame 0

    def times(self) -> np.ndarray:
        return self.start_time_s + np.arange(len(self.values)) / self.frame_rate

    @property
    def duration_s(self) -> float:
        return len(self.values) / self.frame_rate


def stft(buffer: AudioBuffer, n_fft: int = N_FFT, hop: int = HOP) -> Spectrogram:
    """Hann-windowed power spectrogram.

    Frames start at t*hop; a buffer shorter than n_fft yields a single
    zero-padded frame. Entries are squared rfft magnitudes.
    """
    if len(buffer.samples) == 0:
        raise ValueError("cannot analyze an empty buffer")
    if n_fft <= 0 or (n_fft & (n_fft - 1)) != 0:
        raise ValueError(f"n_fft must be a power of two, got {n_fft}")
    if not 0 < hop <= n_fft:
        raise ValueError(f"hop must be in (0, n_fft], got {hop}")

    x = np.asarray(buffer.samples, dtype=np.float64)
    if len(x) < n_fft:
        x = np.concatenate([x, np.zeros(n_fft - len(x))])
    frames = np.lib.stride_tricks.sliding_window_view(x, n_fft)[::hop]
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n_fft) / n_fft)
    spectrum = np.fft.rfft(frames * window, axis=1)
    return Spectrogram(
        power=np.abs(spectrum) ** 2,
        sample_rate=buffer.sample_rate,
        n_fft=n_fft,
        hop=hop,
    )


def hz_to_mel(hz: np.ndarray | float) -> np.ndarray | float:
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel: np.ndarray | float) -> np.ndarray | float:
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    sample_rate: int, n_fft: int, n_mels: int, fmin: float, fmax: float
) -> np.ndarray:
    """Triangular mel filterbank, (n_mels, n_fft//2+1), peak weight 1."""
    if n_mels < 1:
        raise ValueError(f"n_mels must be >= 1, got {n_mels}")
    if not 0 <= fmin < fmax <= sample_rate / 2:
        raise ValueError(
            f"need 0 <= fmin < fmax <= sample_rate/2, got fmin={fmin} fmax={fmax}"
        )
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    bin_freqs = np.arange(n_fft // 2 + 1) * (sample_rate / n_fft)
    lower, center, upper = edges[:-2], edges[1:-1], edges[2:]
    rise = (bin_freqs[None, :] - lower[:, None]) / np.maximum(
        center - lower, 1e-12
    )[:, None]
    fall = (upper[:, None] - bin_freqs[None, :]) / np.maximum(
        upper - center, 1e-12
    )[:, None]
    return np.clip(np.minimum(rise, fall), 0.0, None)


def mel_spectrogram(
    spec: Spectrogram,
    n_mels: int = N_MELS,
    fmin: float = FMIN,
    fmax: float = FMAX,
) -> MelSpectrogram:
    """Apply the mel filterbank and convert to max-referenced dB.

    dB = 10*log10(max(power, 1e-10)) shifted so the global maximum is 0.
    """
    fb = mel_filterbank(spec.sample_rate, spec.n_fft, n_mels, fmin, fmax)
    mel_power = spec.power @ fb.T
    db = 10.0 * np.log10(np.maximum(mel_power, DB_FLOOR_POWER))
    db -= db.max()
    sr = spec.sample_rate
    return MelSpectrogram(
        db=db,
        hop_s=spec.hop / sr,
        frame_rate=sr / spec.hop,
        center_offset_s=(spec.n_fft / 2) / sr,
        onset_offset_s=(spec.n_fft - spec.hop / 2) / sr,
    )


def onset_strength(mel: MelSpectrogram) -> OnsetEnvelope:
    """Mean half-wave-rectified spectral flux across mel bands.

    value[t] = mean_m max(0, db[t, m] - db[t-1, m]); value[0] = 0.
    """
    if mel.n_frames < 2:
        raise ValueError(f"need >= 2 frames to compute flux, got {mel.n_frames}")
    flux = np.maximum(np.diff(mel.db, axis=0), 0.0).mean(axis=1)
    values = np.concatenate([[0.0], flux])
    return OnsetEnvelope(
        values=values, frame_rate=mel.frame_rate, start_time_s=mel.onset_offset_s
    )


def _frames_in_interval(mel: MelSpectrogram, start_s: float, end_s: float) -> np.ndarray:
    if start_s >= end_s:
        raise ValueError(f"inverted interval [{start_s}, {end_s})")
    centers = mel.frame_centers()
    idx = np.flatnonzero((centers >= start_s) & (centers < end_s))
    if len(idx) == 0:
        # interval too narrow to contain a center: fall back to the nearest frame
        midpoint = 0.5 * (start_s + end_s)
        idx = np.array([int(np.argmin(np.abs(centers - midpoint)))])
    return idx


def segment_mean_intensity(mel: MelSpectrogram, start_s: float, end_s: float) -> float:
    """Mean dB over all bands of the frames whose center lies in [start, end)."""
    idx = _frames_in_interval(mel, start_s, end_s)
    return float(mel.db[idx].mean())


def segment_band_means(mel: MelSpectrogram, start_s: float, end_s: float) -> np.ndarray:
    """Per-band mean dB over the same frame selection as segment_mean_intensity."""
    idx = _frames_in_interval(mel, start_s, end_s)
    return mel.db[idx].mean(axis=0)

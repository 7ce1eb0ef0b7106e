"""Tempo estimation and dynamic-programming beat tracking.

Tempo: autocorrelation of the onset envelope scored on a log-spaced BPM
grid under a log-Gaussian prior. The score for a candidate adds half the
autocorrelation at the doubled lag (duple reinforcement); without it, a
sharply peaked envelope puts twice as much autocorrelation mass at the
two-beat lag as at the beat lag and the estimate collapses an octave.

Beats: maximize sum(env[b_i]) - tightness * sum(ln(delta_i/period)^2)
over beat sequences with inter-beat spacing in [period/2, 2*period],
then backtrace. An envelope with no positive score yields no beats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dsp import OnsetEnvelope
from .schedule import Segment

BPM_MIN = 40.0
BPM_MAX = 220.0
BPM_PRIOR = 120.0
PRIOR_SPREAD_OCTAVES = 1.0
TIGHTNESS = 100.0
MIN_SEGMENT_S = 0.1

MIN_TEMPO_ENVELOPE_S = 4.0
_GRID_STEPS_PER_OCTAVE = 120  # ~0.6% BPM resolution, prior BPM always on-grid


class InsufficientDataError(ValueError):
    """Not enough audio for a stable estimate."""


@dataclass(frozen=True)
class TempoEstimate:
    bpm: float
    period_frames: float  # onset-envelope frames per beat


@dataclass(frozen=True)
class BeatGrid:
    beat_times_s: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        t = np.asarray(self.beat_times_s, dtype=np.float64)
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("beat times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.beat_times_s)


def _autocorrelation(values: np.ndarray, max_lag: int) -> np.ndarray:
    """Raw autocorrelation of the mean-removed signal for lags 0..max_lag."""
    x = values - values.mean()
    n = len(x)
    max_lag = min(max_lag, n - 1)
    return np.array([np.dot(x[: n - k], x[k:]) for k in range(max_lag + 1)])


def estimate_tempo(
    env: OnsetEnvelope,
    bpm_prior: float = BPM_PRIOR,
    prior_spread_octaves: float = PRIOR_SPREAD_OCTAVES,
    bpm_min: float = BPM_MIN,
    bpm_max: float = BPM_MAX,
) -> TempoEstimate:
    """Estimate a single global tempo from the onset envelope.

    Candidates are bpm_prior * 2^(k/steps) clipped to [bpm_min, bpm_max];
    each is scored by prior(bpm) * (acf(lag) + 0.5 * acf(2*lag)) with the
    autocorrelation rectified, normalized and linearly interpolated at
    fractional lags. Exact score ties resolve toward the prior center, so
    a flat (e.g. silent) envelope returns bpm_prior itself. A parabolic
    fit around the winning acf peak then refines the lag below integer
    resolution, which matters at short periods where one lag step is
    several BPM wide.

    Raises:
        InsufficientDataError: envelope shorter than 4 s.
    """
    if env.duration_s < MIN_TEMPO_ENVELOPE_S:
        raise InsufficientDataError(
            f"onset envelope covers {env.duration_s:.2f} s, "
            f"need >= {MIN_TEMPO_ENVELOPE_S} s to estimate tempo"
        )
    if not 0 < bpm_min <= bpm_prior <= bpm_max:
        raise ValueError(
            f"need bpm_min <= bpm_prior <= bpm_max, got "
            f"[{bpm_min}, {bpm_max}] with prior {bpm_prior}"
        )

    max_lag = math.ceil(2.0 * env.frame_rate * 60.0 / bpm_min) + 1
    acf = _autocorrelation(env.values, max_lag)
    acf = np.maximum(acf, 0.0)
    if acf[0] > 0:
        acf = acf / acf[0]

    steps = _GRID_STEPS_PER_OCTAVE
    k_lo = math.ceil(steps * math.log2(bpm_min / bpm_prior))
    k_hi = math.floor(steps * math.log2(bpm_max / bpm_prior))
    bpms = bpm_prior * 2.0 ** (np.arange(k_lo, k_hi + 1) / steps)
    lags = env.frame_rate * 60.0 / bpms

    lag_axis = np.arange(len(acf), dtype=np.float64)
    acf_at = np.interp(lags, lag_axis, acf, left=0.0, right=0.0)
    acf_at_double = np.interp(2.0 * lags, lag_axis, acf, left=0.0, right=0.0)
    log_offsets = np.log2(bpms / bpm_prior)
    prior = np.exp(-0.5 * (log_offsets / prior_spread_octaves) ** 2)
    scores = prior * (acf_at + 0.5 * acf_at_double)

    tied = np.flatnonzero(scores == scores.max())
    best = tied[np.argmin(np.abs(log_offsets[tied]))]
    bpm = float(bpms[best])

    center = int(round(env.frame_rate * 60.0 / bpm))
    if 1 <= center < len(acf) - 1:
        left, mid, right = acf[center - 1], acf[center], acf[center + 1]
        denom = left - 2.0 * mid + right
        # refine only at a genuine peak; a flat acf keeps the prior exact
        if mid >= left and mid >= right and denom < 0:
            shift = float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))
            refined_bpm = env.frame_rate * 60.0 / (center + shift)
            bpm = float(np.clip(refined_bpm, bpm_min, bpm_max))
    return TempoEstimate(bpm=bpm, period_frames=env.frame_rate * 60.0 / bpm)


def track_beats(
    env: OnsetEnvelope, tempo: TempoEstimate, tightness: float = TIGHTNESS
) -> BeatGrid:
    """Track beats by dynamic programming around the estimated period.

    Returns an empty grid (not an error) when the envelope is shorter
    than one beat period or carries no positive onset mass.
    """
    if tightness <= 0:
        raise ValueError(f"tightness must be positive, got {tightness}")
    period = tempo.period_frames
    values = env.values
    n = len(values)
    if n < period:
        return BeatGrid()

    deltas = np.arange(math.ceil(period / 2.0), math.floor(2.0 * period) + 1)
    deltas = deltas[deltas >= 1]
    penalties = tightness * np.log(deltas / period) ** 2

    best = np.zeros(n)
    backlink = np.full(n, -1, dtype=np.int64)
    for t in range(n):
        reachable = deltas[deltas <= t]
        if len(reachable):
            linked = best[t - reachable] - penalties[: len(reachable)]
            j = int(np.argmax(linked))
            if linked[j] > 0.0:
                best[t] = values[t] + linked[j]
                backlink[t] = t - reachable[j]
                continue
        best[t] = values[t]

    if best.max() <= 0.0:
        return BeatGrid()

    frames = []
    t = int(np.argmax(best))
    while t >= 0:
        frames.append(t)
        t = backlink[t]
    frames.reverse()
    times = env.start_time_s + np.asarray(frames, dtype=np.float64) / env.frame_rate
    return BeatGrid(beat_times_s=times)


def segments_from_beats(
    beats: BeatGrid, duration_s: float, min_segment_s: float = MIN_SEGMENT_S
) -> list[Segment]:
    """Split [0, duration) at beat times into contiguous segments.

    Segments shorter than min_segment_s merge into their predecessor
    (the first merges into its successor). An empty grid yields a single
    whole-track segment; segment boundaries always include 0 and the
    track end, so durations sum to duration_s exactly.
    """
    if duration_s <= 0:
        raise ValueError(f"duration_s must be positive, got {duration_s}")
    interior = [float(b) for b in np.asarray(beats.beat_times_s) if 0.0 < b < duration_s]
    bounds = [0.0] + interior + [duration_s]

    while len(bounds) > 2:
        lengths = np.diff(bounds)
        short = np.flatnonzero(lengths < min_segment_s)
        if len(short) == 0:
            break
        i = int(short[0])
        # dropping an interior boundary merges segment i with a neighbor:
        # bounds[i+1] joins it to its successor when first, else to its
        # predecessor via bounds[i]
        del bounds[i + 1 if i == 0 else i]

    return [
        Segment(index=i, start_s=start, end_s=end)
        for i, (start, end) in enumerate(zip(bounds[:-1], bounds[1:]))
    ]

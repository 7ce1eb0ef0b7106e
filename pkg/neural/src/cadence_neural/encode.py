"""Prompt encoding: turn a plan's segments into an embedding manifest.

One audio embedding per segment (the segment's own samples through the
audio encoder) and one text embedding per lyric-bearing segment. Ids follow
the planner's convention, audio/segNNNN and text/segNNNN, so a plan that
references those ids validates against the written manifest directly.
"""

from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .models import ModelBundle
from .planio import write_store

_INT_SCALE = {np.dtype(np.int16): 2**15, np.dtype(np.int32): 2**31}


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Mono float64 samples in [-1, 1] plus the native sample rate."""
    sample_rate, data = wavfile.read(path)
    samples = np.asarray(data, dtype=np.float64)
    if data.dtype in _INT_SCALE:
        samples /= _INT_SCALE[data.dtype]
    elif data.dtype == np.uint8:
        samples = (samples - 128.0) / 128.0
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return samples, int(sample_rate)


def _segment_samples(samples: np.ndarray, sr: int, start_s: float, end_s: float) -> np.ndarray:
    lo = int(start_s * sr)
    hi = max(int(end_s * sr), lo + 1)
    return samples[lo : min(hi, samples.size)]


def export_embeddings(
    plan_doc: dict,
    samples: np.ndarray,
    sample_rate: int,
    bundle: ModelBundle,
    out_manifest: str | Path,
) -> int:
    """Write the manifest; returns the number of embeddings exported."""
    seed = bundle.config.seed
    records = []
    for seg in sorted(plan_doc["meta"]["segments"], key=lambda s: s["index"]):
        idx = int(seg["index"])
        chunk = _segment_samples(samples, sample_rate, seg["start_s"], seg["end_s"])
        if chunk.size == 0:
            raise ValueError(f"segment {idx} lies outside the supplied audio")
        records.append(
            {
                "id": f"audio/seg{idx:04d}",
                "modality": "audio",
                "vector": bundle.audio_encoder.encode(chunk, sample_rate).tolist(),
                "source": f"{bundle.config.audio_encoder}(seed={seed})",
            }
        )
        lyric = seg.get("lyric")
        if lyric is not None:
            records.append(
                {
                    "id": f"text/seg{idx:04d}",
                    "modality": "text",
                    "vector": bundle.text_encoder.encode(lyric).tolist(),
                    "source": f"{bundle.config.text_encoder}(seed={seed})",
                }
            )
    write_store(bundle.config.embed_dim, records, out_manifest)
    return len(records)

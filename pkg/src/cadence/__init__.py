"""Audio-synced frame scheduling and guided latent simulation.

The pipeline turns a WAV (plus optional timestamped lyrics) into a
per-frame guidance plan: onset envelope -> tempo -> beats -> segments
-> intensity-scaled frame allocation -> guidance assignment ->
transition blending, then optimizes latents frame by frame against a
pluggable decode/embed backend.
"""

from .audio import (
    DEFAULT_SAMPLE_RATE,
    AudioBuffer,
    UnsupportedWavError,
    WavDecodeError,
    decode_wav,
    encode_wav_pcm16,
    resample,
)
from .beat import (
    BeatGrid,
    InsufficientDataError,
    TempoEstimate,
    estimate_tempo,
    segments_from_beats,
    track_beats,
)
from .dsp import (
    MelSpectrogram,
    OnsetEnvelope,
    Spectrogram,
    mel_filterbank,
    mel_spectrogram,
    onset_strength,
    segment_band_means,
    segment_mean_intensity,
    stft,
)
from .embed import (
    DEFAULT_DIM,
    EmbeddingStore,
    PromptEmbedding,
    StoreLoadError,
    blend,
    cosine,
    load_store,
    normalize_vector,
    save_store,
    stub_audio_embedding,
    stub_text_embedding,
)
from .lyrics import LrcParseError, LyricLine, assign_lyrics, parse_lrc
from .optim import (
    FrameResult,
    LinearBackend,
    StepConfig,
    finite_diff_check,
    guidance_target,
    loss,
    loss_grad,
    make_stub_backend,
    optimize_frame,
    run_plan,
)
from .schedule import (
    CompileError,
    Plan,
    PlanEntry,
    Segment,
    allocate_frames,
    apply_transition_blend,
    assign_guidance,
    audio_guidance_id,
    build_entries,
    compile_plan,
    frame_times,
    load_plan,
    normalize_intensities,
    plan_from_dict,
    plan_to_dict,
    plan_to_json,
    text_guidance_id,
    validate_plan,
)
from .viz import plan_svg, save_svg

__version__ = "0.1.0"

"""Model registry and the tiny randomly initialized reference models.

Every component is resolved by name through a registry so conformance runs
never download weights: the tiny-* families are seeded torch modules small
enough to build in milliseconds. Real pretrained encoders slot in by
registering a builder under a new name and selecting it in the model config.

All math runs in float64 so the rendered losses line up with the planner's
stub backend when the linear weights are exported.
"""

import hashlib
import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import torch

_TEXT_FEATURE_DIM = 64
_AUDIO_FEATURE_DIM = 64


class ModelLoadError(RuntimeError):
    """A configured model id could not be loaded."""


@dataclass(frozen=True)
class ModelConfig:
    text_encoder: str = "tiny-text/1"
    audio_encoder: str = "tiny-audio/1"
    generator: str = "tiny-gen/1"
    image_encoder: str = "tiny-image/1"
    embed_dim: int = 32
    image_size: int = 16  # frames are image_size x image_size RGB
    latent_dim: int = 48
    seed: int = 0
    init_scale: float = 0.05
    device: str = "cpu"

    def __post_init__(self):
        if self.embed_dim <= 0 or self.image_size <= 0 or self.latent_dim <= 0:
            raise ValueError("embed_dim, image_size, and latent_dim must be positive")
        if self.init_scale <= 0:
            raise ValueError(f"init_scale must be positive, got {self.init_scale}")

    @property
    def image_dim(self) -> int:
        return 3 * self.image_size * self.image_size


def load_config(path: str | Path | None) -> ModelConfig:
    if path is None:
        return ModelConfig()
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    known = {f.name for f in fields(ModelConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown model config keys: {sorted(unknown)}")
    return ModelConfig(**doc)


def _generator_for(seed: int, role: str) -> torch.Generator:
    # stable per-role stream: same config seed, different weights per component
    digest = hashlib.sha256(f"{seed}:{role}".encode()).digest()
    g = torch.Generator()
    g.manual_seed(int.from_bytes(digest[:8], "big") % (2**63))
    return g


def _weight(rows: int, cols: int, seed: int, role: str) -> torch.Tensor:
    g = _generator_for(seed, role)
    return torch.randn(rows, cols, generator=g, dtype=torch.float64) / np.sqrt(cols)


class TinyTextEncoder:
    """Hashed byte features through a seeded linear map, unit output."""

    def __init__(self, embed_dim: int, seed: int):
        self.weight = _weight(embed_dim, _TEXT_FEATURE_DIM, seed, "text")

    def features(self, text: str) -> torch.Tensor:
        data = text.encode("utf-8")
        vals = []
        for k in range(_TEXT_FEATURE_DIM):
            h = hashlib.sha256(data + k.to_bytes(4, "big")).digest()
            vals.append(int.from_bytes(h[:8], "big") / 2**63 - 1.0)
        return torch.tensor(vals, dtype=torch.float64)

    def encode(self, text: str) -> np.ndarray:
        out = self.weight @ self.features(text)
        return _unit(out).numpy()


class TinyAudioEncoder:
    """Log band energies through a seeded linear map, unit output."""

    def __init__(self, embed_dim: int, seed: int):
        self.weight = _weight(embed_dim, _AUDIO_FEATURE_DIM, seed, "audio")

    def features(self, samples: np.ndarray, sample_rate: int) -> torch.Tensor:
        if samples.size == 0:
            raise ValueError("cannot encode an empty audio segment")
        power = np.abs(np.fft.rfft(samples.astype(np.float64))) ** 2
        edges = np.linspace(0, power.size, _AUDIO_FEATURE_DIM + 1).astype(int)
        bands = np.empty(_AUDIO_FEATURE_DIM)
        for i in range(_AUDIO_FEATURE_DIM):
            lo, hi = edges[i], max(edges[i + 1], edges[i] + 1)
            bands[i] = power[lo:hi].mean() if lo < power.size else 0.0
        return torch.tensor(np.log10(bands + 1e-12), dtype=torch.float64)

    def encode(self, samples: np.ndarray, sample_rate: int) -> np.ndarray:
        out = self.weight @ self.features(samples, sample_rate)
        return _unit(out).numpy()


class LinearGenerator:
    """z -> flat RGB image vector."""

    def __init__(self, image_dim: int, latent_dim: int, seed: int):
        self.weight = _weight(image_dim, latent_dim, seed, "generator")

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        return self.weight @ z


class LinearImageEncoder:
    """flat image vector -> unit embedding."""

    def __init__(self, embed_dim: int, image_dim: int, seed: int):
        self.weight = _weight(embed_dim, image_dim, seed, "image")

    def embed(self, image: torch.Tensor) -> torch.Tensor:
        return _unit(self.weight @ image)


def _unit(v: torch.Tensor) -> torch.Tensor:
    norm = torch.linalg.norm(v)
    if float(norm.detach()) == 0.0:
        e1 = torch.zeros_like(v)
        e1[0] = 1.0
        return e1
    return v / norm


_TEXT_BUILDERS = {
    "tiny-text/1": lambda cfg: TinyTextEncoder(cfg.embed_dim, cfg.seed),
}
_AUDIO_BUILDERS = {
    "tiny-audio/1": lambda cfg: TinyAudioEncoder(cfg.embed_dim, cfg.seed),
}
_GENERATOR_BUILDERS = {
    "tiny-gen/1": lambda cfg: LinearGenerator(cfg.image_dim, cfg.latent_dim, cfg.seed),
}
_IMAGE_BUILDERS = {
    "tiny-image/1": lambda cfg: LinearImageEncoder(cfg.embed_dim, cfg.image_dim, cfg.seed),
}


@dataclass(frozen=True)
class ModelBundle:
    config: ModelConfig
    text_encoder: TinyTextEncoder
    audio_encoder: TinyAudioEncoder
    generator: LinearGenerator
    image_encoder: LinearImageEncoder

    def identifiers(self) -> dict:
        c = self.config
        return {
            "text_encoder": c.text_encoder,
            "audio_encoder": c.audio_encoder,
            "generator": c.generator,
            "image_encoder": c.image_encoder,
            "seed": c.seed,
        }


def _build(builders: dict, name: str, kind: str, config: ModelConfig):
    if name not in builders:
        raise ModelLoadError(f"cannot load {kind} model '{name}'")
    return builders[name](config)


def load_models(config: ModelConfig) -> ModelBundle:
    return ModelBundle(
        config=config,
        text_encoder=_build(_TEXT_BUILDERS, config.text_encoder, "text encoder", config),
        audio_encoder=_build(_AUDIO_BUILDERS, config.audio_encoder, "audio encoder", config),
        generator=_build(_GENERATOR_BUILDERS, config.generator, "generator", config),
        image_encoder=_build(_IMAGE_BUILDERS, config.image_encoder, "image encoder", config),
    )


def export_linear_model(bundle: ModelBundle, path: str | Path) -> None:
    """Dump the generator/encoder weights so other tools can replay the loss."""
    doc = {
        "identifiers": bundle.identifiers(),
        "latent_dim": bundle.config.latent_dim,
        "image_dim": bundle.config.image_dim,
        "embed_dim": bundle.config.embed_dim,
        "decoder": bundle.generator.weight.numpy().tolist(),
        "encoder": bundle.image_encoder.weight.numpy().tolist(),
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )

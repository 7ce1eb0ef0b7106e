"""Guidance embeddings: storage, cosine similarity, transition blending.

Vectors live on the unit sphere; every similarity downstream is a plain
dot product. The JSON manifest format is the interchange surface between
the plan compiler, the simulation harness and any real encoder backend:

    {"dim": D, "embeddings": [
        {"id": "...", "modality": "text|audio|blend",
         "vector": [...], "source": "..."}]}

The stub_* constructors give deterministic stand-in vectors (hashed or
spectral features through a seed-derived random projection) so the whole
pipeline runs at desk scale without any model weights.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_DIM = 512

_TEXT_FEATURE_DIM = 64
_UNIT_TOL = 1e-6


class StoreLoadError(ValueError):
    """Embedding manifest rejected; message names the offending id."""


def normalize_vector(v: np.ndarray) -> np.ndarray:
    """Scale to unit L2 norm; raises on a zero vector."""
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / norm


@dataclass(frozen=True)
class PromptEmbedding:
    """A unit-norm guidance vector with its provenance."""

    id: str
    modality: str  # "text" | "audio" | "blend"
    vector: np.ndarray
    source: str = ""

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float64)
        if not np.all(np.isfinite(v)):
            raise ValueError(f"embedding '{self.id}' has non-finite components")
        if abs(np.linalg.norm(v) - 1.0) > _UNIT_TOL:
            raise ValueError(f"embedding '{self.id}' is not unit-norm")
        object.__setattr__(self, "vector", v)

    @property
    def dim(self) -> int:
        return len(self.vector)


@dataclass(frozen=True)
class EmbeddingStore:
    """Immutable id -> embedding map with a uniform dimension."""

    dim: int
    embeddings: dict[str, PromptEmbedding] = field(default_factory=dict)

    def __post_init__(self):
        for emb in self.embeddings.values():
            if emb.dim != self.dim:
                raise StoreLoadError(
                    f"embedding '{emb.id}' has dimension {emb.dim}, store wants {self.dim}"
                )

    def __contains__(self, embedding_id: str) -> bool:
        return embedding_id in self.embeddings

    def __len__(self) -> int:
        return len(self.embeddings)

    def get(self, embedding_id: str) -> PromptEmbedding:
        if embedding_id not in self.embeddings:
            raise KeyError(f"no embedding with id '{embedding_id}'")
        return self.embeddings[embedding_id]

    def with_added(self, new: list[PromptEmbedding]) -> "EmbeddingStore":
        """Copy of the store with extra embeddings (duplicate ids rejected)."""
        merged = dict(self.embeddings)
        for emb in new:
            if emb.id in merged:
                raise StoreLoadError(f"duplicate embedding id '{emb.id}'")
            merged[emb.id] = emb
        return EmbeddingStore(dim=self.dim, embeddings=merged)


def parse_store(doc: dict) -> EmbeddingStore:
    """Build a store from a parsed manifest, normalizing every vector."""
    if "dim" not in doc:
        raise StoreLoadError("manifest missing 'dim'")
    dim = int(doc["dim"])
    if dim <= 0:
        raise StoreLoadError(f"manifest dimension must be positive, got {dim}")
    embeddings: dict[str, PromptEmbedding] = {}
    for record in doc.get("embeddings", []):
        emb_id = str(record.get("id", ""))
        if not emb_id:
            raise StoreLoadError("embedding record missing 'id'")
        if emb_id in embeddings:
            raise StoreLoadError(f"duplicate embedding id '{emb_id}'")
        vector = np.asarray(record.get("vector", []), dtype=np.float64)
        if len(vector) != dim:
            raise StoreLoadError(
                f"embedding '{emb_id}' has {len(vector)} components, store wants {dim}"
            )
        if not np.all(np.isfinite(vector)):
            raise StoreLoadError(f"embedding '{emb_id}' has non-finite components")
        if float(np.linalg.norm(vector)) == 0.0:
            raise StoreLoadError(f"embedding '{emb_id}' is a zero vector")
        embeddings[emb_id] = PromptEmbedding(
            id=emb_id,
            modality=str(record.get("modality", "text")),
            vector=normalize_vector(vector),
            source=str(record.get("source", "")),
        )
    return EmbeddingStore(dim=dim, embeddings=embeddings)


def load_store(path: str | Path) -> EmbeddingStore:
    """Load and validate an embedding manifest from disk."""
    with open(path, "r", encoding="utf-8") as f:
        return parse_store(json.load(f))


def store_to_dict(store: EmbeddingStore) -> dict:
    return {
        "dim": store.dim,
        "embeddings": [
            {
                "id": emb.id,
                "modality": emb.modality,
                "vector": [float(x) for x in emb.vector],
                "source": emb.source,
            }
            for emb in store.embeddings.values()
        ],
    }


def save_store(store: EmbeddingStore, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(store_to_dict(store), f, indent=1)
        f.write("\n")


def cosine(a: PromptEmbedding, b: PromptEmbedding) -> float:
    """Cosine similarity; both vectors are unit-norm so this is a dot product."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return float(np.dot(a.vector, b.vector))


def blend(a: PromptEmbedding, b: PromptEmbedding) -> PromptEmbedding:
    """Average two guidance vectors and renormalize.

    The renormalized midpoint is equidistant in cosine from both inputs,
    which is what carries visual context across a scene transition.
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    mean = (a.vector + b.vector) / 2.0
    if float(np.linalg.norm(mean)) == 0.0:
        raise ValueError(
            f"degenerate blend of '{a.id}' and '{b.id}': vectors are antipodal"
        )
    return PromptEmbedding(
        id=f"blend({a.id},{b.id})",
        modality="blend",
        vector=normalize_vector(mean),
        source=f"blend of {a.id} and {b.id}",
    )


def _project_features(features: np.ndarray, dim: int, seed: int) -> np.ndarray:
    """Fixed random projection keyed by (seed, feature length, dim)."""
    rng = np.random.default_rng([seed, len(features), dim])
    projection = rng.standard_normal((dim, len(features)))
    v = projection @ features
    if float(np.linalg.norm(v)) == 0.0:
        v = np.zeros(dim)
        v[0] = 1.0  # deterministic fallback for degenerate features
        return v
    return normalize_vector(v)


def _text_features(text: str) -> np.ndarray:
    """Hash text bytes into a fixed-length feature vector in [-1, 1)."""
    data = text.encode("utf-8")
    feats = np.empty(_TEXT_FEATURE_DIM)
    for k in range(_TEXT_FEATURE_DIM):
        digest = hashlib.sha256(data + k.to_bytes(4, "big")).digest()
        feats[k] = int.from_bytes(digest[:8], "big") / 2.0**63 - 1.0
    return feats


def stub_text_embedding(
    text: str, dim: int = DEFAULT_DIM, seed: int = 0, id: str | None = None
) -> PromptEmbedding:
    """Deterministic stand-in for a text encoder."""
    if dim <= 0:
        raise ValueError(f"dim must be positive, got {dim}")
    vector = _project_features(_text_features(text), dim, seed)
    return PromptEmbedding(
        id=id if id is not None else f"text:{hashlib.sha256(text.encode()).hexdigest()[:8]}",
        modality="text",
        vector=vector,
        source=f"stub-text(seed={seed})",
    )


def stub_audio_embedding(
    segment_mel_stats: np.ndarray,
    dim: int = DEFAULT_DIM,
    seed: int = 0,
    id: str | None = None,
) -> PromptEmbedding:
    """Deterministic stand-in for an audio encoder over per-band mean dB."""
    if dim <= 0:
        raise ValueError(f"dim must be positive, got {dim}")
    features = np.asarray(segment_mel_stats, dtype=np.float64)
    vector = _project_features(features, dim, seed)
    return PromptEmbedding(
        id=id if id is not None else "audio:stub",
        modality="audio",
        vector=vector,
        source=f"stub-audio(seed={seed})",
    )

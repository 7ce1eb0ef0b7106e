"""Readers and writers for the planner's file formats.

This package talks to the planner only through its files: the plan JSON
(schema version "1") and the embedding manifest JSON. The schemas are the
whole contract; nothing here imports the planner.
"""

import hashlib
import json
from pathlib import Path

import numpy as np

PLAN_SCHEMA_VERSION = "1"
_UNIT_TOL = 1e-6


class PlanFormatError(ValueError):
    """The plan file is missing or malformed."""


class StoreFormatError(ValueError):
    """The embedding manifest is missing or malformed."""


def read_plan(path: str | Path) -> dict:
    """Load a plan document and check the pieces this backend relies on."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise PlanFormatError(f"plan file is not valid JSON: {e}") from e
    if not isinstance(doc, dict) or "meta" not in doc or "entries" not in doc:
        raise PlanFormatError("plan file must be an object with meta and entries")
    meta = doc["meta"]
    version = meta.get("schema_version")
    if version != PLAN_SCHEMA_VERSION:
        raise PlanFormatError(
            f"unsupported plan schema version {version!r}, want {PLAN_SCHEMA_VERSION!r}"
        )
    if not isinstance(meta.get("segments"), list):
        raise PlanFormatError("plan meta is missing the segments table")
    for pos, entry in enumerate(doc["entries"]):
        if "frame_index" not in entry or "guidance" not in entry:
            raise PlanFormatError(f"entry {pos} is missing frame_index or guidance")
    return doc


def plan_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def referenced_ids(doc: dict) -> list[str]:
    """Unique guidance ids in entry order."""
    seen: dict[str, None] = {}
    for entry in doc["entries"]:
        for gid, _weight in entry["guidance"]:
            seen.setdefault(gid, None)
    return list(seen)


def read_store(path: str | Path) -> tuple[int, dict[str, np.ndarray]]:
    """Load an embedding manifest as {id: unit vector}."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise StoreFormatError(f"embedding manifest is not valid JSON: {e}") from e
    if not isinstance(doc, dict) or "dim" not in doc or "embeddings" not in doc:
        raise StoreFormatError("manifest must be an object with dim and embeddings")
    dim = int(doc["dim"])
    if dim <= 0:
        raise StoreFormatError(f"dim must be positive, got {dim}")
    vectors: dict[str, np.ndarray] = {}
    for record in doc["embeddings"]:
        eid = record.get("id")
        if not eid:
            raise StoreFormatError("embedding record without an id")
        if eid in vectors:
            raise StoreFormatError(f"duplicate embedding id '{eid}'")
        v = np.asarray(record.get("vector", []), dtype=np.float64)
        if v.shape != (dim,):
            raise StoreFormatError(
                f"embedding '{eid}' has length {v.size}, manifest wants {dim}"
            )
        if not np.all(np.isfinite(v)):
            raise StoreFormatError(f"embedding '{eid}' has non-finite values")
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise StoreFormatError(f"embedding '{eid}' is the zero vector")
        vectors[eid] = v / norm if abs(norm - 1.0) > _UNIT_TOL else v
    return dim, vectors


def write_store(dim: int, records: list[dict], path: str | Path) -> None:
    """Serialize deterministically: sorted keys, fixed indent, one newline."""
    doc = {"dim": dim, "embeddings": records}
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )

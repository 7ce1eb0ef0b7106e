"""Per-frame latent optimization against guidance embeddings.

Each frame is produced by gradient descent on

    L(z) = 1 - cos(embed(decode(z)), g) + lambda_l1 * |z - z_prev|_1

where g is the frame's guidance target and z_prev is the previous
frame's final latent, so the drift penalty trades semantic pull against
frame-to-frame coherence. Frames warm-start from z_prev, which keeps a
rendered sequence continuous even at lambda_l1 = 0.

A backend supplies decode / embed_image / cosine / cosine_grad (see
LinearBackend for the reference shapes). The linear stub keeps the whole
loop analytic and fast; a neural backend drops in behind the same four
methods.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .embed import EmbeddingStore
from .schedule import Plan, PlanEntry

DEFAULT_LR = 1e-3
DEFAULT_ITERS = 200


@dataclass(frozen=True)
class StepConfig:
    """Gradient descent settings for one frame."""

    lr: float = DEFAULT_LR
    iters: int = DEFAULT_ITERS
    lambda_l1: float = 0.0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.iters < 0:
            raise ValueError(f"iters must be >= 0, got {self.iters}")
        if self.lambda_l1 < 0:
            raise ValueError(f"lambda_l1 must be >= 0, got {self.lambda_l1}")


@dataclass(frozen=True)
class FrameResult:
    """Optimization outcome for one plan entry.

    wall_time_s is reporting-only; serialized metrics must omit it to
    stay byte-identical across runs.
    """

    frame_index: int
    time_s: float
    guidance_ids: tuple[str, ...]
    cosine: float
    loss: float
    l1_drift: float
    steps: int
    wall_time_s: float


class LinearBackend:
    """Linear decode/embed pair: decode(z) = A z, embed(x) = B x normalized.

    A is (image_dim, latent_dim), B is (embed_dim, image_dim). The
    composite W = B A makes every quantity analytic, which is what the
    finite-difference check leans on.
    """

    def __init__(self, A: np.ndarray, B: np.ndarray):
        A = np.asarray(A, dtype=np.float64)
        B = np.asarray(B, dtype=np.float64)
        if A.ndim != 2 or B.ndim != 2:
            raise ValueError("A and B must be matrices")
        if B.shape[1] != A.shape[0]:
            raise ValueError(
                f"B columns ({B.shape[1]}) must match A rows ({A.shape[0]})"
            )
        self.A = A
        self.B = B
        self._W = B @ A

    @property
    def latent_dim(self) -> int:
        return self.A.shape[1]

    @property
    def image_dim(self) -> int:
        return self.A.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.B.shape[0]

    def decode(self, z: np.ndarray) -> np.ndarray:
        return self.A @ z

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        u = self.B @ image
        norm = float(np.linalg.norm(u))
        if norm == 0.0:
            e = np.zeros(self.embed_dim)
            e[0] = 1.0  # stable fallback for an all-zero response
            return e
        return u / norm

    def cosine(self, z: np.ndarray, g: np.ndarray) -> float:
        return float(np.dot(self.embed_image(self.decode(z)), g))

    def cosine_grad(self, z: np.ndarray, g: np.ndarray) -> np.ndarray:
        u = self._W @ z
        norm = float(np.linalg.norm(u))
        if norm == 0.0:
            return np.zeros(self.latent_dim)
        unit = u / norm
        return self._W.T @ (g - float(np.dot(unit, g)) * unit) / norm


def make_stub_backend(
    embed_dim: int, image_dim: int, latent_dim: int, seed: int = 0
) -> LinearBackend:
    """Random full-rank linear backend, scaled so responses stay O(1)."""
    rng = np.random.default_rng([seed, embed_dim, image_dim, latent_dim])
    A = rng.standard_normal((image_dim, latent_dim)) / np.sqrt(latent_dim)
    B = rng.standard_normal((embed_dim, image_dim)) / np.sqrt(image_dim)
    return LinearBackend(A, B)


def guidance_target(entry: PlanEntry, store: EmbeddingStore) -> np.ndarray:
    """Weighted combination of an entry's guidance vectors, renormalized."""
    target = np.zeros(store.dim)
    for gid, weight in entry.guidance:
        target += weight * store.get(gid).vector
    norm = float(np.linalg.norm(target))
    if norm == 0.0:
        raise ValueError(
            f"frame {entry.frame_index}: guidance vectors cancel to zero"
        )
    return target / norm


def l1_drift(z: np.ndarray, z_prev: np.ndarray) -> float:
    return float(np.abs(z - z_prev).sum())


def loss(
    backend, z: np.ndarray, g: np.ndarray, z_prev: np.ndarray, lambda_l1: float
) -> float:
    return 1.0 - backend.cosine(z, g) + lambda_l1 * l1_drift(z, z_prev)


def loss_grad(
    backend, z: np.ndarray, g: np.ndarray, z_prev: np.ndarray, lambda_l1: float
) -> np.ndarray:
    # subgradient convention: sign(0) = 0 on the drift term
    return -backend.cosine_grad(z, g) + lambda_l1 * np.sign(z - z_prev)


def optimize_frame(
    backend,
    g: np.ndarray,
    z0: np.ndarray,
    z_prev: np.ndarray,
    config: StepConfig,
    frame_index: int = 0,
    time_s: float = 0.0,
    guidance_ids: tuple[str, ...] = (),
) -> tuple[np.ndarray, FrameResult]:
    """Plain gradient descent from z0; returns the final latent and metrics."""
    started = time.perf_counter()
    z = np.asarray(z0, dtype=np.float64).copy()
    for _ in range(config.iters):
        z -= config.lr * loss_grad(backend, z, g, z_prev, config.lambda_l1)
    result = FrameResult(
        frame_index=frame_index,
        time_s=time_s,
        guidance_ids=guidance_ids,
        cosine=backend.cosine(z, g),
        loss=loss(backend, z, g, z_prev, config.lambda_l1),
        l1_drift=l1_drift(z, z_prev),
        steps=config.iters,
        wall_time_s=time.perf_counter() - started,
    )
    return z, result


def run_plan(
    plan: Plan,
    store: EmbeddingStore,
    backend,
    config: StepConfig,
    seed: int = 0,
    z_init: np.ndarray | None = None,
) -> tuple[list[FrameResult], np.ndarray]:
    """Optimize every frame in order, chaining latents frame to frame.

    Frame f starts from and is anchored to frame f-1's final latent;
    the first frame uses the seed-drawn (or supplied) initial latent
    for both. Returns per-frame results and the per-frame final-latent
    snapshots as an (n_frames, latent_dim) array.
    """
    if store.dim != backend.embed_dim:
        raise ValueError(
            f"store dimension {store.dim} != backend embedding dimension "
            f"{backend.embed_dim}"
        )
    if z_init is None:
        rng = np.random.default_rng(seed)
        z_anchor = rng.standard_normal(backend.latent_dim)
    else:
        z_anchor = np.asarray(z_init, dtype=np.float64).copy()
        if z_anchor.shape != (backend.latent_dim,):
            raise ValueError(
                f"z_init shape {z_anchor.shape} != ({backend.latent_dim},)"
            )
    results: list[FrameResult] = []
    snapshots = np.empty((len(plan.entries), backend.latent_dim))
    for i, entry in enumerate(plan.entries):
        g = guidance_target(entry, store)
        z_anchor, result = optimize_frame(
            backend,
            g,
            z0=z_anchor,
            z_prev=z_anchor,
            config=config,
            frame_index=entry.frame_index,
            time_s=entry.time_s,
            guidance_ids=tuple(gid for gid, _ in entry.guidance),
        )
        results.append(result)
        snapshots[i] = z_anchor
    return results, snapshots


def finite_diff_check(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    z: np.ndarray,
    eps: float = 1e-5,
) -> float:
    """Max relative mismatch between `grad` and central differences of `fun`."""
    analytic = np.asarray(grad(z), dtype=np.float64)
    fd = np.empty_like(analytic)
    for i in range(len(z)):
        bump = np.zeros_like(z)
        bump[i] = eps
        fd[i] = (fun(z + bump) - fun(z - bump)) / (2.0 * eps)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-8)
    return float(np.max(np.abs(analytic - fd) / denom))

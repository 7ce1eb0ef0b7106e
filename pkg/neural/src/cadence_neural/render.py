"""The rendering loop: one optimized latent and one PNG per plan entry.

Per frame the latent minimizes 1 - cos(embed(decode(z)), g) plus
lambda * |z - z_prev|_1 by plain gradient descent, warm-started from and
anchored to the previous frame's final latent. torch autograd supplies the
gradient; abs() backward already uses the sign convention with 0 at the
anchor, so the step matches the planner's stub optimizer exactly.

The frame manifest is rewritten after every frame. If a frame dies (model
bug, CUDA fault), the manifest on disk still lists every finished frame and
the error names the frame index.
"""

import json
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .models import ModelBundle
from .planio import plan_sha256, read_plan, referenced_ids

DEFAULT_LR = 1e-3
DEFAULT_ITERS = 50

FRAME_NAME = "frame_{:06d}.png"
MANIFEST_NAME = "frames.json"


class RenderError(RuntimeError):
    """A frame failed; the message starts with the frame index."""


def frame_loss(
    bundle: ModelBundle,
    z: torch.Tensor,
    g: torch.Tensor,
    z_prev: torch.Tensor,
    lambda_l1: float,
) -> torch.Tensor:
    u = bundle.image_encoder.embed(bundle.generator.decode(z))
    return 1.0 - torch.dot(u, g) + lambda_l1 * torch.sum(torch.abs(z - z_prev))


def _optimize(bundle, z, g, z_prev, lr, iters, lambda_l1):
    for _ in range(iters):
        zv = z.detach().requires_grad_(True)
        loss = frame_loss(bundle, zv, g, z_prev, lambda_l1)
        (grad,) = torch.autograd.grad(loss, zv)
        z = zv.detach() - lr * grad
    return z.detach()


def _guidance(entry: dict, vectors: dict[str, np.ndarray]) -> torch.Tensor:
    acc = None
    for gid, weight in entry["guidance"]:
        term = float(weight) * vectors[gid]
        acc = term if acc is None else acc + term
    norm = np.linalg.norm(acc)
    if norm == 0.0:
        raise ValueError(
            f"guidance for frame {entry['frame_index']} cancels to the zero vector"
        )
    return torch.tensor(acc / norm, dtype=torch.float64)


def _to_png(image_vec: torch.Tensor, size: int, path: Path) -> None:
    # tanh squash keeps arbitrary linear outputs inside [0, 255]
    pix = 0.5 * (np.tanh(image_vec.numpy()) + 1.0)
    arr = (pix * 255.0).round().astype(np.uint8).reshape(size, size, 3)
    Image.fromarray(arr, mode="RGB").save(path)


def render_plan(
    plan_path: str | Path,
    vectors: dict[str, np.ndarray],
    bundle: ModelBundle,
    out_dir: str | Path,
    lr: float = DEFAULT_LR,
    iters: int = DEFAULT_ITERS,
    lambda_l1: float = 0.0,
    seed: int = 0,
) -> dict:
    """Render every entry in plan order; returns the frame manifest."""
    doc = read_plan(plan_path)
    missing = [gid for gid in referenced_ids(doc) if gid not in vectors]
    if missing:
        raise ValueError(f"plan references unknown embedding ids: {missing}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "plan": {"path": str(plan_path), "sha256": plan_sha256(plan_path)},
        "models": bundle.identifiers(),
        "total_l1_drift": 0.0,
        "frames": [],
    }

    def flush():
        (out / MANIFEST_NAME).write_text(
            json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8"
        )

    cfg = bundle.config
    g_init = torch.Generator().manual_seed(seed)
    z_prev = cfg.init_scale * torch.randn(cfg.latent_dim, generator=g_init, dtype=torch.float64)

    flush()
    for pos, entry in enumerate(doc["entries"]):
        try:
            g = _guidance(entry, vectors)
            z = _optimize(bundle, z_prev.clone(), g, z_prev, lr, iters, lambda_l1)
            with torch.no_grad():
                final = float(frame_loss(bundle, z, g, z_prev, lambda_l1))
                cosine = float(
                    torch.dot(bundle.image_encoder.embed(bundle.generator.decode(z)), g)
                )
                name = FRAME_NAME.format(int(entry["frame_index"]))
                _to_png(bundle.generator.decode(z), cfg.image_size, out / name)
        except Exception as e:
            flush()
            raise RenderError(f"frame {entry.get('frame_index', pos)}: {e}") from e
        manifest["frames"].append(
            {
                "frame_index": int(entry["frame_index"]),
                "image": name,
                "final_loss": final,
                "cosine_to_guidance": cosine,
            }
        )
        manifest["total_l1_drift"] += float(torch.sum(torch.abs(z - z_prev)))
        flush()
        z_prev = z
    return manifest

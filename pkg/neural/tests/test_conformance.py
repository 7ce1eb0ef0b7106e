"""Cross-package conformance: the planner's validators are the oracles."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import torch
from PIL import Image

from cadence import LinearBackend, load_plan, load_store, loss, validate_plan
from cadence_neural import (
    ModelConfig,
    export_embeddings,
    export_linear_model,
    frame_loss,
    load_models,
    plan_sha256,
    read_plan,
    read_store,
    read_wav,
    render_plan,
)


def run_backend(*args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "cadence_neural", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


def test_exported_manifest_loads_in_planner_with_zero_violations(planned_track):
    root = planned_track["root"]
    proc = run_backend(
        "export-embeddings", "--audio", "song.wav", "--plan", "song.plan.json",
        "--out", "neural.embeddings.json", "--seed", "0", cwd=root,
    )
    assert proc.returncode == 0, proc.stderr
    store = load_store(root / "neural.embeddings.json")
    plan = load_plan(root / "song.plan.json")
    assert validate_plan(plan, store) == []


def test_one_audio_per_segment_one_text_per_lyric_line(five_entry_plan):
    doc = read_plan(five_entry_plan["plan"])
    samples, sr = read_wav(five_entry_plan["wav"])
    bundle = load_models(ModelConfig())
    out = five_entry_plan["root"] / "counting.embeddings.json"
    count = export_embeddings(doc, samples, sr, bundle, out)
    manifest = json.loads(out.read_text())
    # 2 segments, 1 lyric -> 3 embeddings, uniform length
    assert count == 3 == len(manifest["embeddings"])
    ids = sorted(e["id"] for e in manifest["embeddings"])
    assert ids == ["audio/seg0000", "audio/seg0001", "text/seg0001"]
    assert all(len(e["vector"]) == manifest["dim"] for e in manifest["embeddings"])


def test_export_is_deterministic(five_entry_plan):
    doc = read_plan(five_entry_plan["plan"])
    samples, sr = read_wav(five_entry_plan["wav"])
    bundle = load_models(ModelConfig(seed=12))
    a = five_entry_plan["root"] / "det_a.json"
    b = five_entry_plan["root"] / "det_b.json"
    export_embeddings(doc, samples, sr, bundle, a)
    export_embeddings(doc, samples, sr, bundle, b)
    assert a.read_bytes() == b.read_bytes()


@pytest.fixture(scope="module")
def rendered(five_entry_plan, tmp_path_factory):
    root = five_entry_plan["root"]
    store = root / "render.embeddings.json"
    proc = run_backend(
        "export-embeddings", "--audio", "hand.wav", "--plan", "hand.plan.json",
        "--out", str(store), "--seed", "0", cwd=root,
    )
    assert proc.returncode == 0, proc.stderr
    out = tmp_path_factory.mktemp("frames")
    proc = run_backend(
        "render-plan", "--plan", str(five_entry_plan["plan"]),
        "--embeddings", str(store), "--out", str(out),
        "--seed", "0", "--iters-per-frame", "25", cwd=root,
    )
    assert proc.returncode == 0, proc.stderr
    return {"out": out, "store": store}


def test_five_entry_plan_renders_five_pngs_in_plan_order(rendered, five_entry_plan):
    out = rendered["out"]
    pngs = sorted(p.name for p in out.glob("*.png"))
    assert pngs == [f"frame_{i:06d}.png" for i in range(5)]
    manifest = json.loads((out / "frames.json").read_text())
    assert [f["frame_index"] for f in manifest["frames"]] == [0, 1, 2, 3, 4]
    assert [f["image"] for f in manifest["frames"]] == pngs
    assert manifest["plan"]["sha256"] == plan_sha256(five_entry_plan["plan"])
    for record in manifest["frames"]:
        assert set(record) == {"frame_index", "image", "final_loss", "cosine_to_guidance"}
    cfg = ModelConfig()
    img = Image.open(out / pngs[0])
    assert img.size == (cfg.image_size, cfg.image_size)
    assert img.mode == "RGB"


def test_render_is_deterministic(rendered, five_entry_plan):
    _dim, vectors = read_store(rendered["store"])
    bundle = load_models(ModelConfig())
    root = five_entry_plan["root"]
    runs = []
    for name in ("a", "b"):
        out = root / f"redo_{name}"
        render_plan(five_entry_plan["plan"], vectors, bundle, out, iters=10, seed=4)
        runs.append(
            (
                (out / "frames.json").read_bytes(),
                [p.read_bytes() for p in sorted(out.glob("*.png"))],
            )
        )
    assert runs[0] == runs[1]


def test_loss_definition_matches_planner_on_exported_model(tmp_path):
    bundle = load_models(ModelConfig(seed=21))
    path = tmp_path / "model.json"
    export_linear_model(bundle, path)
    doc = json.loads(path.read_text())
    backend = LinearBackend(np.array(doc["decoder"]), np.array(doc["encoder"]))
    assert backend.latent_dim == doc["latent_dim"]

    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(20):
        z = rng.standard_normal(doc["latent_dim"])
        z_prev = rng.standard_normal(doc["latent_dim"])
        g = rng.standard_normal(doc["embed_dim"])
        g /= np.linalg.norm(g)
        for lam in (0.0, 0.3, 10.0):
            ours = float(
                frame_loss(
                    bundle,
                    torch.tensor(z, dtype=torch.float64),
                    torch.tensor(g, dtype=torch.float64),
                    torch.tensor(z_prev, dtype=torch.float64),
                    lam,
                )
            )
            theirs = loss(backend, z, g, z_prev, lam)
            worst = max(worst, abs(ours - theirs))
    print(f"loss parity: worst |backend - planner| = {worst:.3e}")
    assert worst < 1e-5


def test_backend_package_never_imports_the_planner():
    import cadence_neural

    src = next(iter(cadence_neural.__path__))
    for py in Path(src).glob("*.py"):
        text = py.read_text()
        assert "import cadence\n" not in text and "from cadence " not in text, py
        assert "from cadence." not in text, py

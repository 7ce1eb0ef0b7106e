"""Hand a planner-built plan to the neural backend, files only.

Requires the cadence-neural package (see neural/). Reuses the WAV, LRC, and
plan from cli_pipeline.py, runs export-embeddings and render-plan, then
cross-checks the handoff: the exported manifest must validate against the
plan with zero violations, and the frame manifest must match the plan
entry for entry.

Run demos/cli_pipeline.py first.
"""

import json
import pathlib
import subprocess
import sys

out = pathlib.Path(__file__).parent / "out"
if not (out / "track.plan.json").exists():
    raise SystemExit("run demos/cli_pipeline.py first to produce track.plan.json")


def run(module, *args):
    print(f"$ {module.replace('_', '-')} " + " ".join(args))
    proc = subprocess.run(
        [sys.executable, "-m", module, *args], capture_output=True, text=True, cwd=out
    )
    if proc.returncode != 0:
        print(proc.stderr, end="")
        raise SystemExit(f"stage failed with exit code {proc.returncode}")
    for line in proc.stdout.splitlines():
        print(f"  {line}")


run("cadence_neural", "export-embeddings", "--audio", "track.wav",
    "--plan", "track.plan.json", "--out", "neural.embeddings.json", "--seed", "0")
run("cadence_neural", "render-plan", "--plan", "track.plan.json",
    "--embeddings", "neural.embeddings.json", "--out", "frames",
    "--seed", "0", "--iters-per-frame", "30", "--lambda-l1", "0.05")

# the planner validates what the backend produced
from cadence import load_plan, load_store, validate_plan  # noqa: E402

plan = load_plan(out / "track.plan.json")
store = load_store(out / "neural.embeddings.json")
violations = validate_plan(plan, store)
print(f"planner validation of the exported manifest: {len(violations)} violations")

manifest = json.loads((out / "frames" / "frames.json").read_text())
frames = manifest["frames"]
assert [f["frame_index"] for f in frames] == [e.frame_index for e in plan.entries]
pngs = sorted((out / "frames").glob("*.png"))
mean_cos = sum(f["cosine_to_guidance"] for f in frames) / len(frames)
print(f"rendered {len(pngs)} PNGs for {len(plan.entries)} plan entries, "
      f"mean cosine {mean_cos:.3f}, total L1 drift {manifest['total_l1_drift']:.3f}")
print(f"frame manifest records plan sha256 {manifest['plan']['sha256'][:16]}...")

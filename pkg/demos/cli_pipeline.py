"""Drive the four CLI stages on a generated track, checking determinism.

Writes a 12 s click-track WAV and a three-line LRC into demos/out/, then
shells out to `python3 -m cadence` for analyze, plan, viz, and simulate.
The plan and simulate stages run twice to show byte-identical artifacts.
"""

import hashlib
import json
import pathlib
import subprocess
import sys

import numpy as np

from cadence import DEFAULT_SAMPLE_RATE, encode_wav_pcm16

out = pathlib.Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

# --- fixture: 12 s of 112 BPM clicks and three lyric lines -------------------
sr = DEFAULT_SAMPLE_RATE
rng = np.random.default_rng(41)
samples = 0.01 * rng.standard_normal(12 * sr)
period = 60.0 / 112.0
burst = rng.standard_normal(int(0.005 * sr))
t = period
while t < 12.0 - 0.01:
    i = int(t * sr)
    samples[i : i + burst.size] += 0.8 * burst
    t += period

wav = out / "track.wav"
wav.write_bytes(encode_wav_pcm16(samples, sr))
lrc = out / "track.lrc"
lrc.write_text("[00:01.0]first verse\n[00:05.5]second verse\n[00:09.0]last call\n")
print(f"fixture: {wav.name} ({wav.stat().st_size} bytes), {lrc.name}")


def run(*args):
    cmd = [sys.executable, "-m", "cadence", *args]
    print("$ cadence " + " ".join(args))
    proc = subprocess.run(cmd, capture_output=True, text=True, cwd=out)
    if proc.returncode != 0:
        print(proc.stderr, end="")
        raise SystemExit(f"stage failed with exit code {proc.returncode}")
    for line in proc.stdout.splitlines():
        print(f"  {line}")


def digest(name):
    return hashlib.sha256((out / name).read_bytes()).hexdigest()[:12]


# --- the four stages ----------------------------------------------------------
run("analyze", "--audio", "track.wav", "--out", "analysis.json")
run("plan", "--audio", "track.wav", "--lyrics", "track.lrc",
    "--seed", "11", "--fps-min", "1", "--fps-max", "6", "--out", "track.plan.json")
run("viz", "--plan", "track.plan.json", "--out", "track.svg")
run("simulate", "--plan", "track.plan.json", "--seed", "11",
    "--iters-per-frame", "30", "--lambda-l1", "0.1", "--check-grad",
    "--out", "sim")

# --- determinism: same seeds, same bytes ---------------------------------------
artifacts = ("track.plan.json", "track.plan.embeddings.json", "sim/metrics.jsonl")
first = {n: digest(n) for n in artifacts}
run("plan", "--audio", "track.wav", "--lyrics", "track.lrc",
    "--seed", "11", "--fps-min", "1", "--fps-max", "6", "--out", "track.plan.json")
run("simulate", "--plan", "track.plan.json", "--seed", "11",
    "--iters-per-frame", "30", "--lambda-l1", "0.1", "--out", "sim")
for name, d in first.items():
    again = digest(name)
    status = "identical" if again == d else "DIFFERENT"
    print(f"{name}: sha256 {d} -> {again} ({status})")

# --- peek at the artifacts ------------------------------------------------------
doc = json.loads((out / "track.plan.json").read_text())
print(f"plan meta: mode={doc['meta']['mode']} frames={len(doc['entries'])} "
      f"segments={len(doc['meta']['segments'])}")
lines = (out / "sim" / "metrics.jsonl").read_text().splitlines()
print(f"metrics: {len(lines)} lines; first = {lines[0][:96]}...")

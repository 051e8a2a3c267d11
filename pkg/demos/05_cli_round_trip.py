"""Drive the command-line tool: generate scenes, fuse them, evaluate, render."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

CONFIG = """
[scene]
n_scenes = 3
n_instances = 4
seed = 10

[scene.noise]
label_flip_prob = 0.02
blur_radius = 1
prob_temperature = 1.5
"""


def run(*args):
    out = subprocess.run([sys.executable, "-m", "patchfuse", *args], capture_output=True, text=True)
    print(f"$ patchfuse {' '.join(args)}\n{out.stdout.rstrip()}")
    if out.returncode:
        print(out.stderr, file=sys.stderr)
        sys.exit(out.returncode)


with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    (root / "run.toml").write_text(CONFIG)
    run("generate", str(root / "run.toml"), str(root / "scenes"))
    run("fuse", str(root / "scenes"), "-c", str(root / "run.toml"))
    run("eval", str(root / "scenes"), str(root / "scenes"), "--json", str(root / "report.json"))
    run("render", str(root / "scenes/scene_000/pred.lmap"), str(root / "pred.ppm"))

    log = json.loads((root / "scenes/scene_000/pred.log.json").read_text())
    print("run log keys:", sorted(log))
    print("ppm bytes:", (root / "pred.ppm").stat().st_size)

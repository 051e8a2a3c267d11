"""How quality degrades as patch predictions get noisier."""
import numpy as np

from patchfuse import FuseConfig, NoiseSpec, SceneSpec, evaluate, fuse
from patchfuse.synth import make_scene_patches

SEEDS = range(6)

print(f"{'flip':>6} {'temp':>5} {'FIoU':>6} {'ObjRe':>6} {'pairs':>6}")
for flip, temp in [(0.0, 1.0), (0.01, 1.5), (0.02, 1.5), (0.04, 2.0)]:
    rows = []
    for seed in SEEDS:
        spec = SceneSpec(n_instances=1 + seed % 5, seed=seed, noise=NoiseSpec(flip, 1, temp))
        scene, preds = make_scene_patches(spec)
        res = fuse(preds, spec.image_w, spec.image_h, FuseConfig(seed=seed))
        v = evaluate(res.labels, scene.gt, seed=seed).values()
        rows.append([v["fiou"], v["obj_re"], v["pct_corr_pxl_pair_fgr"]])
    m = np.nanmean(rows, axis=0)
    print(f"{flip:6.2f} {temp:5.1f} {m[0]:6.3f} {m[1]:6.3f} {m[2]:6.3f}")

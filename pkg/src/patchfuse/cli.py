"""Command-line entry point: generate, fuse, eval, render.

Exit codes: 0 success, 1 internal error, 2 bad input (config, file format,
dimension mismatch, unreadable path).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .core import DimensionError
from .formats import (MANIFEST_NAME, ConfigError, FormatError, atomic_write, load_config,
                      read_lmap, read_manifest, write_lmap, write_patches, write_ppm)
from .metrics import aggregate, evaluate
from .pipeline import fuse
from .synth import corrupt_to_patches, generate_scene

log = logging.getLogger("patchfuse")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2


def cmd_generate(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out_dir)
    for i in range(cfg.scene.n_scenes):
        spec = cfg.scene_spec(i)
        scene = generate_scene(spec)
        layout = cfg.layout_config(spec.image_w, spec.image_h, spec.horizon_y)
        preds = corrupt_to_patches(scene.gt, layout, spec.noise, spec.seed)
        d = out / f"scene_{i:03d}"
        write_lmap(d / "gt.lmap", scene.gt)
        write_patches(d, preds, spec.image_w, spec.image_h, cfg.inference.n_max, layout)
        log.info("%s: %d instances, %d patches", d, spec.n_instances, len(preds))
    print(f"wrote {cfg.scene.n_scenes} scene(s) to {out}")
    return EXIT_OK


def _manifest_dirs(root: Path) -> list[Path]:
    if root.is_file():
        return [root.parent]
    if (root / MANIFEST_NAME).exists():
        return [root]
    dirs = sorted(p.parent for p in root.glob(f"*/{MANIFEST_NAME}"))
    if not dirs:
        raise FormatError(f"{root}: no {MANIFEST_NAME} found")
    return dirs


def cmd_fuse(args) -> int:
    cfg = load_config(args.config)
    fcfg = cfg.fuse_config(postprocess=False if args.no_pp else None)
    dirs = _manifest_dirs(Path(args.input))
    if args.out and len(dirs) > 1:
        raise FormatError(f"{args.input}: --out needs a single scene directory")
    for d in dirs:
        man = read_manifest(d)
        fcfg.n_max = man.n_max
        res = fuse(man.patches, man.width, man.height, fcfg)
        out = Path(args.out) if args.out else d / "pred.lmap"
        write_lmap(out, res.labels)
        run_log = out.with_suffix(".log.json")
        atomic_write(run_log, (json.dumps(res.log_dict(), indent=2) + "\n").encode())
        state = "applied" if res.postprocessed else "skipped (--no-pp)"
        print(f"{out}: energy {res.initial_energy:.4f} -> {res.final_energy:.4f}, "
              f"{len(res.energy_trace)} moves, postprocess {state}")
    return EXIT_OK


def _eval_pairs(pred: Path, gt: Path, pred_name: str, gt_name: str) -> list[tuple[str, Path, Path]]:
    if pred.is_file() and gt.is_file():
        return [(gt.stem, pred, gt)]
    if pred.is_dir() and gt.is_dir():
        pairs = []
        for g in sorted(gt.rglob(gt_name)):
            rel = g.parent.relative_to(gt)
            p = pred / rel / pred_name
            if not p.exists():
                raise FormatError(f"{p}: prediction missing for {g}")
            pairs.append((str(rel) if str(rel) != "." else g.stem, p, g))
        if not pairs:
            raise FormatError(f"{gt}: no {gt_name} files found")
        return pairs
    for p in (pred, gt):
        if not p.exists():
            raise FileNotFoundError(f"{p}: no such file or directory")
    raise FormatError("prediction and ground truth must both be files or both directories")


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    frac = args.sample_frac if args.sample_frac is not None else cfg.metrics.sample_frac
    seed = args.seed if args.seed is not None else cfg.metrics.seed
    pairs = _eval_pairs(Path(args.pred), Path(args.gt), args.pred_name, args.gt_name)
    reports = {}
    for name, p, g in pairs:
        reports[name] = evaluate(read_lmap(p), read_lmap(g), frac, seed)
    doc = {"images": {k: r.to_dict() for k, r in reports.items()}}
    if len(reports) > 1:
        for name, r in reports.items():
            print(f"== {name}\n{r.to_text()}\n")
        agg = aggregate(list(reports.values()))
        doc["aggregate"] = agg.to_dict()
        doc["aggregate_flags"] = agg.flags
        print(f"== aggregate\n{agg.to_text()}")
    else:
        print(next(iter(reports.values())).to_text())
    if args.json:
        atomic_write(args.json, (json.dumps(doc, indent=2) + "\n").encode())
    return EXIT_OK


def cmd_render(args) -> int:
    write_ppm(args.out, read_lmap(args.lmap))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="patchfuse", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write synthetic scenes: gt.lmap, patch tensors, manifest")
    g.add_argument("config", nargs="?", help="TOML run config (defaults if omitted)")
    g.add_argument("out_dir")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fuse", help="fuse patch predictions into pred.lmap plus a run log")
    f.add_argument("input", help="scene directory, manifest file, or a directory of scene directories")
    f.add_argument("-c", "--config")
    f.add_argument("-o", "--out", help="output .lmap (default: <scene>/pred.lmap)")
    f.add_argument("--no-pp", action="store_true", help="skip post-processing")
    f.set_defaults(func=cmd_fuse)

    e = sub.add_parser("eval", help="metrics report for one map pair or two directory trees")
    e.add_argument("pred")
    e.add_argument("gt")
    e.add_argument("-c", "--config")
    e.add_argument("--json", help="also write the report as JSON")
    e.add_argument("--sample-frac", type=float)
    e.add_argument("--seed", type=int)
    e.add_argument("--pred-name", default="pred.lmap")
    e.add_argument("--gt-name", default="gt.lmap")
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("render", help="color a label map as a binary PPM")
    r.add_argument("lmap")
    r.add_argument("out")
    r.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FormatError, DimensionError, OSError) as e:
        print(f"patchfuse {args.command}: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"patchfuse {args.command}: internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL

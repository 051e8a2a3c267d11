"""The acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py`` to see the summary block at the end.
"""
import time

import numpy as np
import pytest
from conftest import blocky_map, random_instance
from oracles import (bfs_components, binary_energies_all, brute_min_cut, energies_of_all,
                     exhaustive_pixel_pairs, naive_metrics)

from patchfuse.core import LabelMap
from patchfuse.energy import total_energy
from patchfuse.inference import SwapSchedule, build_swap_energy, initial_labeling, minimize
from patchfuse.layout import LayoutConfig, Scale, tile_patches
from patchfuse.maxflow import FlowGraph
from patchfuse.metrics import evaluate
from patchfuse.pipeline import FuseConfig, fuse
from patchfuse.postprocess import fill_holes, postprocess, relabel_reorder, remove_small
from patchfuse.qpbo import BinaryEnergy, energy_of, solve_qpbo
from patchfuse.synth import NoiseSpec, SceneSpec, corrupt_to_patches, generate_scene, make_scene_patches

pytestmark = pytest.mark.acceptance


def _same(a: float, b: float) -> bool:
    return (np.isnan(a) and np.isnan(b)) or a == b


# 1 -------------------------------------------------------------------------------

def test_c01_maxflow_oracle(acceptance):
    rng = np.random.default_rng(101)
    worst, t0 = 0.0, time.perf_counter()
    for _ in range(500):
        n = int(rng.integers(1, 11))
        terminals = [(i, int(rng.integers(0, 9)), int(rng.integers(0, 9)))
                     for i in range(n) if rng.random() < 0.7]
        arcs = []
        for _ in range(int(rng.integers(0, 3 * n + 1))):
            u, v = (int(x) for x in rng.integers(0, n, 2))
            arcs.append((u, v, int(rng.integers(0, 9)), int(rng.integers(0, 9))))
        g = FlowGraph(n)
        for node, cs, ct in terminals:
            g.add_terminal(node, cs, ct)
        for u, v, cuv, cvu in arcs:
            g.add_arc(u, v, cuv, cvu)
        flow, _ = g.solve()
        worst = max(worst, abs(flow - brute_min_cut(n, terminals, arcs)))
    dt = time.perf_counter() - t0
    ok = acceptance(1, worst <= 1e-9 and dt < 5.0, f"max |flow - min cut| = {worst:.1e}, {dt:.2f} s")
    assert ok


# 2, 3 ----------------------------------------------------------------------------

def _random_binary(rng, n, submodular=False):
    unary = rng.uniform(-5, 5, (n, 2))
    pairwise = []
    for _ in range(int(rng.integers(0, 2 * n + 1)) if n > 1 else 0):
        u, v = (int(x) for x in rng.choice(n, 2, replace=False))
        t = rng.uniform(-5, 5, 4)
        if submodular and t[1] + t[2] < t[0] + t[3]:
            t[1] += t[0] + t[3] - t[1] - t[2] + rng.uniform(0, 1)
        pairwise.append((u, v, *t))
    return unary, pairwise


def _to_energy(n, unary, pairwise):
    return BinaryEnergy.from_terms(n, {i: tuple(unary[i]) for i in range(n)}, pairwise)


def test_c02_qpbo_optimal_when_full_and_persistent(acceptance):
    rng = np.random.default_rng(202)
    full = bad_full = bad_persist = 0
    t0 = time.perf_counter()
    for _ in range(300):
        n = int(rng.integers(1, 13))
        unary, pairwise = _random_binary(rng, n)
        x = solve_qpbo(_to_energy(n, unary, pairwise)).values
        X, e = binary_energies_all(n, unary, pairwise)
        lo = e.min()
        lab = x >= 0
        if lab.all():
            full += 1
            bad_full += abs(energy_of(_to_energy(n, unary, pairwise), x) - lo) > 1e-9
        consistent = np.all(X[:, lab] == x[lab], axis=1)
        bad_persist += abs(e[consistent].min() - lo) > 1e-9
    dt = time.perf_counter() - t0
    ok = bad_full == 0 and bad_persist == 0 and dt < 30.0
    acceptance(2, ok, f"{full}/300 fully labeled, {bad_full} suboptimal, "
                      f"{bad_persist} persistency failures, {dt:.2f} s")
    assert ok


def test_c03_submodular_fully_labeled(acceptance):
    rng = np.random.default_rng(303)
    partial = 0
    for _ in range(200):
        n = int(rng.integers(1, 13))
        unary, pairwise = _random_binary(rng, n, submodular=True)
        e = _to_energy(n, unary, pairwise)
        assert e.is_submodular().all()
        partial += solve_qpbo(e).n_unlabeled > 0
    ok = acceptance(3, partial == 0, f"{200 - partial}/200 fully labeled")
    assert ok


# 4 -------------------------------------------------------------------------------

def test_c04_swap_reduction(acceptance):
    rng = np.random.default_rng(404)
    worst, checked = 0.0, 0
    for _ in range(100):
        n_max = int(rng.integers(2, 6))
        _, _, model = random_instance(rng, 6, 6, n_max, n_patches=4, k=10)
        y = LabelMap(rng.integers(0, n_max + 1, (6, 6)), n_max)
        flat = y.flat()
        for a in range(n_max + 1):
            for b in range(a + 1, n_max + 1):
                prob = build_swap_energy(y, a, b, model)
                for _ in range(50):
                    bits = rng.integers(0, 2, prob.energy.n_vars)
                    out = flat.copy()
                    out[prob.pixels] = np.where(bits == 1, b, a)
                    rebuilt = LabelMap(out.reshape(6, 6), n_max)
                    lhs = energy_of(prob.energy, bits) + prob.constant
                    worst = max(worst, abs(lhs - total_energy(rebuilt, model)))
                    checked += 1
    ok = acceptance(4, worst <= 1e-9, f"{checked} assignments, max deviation {worst:.1e}")
    assert ok


# 5 -------------------------------------------------------------------------------

_SMALL_LAYOUT = dict(patch_sizes={Scale.LARGE: 64, Scale.MEDIUM: 32, Scale.SMALL: 16},
                     strides={Scale.LARGE: 32, Scale.MEDIUM: 16, Scale.SMALL: 8},
                     band_half_heights={Scale.MEDIUM: 16, Scale.SMALL: 8})


@pytest.mark.slow
def test_c05_energy_monotone(acceptance):
    violations = moved = 0
    for seed in range(100):
        spec = SceneSpec(image_w=96, image_h=64, horizon_y=20, n_instances=1 + seed % 4, seed=seed,
                         noise=NoiseSpec(0.05, 1, 1.5), min_visible=120)
        _, preds = make_scene_patches(spec, spec.layout(**_SMALL_LAYOUT))
        res = fuse(preds, spec.image_w, spec.image_h, FuseConfig(seed=seed))
        trace = [res.initial_energy] + res.energy_trace
        violations += not all(b < a for a, b in zip(trace, trace[1:]))
        violations += not res.final_energy <= res.initial_energy
        moved += bool(res.energy_trace)
    ok = acceptance(5, violations == 0, f"100 runs, {moved} with accepted moves, {violations} violations")
    assert ok


# 6 -------------------------------------------------------------------------------

def test_c06_small_global_optimum(acceptance):
    rng = np.random.default_rng(2024)
    hits = worse = 0
    gaps = []
    for _ in range(50):
        _, cs, model = random_instance(rng, 3, 4, 2, n_patches=3, k=6)
        init = initial_labeling(cs, 2)
        out, _ = minimize(init, model, SwapSchedule.all_pairs(2))
        e, best = total_energy(out, model), energies_of_all(model, 3).min()
        if e <= best + 1e-9:
            hits += 1
        else:
            gaps.append(e - best)
        worse += e > total_energy(init, model)
    gap = f", gaps {', '.join(f'{g:.3f}' for g in gaps)}" if gaps else ""
    ok = acceptance(6, hits >= 40 and worse == 0, f"{hits}/50 at the global minimum, {worse} above init{gap}")
    assert ok


# 7 -------------------------------------------------------------------------------

@pytest.mark.slow
def test_c07_noiseless_recovery(acceptance):
    keys = ("fiou", "obj_re", "ins_pair_acc", "pct_corr_pxl_pair_fgr")
    failures = []
    t0 = time.perf_counter()
    for seed in range(50):
        spec = SceneSpec(n_instances=2 + seed % 4, seed=seed)
        scene, preds = make_scene_patches(spec)
        res = fuse(preds, spec.image_w, spec.image_h, FuseConfig(seed=seed))
        v = evaluate(res.labels, scene.gt, sample_frac=1.0).values()
        if res.labels != relabel_reorder(scene.gt) or any(v[k] != 1.0 for k in keys):
            failures.append(seed)
    dt = time.perf_counter() - t0
    ok = acceptance(7, not failures and dt < 60.0,
                    f"{50 - len(failures)}/50 exact{f' (failed seeds {failures})' if failures else ''}, {dt:.1f} s")
    assert ok


# 8 -------------------------------------------------------------------------------

@pytest.mark.slow
def test_c08_noisy_robustness(acceptance):
    pair, obj = [], []
    for seed in range(20):
        spec = SceneSpec(n_instances=1 + seed % 5, seed=seed, noise=NoiseSpec(0.02, 1, 1.5))
        scene, preds = make_scene_patches(spec)
        res = fuse(preds, spec.image_w, spec.image_h, FuseConfig(seed=seed))
        v = evaluate(res.labels, scene.gt, seed=seed).values()
        pair.append(v["pct_corr_pxl_pair_fgr"])
        obj.append(v["obj_re"])
    mp, mo = float(np.mean(pair)), float(np.mean(obj))
    ok = acceptance(8, mp >= 0.90 and mo >= 0.80, f"mean pixel-pair correctness {mp:.3f}, mean ObjRe {mo:.3f}")
    assert ok


# 9 -------------------------------------------------------------------------------

def test_c09_metrics_oracle(acceptance):
    rng = np.random.default_rng(909)
    pair_exact, worst = True, 0.0
    for _ in range(20):
        g = blocky_map(rng, 16, 16, 7, n_blocks=7)
        p = blocky_map(rng, 16, 16, 7, n_blocks=7)
        got = evaluate(LabelMap(p), LabelMap(g), sample_frac=1.0).values()
        want = naive_metrics(p, g)
        pair_exact &= _same(got["pct_corr_pxl_pair_fgr"], exhaustive_pixel_pairs(p, g))
        for k, v in want.items():
            if np.isnan(v) or np.isnan(got[k]):
                worst = max(worst, 0.0 if _same(v, got[k]) else np.inf)
            else:
                worst = max(worst, abs(got[k] - v))
    ok = acceptance(9, pair_exact and worst <= 1e-12,
                    f"pixel pairs exact: {pair_exact}, max metric deviation {worst:.1e}")
    assert ok


# 10 ------------------------------------------------------------------------------

def _pp_contract(m: LabelMap, min_size: int) -> list[str]:
    errs = []
    once = postprocess(m, min_size)
    if postprocess(once, min_size) != once:
        errs.append("not idempotent")
    cleaned = remove_small(m, min_size)
    if any(len(px) < min_size for _, px in bfs_components(cleaned.labels)):
        errs.append("small component survived")
    out = relabel_reorder(fill_holes(cleaned))
    comps = bfs_components(out.labels)
    labels = sorted(lab for lab, _ in comps)
    if labels != list(range(1, len(comps) + 1)):
        errs.append(f"labels {labels}")
    W = m.width
    keys = []
    for lab, px in sorted(comps):
        rows, cols = np.divmod(np.asarray(px), W)
        keys.append((-(rows.min() + rows.max()) / 2, (cols.min() + cols.max()) / 2))
    if keys != sorted(keys):
        errs.append("not in bbox-center row order")
    return errs


def test_c10_postprocess_contract(acceptance):
    rng = np.random.default_rng(1010)
    bad = []
    for i in range(100):
        lab = blocky_map(rng, 48, 48, 6, n_blocks=int(rng.integers(1, 9)), min_side=6)
        speckle = rng.random(lab.shape) < 0.01
        lab[speckle] = rng.integers(0, 6, int(speckle.sum()))
        errs = _pp_contract(LabelMap(lab, 60), 200)
        if errs:
            bad.append((i, errs))
    ok = acceptance(10, not bad, f"{100 - len(bad)}/100 maps satisfy the contract{f' {bad[:3]}' if bad else ''}")
    assert ok


# 11 ------------------------------------------------------------------------------

@pytest.mark.slow
def test_c11_kitti_scale(acceptance):
    W, H, horizon = 1242, 375, 150
    noise = NoiseSpec(0.02, 1, 1.5, downsample=8)
    spec = SceneSpec(image_w=W, image_h=H, n_instances=9, horizon_y=horizon, seed=11,
                     noise=noise, min_visible=800)
    layout = LayoutConfig(W, H, horizon,
                          patch_sizes={Scale.LARGE: 225, Scale.MEDIUM: 150, Scale.SMALL: 75},
                          strides={Scale.LARGE: 225, Scale.MEDIUM: 150, Scale.SMALL: 100},
                          band_half_heights={Scale.MEDIUM: 75, Scale.SMALL: 37})
    scene = generate_scene(spec)
    preds = corrupt_to_patches(scene.gt, layout, noise, spec.seed)
    t0 = time.perf_counter()
    res = fuse(preds, W, H, FuseConfig(long_k=20000, seed=11))
    dt = time.perf_counter() - t0
    ok = acceptance(11, dt < 60.0,
                    f"{W}x{H}, {len(tile_patches(layout))} patches, {res.model.long_p.size} long edges, "
                    f"{len(res.energy_trace)} moves, fuse {dt:.1f} s")
    assert ok

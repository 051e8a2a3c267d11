import numpy as np
import pytest

from patchfuse.components import label_components, order_components
from patchfuse.core import LabelMap, Rect
from patchfuse.energy import Weights, build_energy_model
from patchfuse.merging import MergedMap, PatchFloor

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record one criterion's outcome for the end-of-run summary."""
    def record(number: int, ok: bool, detail: str):
        _ACCEPTANCE[number] = (bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def blocky_map(rng, H, W, n_labels, n_blocks=6, min_side=1):
    """Random map painted from rectangles, so components have some extent."""
    lab = np.zeros((H, W), dtype=np.int32)
    for _ in range(n_blocks):
        h = int(rng.integers(min_side, H + 1))
        w = int(rng.integers(min_side, W + 1))
        y0 = int(rng.integers(0, H - h + 1))
        x0 = int(rng.integers(0, W - w + 1))
        lab[y0:y0 + h, x0:x0 + w] = rng.integers(0, n_labels)
    return lab


def random_instance(rng, H, W, n_max, n_patches=3, k=6, weights=None):
    """A random merged map, patch floors and the energy model built from them."""
    lab = blocky_map(rng, H, W, n_max + 1, n_blocks=4)
    floors = []
    for z in range(n_patches):
        h = int(rng.integers(1, H + 1))
        w = int(rng.integers(1, W + 1))
        r = Rect(int(rng.integers(0, W - w + 1)), int(rng.integers(0, H - h + 1)), w, h)
        floors.append(PatchFloor(z, r, rng.integers(0, min(n_max, 5) + 1, size=(h, w))))
    merged = MergedMap(LabelMap(lab, n_max), tuple(floors))
    cs = order_components(label_components(merged.label_map), n_max)
    if weights is None:
        weights = Weights(*(float(v) for v in rng.uniform(0, 1.5, size=4)))
    model = build_energy_model(merged, cs, weights, k=k, seed=int(rng.integers(1 << 30)), n_max=n_max)
    return merged, cs, model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

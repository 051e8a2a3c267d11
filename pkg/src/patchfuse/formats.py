"""On-disk formats: label maps, patch tensors, patch manifests, run configs, PPM renders.

Binary layouts (all little-endian)::

    .lmap   "LMAP" | version u16 | width u32 | height u32 | n_max u16 | labels u8[h*w]
    .ptn    "PTN0" | width u32 | height u32 | n_labels u16 | probs f32[h*w*n_labels]

Everything is written atomically through a temp file in the target directory.
"""
from __future__ import annotations

import colorsys
import json
import os
import struct
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .core import DEFAULT_N_MAX, LabelMap, ProbTensor, Rect
from .energy import DEFAULT_LONG_K, Weights
from .layout import LayoutConfig, PatchSpec, Scale
from .merging import PatchPrediction
from .metrics import DEFAULT_SAMPLE_FRAC
from .postprocess import DEFAULT_MIN_SIZE
from .synth import NoiseSpec, SceneSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

LMAP_MAGIC = b"LMAP"
LMAP_VERSION = 1
PTN_MAGIC = b"PTN0"
MANIFEST_NAME = "manifest.json"

_LMAP_HEAD = struct.Struct("<4sHIIH")
_PTN_HEAD = struct.Struct("<4sIIH")


class FormatError(ValueError):
    """A file exists but its content is malformed; the message names the file."""


class ConfigError(ValueError):
    """Invalid run config; the message names the offending field or line."""


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError:
        raise FormatError(f"{path}: file not found") from None


# -- label maps ---------------------------------------------------------------

def encode_lmap(m: LabelMap) -> bytes:
    if m.n_max > 255 or m.labels.max(initial=0) > 255:
        raise ValueError("u8 label storage caps labels at 255")
    head = _LMAP_HEAD.pack(LMAP_MAGIC, LMAP_VERSION, m.width, m.height, m.n_max)
    return head + m.labels.astype("<u1").tobytes()


def decode_lmap(data: bytes, name: str = "<bytes>") -> LabelMap:
    if len(data) < _LMAP_HEAD.size:
        raise FormatError(f"{name}: truncated header")
    magic, version, w, h, n_max = _LMAP_HEAD.unpack_from(data)
    if magic != LMAP_MAGIC:
        raise FormatError(f"{name}: bad magic {magic!r}, expected {LMAP_MAGIC!r}")
    if version != LMAP_VERSION:
        raise FormatError(f"{name}: unsupported version {version}")
    body = data[_LMAP_HEAD.size:]
    if len(body) != w * h:
        raise FormatError(f"{name}: expected {w * h} label bytes, found {len(body)}")
    labels = np.frombuffer(body, dtype="<u1").reshape(h, w).astype(np.int32)
    try:
        return LabelMap(labels, n_max)
    except ValueError as e:
        raise FormatError(f"{name}: {e}") from None


def write_lmap(path, m: LabelMap) -> None:
    atomic_write(path, encode_lmap(m))


def read_lmap(path) -> LabelMap:
    return decode_lmap(_read(path), str(path))


# -- patch tensors --------------------------------------------------------------

def encode_ptn(p: ProbTensor) -> bytes:
    head = _PTN_HEAD.pack(PTN_MAGIC, p.width, p.height, p.n_labels)
    return head + np.ascontiguousarray(p.probs, dtype="<f4").tobytes()


def decode_ptn(data: bytes, name: str = "<bytes>") -> ProbTensor:
    if len(data) < _PTN_HEAD.size:
        raise FormatError(f"{name}: truncated header")
    magic, w, h, n = _PTN_HEAD.unpack_from(data)
    if magic != PTN_MAGIC:
        raise FormatError(f"{name}: bad magic {magic!r}, expected {PTN_MAGIC!r}")
    body = data[_PTN_HEAD.size:]
    if len(body) != 4 * w * h * n:
        raise FormatError(f"{name}: expected {4 * w * h * n} tensor bytes, found {len(body)}")
    probs = np.frombuffer(body, dtype="<f4").reshape(h, w, n).astype(np.float32)
    try:
        return ProbTensor(probs)
    except ValueError as e:
        raise FormatError(f"{name}: {e}") from None


def write_ptn(path, p: ProbTensor) -> None:
    atomic_write(path, encode_ptn(p))


def read_ptn(path) -> ProbTensor:
    return decode_ptn(_read(path), str(path))


# -- manifests ------------------------------------------------------------------

@dataclass
class Manifest:
    width: int
    height: int
    patches: list  # PatchPrediction, tensors loaded
    n_max: int = DEFAULT_N_MAX
    layout: dict | None = None


def write_patches(directory, preds: list[PatchPrediction], width: int, height: int,
                  n_max: int = DEFAULT_N_MAX, layout: LayoutConfig | None = None) -> Path:
    """Write one ``.ptn`` per patch plus the manifest; returns the manifest path."""
    directory = Path(directory)
    entries = []
    for pr in preds:
        name = f"patch_{pr.id:04d}.ptn"
        write_ptn(directory / name, pr.probs)
        r = pr.rect
        entries.append({"id": pr.id, "rect": [r.x0, r.y0, r.w, r.h],
                        "scale_id": pr.spec.scale.value, "tensor": name})
    doc = {"image": {"width": width, "height": height}, "n_max": n_max,
           "layout": layout.to_dict() if layout else None, "patches": entries}
    path = directory / MANIFEST_NAME
    atomic_write(path, (json.dumps(doc, indent=2) + "\n").encode())
    return path


def read_manifest(path) -> Manifest:
    """Load a manifest and every tensor it lists. ``path`` may be the directory."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        doc = json.loads(_read(path))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from None
    try:
        W, H = int(doc["image"]["width"]), int(doc["image"]["height"])
        n_max = int(doc.get("n_max", DEFAULT_N_MAX))
        preds = []
        for e in doc["patches"]:
            x0, y0, w, h = (int(v) for v in e["rect"])
            rect = Rect(x0, y0, w, h)
            if not rect.inside(W, H):
                raise FormatError(f"{path}: patch {e['id']} rect {e['rect']} outside the {W}x{H} image")
            spec = PatchSpec(rect, Scale(e["scale_id"]))
            probs = read_ptn(path.parent / e["tensor"])
            preds.append(PatchPrediction(spec, probs, id=int(e["id"])))
    except (KeyError, TypeError) as e:
        raise FormatError(f"{path}: missing or malformed entry {e}") from None
    except ValueError as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(f"{path}: {e}") from None
    return Manifest(W, H, preds, n_max, doc.get("layout"))


# -- run config -----------------------------------------------------------------

@dataclass
class EnergySection:
    cnn: float = 1.0
    cco: float = 1.0
    long: float = 1.0
    short: float = 0.5
    normalize_long: bool = True
    long_k: int = DEFAULT_LONG_K
    seed: int = 0


@dataclass
class InferenceSection:
    max_sweeps: int = 5
    epsilon: float = 1e-12
    n_max: int = DEFAULT_N_MAX


@dataclass
class PostprocessSection:
    enabled: bool = True
    min_size: int = DEFAULT_MIN_SIZE


@dataclass
class MetricsSection:
    sample_frac: float = DEFAULT_SAMPLE_FRAC
    seed: int = 0


@dataclass
class NoiseSection:
    label_flip_prob: float = 0.0
    blur_radius: int = 0
    prob_temperature: float = 1.0
    downsample: int = 1


@dataclass
class SceneSection:
    image_w: int = 192
    image_h: int = 128
    n_instances: int = 3
    horizon_y: int = 40
    seed: int = 0
    n_scenes: int = 1
    noise: NoiseSection = field(default_factory=NoiseSection)


@dataclass
class LayoutSection:
    horizon_y: int | None = None  # defaults to the scene's
    patch_sizes: dict = field(default_factory=lambda: {"large": 192, "medium": 96, "small": 48})
    strides: dict = field(default_factory=lambda: {"large": 96, "medium": 48, "small": 24})
    band_half_heights: dict = field(default_factory=lambda: {"medium": 48, "small": 24})


@dataclass
class RunConfig:
    scene: SceneSection = field(default_factory=SceneSection)
    layout: LayoutSection = field(default_factory=LayoutSection)
    energy: EnergySection = field(default_factory=EnergySection)
    inference: InferenceSection = field(default_factory=InferenceSection)
    postprocess: PostprocessSection = field(default_factory=PostprocessSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)

    def scene_spec(self, index: int = 0) -> SceneSpec:
        s = self.scene
        return SceneSpec(s.image_w, s.image_h, s.n_instances, s.horizon_y, s.seed + index,
                         NoiseSpec(**asdict(s.noise)))

    def layout_config(self, width: int, height: int, horizon_y: int | None = None) -> LayoutConfig:
        lay = self.layout
        hz = lay.horizon_y if lay.horizon_y is not None else (
            horizon_y if horizon_y is not None else self.scene.horizon_y)
        return LayoutConfig(width, height, hz, dict(lay.patch_sizes), dict(lay.strides),
                            dict(lay.band_half_heights))

    def weights(self) -> Weights:
        e = self.energy
        return Weights(e.cnn, e.cco, e.long, e.short, e.normalize_long)

    def fuse_config(self, postprocess: bool | None = None):
        from .pipeline import FuseConfig
        return FuseConfig(weights=self.weights(), long_k=self.energy.long_k, seed=self.energy.seed,
                          max_sweeps=self.inference.max_sweeps, epsilon=self.inference.epsilon,
                          min_size=self.postprocess.min_size,
                          postprocess=self.postprocess.enabled if postprocess is None else postprocess,
                          n_max=self.inference.n_max)




def _coerce(value, typ, where: str):
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected a boolean, got {value!r}")
        return value
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if typ is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a table, got {value!r}")
        for k, v in value.items():
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{where}.{k}: expected an integer, got {v!r}")
        return dict(value)
    return value


def _build(cls, table: dict, where: str):
    if not isinstance(table, dict):
        raise ConfigError(f"{where}: expected a table")
    known = {f.name: f for f in fields(cls)}
    for k in table:
        if k not in known:
            raise ConfigError(f"{where}.{k}: unknown field")
    kw = {}
    defaults = cls()
    for name, f in known.items():
        if name not in table:
            continue
        default = getattr(defaults, name)
        v = table[name]
        if hasattr(default, "__dataclass_fields__"):
            kw[name] = _build(type(default), v, f"{where}.{name}")
        elif name == "horizon_y" and default is None:
            kw[name] = _coerce(v, int, f"{where}.{name}")
        elif isinstance(default, dict):
            kw[name] = {**default, **_coerce(v, dict, f"{where}.{name}")}
        else:
            kw[name] = _coerce(v, type(default), f"{where}.{name}")
    return cls(**kw)


def _check_ranges(cfg: RunConfig) -> None:
    def need(ok, where, what):
        if not ok:
            raise ConfigError(f"{where}: {what}")

    s = cfg.scene
    need(s.image_w > 0, "scene.image_w", "must be > 0")
    need(s.image_h > 0, "scene.image_h", "must be > 0")
    need(0 <= s.n_instances <= DEFAULT_N_MAX, "scene.n_instances",
         f"must lie in 0..{DEFAULT_N_MAX}, got {s.n_instances}")
    need(0 <= s.horizon_y < s.image_h, "scene.horizon_y", "must lie inside the image")
    need(s.n_scenes >= 1, "scene.n_scenes", "must be >= 1")
    n = s.noise
    need(0.0 <= n.label_flip_prob <= 1.0, "scene.noise.label_flip_prob", "must lie in [0, 1]")
    need(n.blur_radius >= 0, "scene.noise.blur_radius", "must be >= 0")
    need(n.prob_temperature > 0, "scene.noise.prob_temperature", "must be > 0")
    need(n.downsample >= 1, "scene.noise.downsample", "must be >= 1")
    for name in ("cnn", "cco", "long", "short"):
        need(getattr(cfg.energy, name) >= 0, f"energy.{name}", "must be >= 0")
    need(cfg.energy.long_k >= 0, "energy.long_k", "must be >= 0")
    need(cfg.inference.max_sweeps >= 1, "inference.max_sweeps", "must be >= 1")
    need(cfg.inference.epsilon >= 0, "inference.epsilon", "must be >= 0")
    need(1 <= cfg.inference.n_max <= 255, "inference.n_max", "must lie in 1..255")
    need(cfg.postprocess.min_size >= 0, "postprocess.min_size", "must be >= 0")
    need(0 < cfg.metrics.sample_frac <= 1, "metrics.sample_frac", "must lie in (0, 1]")
    lay = cfg.layout
    for sect in ("patch_sizes", "strides", "band_half_heights"):
        for k, v in getattr(lay, sect).items():
            try:
                Scale(k)
            except ValueError:
                raise ConfigError(f"layout.{sect}.{k}: unknown scale (use large, medium, small)") from None
            need(v >= (0 if sect == "band_half_heights" else 1), f"layout.{sect}.{k}", "out of range")


def parse_config(text: str, name: str = "<config>") -> RunConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{name}: {e}") from None  # tomli reports line and column
    defaults = RunConfig()
    sections = {}
    try:
        for k, table in doc.items():
            if not hasattr(defaults, k):
                raise ConfigError(f"unknown section [{k}]")
            sections[k] = _build(type(getattr(defaults, k)), table, k)
        cfg = RunConfig(**sections)
        _check_ranges(cfg)
    except ConfigError as e:
        raise ConfigError(f"{name}: {e}") from None
    return cfg


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise ConfigError(f"{path}: config file not found") from None
    return parse_config(text, str(path))


# -- rendering ------------------------------------------------------------------

def _hue_sweep(n: int) -> np.ndarray:
    # nearest (label 1) red, farthest violet: hue rises evenly from 0 to 270 degrees
    cols = [colorsys.hsv_to_rgb(0.75 * i / (n - 1), 0.85, 0.95) for i in range(n)]
    return np.round(np.array(cols) * 255).astype(np.uint8)


PALETTE = np.vstack([[0, 0, 0], _hue_sweep(9)]).astype(np.uint8)


def render_rgb(m: LabelMap) -> np.ndarray:
    """H x W x 3 colors; labels past 9 reuse the coolest color."""
    return PALETTE[np.minimum(m.labels, len(PALETTE) - 1)]


def encode_ppm(rgb: np.ndarray) -> bytes:
    h, w, _ = rgb.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(rgb, dtype=np.uint8).tobytes()


def write_ppm(path, m: LabelMap) -> None:
    atomic_write(path, encode_ppm(render_rgb(m)))

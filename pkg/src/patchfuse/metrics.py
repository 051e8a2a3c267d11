"""Class-level, instance-level and depth-ordering evaluation of instance label maps.

Instances are the pixel sets of distinct foreground labels; smaller labels
are nearer. Fractions are kept in [0, 1] and only scaled to percent when
rendered. Ratios over an empty set are NaN and skipped when aggregating.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from numba import njit

from .core import DimensionError, LabelMap

log = logging.getLogger(__name__)

IOU_MATCH = 0.5
DEFAULT_SAMPLE_FRAC = 0.05


@dataclass
class ClassMetrics:
    fiou: float
    biou: float
    avg_iou: float
    acc: float
    ovrl_pr: float
    ovrl_re: float


@dataclass
class InstanceMetrics:
    mwcov: float
    mucov: float
    avg_pr: float
    avg_re: float
    avg_fp: float
    avg_fn: float
    obj_pr: float
    obj_re: float


@dataclass
class DepthMetrics:
    n_ins: int
    pct_rcld_ins: float
    n_ins_pair: int
    pct_rcld_ins_pair: float
    ins_pair_acc: float
    pct_corr_pxl_pair_fgr: float


_COUNTS = {"avg_fp", "avg_fn", "n_ins", "n_ins_pair"}
_COLUMN_NAMES = {
    "fiou": "FIoU", "biou": "BIoU", "avg_iou": "AvgIoU", "acc": "Acc", "ovrl_pr": "OvrlPr",
    "ovrl_re": "OvrlRe", "mwcov": "MWCov", "mucov": "MUCov", "avg_pr": "AvgPr", "avg_re": "AvgRe",
    "avg_fp": "AvgFP", "avg_fn": "AvgFN", "obj_pr": "ObjPr", "obj_re": "ObjRe", "n_ins": "#Ins",
    "pct_rcld_ins": "%RcldIns", "n_ins_pair": "#InsPair", "pct_rcld_ins_pair": "%RcldInsPair",
    "ins_pair_acc": "InsPairAcc", "pct_corr_pxl_pair_fgr": "%CorrPxlPairFgr",
}


@dataclass
class MetricsReport:
    class_level: ClassMetrics
    instance: InstanceMetrics
    depth: DepthMetrics
    flags: list = field(default_factory=list)

    def values(self) -> dict[str, float]:
        out = {}
        for part in (self.class_level, self.instance, self.depth):
            out.update(asdict(part))
        return out

    def to_dict(self, percent: bool = True) -> dict:
        """Table-column keyed values; fractions scaled to percent when ``percent``."""
        out = {}
        for k, v in self.values().items():
            if percent and k not in _COUNTS and v is not None:
                v = 100.0 * v
            out[_COLUMN_NAMES[k]] = None if v is None or (isinstance(v, float) and np.isnan(v)) else v
        return out

    def to_text(self) -> str:
        lines = []
        for k, v in self.to_dict().items():
            if v is None:
                lines.append(f"{k}: n/a")
            elif isinstance(v, float):
                lines.append(f"{k}: {v:.2f}")
            else:
                lines.append(f"{k}: {v}")
        if self.flags:
            lines.append("flags: " + ", ".join(self.flags))
        return "\n".join(lines)


def _ratio(num, den) -> float:
    return float(num) / float(den) if den else float("nan")


def _check(pred: LabelMap, gt: LabelMap):
    if pred.shape != gt.shape:
        raise DimensionError(f"prediction {pred.shape} vs ground truth {gt.shape}")


def class_level(pred: LabelMap, gt: LabelMap) -> ClassMetrics:
    _check(pred, gt)
    pf, gf = pred.labels > 0, gt.labels > 0
    both_empty = not pf.any() and not gf.any()

    def frac(num, den):
        # zero denominators only happen when a set is empty; both empty is a perfect score
        return num / den if den else (1.0 if both_empty else 0.0)

    tp = np.count_nonzero(pf & gf)
    fp = np.count_nonzero(pf & ~gf)
    fn = np.count_nonzero(~pf & gf)
    tn = np.count_nonzero(~pf & ~gf)
    fiou = tp / (tp + fp + fn) if tp + fp + fn else 1.0
    biou = tn / (tn + fp + fn) if tn + fp + fn else 1.0
    return ClassMetrics(
        fiou=fiou, biou=biou, avg_iou=(fiou + biou) / 2, acc=frac(tp + tn, pf.size),
        ovrl_pr=frac(tp, tp + fp), ovrl_re=frac(tp, tp + fn))


@dataclass
class _Overlap:
    gt_labels: np.ndarray
    pred_labels: np.ndarray
    inter: np.ndarray      # (G, P)
    gt_size: np.ndarray
    pred_size: np.ndarray

    @property
    def iou(self) -> np.ndarray:
        union = self.gt_size[:, None] + self.pred_size[None, :] - self.inter
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(union > 0, self.inter / np.maximum(union, 1), 0.0)


def _overlap(pred: LabelMap, gt: LabelMap) -> _Overlap:
    g, p = gt.flat().astype(np.int64), pred.flat().astype(np.int64)
    gl = np.unique(g[g > 0])
    pl = np.unique(p[p > 0])
    gi = np.searchsorted(gl, g)
    pi = np.searchsorted(pl, p)
    both = (g > 0) & (p > 0)
    inter = np.bincount(gi[both] * max(pl.size, 1) + pi[both],
                        minlength=gl.size * pl.size).reshape(gl.size, pl.size)
    return _Overlap(gl, pl, inter, np.bincount(gi[g > 0], minlength=gl.size),
                    np.bincount(pi[p > 0], minlength=pl.size))


def match_instances(ov: _Overlap) -> dict[int, int]:
    """One-to-one greedy matching at IoU > 0.5: GT index -> prediction index."""
    iou = ov.iou
    gi, pj = np.nonzero(iou > IOU_MATCH)
    order = np.lexsort((pj, gi, -iou[gi, pj]))
    out: dict[int, int] = {}
    used = set()
    for k in order:
        i, j = int(gi[k]), int(pj[k])
        if i not in out and j not in used:
            out[i] = j
            used.add(j)
    return out


def instance_level(pred: LabelMap, gt: LabelMap, flags: list | None = None) -> InstanceMetrics:
    _check(pred, gt)
    ov = _overlap(pred, gt)
    G, P = ov.gt_labels.size, ov.pred_labels.size
    iou = ov.iou
    if G == 0 and flags is not None:
        flags.append("no_gt_instances")
    best_iou = iou.max(axis=1) if P else np.zeros(G)
    mucov = _ratio(best_iou.sum(), G)
    mwcov = _ratio((ov.gt_size * best_iou).sum(), ov.gt_size.sum())
    if P and G:
        bp = iou.argmax(axis=1)
        bg = iou.argmax(axis=0)
        rec = ov.inter[np.arange(G), bp] / ov.gt_size
        prec = ov.inter[bg, np.arange(P)] / ov.pred_size
    else:
        rec, prec = np.zeros(G), np.zeros(P)
    matched = len(match_instances(ov))
    return InstanceMetrics(
        mwcov=mwcov, mucov=mucov,
        avg_pr=_ratio(prec.sum(), P), avg_re=_ratio(rec.sum(), G),
        avg_fp=float(np.count_nonzero(ov.inter.sum(axis=0) == 0)) if P else 0.0,
        avg_fn=float(np.count_nonzero(ov.inter.sum(axis=1) == 0)) if G else 0.0,
        obj_pr=_ratio(matched, P), obj_re=_ratio(matched, G))


def _pair_relation(a, b):
    """0: same instance, 1: first nearer, 2: second nearer, -1: a background pixel."""
    if a == 0 or b == 0:
        return -1
    if a == b:
        return 0
    return 1 if a < b else 2


_pair_relation_nb = njit(cache=True)(_pair_relation)


@njit(cache=True)
def _sampled_pair_hits(g, p, n_sample, seed):
    """Selection sampling over all pairs i < j: exactly ``n_sample`` distinct pairs,
    each subset equally likely, in O(1) memory. Returns the number judged correct.
    """
    np.random.seed(seed)
    n = g.shape[0]
    remaining = n * (n - 1) // 2
    need = n_sample
    hits = 0
    for i in range(n):
        if need == 0:
            break
        for j in range(i + 1, n):
            if need == remaining or np.random.random() * remaining < need:
                need -= 1
                if _pair_relation_nb(p[i], p[j]) == _pair_relation_nb(g[i], g[j]):
                    hits += 1
            remaining -= 1
            if need == 0:
                break
    return hits


def pixel_pair_correctness(pred: LabelMap, gt: LabelMap, sample_frac: float = DEFAULT_SAMPLE_FRAC,
                           seed: int = 0) -> float:
    """Fraction of sampled GT-foreground pixel pairs whose relation the prediction gets right."""
    g, p = gt.flat(), pred.flat()
    fg = np.flatnonzero(g > 0)
    n = fg.size
    total = n * (n - 1) // 2
    if total == 0:
        return float("nan")
    s = total if sample_frac >= 1.0 else min(total, max(1, int(round(sample_frac * total))))
    hits = _sampled_pair_hits(g[fg].astype(np.int64), p[fg].astype(np.int64), s, int(seed) % (2**32))
    return hits / s


def depth_ordering(pred: LabelMap, gt: LabelMap, sample_frac: float = DEFAULT_SAMPLE_FRAC,
                   seed: int = 0) -> DepthMetrics:
    _check(pred, gt)
    ov = _overlap(pred, gt)
    G = ov.gt_labels.size
    match = match_instances(ov)
    n_pairs = G * (G - 1) // 2
    recalled = correct = 0
    for i in range(G):
        for i2 in range(i + 1, G):
            if i in match and i2 in match:
                recalled += 1
                sg = np.sign(int(ov.gt_labels[i]) - int(ov.gt_labels[i2]))
                sp = np.sign(int(ov.pred_labels[match[i]]) - int(ov.pred_labels[match[i2]]))
                correct += int(sg == sp)
    return DepthMetrics(
        n_ins=int(G), pct_rcld_ins=_ratio(len(match), G), n_ins_pair=int(n_pairs),
        pct_rcld_ins_pair=_ratio(recalled, n_pairs), ins_pair_acc=_ratio(correct, recalled),
        pct_corr_pxl_pair_fgr=pixel_pair_correctness(pred, gt, sample_frac, seed))


def evaluate(pred: LabelMap, gt: LabelMap, sample_frac: float = DEFAULT_SAMPLE_FRAC,
             seed: int = 0) -> MetricsReport:
    flags: list = []
    return MetricsReport(class_level(pred, gt), instance_level(pred, gt, flags),
                         depth_ordering(pred, gt, sample_frac, seed), flags)


def aggregate(reports: list[MetricsReport]) -> MetricsReport:
    """Equal-weight mean over images; instance/pair counts are summed, NaNs skipped."""
    if not reports:
        raise ValueError("nothing to aggregate")
    parts = []
    for attr, cls in (("class_level", ClassMetrics), ("instance", InstanceMetrics), ("depth", DepthMetrics)):
        kw = {}
        for f in fields(cls):
            vals = np.array([getattr(getattr(r, attr), f.name) for r in reports], dtype=np.float64)
            if f.name in ("n_ins", "n_ins_pair"):
                kw[f.name] = int(vals.sum())
            else:
                ok = ~np.isnan(vals)
                kw[f.name] = float(vals[ok].mean()) if ok.any() else float("nan")
        parts.append(cls(**kw))
    n_excl = sum("no_gt_instances" in r.flags for r in reports)
    flags = [f"images={len(reports)}"]
    if n_excl:
        log.info("%d image(s) without GT instances excluded from coverage averages", n_excl)
        flags.append(f"excluded_no_gt={n_excl}")
    return MetricsReport(*parts, flags=flags)

"""Pairwise document distances and corpus statistics.

The headline metric sums, over every class, the exact earth mover's
distance between the rasterized unions of that class's boxes, and adds a
fixed penalty ``lam`` for every class present on exactly one side. With
normalized page coordinates each class contributes at most ``sqrt(2)``, so
totals scale from 0 to about K.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .core import Layout
from .errors import SchemaMismatchError, ValidationError
from .transport import PointMass, emd, rasterize, solve_transport

__all__ = [
    "DocEmdConfig",
    "MetricReport",
    "doc_emd",
    "doc_emd_matrix",
    "docsim",
    "docsim_matrix",
    "wasserstein_seq",
    "overlap_pct",
    "coverage_pct",
    "CorpusSummary",
    "corpus_summary",
    "write_pair_reports_csv",
]


@dataclass(frozen=True)
class DocEmdConfig:
    lam: float = 1.0
    grid: int = 64
    method: str = "exact"  # or "sinkhorn" for large corpora

    def __post_init__(self):
        if self.lam < 0:
            raise ValidationError("lam must be nonnegative")
        if self.grid < 2:
            raise ValidationError("grid must be at least 2")


@dataclass(frozen=True)
class MetricReport:
    """Doc-EMD breakdown for one layout pair.

    ``total == sum(per_class.values()) + lam * len(penalty_classes)`` holds
    exactly by construction.
    """

    total: float
    per_class: dict[int, float]
    penalty_classes: tuple[int, ...]
    lam: float
    grid: int

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "per_class": {str(c): v for c, v in self.per_class.items()},
            "penalty_classes": list(self.penalty_classes),
            "lambda": self.lam,
            "grid": self.grid,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _check_schema(a: Layout, b: Layout) -> None:
    if a.schema != b.schema:
        raise SchemaMismatchError(
            f"layouts use different schemas: {a.schema.names} vs {b.schema.names}"
        )


def doc_emd(s: Layout, t: Layout, cfg: DocEmdConfig = DocEmdConfig()) -> MetricReport:
    """Per-class transport distance plus missing-class penalties.

    A class whose boxes all rasterize to nothing (too thin for the grid) is
    treated as absent on that side.
    """
    _check_schema(s, t)
    per_class: dict[int, float] = {}
    penalties: list[int] = []
    for c in range(s.schema.K):
        sb = s.boxes_of_class(c)
        tb = t.boxes_of_class(c)
        ra = rasterize(sb, s.page, cfg.grid) if sb else PointMass.empty()
        rb = rasterize(tb, t.page, cfg.grid) if tb else PointMass.empty()
        s_has, t_has = len(ra) > 0, len(rb) > 0
        if s_has and t_has:
            dist, _ = emd(ra, rb, method=cfg.method)
            per_class[c] = dist
        elif s_has != t_has:
            penalties.append(c)
        # absent from both sides: contributes nothing
    total = float(sum(per_class.values()) + cfg.lam * len(penalties))
    return MetricReport(total, per_class, tuple(penalties), cfg.lam, cfg.grid)


def doc_emd_matrix(
    a: Sequence[Layout],
    b: Sequence[Layout],
    cfg: DocEmdConfig = DocEmdConfig(),
    n_jobs: int = 1,
) -> np.ndarray:
    """|A| x |B| matrix of pairwise totals; rows ordered as given."""
    if not len(a) or not len(b):
        raise ValidationError("doc_emd_matrix needs nonempty corpora")
    for lay in list(a) + list(b):
        if lay.schema != a[0].schema:
            raise SchemaMismatchError("all layouts must share one schema")
    out = np.empty((len(a), len(b)))
    if n_jobs == 1:
        for i, la in enumerate(a):
            for j, lb in enumerate(b):
                out[i, j] = doc_emd(la, lb, cfg).total
        return out
    from joblib import Parallel, delayed

    rows = Parallel(n_jobs=n_jobs)(
        delayed(_matrix_row)(la, list(b), cfg) for la in a
    )
    return np.array(rows)


def _matrix_row(la, b, cfg):
    return [doc_emd(la, lb, cfg).total for lb in b]


# ---------------------------------------------------------------------------
# DocSim (reconstruction)
#
# No reference implementation of this similarity is publicly available; the
# weight below follows the published description -- linear in the square
# root of the smaller box area, exponentially decaying in center distance
# and in size difference (doubled) -- and is therefore non-canonical.


def _docsim_weights(s: Layout, t: Layout) -> np.ndarray:
    sw, sh = s.page
    tw, th = t.page
    sa = np.array([[el.class_id, el.x / sw, el.y / sh, el.w / sw, el.h / sh]
                   for el in s.elements])
    ta = np.array([[el.class_id, el.x / tw, el.y / th, el.w / tw, el.h / th]
                   for el in t.elements])
    s_cls, t_cls = sa[:, 0][:, None], ta[:, 0][None, :]
    s_ctr = sa[:, 1:3] + sa[:, 3:5] / 2
    t_ctr = ta[:, 1:3] + ta[:, 3:5] / 2
    d_center = cdist(s_ctr, t_ctr)
    d_size = cdist(sa[:, 3:5], ta[:, 3:5], metric="cityblock")
    area_s = (sa[:, 3] * sa[:, 4])[:, None]
    area_t = (ta[:, 3] * ta[:, 4])[None, :]
    w = np.sqrt(np.minimum(area_s, area_t)) * np.power(2.0, -d_center - 2.0 * d_size)
    w[s_cls != t_cls] = 0.0
    return w


def docsim(s: Layout, t: Layout) -> float:
    """Optimal-assignment geometric similarity in [0, 1]; 0 across classes."""
    _check_schema(s, t)
    if len(s) == 0 or len(t) == 0:
        return 0.0
    w = _docsim_weights(s, t)
    rows, cols = linear_sum_assignment(w, maximize=True)
    return float(w[rows, cols].sum() / max(len(s), len(t)))


def docsim_matrix(a: Sequence[Layout], b: Sequence[Layout]) -> np.ndarray:
    out = np.empty((len(a), len(b)))
    for i, la in enumerate(a):
        for j, lb in enumerate(b):
            out[i, j] = docsim(la, lb)
    return out


# ---------------------------------------------------------------------------
# sequence-distribution Wasserstein distances


def _pooled_boxes(layouts: Sequence[Layout]) -> np.ndarray:
    rows = []
    for lay in layouts:
        pw, ph = lay.page
        for el in lay.elements:
            rows.append((el.x / pw, el.y / ph, el.w / pw, el.h / ph))
    return np.array(rows) if rows else np.zeros((0, 4))


def _class_freq(layouts: Sequence[Layout], K: int) -> np.ndarray:
    counts = np.zeros(K)
    for lay in layouts:
        for el in lay.elements:
            counts[el.class_id] += 1
    total = counts.sum()
    return counts / total if total else counts


def wasserstein_seq(
    a: Sequence[Layout],
    b: Sequence[Layout],
    exact_limit: int = 2000,
    seed: int = 0,
) -> tuple[float, float]:
    """Distributional distances between two corpora.

    Returns ``(class_w, bbox_w)``: the 1-Wasserstein distance between class
    frequency vectors under 0/1 cost (half the L1 difference), and the
    2-Wasserstein distance between the pooled normalized box-coordinate
    samples (exact transport up to ``exact_limit`` points per side, seeded
    subsample beyond).
    """
    if not len(a) or not len(b):
        raise ValidationError("wasserstein_seq needs nonempty corpora")
    _check_schema(a[0], b[0])
    K = a[0].schema.K
    class_w = float(0.5 * np.abs(_class_freq(a, K) - _class_freq(b, K)).sum())

    pa, pb = _pooled_boxes(a), _pooled_boxes(b)
    if len(pa) == 0 or len(pb) == 0:
        return class_w, 0.0
    rng = np.random.default_rng(seed)
    if len(pa) > exact_limit:
        pa = pa[rng.choice(len(pa), exact_limit, replace=False)]
    if len(pb) > exact_limit:
        pb = pb[rng.choice(len(pb), exact_limit, replace=False)]
    cost = cdist(pa, pb, metric="sqeuclidean")
    wa = np.full(len(pa), 1.0 / len(pa))
    wb = np.full(len(pb), 1.0 / len(pb))
    obj, _ = solve_transport(
        cost, wa, wb,
        np.lexsort((pa[:, 1], pa[:, 0])), np.lexsort((pb[:, 1], pb[:, 0])),
    )
    return class_w, float(np.sqrt(max(obj, 0.0)))


# ---------------------------------------------------------------------------
# page coverage and overlap (exact sweep over compressed coordinates)


def _coverage_counts(layout: Layout):
    xs = sorted({v for el in layout.elements for v in (el.x, el.x + el.w)})
    ys = sorted({v for el in layout.elements for v in (el.y, el.y + el.h)})
    xs, ys = np.array(xs), np.array(ys)
    counts = np.zeros((len(xs) - 1, len(ys) - 1), dtype=np.int32)
    for el in layout.elements:
        i0, i1 = np.searchsorted(xs, el.x), np.searchsorted(xs, el.x + el.w)
        j0, j1 = np.searchsorted(ys, el.y), np.searchsorted(ys, el.y + el.h)
        counts[i0:i1, j0:j1] += 1
    areas = np.outer(np.diff(xs), np.diff(ys))
    return counts, areas


def coverage_pct(layout: Layout) -> float:
    """Percent of page area covered by the union of boxes. Exact."""
    if len(layout) == 0:
        return 0.0
    counts, areas = _coverage_counts(layout)
    union = areas[counts >= 1].sum()
    return float(100.0 * union / (layout.page_width * layout.page_height))


def overlap_pct(layout: Layout, mode: str = "union") -> float:
    """Percent of page area covered at least twice (``mode="union"``), or
    the sum of pairwise intersection areas (``mode="pairwise-sum"``)."""
    if len(layout) == 0:
        return 0.0
    page_area = layout.page_width * layout.page_height
    if mode == "union":
        counts, areas = _coverage_counts(layout)
        doubled = areas[counts >= 2].sum()
        return float(100.0 * doubled / page_area)
    if mode == "pairwise-sum":
        b = np.array([(el.x, el.y, el.x + el.w, el.y + el.h) for el in layout.elements])
        x0 = np.maximum(b[:, None, 0], b[None, :, 0])
        y0 = np.maximum(b[:, None, 1], b[None, :, 1])
        x1 = np.minimum(b[:, None, 2], b[None, :, 2])
        y1 = np.minimum(b[:, None, 3], b[None, :, 3])
        inter = np.clip(x1 - x0, 0, None) * np.clip(y1 - y0, 0, None)
        total = inter[np.triu_indices(len(b), k=1)].sum()
        return float(100.0 * total / page_area)
    raise ValidationError(f"unknown overlap mode {mode!r}")


@dataclass(frozen=True)
class CorpusSummary:
    n_layouts: int
    mean_overlap: float
    mean_coverage: float
    class_histogram: tuple[int, ...]
    box_count_mean: float
    box_count_min: int
    box_count_max: int
    class_names: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "n_layouts": self.n_layouts,
            "mean_overlap_pct": self.mean_overlap,
            "mean_coverage_pct": self.mean_coverage,
            "class_histogram": dict(zip(self.class_names, self.class_histogram)),
            "box_count": {
                "mean": self.box_count_mean,
                "min": self.box_count_min,
                "max": self.box_count_max,
            },
        }


def corpus_summary(layouts: Sequence[Layout], overlap_mode: str = "union") -> CorpusSummary:
    if not len(layouts):
        raise ValidationError("corpus_summary needs at least one layout")
    schema = layouts[0].schema
    for lay in layouts:
        if lay.schema != schema:
            raise SchemaMismatchError("corpus mixes schemas")
    overlaps = [overlap_pct(lay, overlap_mode) for lay in layouts]
    coverages = [coverage_pct(lay) for lay in layouts]
    hist = np.zeros(schema.K, dtype=int)
    counts = []
    for lay in layouts:
        counts.append(len(lay))
        for el in lay.elements:
            hist[el.class_id] += 1
    return CorpusSummary(
        n_layouts=len(layouts),
        mean_overlap=float(np.mean(overlaps)),
        mean_coverage=float(np.mean(coverages)),
        class_histogram=tuple(int(c) for c in hist),
        box_count_mean=float(np.mean(counts)),
        box_count_min=int(np.min(counts)),
        box_count_max=int(np.max(counts)),
        class_names=schema.names,
    )


def write_pair_reports_csv(
    fp: IO[str],
    entries: Sequence[tuple[str, str, MetricReport]],
    class_names: Sequence[str],
) -> None:
    """CSV serialization of per-pair reports: ids, total, per-class, penalties."""
    writer = csv.writer(fp)
    writer.writerow(
        ["id_a", "id_b", "total", "penalty_classes"]
        + [f"emd:{name}" for name in class_names]
    )
    for id_a, id_b, rep in entries:
        per = [rep.per_class.get(c, "") for c in range(len(class_names))]
        writer.writerow(
            [id_a, id_b, rep.total, "|".join(str(c) for c in rep.penalty_classes)] + per
        )

"""Optimal assignment and corpus-versus-corpus set scores.

``hungarian`` wraps scipy's exact rectangular assignment solver behind the
package's error model; the set scores match one corpus against another over
a pairwise distance (or negated similarity) matrix and report the mean
matched value so scores stay comparable across corpus sizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Layout
from .errors import ValidationError
from .metrics import DocEmdConfig, doc_emd_matrix, docsim_matrix

__all__ = ["Assignment", "hungarian", "set_score_docemd", "set_score_docsim"]


@dataclass(frozen=True)
class Assignment:
    pairs: tuple[tuple[int, int], ...]
    total_cost: float


def hungarian(cost) -> Assignment:
    """Minimum-total-cost assignment; rectangular matrices match their
    shorter side (equivalent to padding with a large constant)."""
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.size == 0:
        raise ValidationError(f"cost matrix must be 2-d and nonempty, got {cost.shape}")
    if np.isnan(cost).any():
        raise ValidationError("cost matrix contains NaN")
    rows, cols = linear_sum_assignment(cost)
    order = np.argsort(rows)
    rows, cols = rows[order], cols[order]
    return Assignment(
        pairs=tuple((int(r), int(c)) for r, c in zip(rows, cols)),
        total_cost=float(cost[rows, cols].sum()),
    )


def set_score_docemd(
    a: Sequence[Layout],
    b: Sequence[Layout],
    cfg: DocEmdConfig = DocEmdConfig(),
    n_jobs: int = 1,
) -> float:
    """Mean matched pairwise distance after optimal matching; lower is better."""
    matrix = doc_emd_matrix(a, b, cfg, n_jobs=n_jobs)
    assignment = hungarian(matrix)
    return assignment.total_cost / len(assignment.pairs)


def set_score_docsim(a: Sequence[Layout], b: Sequence[Layout]) -> float:
    """Mean matched pairwise similarity (matching maximizes similarity)."""
    if not len(a) or not len(b):
        raise ValidationError("set_score_docsim needs nonempty corpora")
    sim = docsim_matrix(a, b)
    assignment = hungarian(-sim)
    return float(sum(sim[r, c] for r, c in assignment.pairs) / len(assignment.pairs))

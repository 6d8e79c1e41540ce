"""Certified piecewise-constant envelopes for the cost CDF of a decision.

For a solved decision z and cost function f, each grid level l_j induces an
after-the-fact acceptability criterion {f(z, delta) <= l_j}.  The per-level
instrumental complexity (baseline support plus the training scenarios whose
cost exceeds the level) feeds the bound functions, and a union bound over
the grid turns the per-level statements into simultaneous lower and upper
step functions enclosing the entire CDF.

Costs are evaluated once, sorted, and per-level violator counts come from
binary search; the decision never changes across levels so the same support
list is reused throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .bounds import BoundQuery, epsilon_pair, epsilon_upper
from .core import DecisionProblem, Decision, ScenarioSet, SupportInfo

__all__ = [
    "ThresholdGrid",
    "CdfEnvelope",
    "per_level_complexities",
    "build_envelope",
    "evaluate_envelope",
]


@dataclass(frozen=True)
class ThresholdGrid:
    """Strictly increasing cost levels l_1 < ... < l_h."""

    levels: np.ndarray

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        object.__setattr__(self, "levels", levels)
        if levels.ndim != 1 or levels.size < 1:
            raise ValueError("grid needs at least one level")
        if not np.all(np.diff(levels) > 0):
            raise ValueError("grid levels must be strictly increasing")

    @classmethod
    def uniform(cls, lo: float, hi: float, count: int) -> "ThresholdGrid":
        """count levels uniformly spaced on [lo, hi], endpoints included."""
        if count < 1:
            raise ValueError("count must be positive")
        if count == 1:
            return cls(np.array([float(lo)]))
        return cls(np.linspace(float(lo), float(hi), count))

    @property
    def h(self) -> int:
        return int(self.levels.size)


@dataclass(frozen=True)
class CdfEnvelope:
    """Lower/upper step bounds on the cost CDF with confidence accounting.

    upper_values is None when non-degeneracy was not asserted; the envelope
    is then lower-only with confidence 1 - h*beta instead of 1 - (h+r)*beta.
    """

    grid: ThresholdGrid
    per_level_complexity: np.ndarray
    lower_values: np.ndarray
    upper_values: Optional[np.ndarray]
    confidence: float
    nested_flags: np.ndarray
    r: int


def per_level_complexities(problem: DecisionProblem, scenarios: ScenarioSet,
                           decision: Decision, support: SupportInfo,
                           cost: Callable, grid: ThresholdGrid) -> np.ndarray:
    """|support ∪ {i : cost(decision, delta_i) > l_j}| for every level j.

    A scenario violates a level strictly (cost > level).  Costs are computed
    once; each level then costs two binary searches.
    """
    costs = np.empty(len(scenarios))
    for pos, (sid, payload) in enumerate(zip(scenarios.ids, scenarios.scenarios)):
        try:
            costs[pos] = float(cost(decision, payload))
        except Exception as exc:
            raise RuntimeError(f"cost evaluation failed on scenario {sid}") from exc
    support_set = set(support.indices)
    support_costs = np.sort(
        [c for sid, c in zip(scenarios.ids, costs) if sid in support_set])
    all_sorted = np.sort(costs)
    n = len(scenarios)
    # |support ∪ V_j| = |support| + |V_j| - |support ∩ V_j|; both the total
    # violator count and the overlap reduce to ranks in the sorted cost arrays
    rank_all = np.searchsorted(all_sorted, grid.levels, side="right")
    rank_support = np.searchsorted(support_costs, grid.levels, side="right")
    union = n - rank_all + rank_support
    return union.astype(int)


def build_envelope(per_level: Sequence[int], grid: ThresholdGrid,
                   sample_size: int, confidence_beta: float, s_b: int,
                   nested_flags: Sequence[bool],
                   nondegenerate: bool = True) -> CdfEnvelope:
    """Assemble the envelope from per-level complexities.

    With non-degeneracy the lower step uses the two-sided upper bound and
    the upper step uses the two-sided lower bound, discounted by the
    baseline bound at every non-nested level; the union bound charges beta
    once per level plus once per non-nested level.  Without non-degeneracy
    only the lower step is available, from the one-sided bound, at
    confidence 1 - h*beta.
    """
    per_level = np.asarray(per_level, dtype=int)
    if per_level.shape != (grid.h,):
        raise ValueError(f"need one complexity per level, got {per_level.shape}")
    if np.any(np.diff(per_level) > 0):
        raise ValueError("per-level complexities must be nonincreasing")
    flags = np.asarray(nested_flags, dtype=bool)
    if flags.shape != (grid.h,):
        raise ValueError(f"need one nested flag per level, got {flags.shape}")
    if np.any(per_level < 0) or np.any(per_level > sample_size):
        raise ValueError("complexities must lie in [0, sample_size]")

    r = int(np.count_nonzero(~flags))
    distinct = np.unique(per_level)
    if nondegenerate:
        pair = {int(k): epsilon_pair(BoundQuery(sample_size, confidence_beta, int(k)))
                for k in distinct}
        eps_baseline = epsilon_upper(BoundQuery(sample_size, confidence_beta, int(s_b)))
        lower = np.array([1.0 - pair[int(k)][1] for k in per_level])
        tilde = np.array([
            pair[int(k)][0] if nested else max(0.0, pair[int(k)][0] - eps_baseline)
            for k, nested in zip(per_level, flags)
        ])
        upper = 1.0 - tilde
        confidence = 1.0 - (grid.h + r) * confidence_beta
    else:
        one = {int(k): epsilon_upper(BoundQuery(sample_size, confidence_beta, int(k)))
               for k in distinct}
        lower = np.array([1.0 - one[int(k)] for k in per_level])
        upper = None
        confidence = 1.0 - grid.h * confidence_beta
    return CdfEnvelope(
        grid=grid,
        per_level_complexity=per_level,
        lower_values=lower,
        upper_values=upper,
        confidence=confidence,
        nested_flags=flags,
        r=r,
    )


def evaluate_envelope(envelope: CdfEnvelope, side: str, level: float) -> float:
    """Evaluate one side of the envelope at an arbitrary cost level.

    The lower step is left-closed: it jumps up AT each grid level.  The
    upper step holds its certified value up to and including each grid
    level and is 1 strictly beyond the last one.
    """
    levels = envelope.grid.levels
    if side == "lower":
        j = int(np.searchsorted(levels, level, side="right"))
        if j == 0:
            return 0.0
        return float(envelope.lower_values[j - 1])
    if side == "upper":
        if envelope.upper_values is None:
            raise ValueError("envelope was built lower-only; no upper side exists")
        j = int(np.searchsorted(levels, level, side="left"))
        if j >= envelope.grid.h:
            return 1.0
        return float(envelope.upper_values[j])
    raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")

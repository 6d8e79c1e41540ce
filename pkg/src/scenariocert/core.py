"""Support lists, instrumental complexity and certified risk reports.

A decision problem is anything that maps scenario sublists to decisions
consistently: permutation invariant, confirming under satisfied baseline
criteria, responsive to violated ones.  Given one solved instance this
module extracts a baseline support list (an irreducible sublist reproducing
the decision), counts post-design violations, assembles the instrumental
complexity, and turns the two complexities into certified risk statements
through the bound functions of :mod:`scenariocert.bounds`.

Support extraction is greedy deletion and therefore yields an upper bound on
the minimal support cardinality.  That is sound: the bound functions are
nondecreasing in the complexity argument, so a certified statement at an
overestimated complexity is still a certified statement.
"""

from __future__ import annotations

import abc
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .bounds import BoundQuery, epsilon_pair, epsilon_upper

__all__ = [
    "ScenarioSet",
    "Decision",
    "DecisionProblem",
    "SupportInfo",
    "CertificationReport",
    "compute_baseline_support",
    "count_postdesign_violations",
    "instrumental_complexity",
    "certify_from_complexities",
    "certify",
    "monte_carlo_risk",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScenarioSet:
    """An ordered list of scenario payloads with stable integer ids."""

    scenarios: tuple
    ids: tuple
    origin: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        object.__setattr__(self, "ids", tuple(int(i) for i in self.ids))
        if len(self.scenarios) != len(self.ids):
            raise ValueError("ids and scenarios must have equal length")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("scenario ids must be unique")

    @classmethod
    def from_payloads(cls, payloads: Sequence, origin: Optional[dict] = None):
        """Wrap payloads with 1-based ids in insertion order."""
        payloads = tuple(payloads)
        return cls(payloads, tuple(range(1, len(payloads) + 1)), origin or {})

    def __len__(self) -> int:
        return len(self.scenarios)

    def payloads_for(self, ids: Sequence[int]) -> list:
        """Payloads for the given ids, in ascending id order."""
        lookup = {i: s for i, s in zip(self.ids, self.scenarios)}
        try:
            return [lookup[int(i)] for i in sorted(ids)]
        except KeyError as exc:
            raise ValueError(f"unknown scenario id {exc.args[0]}") from exc


@dataclass
class Decision:
    """Output of a decision problem's solve: a variable vector plus metadata.

    `extra` may carry an "active_indices" entry (0-based positions into the
    payload list handed to solve) nominating support-list candidates; the
    support extractor uses it when present and falls back to all scenarios
    otherwise.
    """

    variables: np.ndarray
    objective: float
    extra: dict = field(default_factory=dict)


class DecisionProblem(abc.ABC):
    """Contract between a scenario program and the certification machinery.

    Implementations must be consistent with their own baseline criterion:
    solve is permutation invariant, keeps the decision when appended
    scenarios satisfy baseline_ok for it, and changes the decision when any
    appended scenario fails baseline_ok.  That obligation is spot-tested for
    the bundled problems, not verified in general.

    `is_nested` asserts that the post-design criterion implies the baseline
    one; `nondegenerate` asserts almost-sure uniqueness of the baseline
    support list.  Both are caller assertions, never inferred.
    """

    is_nested: bool = False
    nondegenerate: bool = False
    certifies_exact_support: bool = False

    @abc.abstractmethod
    def solve(self, payloads: Sequence) -> Decision:
        """Solve the scenario program on a sublist of payloads."""

    @abc.abstractmethod
    def baseline_ok(self, decision: Decision, scenario) -> bool:
        """Design-time acceptability of the decision for one scenario."""

    @abc.abstractmethod
    def postdesign_ok(self, decision: Decision, scenario) -> bool:
        """After-the-fact acceptability of the decision for one scenario."""

    def decisions_equal(self, a: Decision, b: Decision) -> bool:
        """Componentwise comparison of the variable vectors, 1e-7 absolute."""
        va, vb = np.asarray(a.variables), np.asarray(b.variables)
        return va.shape == vb.shape and bool(np.all(np.abs(va - vb) <= 1e-7))


@dataclass(frozen=True)
class SupportInfo:
    """An irreducible scenario sublist reproducing the full-sample decision."""

    indices: tuple
    cardinality: int
    minimality: str          # "exact" | "upper_bound"
    used_fallback: bool = False

    def __post_init__(self):
        if self.minimality not in ("exact", "upper_bound"):
            raise ValueError(f"bad minimality flag {self.minimality!r}")
        if self.cardinality != len(self.indices):
            raise ValueError("cardinality must equal the number of indices")


@dataclass(frozen=True)
class CertificationReport:
    """Certified risk statements for one solved scenario program."""

    sample_size: int
    confidence_beta: float
    baseline_complexity: int
    instrumental_complexity: int
    risk_upper: float
    nested_interval: Optional[tuple] = None
    general_interval: Optional[tuple] = None
    total_confidence: float = 0.0
    violator_ids: Optional[tuple] = None


def compute_baseline_support(problem: DecisionProblem, scenarios: ScenarioSet,
                             decision: Optional[Decision] = None) -> SupportInfo:
    """Greedy-deletion support list for the full-sample decision.

    Starts from the candidate set the decision nominates (active constraints
    when available, else all scenarios), sweeps candidates in ascending id
    order deleting whatever leaves the decision unchanged, and repeats until
    a sweep makes no deletion.  The result reproduces the decision and is
    irreducible; its cardinality is an upper bound on the true complexity
    unless the problem certifies exact support.
    """
    if decision is None:
        decision = _solve_sublist(problem, scenarios, scenarios.ids)

    working = None
    used_fallback = False
    active = decision.extra.get("active_indices") if decision.extra else None
    if active is not None:
        candidate_ids = sorted(scenarios.ids[int(pos)] for pos in active)
        trial = _solve_sublist(problem, scenarios, candidate_ids)
        if problem.decisions_equal(trial, decision):
            working = candidate_ids
        else:
            used_fallback = True
            logger.warning(
                "active-constraint candidates do not reproduce the decision; "
                "falling back to the full scenario set")
    if working is None:
        working = sorted(scenarios.ids)

    deleted = True
    while deleted:
        deleted = False
        for sid in list(working):
            trial_ids = [i for i in working if i != sid]
            trial = _solve_sublist(problem, scenarios, trial_ids)
            if problem.decisions_equal(trial, decision):
                working = trial_ids
                deleted = True
    minimality = "exact" if problem.certifies_exact_support else "upper_bound"
    return SupportInfo(tuple(working), len(working), minimality, used_fallback)


def _solve_sublist(problem, scenarios, ids):
    try:
        return problem.solve(scenarios.payloads_for(ids))
    except Exception as exc:
        raise RuntimeError(f"solver failed on scenario sublist {sorted(ids)}") from exc


def count_postdesign_violations(problem: DecisionProblem, decision: Decision,
                                scenarios: ScenarioSet):
    """Ids of training scenarios the decision is post-design inappropriate for."""
    bad = []
    for sid, payload in zip(scenarios.ids, scenarios.scenarios):
        try:
            ok = problem.postdesign_ok(decision, payload)
        except Exception as exc:
            raise RuntimeError(
                f"post-design predicate failed on scenario {sid}") from exc
        if not ok:
            bad.append(sid)
    bad.sort()
    return len(bad), bad


def instrumental_complexity(problem: DecisionProblem, scenarios: ScenarioSet,
                            support: SupportInfo, violators: Sequence[int],
                            prune: bool = False,
                            decision: Optional[Decision] = None) -> int:
    """Cardinality of the support list augmented with out-of-support violators.

    The union is always a valid upper bound on the instrumental complexity.
    With prune=True a greedy sweep additionally tries to drop support members
    that are not violators, keeping a deletion only when the re-solved
    decision is unchanged and the within-list violation count still equals
    the full-sample count (violators themselves can never be dropped: their
    removal lowers that count by construction).
    """
    violator_set = set(int(v) for v in violators)
    working = sorted(violator_set | set(support.indices))
    if not prune:
        return len(working)

    if decision is None:
        decision = _solve_sublist(problem, scenarios, scenarios.ids)
    target = len(violator_set)
    deleted = True
    while deleted:
        deleted = False
        for sid in [i for i in working if i not in violator_set]:
            trial_ids = [i for i in working if i != sid]
            trial = _solve_sublist(problem, scenarios, trial_ids)
            if not problem.decisions_equal(trial, decision):
                continue
            in_list = sum(
                not problem.postdesign_ok(trial, p)
                for p in scenarios.payloads_for(trial_ids))
            if in_list == target:
                working = trial_ids
                deleted = True
    return len(working)


def certify_from_complexities(sample_size: int, confidence_beta: float,
                              s_b: int, s_plus: int, is_nested: bool,
                              nondegenerate: bool) -> CertificationReport:
    """Certified risk statements from a (baseline, instrumental) complexity pair.

    The one-sided upper bound at the instrumental complexity always holds
    with confidence 1-beta.  Under non-degeneracy the two-sided interval is
    added: directly when the criteria are nested (confidence 1-beta), else
    with the lower edge discounted by the baseline bound and the confidences
    combined by a union bound (confidence 1-2*beta).
    """
    if not (0 <= s_b <= s_plus <= sample_size):
        raise ValueError(
            f"complexities must satisfy 0 <= {s_b} <= {s_plus} <= {sample_size}")
    risk_upper = epsilon_upper(BoundQuery(sample_size, confidence_beta, s_plus))
    nested_interval = None
    general_interval = None
    total_confidence = 1.0 - confidence_beta
    if nondegenerate:
        lo, hi = epsilon_pair(BoundQuery(sample_size, confidence_beta, s_plus))
        if is_nested:
            nested_interval = (lo, hi)
        else:
            eps_baseline = epsilon_upper(BoundQuery(sample_size, confidence_beta, s_b))
            general_interval = (max(0.0, lo - eps_baseline), hi)
            total_confidence = 1.0 - 2.0 * confidence_beta
    return CertificationReport(
        sample_size=sample_size,
        confidence_beta=confidence_beta,
        baseline_complexity=int(s_b),
        instrumental_complexity=int(s_plus),
        risk_upper=risk_upper,
        nested_interval=nested_interval,
        general_interval=general_interval,
        total_confidence=total_confidence,
    )


def certify(problem: DecisionProblem, scenarios: ScenarioSet,
            confidence_beta: float, prune: bool = False) -> CertificationReport:
    """Full pipeline: solve, support, violations, complexities, bounds."""
    if not (0.0 < confidence_beta < 1.0):
        raise ValueError(f"confidence_beta must lie in (0, 1), got {confidence_beta!r}")
    stage = "solve"
    try:
        decision = _solve_sublist(problem, scenarios, scenarios.ids)
        stage = "support"
        support = compute_baseline_support(problem, scenarios, decision=decision)
        stage = "violations"
        _, violator_ids = count_postdesign_violations(problem, decision, scenarios)
        stage = "instrumental-complexity"
        s_plus = instrumental_complexity(problem, scenarios, support, violator_ids,
                                         prune=prune, decision=decision)
        stage = "bounds"
        report = certify_from_complexities(
            len(scenarios), confidence_beta, support.cardinality, s_plus,
            problem.is_nested, problem.nondegenerate)
    except Exception as exc:
        raise RuntimeError(f"certification failed at stage '{stage}'") from exc
    return replace(report, violator_ids=tuple(violator_ids))


def monte_carlo_risk(predicate: Callable, decision, sampler: Callable,
                     n_samples: int, seed: int) -> float:
    """Fraction of freshly sampled scenarios on which the predicate is false.

    `sampler(n, seed)` must return a payload list deterministically; the
    estimate is then itself deterministic given the seed.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    payloads = sampler(n_samples, seed)
    bad = 0
    for payload in payloads:
        if not predicate(decision, payload):
            bad += 1
    return bad / n_samples

"""End-to-end case-study pipelines shared by the CLI, the demos and the tests.

Each pipeline samples scenarios from a seeded generator, solves the design
program, extracts the baseline support, counts post-design violations,
assembles certified statements and (optionally) validates them against
fresh Monte Carlo draws.  Everything downstream of the seed is
deterministic.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from ..cdf import ThresholdGrid, build_envelope, per_level_complexities
from ..core import (
    ScenarioSet,
    certify_from_complexities,
    compute_baseline_support,
    count_postdesign_violations,
    instrumental_complexity,
)
from .input_design import (
    InputDesignProblem,
    InputDesignSpec,
    build_robust_input_design_lp,
    final_state_costs_batch,
    sample_input_design_scenarios,
)
from .pole_placement import (
    ConicSector,
    PolePlacementProblem,
    PolePlacementSpec,
    closed_loop_roots_batch,
    sample_pendulum_scenarios,
    sector_ok_batch,
)
from ..simplex import solve_lp

__all__ = ["run_pole_placement", "run_input_design"]


def run_pole_placement(n: int, beta: float, seed: int,
                       sector: tuple = (-0.7, 0.5),
                       nondegenerate: bool = True,
                       prune: bool = False,
                       mc_samples: int = 0,
                       mc_seed: Optional[int] = None,
                       sector_sweep: Sequence[float] = ()) -> dict:
    """Sample, design, certify; optionally re-certify for relaxed sectors.

    The sweep entries are alternative real-part caps evaluated against the
    SAME decision and support list: only the post-design violation count,
    and hence the instrumental complexity, changes with the sector.
    """
    spec = PolePlacementSpec(sector=ConicSector(*sector))
    problem = PolePlacementProblem(spec, nondegenerate=nondegenerate)
    payloads = sample_pendulum_scenarios(n, seed)
    scenarios = ScenarioSet.from_payloads(
        payloads, origin={"sampler": "pendulum", "seed": int(seed), "n": int(n)})

    decision = problem.solve(payloads)
    support = compute_baseline_support(problem, scenarios, decision=decision)
    _, violators = count_postdesign_violations(problem, decision, scenarios)
    s_plus = instrumental_complexity(problem, scenarios, support, violators,
                                     prune=prune, decision=decision)
    report = replace(
        certify_from_complexities(n, beta, support.cardinality, s_plus,
                                  problem.is_nested, problem.nondegenerate),
        violator_ids=tuple(violators))
    result = {
        "problem": problem,
        "scenarios": scenarios,
        "decision": decision,
        "support": support,
        "report": report,
    }

    if mc_samples:
        result["mc_risk"] = problem.postdesign_risk_estimate(
            decision, mc_samples, seed + 1 if mc_seed is None else mc_seed)

    if sector_sweep:
        x = decision.variables
        fg = (x[0], x[1], x[2], x[3])
        roots = closed_loop_roots_batch(fg, payloads, spec)
        sweep = []
        for max_real in sector_sweep:
            alt = ConicSector(float(max_real), spec.sector.min_damping)
            ok = sector_ok_batch(roots, alt)
            alt_violators = [scenarios.ids[pos]
                             for pos in np.nonzero(~ok)[0]]
            alt_s_plus = len(set(alt_violators) | set(support.indices))
            alt_report = replace(
                certify_from_complexities(n, beta, support.cardinality,
                                          alt_s_plus, problem.is_nested,
                                          problem.nondegenerate),
                violator_ids=tuple(sorted(alt_violators)))
            sweep.append({"max_real": float(max_real), "report": alt_report})
        result["sector_sweep"] = sweep
    return result


def run_input_design(n: int, beta: float, rho: float, grid: ThresholdGrid,
                     seed: int, nondegenerate: bool = True,
                     prune: bool = False,
                     mc_samples: int = 0,
                     mc_seed: Optional[int] = None) -> dict:
    """Sample, design with relaxation, certify, and build the cost envelope.

    Non-degeneracy holds provably here (the scenario distribution admits a
    density), so the default asserts it and both envelope sides exist.
    The grid lives on the shifted cost (final-state norm minus the level h),
    so every level at or below zero is nested with the design criterion.
    """
    spec = InputDesignSpec(relaxation_rho=float(rho))
    problem = InputDesignProblem(spec, nondegenerate=nondegenerate)
    payloads = sample_input_design_scenarios(n, seed)
    scenarios = ScenarioSet.from_payloads(
        payloads, origin={"sampler": "state-matrix", "seed": int(seed), "n": int(n)})

    decision = problem.solve(payloads)
    support = compute_baseline_support(problem, scenarios, decision=decision)
    _, violators = count_postdesign_violations(problem, decision, scenarios)
    s_plus = instrumental_complexity(problem, scenarios, support, violators,
                                     prune=prune, decision=decision)
    report = replace(
        certify_from_complexities(n, beta, support.cardinality, s_plus,
                                  problem.is_nested, problem.nondegenerate),
        violator_ids=tuple(violators))

    per_level = per_level_complexities(problem, scenarios, decision, support,
                                       problem.cost, grid)
    nested_flags = grid.levels <= 0.0
    envelope = build_envelope(per_level, grid, n, beta, support.cardinality,
                              nested_flags, nondegenerate=nondegenerate)
    result = {
        "problem": problem,
        "scenarios": scenarios,
        "decision": decision,
        "support": support,
        "report": report,
        "envelope": envelope,
    }

    if mc_samples:
        fresh = np.stack(sample_input_design_scenarios(
            mc_samples, seed + 1 if mc_seed is None else mc_seed))
        rec = decision.extra["decision"]
        costs = np.sort(final_state_costs_batch(fresh, rec.u, spec) - rec.h)
        result["mc_cdf"] = (
            np.searchsorted(costs, grid.levels, side="right") / mc_samples)
    return result


def solve_robust_input_design(payloads, spec: Optional[InputDesignSpec] = None):
    """(u, h) of the slack-free program, for relaxation-limit comparisons."""
    spec = spec or InputDesignSpec()
    sol = solve_lp(build_robust_input_design_lp(list(payloads), spec))
    if sol.status != "optimal":
        raise RuntimeError(f"robust program came back {sol.status}")
    T = spec.horizon
    return sol.variables[:T].copy(), float(sol.variables[T])

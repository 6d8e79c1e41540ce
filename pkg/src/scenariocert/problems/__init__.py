"""Bundled case-study problems and their end-to-end pipelines."""

from .casestudies import run_input_design, run_pole_placement, solve_robust_input_design
from .input_design import (
    InputDesignDecision,
    InputDesignProblem,
    InputDesignSpec,
    MEAN_STATE_MATRIX,
    build_input_design_lp,
    build_robust_input_design_lp,
    final_state_cost,
    final_state_costs_batch,
    reachability_matrix,
    sample_input_design_scenarios,
)
from .pole_placement import (
    ConicSector,
    ControllerDecision,
    PendulumScenario,
    PolePlacementProblem,
    PolePlacementSpec,
    build_pole_placement_lp,
    closed_loop_coeffs,
    in_conic_sector,
    pendulum_plant_coeffs,
    pole_placement_postdesign_ok,
    polynomial_roots,
    sample_pendulum_scenarios,
)

PROBLEM_IDS = ("pole-placement", "input-design")


def make_problem(problem_id: str, nondegenerate: bool = False, **spec_kwargs):
    """Instantiate a bundled problem by its public id."""
    if problem_id == "pole-placement":
        spec = PolePlacementSpec(**spec_kwargs) if spec_kwargs else None
        return PolePlacementProblem(spec, nondegenerate=nondegenerate)
    if problem_id == "input-design":
        spec = InputDesignSpec(**spec_kwargs) if spec_kwargs else None
        return InputDesignProblem(spec, nondegenerate=nondegenerate)
    raise ValueError(f"unknown problem id {problem_id!r}; known: {PROBLEM_IDS}")

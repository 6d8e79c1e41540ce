"""Robust pole placement for a pendulum with uncertain physical parameters.

The plant is the upright-pendulum linearization 1/(s^2 + a1 s + a2) with
a1 = friction/(mass*length) and a2 = -gravity/length.  A second-order
controller f(s)/g(s) is fitted by pushing the closed-loop quartic
a(s) g(s) + f(s) toward a reference polynomial: the design minimizes the sum
of per-coefficient deviation bounds h_j over all scenarios, a linear program
in (f1, f2, g1, g2, h1..h4).

Design-time acceptability of a decision for a scenario is coefficient-wise:
|p_j(scenario) - r_j| <= h_j for all four coefficients.  The after-the-fact
criterion is the real target: all four closed-loop roots inside a conic
sector (real part capped, damping floored).  Coefficient proximity does not
imply root containment, which is exactly why the two criteria are kept
separate and certified separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..core import Decision, DecisionProblem
from ..errors import NumericalError
from ..simplex import LinearProgram, solve_lp

__all__ = [
    "PendulumScenario",
    "ConicSector",
    "PolePlacementSpec",
    "ControllerDecision",
    "pendulum_plant_coeffs",
    "closed_loop_coeffs",
    "build_pole_placement_lp",
    "polynomial_roots",
    "in_conic_sector",
    "sample_pendulum_scenarios",
    "pole_placement_postdesign_ok",
    "closed_loop_roots_batch",
    "PolePlacementProblem",
]

GRAVITY = 9.8


@dataclass(frozen=True)
class PendulumScenario:
    """One draw of the uncertain pendulum: mass [kg], rod length [m], friction.

    Mass and length sit in denominators and must be positive; zero friction
    is physically fine (undamped pendulum).
    """

    mass: float
    length: float
    friction: float

    def __post_init__(self):
        if self.mass <= 0 or self.length <= 0:
            raise ValueError("mass and length must be positive")
        if self.friction < 0:
            raise ValueError("friction must be nonnegative")


@dataclass(frozen=True)
class ConicSector:
    """Complex-plane target region: Re(s) <= max_real, damping >= min_damping."""

    max_real: float
    min_damping: float

    def __post_init__(self):
        if not self.max_real < 0:
            raise ValueError("max_real must be negative")
        if not 0.0 < self.min_damping < 1.0:
            raise ValueError("min_damping must lie in (0, 1)")

    @property
    def slope(self) -> float:
        """|Im| per unit of -Re allowed by the damping floor."""
        z = self.min_damping
        return math.sqrt(1.0 - z * z) / z


def in_conic_sector(root: complex, sector: ConicSector) -> bool:
    """Closed-boundary membership test for one root."""
    re, im = root.real, root.imag
    return re <= sector.max_real and abs(im) <= sector.slope * (-re)


def polynomial_roots(coeffs: Sequence[float]) -> np.ndarray:
    """All complex roots of a monic polynomial of degree 1..8.

    Companion-matrix eigenvalues followed by one Newton polish per root.
    Real input coefficients give exactly conjugate-paired output (the real
    Schur form pairs eigenvalues exactly and Newton in complex arithmetic
    commutes with conjugation).  Each root satisfies
    |p(root)| <= 1e-8 * (1 + max|coeff|).
    """
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or not 2 <= c.size <= 9:
        raise ValueError("need a coefficient vector for degree between 1 and 8")
    if c[0] != 1.0:
        raise ValueError(f"polynomial must be monic, leading coefficient {c[0]}")
    deg = c.size - 1
    companion = np.zeros((deg, deg))
    companion[0, :] = -c[1:]
    if deg > 1:
        companion[np.arange(1, deg), np.arange(0, deg - 1)] = 1.0
    roots = np.linalg.eigvals(companion)
    deriv = np.polyder(c)
    vals = np.polyval(c, roots)
    slopes = np.polyval(deriv, roots)
    safe = np.abs(slopes) > 1e-30
    roots = np.where(safe, roots - vals / np.where(safe, slopes, 1.0), roots)
    residual = np.abs(np.polyval(c, roots))
    bound = 1e-8 * (1.0 + float(np.abs(c).max()))
    if residual.max() > bound:
        raise NumericalError(
            f"root residual {residual.max():.3e} exceeds {bound:.3e}")
    return roots


@dataclass(frozen=True)
class PolePlacementSpec:
    """Reference quartic, target sector and gravity for the case study."""

    reference_coeffs: tuple = (8.0, 32.0, 48.0, 36.0)
    sector: ConicSector = ConicSector(-0.7, 0.5)
    gravity: float = GRAVITY

    def __post_init__(self):
        r = tuple(float(v) for v in self.reference_coeffs)
        object.__setattr__(self, "reference_coeffs", r)
        if len(r) != 4:
            raise ValueError("the reference polynomial must be a monic quartic")
        for root in polynomial_roots((1.0,) + r):
            strictly_inside = (root.real < self.sector.max_real
                               and abs(root.imag) < self.sector.slope * (-root.real))
            if not strictly_inside:
                raise ValueError(
                    f"reference root {root} is not strictly inside the sector")


@dataclass(frozen=True)
class ControllerDecision:
    """Controller (f1 s + f2)/(s^2 + g1 s + g2) plus coefficient-deviation bounds."""

    f: tuple
    g: tuple
    h: tuple

    def __post_init__(self):
        if len(self.f) != 2 or len(self.g) != 2 or len(self.h) != 4:
            raise ValueError("expected f (2), g (2) and h (4) coefficient tuples")
        if any(v < 0 for v in self.h):
            raise ValueError("deviation bounds must be nonnegative")


def pendulum_plant_coeffs(scenario: PendulumScenario, gravity: float = GRAVITY):
    """Denominator coefficients (a1, a2) of the linearized upright pendulum."""
    a1 = scenario.friction / (scenario.mass * scenario.length)
    a2 = -gravity / scenario.length
    return a1, a2


def closed_loop_coeffs(plant, controller):
    """Coefficients (p1..p4) of the monic closed-loop quartic a(s)g(s) + f(s)."""
    a1, a2 = plant
    f1, f2, g1, g2 = controller
    return (a1 + g1,
            a2 + g2 + a1 * g1,
            a1 * g2 + a2 * g1 + f1,
            a2 * g2 + f2)


def _scenario_rows(plant, spec: PolePlacementSpec):
    """The eight inequality rows one scenario contributes, as (A, b).

    Variables are ordered (f1, f2, g1, g2, h1, h2, h3, h4).  Row pairs
    2j, 2j+1 encode p_j - r_j <= h_j and r_j - p_j <= h_j.
    """
    a1, a2 = plant
    # linear part of each coefficient in (f1, f2, g1, g2) plus its constant
    lin = np.array([
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, a1, 1.0],
        [1.0, 0.0, a2, a1],
        [0.0, 1.0, 0.0, a2],
    ])
    const = np.array([a1, a2, 0.0, 0.0])
    r = np.asarray(spec.reference_coeffs)
    rows = np.zeros((8, 8))
    rhs = np.zeros(8)
    for j in range(4):
        rows[2 * j, :4] = lin[j]
        rows[2 * j, 4 + j] = -1.0
        rhs[2 * j] = r[j] - const[j]
        rows[2 * j + 1, :4] = -lin[j]
        rows[2 * j + 1, 4 + j] = -1.0
        rhs[2 * j + 1] = const[j] - r[j]
    return rows, rhs


def build_pole_placement_lp(scenarios: Sequence[PendulumScenario],
                            spec: PolePlacementSpec) -> LinearProgram:
    """Deviation-minimizing program: min sum(h) over all scenario rows.

    Rows are tagged with the position of their scenario in the input list.
    """
    if not scenarios:
        raise ValueError("need at least one scenario")
    m = len(scenarios)
    coeffs = np.zeros((8 * m, 8))
    rhs = np.zeros(8 * m)
    tags = []
    for pos, sc in enumerate(scenarios):
        rows, b = _scenario_rows(pendulum_plant_coeffs(sc, spec.gravity), spec)
        coeffs[8 * pos:8 * pos + 8] = rows
        rhs[8 * pos:8 * pos + 8] = b
        tags.extend([pos] * 8)
    objective = np.concatenate([np.zeros(4), np.ones(4)])
    lower = np.concatenate([np.full(4, -np.inf), np.zeros(4)])
    return LinearProgram(objective, coeffs, ["<="] * (8 * m), rhs, tags,
                         lower=lower)


def sample_pendulum_scenarios(n: int, seed: int) -> list:
    """n independent pendulum draws from a counter-based generator (Philox).

    mass ~ U[9, 10] kg, length ~ U[0.9, 1] m independently, and
    friction | mass ~ U[mass, 1.1*mass].  Draw order is fixed (mass block,
    length block, friction multiplier block) so seeds are portable.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.Generator(np.random.Philox(seed))
    mass = rng.uniform(9.0, 10.0, n)
    length = rng.uniform(0.9, 1.0, n)
    friction = mass * rng.uniform(1.0, 1.1, n)
    return [PendulumScenario(float(m), float(l), float(a))
            for m, l, a in zip(mass, length, friction)]


def pole_placement_postdesign_ok(controller: ControllerDecision,
                                 scenario: PendulumScenario,
                                 spec: PolePlacementSpec) -> bool:
    """True when every closed-loop root lands inside the target sector."""
    plant = pendulum_plant_coeffs(scenario, spec.gravity)
    fg = (*controller.f, *controller.g)
    p = closed_loop_coeffs(plant, fg)
    roots = polynomial_roots((1.0,) + tuple(p))
    return all(in_conic_sector(complex(z), spec.sector) for z in roots)


def closed_loop_roots_batch(controller_fg, scenarios: Sequence[PendulumScenario],
                            spec: PolePlacementSpec) -> np.ndarray:
    """(n, 4) closed-loop root array via batched companion eigenvalues.

    Fast path for Monte Carlo sweeps; agrees with polynomial_roots up to the
    skipped Newton polish (~1e-12), which the sector test does not resolve.
    """
    a1 = np.array([s.friction / (s.mass * s.length) for s in scenarios])
    a2 = np.array([-spec.gravity / s.length for s in scenarios])
    f1, f2, g1, g2 = controller_fg
    n = a1.size
    comp = np.zeros((n, 4, 4))
    comp[:, 0, 0] = -(a1 + g1)
    comp[:, 0, 1] = -(a2 + g2 + a1 * g1)
    comp[:, 0, 2] = -(a1 * g2 + a2 * g1 + f1)
    comp[:, 0, 3] = -(a2 * g2 + f2)
    comp[:, 1, 0] = 1.0
    comp[:, 2, 1] = 1.0
    comp[:, 3, 2] = 1.0
    return np.linalg.eigvals(comp)


def sector_ok_batch(roots: np.ndarray, sector: ConicSector) -> np.ndarray:
    """Per-row boolean: all roots inside the sector."""
    re, im = roots.real, roots.imag
    inside = (re <= sector.max_real) & (np.abs(im) <= sector.slope * (-re))
    return np.all(inside, axis=1)


class PolePlacementProblem(DecisionProblem):
    """DecisionProblem wrapper around the deviation-minimizing program."""

    is_nested = False  # root containment neither implies nor follows from
                       # coefficient proximity

    def __init__(self, spec: Optional[PolePlacementSpec] = None,
                 nondegenerate: bool = False):
        self.spec = spec or PolePlacementSpec()
        self.nondegenerate = bool(nondegenerate)

    def solve(self, payloads: Sequence[PendulumScenario]) -> Decision:
        if not payloads:
            # no observations: zero controller, zero deviation budget
            return Decision(np.zeros(8), 0.0, extra={"active_indices": []})
        lp = build_pole_placement_lp(list(payloads), self.spec)
        sol = solve_lp(lp)
        if sol.status != "optimal":
            raise NumericalError(f"pole-placement program came back {sol.status}")
        x = sol.variables
        controller = ControllerDecision(
            f=(float(x[0]), float(x[1])), g=(float(x[2]), float(x[3])),
            h=tuple(float(max(v, 0.0)) for v in x[4:8]))
        return Decision(x, sol.objective_value, extra={
            "active_indices": sorted(set(sol.active_row_tags)),
            "controller": controller,
        })

    def baseline_ok(self, decision: Decision, scenario: PendulumScenario) -> bool:
        rows, rhs = _scenario_rows(
            pendulum_plant_coeffs(scenario, self.spec.gravity), self.spec)
        lhs = rows @ np.asarray(decision.variables)
        return bool(np.all(lhs <= rhs + 1e-8 * (1.0 + np.abs(rhs))))

    def postdesign_ok(self, decision: Decision, scenario: PendulumScenario) -> bool:
        controller = decision.extra.get("controller")
        if controller is None:
            x = decision.variables
            controller = ControllerDecision((x[0], x[1]), (x[2], x[3]),
                                            tuple(max(float(v), 0.0) for v in x[4:8]))
        return pole_placement_postdesign_ok(controller, scenario, self.spec)

    @staticmethod
    def sampler(n: int, seed: int) -> list:
        return sample_pendulum_scenarios(n, seed)

    def postdesign_risk_estimate(self, decision: Decision, n_samples: int,
                                 seed: int) -> float:
        """Monte Carlo post-design risk over fresh draws, batched."""
        fresh = sample_pendulum_scenarios(n_samples, seed)
        x = decision.variables
        roots = closed_loop_roots_batch((x[0], x[1], x[2], x[3]), fresh, self.spec)
        return float(1.0 - np.mean(sector_ok_batch(roots, self.spec.sector)))

"""Deterministic dense linear-program solver with exposed active sets.

The solver accepts inequality/equality rows over bounded variables and
reports vertex solutions, which the support-list machinery needs: an
interior-point solution would return face-interior points and blur the
irreducibility checks downstream.

Internally every program is normalized to `A x <= b` (senses negated,
equalities split, finite variable bounds turned into rows) and a two-phase
revised simplex runs on the dual standard form `min b'lam s.t. A'lam = -c,
lam >= 0`.  The bundled case studies have a handful of variables against
thousands of scenario rows, so the dual basis is tiny (one column per
variable) where a primal basis would be rows-by-rows.  The primal vertex
falls out of the simplex multipliers.

Pivoting is Dantzig pricing with Bland's anti-cycling rule engaged
automatically after a run of degenerate steps (pure Bland pivoting was
measured to need ~N^2 pivots on the relaxed case study, versus ~N for
Dantzig).  Both rules break ties by smallest variable index, so the pivot
path, and hence the returned vertex, is a pure function of the input bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NumericalError

__all__ = ["LinearProgram", "LpSolution", "SolutionCheck", "solve_lp", "verify_solution"]

_SENSES = ("<=", ">=", "=")

# |a.x - b| <= _ACTIVE_TOL*(1+|b|) marks a row active
_ACTIVE_TOL = 1e-8
_RED_COST_TOL = 1e-9
_PIVOT_TOL = 1e-9
_REFACTOR_EVERY = 128
_MAX_ITER = 200_000


@dataclass
class LinearProgram:
    """min objective . x subject to tagged rows and box bounds on x."""

    objective: np.ndarray
    row_coeffs: np.ndarray
    row_senses: list
    row_rhs: np.ndarray
    row_tags: list
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.row_coeffs = np.asarray(self.row_coeffs, dtype=float)
        self.row_rhs = np.asarray(self.row_rhs, dtype=float)
        n = self.objective.shape[0]
        if self.row_coeffs.ndim != 2 or self.row_coeffs.shape[1] != n:
            raise ValueError(
                f"row coefficients must be (m, {n}), got {self.row_coeffs.shape}")
        m = self.row_coeffs.shape[0]
        if self.row_rhs.shape != (m,):
            raise ValueError("row_rhs length must match the number of rows")
        if len(self.row_senses) != m or len(self.row_tags) != m:
            raise ValueError("row_senses and row_tags must match the number of rows")
        for s in self.row_senses:
            if s not in _SENSES:
                raise ValueError(f"unknown row sense {s!r}")
        if self.lower is None:
            self.lower = np.full(n, -np.inf)
        if self.upper is None:
            self.upper = np.full(n, np.inf)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        if not np.all(np.isfinite(self.row_coeffs)):
            raise ValueError("row coefficients must be finite")
        if not np.all(np.isfinite(self.row_rhs)):
            raise ValueError("row right-hand sides must be finite")

    @classmethod
    def from_rows(cls, objective, rows: Sequence, lower=None, upper=None):
        """Build from an iterable of (coefficients, sense, rhs, tag) tuples."""
        coeffs = np.array([r[0] for r in rows], dtype=float)
        senses = [r[1] for r in rows]
        rhs = np.array([r[2] for r in rows], dtype=float)
        tags = [r[3] for r in rows]
        return cls(np.asarray(objective, dtype=float), coeffs, senses, rhs, tags,
                   lower=lower, upper=upper)

    @property
    def num_variables(self) -> int:
        return self.objective.shape[0]

    @property
    def num_rows(self) -> int:
        return self.row_coeffs.shape[0]


@dataclass
class LpSolution:
    status: str                       # optimal | infeasible | unbounded
    variables: np.ndarray = None
    objective_value: float = None
    active_row_tags: list = field(default_factory=list)
    row_multipliers: np.ndarray = None
    dual_objective: float = None
    iterations: int = 0


@dataclass(frozen=True)
class SolutionCheck:
    max_residual: float
    duality_gap: float


def _le_form(lp: LinearProgram):
    """Normalize to A x <= b.  Returns (A, b, origins).

    origins[r] is ("row", i, sign) for user row i (sign -1 when negated) or
    ("bound", j, sign) for a variable bound turned into a row.
    """
    blocks_a, blocks_b, origins = [], [], []
    for i in range(lp.num_rows):
        a, s, b = lp.row_coeffs[i], lp.row_senses[i], lp.row_rhs[i]
        if s in ("<=", "="):
            blocks_a.append(a)
            blocks_b.append(b)
            origins.append(("row", i, 1))
        if s in (">=", "="):
            blocks_a.append(-a)
            blocks_b.append(-b)
            origins.append(("row", i, -1))
    n = lp.num_variables
    eye = np.eye(n)
    for j in range(n):
        if np.isfinite(lp.upper[j]):
            blocks_a.append(eye[j])
            blocks_b.append(lp.upper[j])
            origins.append(("bound", j, 1))
        if np.isfinite(lp.lower[j]):
            blocks_a.append(-eye[j])
            blocks_b.append(-lp.lower[j])
            origins.append(("bound", j, -1))
    if not blocks_a:
        return np.zeros((0, n)), np.zeros(0), origins
    return np.array(blocks_a), np.array(blocks_b), origins


def _simplex_standard(A_in: np.ndarray, b_in: np.ndarray, c: np.ndarray):
    """Two-phase revised simplex with Bland's rule for min c'x, Ax = b, x >= 0.

    Returns (status, x, y, objective, iterations); y holds one multiplier per
    row of the ORIGINAL system (redundant rows dropped during phase 1 get
    multiplier 0), with signs relative to the un-negated input rows.  status
    is "optimal", "infeasible" or "unbounded".
    """
    A = np.asarray(A_in, dtype=float)
    b = np.asarray(b_in, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m_orig, n = A.shape

    flip = b < 0
    A = np.where(flip[:, None], -A, A)
    b = np.where(flip, -b, b)
    row_ids = np.arange(m_orig)

    m = m_orig
    A_all = np.ascontiguousarray(np.hstack([A, np.eye(m)]))
    feas_tol = 1e-9 * (1.0 + float(np.abs(b).max(initial=0.0)))

    basis = np.arange(n, n + m)
    binv = np.eye(m)
    xb = b.copy()
    allowed = np.ones(n + m, dtype=bool)
    total_iters = 0

    def refactor():
        nonlocal binv, xb
        B = A_all[:, basis]
        try:
            binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("simplex basis became singular") from exc
        xb = binv @ b
        np.clip(xb, 0.0, None, out=xb)

    def run_phase(cost: np.ndarray) -> str:
        nonlocal total_iters, binv, xb
        since_refactor = 0
        degenerate_run = 0   # consecutive zero-step pivots; engages Bland
        bland = False
        while True:
            if total_iters > _MAX_ITER:
                raise NumericalError(f"simplex exceeded {_MAX_ITER} iterations")
            total_iters += 1
            since_refactor += 1
            if since_refactor >= _REFACTOR_EVERY:
                refactor()
                since_refactor = 0
            y = binv.T @ cost[basis]
            red = cost - y @ A_all
            red[basis] = 0.0
            candidates = np.nonzero((red < -_RED_COST_TOL) & allowed)[0]
            if candidates.size == 0:
                return "optimal"
            if bland:
                entering = int(candidates[0])   # smallest variable index
            else:
                entering = int(candidates[np.argmin(red[candidates])])
            d = binv @ A_all[:, entering]
            pivot_rows = np.nonzero(d > _PIVOT_TOL)[0]
            if pivot_rows.size == 0:
                return "unbounded"
            ratios = np.maximum(xb[pivot_rows], 0.0) / d[pivot_rows]
            theta = float(ratios.min())
            ties = pivot_rows[ratios <= theta * (1.0 + 1e-12) + 1e-15]
            leave_pos = int(ties[np.argmin(basis[ties])])  # smallest-index tie break
            left_var = basis[leave_pos]
            piv = d[leave_pos]
            xb -= theta * d
            xb[leave_pos] = theta
            np.clip(xb, 0.0, None, out=xb)
            binv_r = binv[leave_pos] / piv
            d_other = d.copy()
            d_other[leave_pos] = 0.0
            binv -= np.outer(d_other, binv_r)
            binv[leave_pos] = binv_r
            basis[leave_pos] = entering
            if left_var >= n:
                allowed[left_var] = False  # artificials never re-enter
            if theta > 1e-12:
                degenerate_run = 0
                bland = False
            else:
                degenerate_run += 1
                if degenerate_run >= 40:
                    bland = True

    # ---- phase 1: drive artificial mass to zero -------------------------
    cost1 = np.concatenate([np.zeros(n), np.ones(m)])
    status = run_phase(cost1)
    if status == "unbounded":
        raise NumericalError("phase-1 objective cannot be unbounded")
    refactor()
    phase1_value = float(xb[basis >= n].sum())
    if phase1_value > feas_tol:
        return "infeasible", None, None, None, total_iters

    # pivot residual zero-valued artificials out; rows that cannot release
    # their artificial are linear combinations of the others and get dropped
    keep = np.ones(m, dtype=bool)
    for pos in range(m):
        if basis[pos] < n:
            continue
        row_entries = binv[pos] @ A
        pivots = np.nonzero(np.abs(row_entries) > 1e-7)[0]
        pivoted = False
        for j in pivots:
            d = binv @ A_all[:, j]
            if abs(d[pos]) <= 1e-9:
                continue
            binv_r = binv[pos] / d[pos]
            d_other = d.copy()
            d_other[pos] = 0.0
            binv -= np.outer(d_other, binv_r)
            binv[pos] = binv_r
            basis[pos] = int(j)
            xb = binv @ b
            np.clip(xb, 0.0, None, out=xb)
            pivoted = True
            break
        if not pivoted:
            keep[pos] = False

    if not np.all(keep):
        rows = np.nonzero(keep)[0]
        A = A[rows]
        b = b[rows]
        flip_kept = flip[row_ids[rows]]
        row_ids = row_ids[rows]
        m = rows.size
        basis = basis[rows]
        if np.any(basis >= n):
            raise NumericalError("artificial variable survived row elimination")
        A_all = np.ascontiguousarray(np.hstack([A, np.eye(m)]))
        allowed = np.ones(n + m, dtype=bool)
        refactor()
        del flip_kept
    allowed[n:] = False

    # ---- phase 2 on the original objective ------------------------------
    cost2 = np.concatenate([c, np.zeros(m)])
    status = run_phase(cost2)
    if status == "unbounded":
        return "unbounded", None, None, None, total_iters
    if np.any(basis >= n):
        raise NumericalError("artificial variable in the final basis")

    # exact re-solve of the final basis wipes accumulated pivot drift
    B = A_all[:, basis]
    xb_exact = np.linalg.solve(B, b)
    if np.any(xb_exact < -max(feas_tol, 1e-7 * (1.0 + np.abs(b).max(initial=0.0)))):
        raise NumericalError("final basis lost primal feasibility")
    xb_exact = np.clip(xb_exact, 0.0, None)
    y_reduced = np.linalg.solve(B.T, c[basis])

    x = np.zeros(n)
    x[basis] = xb_exact
    y = np.zeros(m_orig)
    y[row_ids] = np.where(flip[row_ids], -y_reduced, y_reduced)
    objective = float(c @ x)
    return "optimal", x, y, objective, total_iters


def solve_lp(program: LinearProgram) -> LpSolution:
    """Solve a linear program, reporting a deterministic vertex solution.

    Infeasible and unbounded programs come back as statuses, never
    exceptions; NumericalError is reserved for internal breakdowns.
    """
    a_le, b_le, origins = _le_form(program)
    c = program.objective
    n = program.num_variables
    if a_le.shape[0] == 0:
        if np.all(c == 0.0):
            return LpSolution("optimal", np.zeros(n), 0.0, [],
                              np.zeros(program.num_rows), 0.0, 0)
        return LpSolution("unbounded")

    status, lam, x, dual_std_obj, iters = _simplex_standard(a_le.T, -c, b_le)
    if status == "unbounded":
        # a ray with A'lam = 0, b'lam < 0 certifies that {x : Ax <= b} is empty
        return LpSolution("infeasible", iterations=iters)
    if status == "infeasible":
        # no multiplier vector supports the objective: the program is
        # unbounded unless it is itself empty; a Farkas run distinguishes
        f_status, _, _, _, f_iters = _simplex_standard(a_le.T, np.zeros(n), b_le)
        total = iters + f_iters
        if f_status == "optimal":
            return LpSolution("unbounded", iterations=total)
        return LpSolution("infeasible", iterations=total)

    x = np.asarray(x, dtype=float)
    objective_value = float(c @ x)
    residual = a_le @ x - b_le
    if residual.size and residual.max() > 1e-6 * (1.0 + float(np.abs(b_le).max())):
        raise NumericalError(
            f"recovered vertex violates feasibility by {residual.max():.3e}")

    mults = np.zeros(program.num_rows)
    active_tags = []
    seen_rows = set()
    for r, (kind, idx, sign) in enumerate(origins):
        if kind != "row":
            continue
        mults[idx] += sign * lam[r]
        if idx not in seen_rows:
            seen_rows.add(idx)
            a_dot = float(program.row_coeffs[idx] @ x)
            rhs = float(program.row_rhs[idx])
            if abs(a_dot - rhs) <= _ACTIVE_TOL * (1.0 + abs(rhs)):
                active_tags.append(program.row_tags[idx])

    return LpSolution(
        status="optimal",
        variables=x,
        objective_value=objective_value,
        active_row_tags=active_tags,
        row_multipliers=mults,
        dual_objective=float(-dual_std_obj),
        iterations=iters,
    )


def verify_solution(program: LinearProgram, solution: LpSolution) -> SolutionCheck:
    """Independently recheck feasibility and the duality gap of a solution."""
    if solution.status != "optimal":
        raise ValueError(f"can only verify optimal solutions, got status {solution.status!r}")
    x = np.asarray(solution.variables, dtype=float)
    worst = 0.0
    for i in range(program.num_rows):
        gap = float(program.row_coeffs[i] @ x - program.row_rhs[i])
        sense = program.row_senses[i]
        if sense == "<=":
            worst = max(worst, gap)
        elif sense == ">=":
            worst = max(worst, -gap)
        else:
            worst = max(worst, abs(gap))
    finite_lo = np.isfinite(program.lower)
    finite_hi = np.isfinite(program.upper)
    if np.any(finite_lo):
        worst = max(worst, float(np.max(program.lower[finite_lo] - x[finite_lo])))
    if np.any(finite_hi):
        worst = max(worst, float(np.max(x[finite_hi] - program.upper[finite_hi])))
    gap = abs(float(program.objective @ x) - solution.dual_objective)
    return SolutionCheck(max_residual=max(worst, 0.0), duality_gap=gap)

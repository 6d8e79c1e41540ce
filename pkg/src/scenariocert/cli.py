"""Command-line entry point for reproducible certification runs.

Subcommands: `epsilon` (bound tables and single queries), `certify`
(certification report for a scenario file), `cdf` (cost-CDF envelope),
`example` (seeded end-to-end case studies) and `validate` (Monte Carlo
re-check of a saved report).  Every output file gets a `.manifest.json`
sidecar with the config echo, artifact hashes, library versions and stage
timings.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, replace

import numpy as np

from .bounds import BoundQuery, build_table, epsilon_pair, epsilon_upper
from .cdf import ThresholdGrid, build_envelope, per_level_complexities
from .core import (
    certify,
    compute_baseline_support,
    monte_carlo_risk,
)
from .errors import NumericalError
from .fileio import (
    RunManifest,
    envelope_to_dict,
    load_scenarios,
    report_to_dict,
    round_floats,
    save_json,
    save_scenarios,
    write_envelope_csv,
    write_poles_csv,
)
from .problems import PROBLEM_IDS, make_problem
from .problems.casestudies import run_input_design, run_pole_placement
from .problems.pole_placement import closed_loop_roots_batch

OUTDIR_ENV = "SCENARIOCERT_OUTDIR"

__all__ = ["main", "RunConfig"]


@dataclass(frozen=True)
class RunConfig:
    """Validated invocation record; echoed verbatim into the manifest."""

    subcommand: str
    options: dict

    def __post_init__(self):
        beta = self.options.get("beta")
        if beta is not None and not (0.0 < beta < 1.0):
            raise ValueError(f"--beta must lie in (0, 1), got {beta}")
        n = self.options.get("n")
        if n is not None and n < 1:
            raise ValueError(f"--n must be positive, got {n}")

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, **self.options}


def _out_path(path: str) -> str:
    base = os.environ.get(OUTDIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _parse_grid(text: str) -> ThresholdGrid:
    parts = text.split(":")
    if len(parts) == 3:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        return ThresholdGrid.uniform(lo, hi, count)
    with open(_out_path(text)) as handle:
        doc = json.load(handle)
    levels = doc["levels"] if isinstance(doc, dict) else doc
    return ThresholdGrid(np.asarray(levels, dtype=float))


def _parse_sector(text: str):
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"--sector expects 'max_real:min_damping', got {text!r}")
    return float(parts[0]), float(parts[1])


def _write_outputs(config: RunConfig, out: str, payload: dict,
                   durations: dict, indent, extras: dict = None) -> None:
    out = _out_path(out)
    manifest = RunManifest(config=config.to_dict(), durations=durations)
    save_json(out, payload, indent=indent)
    manifest.add_artifact(out)
    for path, writer in (extras or {}).items():
        writer(path)
        manifest.add_artifact(path)
    manifest.write(out + ".manifest.json", indent=indent)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_epsilon(args) -> int:
    config = RunConfig("epsilon", {
        "n": args.n, "beta": args.beta, "k": args.k, "table": args.table,
        "mode": args.mode, "out": args.out})
    t0 = time.perf_counter()

    def query_row(k: int, table=None) -> dict:
        row = {"k": int(k)}
        if args.mode in ("upper", "both"):
            row["eps"] = (table.upper[k] if table is not None
                          else epsilon_upper(BoundQuery(args.n, args.beta, k)))
        if args.mode in ("pair", "both"):
            if table is not None:
                row["eps_lo"] = table.pair_lower[k]
                row["eps_hi"] = table.pair_upper[k]
            else:
                row["eps_lo"], row["eps_hi"] = epsilon_pair(
                    BoundQuery(args.n, args.beta, k))
        return row

    if args.table:
        table = build_table(args.n, args.beta)
        rows = [query_row(k, table) for k in range(args.n + 1)]
        print(f"tabulated k = 0..{args.n}")
    else:
        if args.k is None:
            raise ValueError("either --k or --table is required")
        rows = [query_row(args.k)]
        row = rows[0]
        pieces = [f"k={row['k']}"]
        if "eps" in row:
            pieces.append(f"eps={row['eps']:.12g}")
        if "eps_lo" in row:
            pieces.append(f"eps_lo={row['eps_lo']:.12g} eps_hi={row['eps_hi']:.12g}")
        print("  ".join(pieces))

    if args.out:
        doc = round_floats({"n": args.n, "beta": args.beta, "rows": rows})
        _write_outputs(config, args.out, doc,
                       {"total": time.perf_counter() - t0}, args.json_indent)
    return 0


def _cmd_certify(args) -> int:
    config = RunConfig("certify", {
        "problem": args.problem, "scenarios": args.scenarios, "beta": args.beta,
        "prune": args.prune, "nested": args.nested,
        "nondegenerate": args.nondegenerate, "out": args.out})
    t0 = time.perf_counter()
    problem_id, scenario_set = load_scenarios(_out_path(args.scenarios))
    if args.problem != problem_id:
        raise ValueError(
            f"scenario file is for problem {problem_id!r}, not {args.problem!r}")
    problem = make_problem(problem_id, nondegenerate=args.nondegenerate)
    if args.nested:
        problem.is_nested = True
    load_done = time.perf_counter()
    report = certify(problem, scenario_set, args.beta, prune=args.prune)
    solve_done = time.perf_counter()
    doc = report_to_dict(report, extra={
        "problem": problem_id,
        "origin": round_floats(scenario_set.origin),
    })
    print(f"baseline complexity: {report.baseline_complexity}")
    print(f"instrumental complexity: {report.instrumental_complexity}")
    print(f"risk upper bound: {report.risk_upper:.6g}")
    if report.nested_interval:
        print(f"risk interval (nested): {report.nested_interval[0]:.6g}"
              f" .. {report.nested_interval[1]:.6g}")
    if report.general_interval:
        print(f"risk interval: {report.general_interval[0]:.6g}"
              f" .. {report.general_interval[1]:.6g}")
    _write_outputs(config, args.out, doc, {
        "load": load_done - t0, "certify": solve_done - load_done,
    }, args.json_indent)
    return 0


def _cmd_cdf(args) -> int:
    config = RunConfig("cdf", {
        "problem": args.problem, "scenarios": args.scenarios, "beta": args.beta,
        "grid": args.grid, "nondegenerate": args.nondegenerate, "out": args.out})
    t0 = time.perf_counter()
    problem_id, scenario_set = load_scenarios(_out_path(args.scenarios))
    if args.problem != problem_id:
        raise ValueError(
            f"scenario file is for problem {problem_id!r}, not {args.problem!r}")
    problem = make_problem(problem_id, nondegenerate=args.nondegenerate)
    cost = getattr(problem, "cost", None)
    if cost is None:
        raise ValueError(f"problem {problem_id!r} does not define a cost function")
    grid = _parse_grid(args.grid)
    decision = problem.solve(list(scenario_set.scenarios))
    support = compute_baseline_support(problem, scenario_set, decision=decision)
    per_level = per_level_complexities(problem, scenario_set, decision, support,
                                       cost, grid)
    nested_flags = grid.levels <= 0.0
    envelope = build_envelope(per_level, grid, len(scenario_set), args.beta,
                              support.cardinality, nested_flags,
                              nondegenerate=args.nondegenerate)
    doc = envelope_to_dict(envelope)
    doc["problem"] = problem_id
    csv_path = _out_path(os.path.splitext(args.out)[0] + ".csv")
    print(f"levels: {grid.h}   confidence: {envelope.confidence:.12g}")
    _write_outputs(config, args.out, doc, {"total": time.perf_counter() - t0},
                   args.json_indent,
                   extras={csv_path: lambda p: write_envelope_csv(p, envelope)})
    return 0


def _cmd_example(args) -> int:
    if args.case == "pole-placement":
        return _example_pole(args)
    return _example_input(args)


def _example_pole(args) -> int:
    sector = _parse_sector(args.sector)
    sweep = tuple(float(v) for v in args.sector_sweep.split(",")) \
        if args.sector_sweep else ()
    config = RunConfig("example", {
        "case": "pole-placement", "n": args.n, "beta": args.beta,
        "seed": args.seed, "sector": list(sector),
        "sector_sweep": list(sweep), "mc": args.mc, "prune": args.prune,
        "nondegenerate": args.nondegenerate, "out": args.out})
    t0 = time.perf_counter()
    result = run_pole_placement(
        args.n, args.beta, args.seed, sector=sector,
        nondegenerate=args.nondegenerate, prune=args.prune,
        mc_samples=args.mc, sector_sweep=sweep)
    run_done = time.perf_counter()
    report = result["report"]
    doc = report_to_dict(report, extra={
        "problem": "pole-placement",
        "origin": round_floats(result["scenarios"].origin),
        "config": round_floats(config.to_dict()),
    })
    if "mc_risk" in result:
        doc["mc_risk"] = round_floats(result["mc_risk"])
        print(f"monte-carlo post-design risk: {result['mc_risk']:.6g}")
    if result.get("sector_sweep"):
        doc["sector_sweep"] = [
            {"max_real": entry["max_real"],
             **report_to_dict(entry["report"])}
            for entry in result["sector_sweep"]]
    print(f"baseline complexity: {report.baseline_complexity}")
    print(f"instrumental complexity: {report.instrumental_complexity}")
    print(f"risk upper bound: {report.risk_upper:.6g}")
    if report.general_interval:
        print(f"risk interval: {report.general_interval[0]:.6g}"
              f" .. {report.general_interval[1]:.6g}")

    x = result["decision"].variables
    roots = closed_loop_roots_batch(
        (x[0], x[1], x[2], x[3]), list(result["scenarios"].scenarios),
        result["problem"].spec)
    csv_path = _out_path(os.path.splitext(args.out)[0] + "_poles.csv")
    _write_outputs(config, args.out, doc, {"run": run_done - t0},
                   args.json_indent,
                   extras={csv_path: lambda p: write_poles_csv(p, roots)})
    if args.save_scenarios:
        save_scenarios(_out_path(args.save_scenarios), "pole-placement",
                       result["scenarios"], indent=args.json_indent)
    return 0


def _example_input(args) -> int:
    grid = _parse_grid(args.grid)
    config = RunConfig("example", {
        "case": "input-design", "n": args.n, "beta": args.beta,
        "seed": args.seed, "rho": args.rho, "grid": args.grid, "mc": args.mc,
        "prune": args.prune, "nondegenerate": args.nondegenerate,
        "out": args.out})
    t0 = time.perf_counter()
    result = run_input_design(
        args.n, args.beta, args.rho, grid, args.seed,
        nondegenerate=args.nondegenerate, prune=args.prune, mc_samples=args.mc)
    run_done = time.perf_counter()
    report, envelope = result["report"], result["envelope"]
    doc = report_to_dict(report, extra={
        "problem": "input-design",
        "origin": round_floats(result["scenarios"].origin),
        "config": round_floats(config.to_dict()),
        "envelope": envelope_to_dict(envelope),
    })
    complement = (grid.h + envelope.r) * args.beta
    print(f"baseline complexity: {report.baseline_complexity}")
    print(f"instrumental complexity: {report.instrumental_complexity}")
    print(f"envelope confidence: {envelope.confidence:.10g} = 1 - {complement:.1e}")
    if "mc_cdf" in result:
        doc["mc_cdf"] = round_floats(list(result["mc_cdf"]))
        inside = bool(np.all(
            (result["mc_cdf"] >= envelope.lower_values - 1e-12)
            & (result["mc_cdf"] <= envelope.upper_values + 1e-12)))
        doc["mc_cdf_inside_envelope"] = inside
        print(f"monte-carlo CDF inside envelope: {inside}")
    csv_path = _out_path(os.path.splitext(args.out)[0] + ".csv")
    _write_outputs(config, args.out, doc, {"run": run_done - t0},
                   args.json_indent,
                   extras={csv_path: lambda p: write_envelope_csv(p, envelope)})
    if args.save_scenarios:
        save_scenarios(_out_path(args.save_scenarios), "input-design",
                       result["scenarios"], indent=args.json_indent)
    return 0


def _cmd_validate(args) -> int:
    with open(_out_path(args.report)) as handle:
        doc = json.load(handle)
    config = doc.get("config")
    if not config:
        raise ValueError("report carries no config echo; cannot reproduce the run")
    case = config.get("case")
    if case == "pole-placement":
        result = run_pole_placement(
            config["n"], config["beta"], config["seed"],
            sector=tuple(config["sector"]),
            nondegenerate=config.get("nondegenerate", False),
            mc_samples=args.mc, mc_seed=args.seed)
        risk = result["mc_risk"]
        bound = result["report"].risk_upper
        print(f"monte-carlo risk {risk:.6g} vs certified bound {bound:.6g}")
        if risk <= bound:
            print("PASS: certified bound holds on fresh scenarios")
            return 0
        print("FAIL: certified bound violated")
        raise NumericalError("Monte Carlo risk exceeded the certified bound")
    if case == "input-design":
        grid = _parse_grid(config["grid"])
        result = run_input_design(
            config["n"], config["beta"], config["rho"], grid, config["seed"],
            nondegenerate=config.get("nondegenerate", True),
            mc_samples=args.mc, mc_seed=args.seed)
        env = result["envelope"]
        mc = result["mc_cdf"]
        inside = bool(np.all((mc >= env.lower_values - 1e-12)
                             & (mc <= env.upper_values + 1e-12)))
        print(f"monte-carlo CDF inside envelope: {inside}")
        if inside:
            print("PASS: envelope contains the empirical CDF")
            return 0
        print("FAIL: empirical CDF escaped the envelope")
        raise NumericalError("empirical CDF escaped the certified envelope")
    raise ValueError(f"report config has unknown case {case!r}")


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenariocert",
        description="Certified risk bounds and CDF envelopes for scenario designs")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_indent(p):
        p.add_argument("--json-indent", type=int, default=2,
                       help="indentation for JSON outputs")

    p = sub.add_parser("epsilon", help="risk-bound queries and tables")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--table", action="store_true")
    p.add_argument("--mode", choices=("upper", "pair", "both"), default="upper")
    p.add_argument("--out", default=None)
    add_indent(p)
    p.set_defaults(func=_cmd_epsilon)

    p = sub.add_parser("certify", help="certification report for a scenario file")
    p.add_argument("--problem", choices=PROBLEM_IDS, required=True)
    p.add_argument("--scenarios", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--prune", action="store_true")
    p.add_argument("--nested", action="store_true")
    p.add_argument("--nondegenerate", action="store_true")
    p.add_argument("--out", required=True)
    add_indent(p)
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("cdf", help="cost-CDF envelope for a scenario file")
    p.add_argument("--problem", choices=PROBLEM_IDS, required=True)
    p.add_argument("--scenarios", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--grid", required=True, help="lo:hi:count or a JSON file")
    p.add_argument("--nondegenerate", action="store_true", default=True)
    p.add_argument("--no-nondegenerate", dest="nondegenerate",
                   action="store_false")
    p.add_argument("--out", required=True)
    add_indent(p)
    p.set_defaults(func=_cmd_cdf)

    p = sub.add_parser("example", help="seeded end-to-end case studies")
    case = p.add_subparsers(dest="case", required=True)

    pp = case.add_parser("pole-placement")
    pp.add_argument("--n", type=int, default=2000)
    pp.add_argument("--beta", type=float, default=1e-5)
    pp.add_argument("--seed", type=int, default=0)
    pp.add_argument("--sector", default="-0.7:0.5")
    pp.add_argument("--sector-sweep", default=None,
                    help="comma-separated alternative real-part caps")
    pp.add_argument("--mc", type=int, default=0,
                    help="fresh Monte Carlo samples for validation")
    pp.add_argument("--prune", action="store_true")
    pp.add_argument("--nondegenerate", action="store_true")
    pp.add_argument("--save-scenarios", default=None)
    pp.add_argument("--out", required=True)
    add_indent(pp)
    pp.set_defaults(func=_cmd_example)

    pi = case.add_parser("input-design")
    pi.add_argument("--n", type=int, default=1000)
    pi.add_argument("--beta", type=float, default=1e-7)
    pi.add_argument("--seed", type=int, default=0)
    pi.add_argument("--rho", type=float, default=1.0)
    pi.add_argument("--grid", default="-0.15:0:100")
    pi.add_argument("--mc", type=int, default=0)
    pi.add_argument("--prune", action="store_true")
    pi.add_argument("--nondegenerate", action="store_true", default=True)
    pi.add_argument("--no-nondegenerate", dest="nondegenerate",
                    action="store_false")
    pi.add_argument("--save-scenarios", default=None)
    pi.add_argument("--out", required=True)
    add_indent(pi)
    pi.set_defaults(func=_cmd_example)

    p = sub.add_parser("validate", help="Monte Carlo re-check of a saved report")
    p.add_argument("--report", required=True)
    p.add_argument("--mc", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=10_000)
    add_indent(p)
    p.set_defaults(func=_cmd_validate)
    return parser


_DASH_VALUE_FLAGS = ("--sector", "--sector-sweep", "--grid")


def _merge_dash_values(argv):
    """Join flag/value pairs whose value begins with '-' (grids, sectors)."""
    out = []
    skip = False
    for i, token in enumerate(argv):
        if skip:
            skip = False
            continue
        if token in _DASH_VALUE_FLAGS and i + 1 < len(argv) \
                and argv[i + 1].startswith("-"):
            out.append(f"{token}={argv[i + 1]}")
            skip = True
        else:
            out.append(token)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_merge_dash_values(list(argv)))
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""JSON/CSV persistence for scenario sets, reports and envelopes.

Scenario payloads round-trip at full float precision (repr-exact), so a
load/save cycle is byte-identical.  Report and envelope files round reals
to 12 significant digits, which is what downstream tooling diffs against.
All writes are atomic (write to a sibling temp file, then rename).
"""

from __future__ import annotations

import hashlib
import json
import os
import platform
import tempfile
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .cdf import CdfEnvelope
from .core import CertificationReport, ScenarioSet
from .problems import PendulumScenario

__all__ = [
    "round_floats",
    "atomic_write_text",
    "save_json",
    "save_scenarios",
    "load_scenarios",
    "report_to_dict",
    "envelope_to_dict",
    "write_envelope_csv",
    "write_poles_csv",
    "RunManifest",
]

SIGNIFICANT_DIGITS = 12


def round_floats(obj, digits: int = SIGNIFICANT_DIGITS):
    """Recursively round every float to the given significant digits."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.{digits}g}")
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [round_floats(v, digits) for v in obj]
    return obj


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_json(path: str, payload, indent: Optional[int] = 2) -> None:
    atomic_write_text(path, json.dumps(payload, indent=indent) + "\n")


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------

def _pendulum_payload_to_json(s: PendulumScenario) -> dict:
    return {"M": s.mass, "l": s.length, "alpha": s.friction}


def _pendulum_payload_from_json(obj, where: str) -> PendulumScenario:
    vals = {}
    for key in ("M", "l", "alpha"):
        if not isinstance(obj, dict) or key not in obj:
            raise ValueError(f"{where}.{key}: missing field")
        v = obj[key]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ValueError(f"{where}.{key}: expected a number, got {v!r}")
        vals[key] = float(v)
    return PendulumScenario(vals["M"], vals["l"], vals["alpha"])


def _matrix_payload_to_json(A) -> dict:
    return {"A": np.asarray(A, dtype=float).tolist()}


def _matrix_payload_from_json(obj, where: str) -> np.ndarray:
    if not isinstance(obj, dict) or "A" not in obj:
        raise ValueError(f"{where}.A: missing field")
    A = obj["A"]
    try:
        arr = np.array(A, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{where}.A: expected a 2x2 numeric matrix") from exc
    if arr.shape != (2, 2):
        raise ValueError(f"{where}.A: expected shape (2, 2), got {arr.shape}")
    return arr


_PAYLOAD_CODECS = {
    "pole-placement": (_pendulum_payload_to_json, _pendulum_payload_from_json),
    "input-design": (_matrix_payload_to_json, _matrix_payload_from_json),
}


def save_scenarios(path: str, problem_id: str, scenario_set: ScenarioSet,
                   indent: Optional[int] = 2) -> None:
    """Write a scenario file: {problem, scenarios, seed, sampler}."""
    if problem_id not in _PAYLOAD_CODECS:
        raise ValueError(f"no scenario codec for problem {problem_id!r}")
    encode, _ = _PAYLOAD_CODECS[problem_id]
    doc = {
        "problem": problem_id,
        "scenarios": [encode(s) for s in scenario_set.scenarios],
        "seed": scenario_set.origin.get("seed"),
        "sampler": scenario_set.origin.get("sampler"),
    }
    save_json(path, doc, indent=indent)


def load_scenarios(path: str):
    """Read a scenario file; returns (problem_id, ScenarioSet).

    Schema violations raise ValueError naming the offending field path,
    e.g. 'scenarios[3].M'.
    """
    with open(path) as handle:
        doc = json.load(handle)
    if not isinstance(doc, dict) or "problem" not in doc:
        raise ValueError("scenario file must be an object with a 'problem' field")
    problem_id = doc["problem"]
    if problem_id not in _PAYLOAD_CODECS:
        raise ValueError(f"problem: unknown problem id {problem_id!r}")
    raw = doc.get("scenarios")
    if not isinstance(raw, list) or not raw:
        raise ValueError("scenarios: expected a nonempty list")
    _, decode = _PAYLOAD_CODECS[problem_id]
    payloads = []
    for i, obj in enumerate(raw):
        try:
            payloads.append(decode(obj, f"scenarios[{i}]"))
        except ValueError:
            raise
        except Exception as exc:
            raise ValueError(f"scenarios[{i}]: {exc}") from exc
    origin = {"seed": doc.get("seed"), "sampler": doc.get("sampler"),
              "path": str(path)}
    return problem_id, ScenarioSet.from_payloads(payloads, origin)


# ---------------------------------------------------------------------------
# reports and envelopes
# ---------------------------------------------------------------------------

def report_to_dict(report: CertificationReport, extra: Optional[dict] = None) -> dict:
    doc = {
        "sample_size": report.sample_size,
        "confidence_beta": report.confidence_beta,
        "baseline_complexity": report.baseline_complexity,
        "instrumental_complexity": report.instrumental_complexity,
        "risk_upper": report.risk_upper,
        "nested_interval": list(report.nested_interval) if report.nested_interval else None,
        "general_interval": list(report.general_interval) if report.general_interval else None,
        "total_confidence": report.total_confidence,
        "violator_ids": list(report.violator_ids) if report.violator_ids is not None else None,
    }
    if extra:
        doc.update(extra)
    return round_floats(doc)


def envelope_to_dict(envelope: CdfEnvelope) -> dict:
    doc = {
        "levels": envelope.grid.levels.tolist(),
        "per_level_complexity": envelope.per_level_complexity.tolist(),
        "lower_values": envelope.lower_values.tolist(),
        "upper_values": (envelope.upper_values.tolist()
                         if envelope.upper_values is not None else None),
        "confidence": envelope.confidence,
        "nested_flags": envelope.nested_flags.tolist(),
        "non_nested_count": envelope.r,
    }
    return round_floats(doc)


def write_envelope_csv(path: str, envelope: CdfEnvelope) -> None:
    """Plot-ready (level, lower, upper) rows."""
    rows = ["level,lower,upper"]
    for j in range(envelope.grid.h):
        upper = (envelope.upper_values[j]
                 if envelope.upper_values is not None else "")
        rows.append(f"{envelope.grid.levels[j]:.12g},"
                    f"{envelope.lower_values[j]:.12g},"
                    f"{upper if upper == '' else format(upper, '.12g')}")
    atomic_write_text(path, "\n".join(rows) + "\n")


def write_poles_csv(path: str, roots: np.ndarray) -> None:
    """Closed-loop pole scatter, one row per root: scenario, re, im."""
    lines = ["scenario,re,im"]
    for i, row in enumerate(np.atleast_2d(roots)):
        for z in row:
            lines.append(f"{i + 1},{z.real:.12g},{z.imag:.12g}")
    atomic_write_text(path, "\n".join(lines) + "\n")


@dataclass
class RunManifest:
    """Provenance sidecar written next to every CLI output."""

    config: dict
    artifacts: dict = field(default_factory=dict)
    versions: dict = field(default_factory=dict)
    durations: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.versions:
            self.versions = {
                "scenariocert": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            }

    def add_artifact(self, path: str) -> None:
        digest = hashlib.sha256()
        with open(path, "rb") as handle:
            for chunk in iter(lambda: handle.read(65536), b""):
                digest.update(chunk)
        self.artifacts[os.path.basename(path)] = digest.hexdigest()

    def write(self, path: str, indent: Optional[int] = 2) -> None:
        save_json(path, {
            "config": round_floats(self.config),
            "artifacts": self.artifacts,
            "versions": self.versions,
            "durations": round_floats(self.durations),
        }, indent=indent)

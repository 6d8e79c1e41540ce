"""Certified risk bounds and CDF envelopes for scenario-based decisions."""

from .bounds import (
    BoundQuery,
    EpsilonTable,
    build_table,
    epsilon_pair,
    epsilon_upper,
    eval_certificate_polynomial,
    explicit_interval_bounds,
)
from .errors import NumericalError

__version__ = "0.1.0"

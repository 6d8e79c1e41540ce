"""Shared exception types.

Domain errors (bad inputs, out-of-range parameters) raise plain ValueError
throughout the package. NumericalError is reserved for failures of the
numerical machinery itself: lost root brackets, non-converging iterations,
inconsistent solver output.
"""


class NumericalError(RuntimeError):
    """A numerical procedure failed to produce a trustworthy result."""

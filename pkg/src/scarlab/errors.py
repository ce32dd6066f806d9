"""Exception types shared across the package.

The CLI maps these onto exit codes: ``ValueError`` -> 2, ``CapacityError`` -> 3,
``ConsistencyError`` -> 4.
"""


class CapacityError(RuntimeError):
    """A dense computation would exceed the configured dimension cap."""


class ConsistencyError(RuntimeError):
    """An internal check failed (e.g. the forward recursion did not close)."""


class AccuracyError(RuntimeError):
    """Time evolution drifted beyond its tolerance."""

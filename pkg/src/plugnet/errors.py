"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: degenerate inputs and
interconnection-rule violations exit with 3, failed certificate conditions
with 2, anything else unexpected with 1.
"""

from __future__ import annotations


class PlugnetError(Exception):
    """Base class for all errors raised by this package."""


class GraphError(PlugnetError):
    """Malformed graph or plug plan (self-loop, duplicate edge, bad reference)."""


class DegenerateInput(PlugnetError):
    """Input outside the certificate constructions' domain.

    Examples: a boundary node with zero passivity index (the edge-weight
    construction divides by its magnitude), or a boundary node with no
    intra-network neighbours on either side.
    """


class AssumptionViolation(DegenerateInput):
    """Boundary edges of a network plug plan share or join adjacent nodes."""


class RealizationError(PlugnetError):
    """Transfer function cannot be realized (improper, zero denominator)."""


class EstimatorError(PlugnetError):
    """Passivity-index sweep is undefined for the given dynamics."""


class SimulationDiverged(PlugnetError):
    """Integration produced a non-finite state."""

    def __init__(self, time: float):
        super().__init__(f"simulation diverged (non-finite state) at t = {time:.6g}")
        self.time = time


class ScenarioError(PlugnetError):
    """Scenario file failed schema or cross-reference validation."""

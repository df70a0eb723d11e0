"""Exception hierarchy shared by all hybridnoc modules."""


class HybridNocError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(HybridNocError, ValueError):
    """A parameter set or design point violates its structural invariants."""


class InfeasibleDesignError(HybridNocError):
    """A design point is well formed but physically unattainable (e.g. laser ceiling)."""


class NoFeasibleDesignError(InfeasibleDesignError):
    """Every candidate in a design-space search was infeasible."""


class UndefinedEnergyError(HybridNocError, ValueError):
    """Energy per bit requested for a zero delivered bit rate."""


class UndefinedLatencyError(HybridNocError, ValueError):
    """Weighted latency requested for a traffic matrix with no volume."""


class LayoutError(HybridNocError, ValueError):
    """Snake count or stride does not divide the mesh evenly."""


class TraceParseError(HybridNocError, ValueError):
    """A trace or matrix line could not be parsed."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class IngestionError(HybridNocError, ValueError):
    """A trace references routers that do not exist or is otherwise unusable."""


class LivelockError(HybridNocError, RuntimeError):
    """The simulation did not drain before the configured cycle ceiling."""

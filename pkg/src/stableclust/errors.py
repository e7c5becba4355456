"""Exception types raised across the package."""


class StableClustError(Exception):
    """Base class for all package errors."""


class MetricError(StableClustError, ValueError):
    """Dimension mismatch or a distance that the metric cannot provide."""


class InstanceError(StableClustError, ValueError):
    """An instance or solution violates its structural invariants."""


class BudgetExceeded(StableClustError):
    """An exhaustive computation would exceed its evaluation budget."""

    def __init__(self, what: str, required: int, budget: int):
        self.what = what
        self.required = required
        self.budget = budget
        super().__init__(f"{what}: requires {required} evaluations, budget is {budget}")


class ParseError(StableClustError, ValueError):
    """Malformed input text; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class PerturbationError(StableClustError, ValueError):
    """A perturbation leaves its admissible bounds."""

"""Exception types shared across the package."""


class InvalidConfigError(ValueError):
    """A configuration object violates its documented invariants."""


class ComparabilityError(InvalidConfigError):
    """A custom exhaustion fails the two-sided |t|-comparability check."""


class BudgetExceededError(RuntimeError):
    """A requested computation exceeds its configured size budget."""


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its accuracy contract."""

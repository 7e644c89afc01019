"""Exception types shared across the library."""


class LaresError(Exception):
    """Base class for all library errors."""


class DimensionError(LaresError):
    """Array shapes or sizes violate an operation's contract."""


class ContractError(LaresError):
    """An input violates a documented precondition (non-shape)."""


class EmptyInputError(LaresError):
    """An operation received no usable data (empty image, dir, pair set)."""


class GraphReleasedError(LaresError):
    """backward() was called on a graph that has already been consumed."""


class MissingGradientError(LaresError):
    """backward() reached no tracked leaves (detached graph)."""


class BalanceInfeasibleError(LaresError):
    """Not enough records on one side of the complexity threshold."""

    def __init__(self, needed: int, below: int, above: int):
        self.needed = needed
        self.below = below
        self.above = above
        super().__init__(
            f"need {needed} records per side, have {below} below and "
            f"{above} at/above the threshold"
        )


class UndefinedCorrelationError(LaresError):
    """Pearson correlation is undefined (zero variance or too few points)."""


class ConfigError(LaresError):
    """A configuration is invalid; carries every violation found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ManifestError(LaresError):
    """A dataset manifest is missing required entries or files."""


class NumericError(LaresError):
    """Training aborted on non-finite values; carries diagnostics."""

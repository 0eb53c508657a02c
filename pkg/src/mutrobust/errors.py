"""Exception types shared across the package."""


class MutRobustError(Exception):
    """Base class for all package errors."""


class MiniLangSyntaxError(MutRobustError):
    """Source text does not conform to the mini-language grammar."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


class MutationError(MutRobustError):
    """A mutation request that cannot be applied or sampled."""


class SuiteError(MutRobustError):
    """A test-suite directory or descriptor is malformed."""


class ConfigError(MutRobustError):
    """Invalid or incomplete run configuration (CLI exit code 2)."""


class OriginalFailsSuiteError(MutRobustError):
    """The registered original program does not pass its own suite (exit 3)."""


class ExperimentError(MutRobustError):
    """Experiment-level failure such as an exceeded enumeration cap (exit 4)."""


class SeedingError(ExperimentError):
    """Defect seeding could not satisfy its constraints within budget."""

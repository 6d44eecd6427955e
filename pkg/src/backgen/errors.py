"""Exception types shared across the engine.

Infrastructure failures (analyzer worker died, provider unreachable) are kept
distinct from logic errors so the orchestrator can map them to result statuses
instead of crashing a benchmark sweep.
"""


class EngineError(Exception):
    """A logic bug or contract violation inside the engine."""


class DistributionError(ValueError):
    """A token distribution failed validation (unnormalized or negative)."""


class AnalyzerError(Exception):
    """The analyzer worker failed at the process/protocol level.

    Never raised for errors *in the analyzed code*; those become ErrorReports.
    """


class ProviderError(Exception):
    """The token-probability source failed after bounded retries."""


class ContextOverflowError(ProviderError):
    """The decoding context reached the provider's maximum length."""

"""Exception types shared across the simulator."""


class ProvchainError(Exception):
    """Base class for all simulator errors."""


class DomainError(ProvchainError, ValueError):
    """A parameter is outside its mathematically valid range."""


class GasCapExceeded(ProvchainError):
    """Transaction gas estimate exceeds the per-transaction cap."""


class EmptyBatch(ProvchainError):
    """A batch operation was given zero commitments."""


class NotFound(ProvchainError):
    """Requested transaction or block is unknown or not yet sealed."""


class UnknownProduct(ProvchainError):
    """No lifecycle history exists for the given product id."""


class UnknownCid(ProvchainError):
    """The content id was never pinned on any provider."""


class InsufficientProviders(ProvchainError):
    """Pin policy asks for more replicas than there are providers."""


class NegativeDelay(DomainError):
    """Inclusion time precedes arrival time."""


class SuiteFailure(ProvchainError):
    """One or more negative cases did not revert as designated."""

    def __init__(self, deviations):
        self.deviations = list(deviations)
        super().__init__("negative cases deviated: " + ", ".join(self.deviations))


class MissingInput(ProvchainError):
    """A scorecard input artifact is absent."""

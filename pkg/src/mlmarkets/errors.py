"""Exception hierarchy shared by the market modules."""


class MarketError(ValueError):
    """Base class for every error raised by mlmarkets."""


class InvalidCliqueError(MarketError):
    pass


class DomainError(MarketError):
    """A value lies outside the domain an operation is defined on."""


class DegenerateBeliefError(MarketError):
    pass


class LogDomainError(MarketError):
    """A zero probability or factor entry reached a logarithm."""


class ZeroPriceError(MarketError):
    pass


class DegeneratePricesError(MarketError):
    pass


class StateCapError(MarketError):
    """The joint state count exceeds the configured cap."""


class ContractError(MarketError):
    """Arguments violate a shape or pairing precondition."""


class DegenerateConditionalError(MarketError):
    pass


class GridTooLargeError(MarketError):
    pass


class ScenarioError(MarketError):
    """Scenario file could not be parsed or failed validation.

    ``where`` carries a field path or ``line:col`` for diagnostics.
    """

    def __init__(self, message: str, where: str | None = None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)

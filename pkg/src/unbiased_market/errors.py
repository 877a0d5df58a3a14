"""Exception types raised across the package."""


class MarketError(Exception):
    """Base class for all errors raised by unbiased_market."""


class DomainError(MarketError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(MarketError, ValueError):
    """A scenario or population configuration is invalid."""


class RequestError(MarketError, ValueError):
    """A buyer request cannot be served as stated."""


class QueryError(MarketError, KeyError):
    """A lookup against an elicitation log used a value it does not contain."""


class MenuError(MarketError):
    """A pricing menu cannot be built for the requested sample sizes."""


class ConsistencyError(MarketError):
    """Recorded choices do not cover the sellers a settlement needs."""


class ElicitationInsufficientError(MarketError):
    """No elicited Option-A payment keeps opt-out below the tolerance.

    The question grid must be extended upward.
    """

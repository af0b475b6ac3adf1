"""Exception hierarchy shared by all discotree modules."""


class DiscoTreeError(Exception):
    """Base class for every error raised by the toolkit."""


class MalformedInput(DiscoTreeError, ValueError):
    pass


class LeafMismatch(DiscoTreeError, ValueError):
    pass


class EmptyCorpus(DiscoTreeError, ValueError):
    pass


class LengthMismatch(DiscoTreeError, ValueError):
    pass


class UnknownDoc(DiscoTreeError, KeyError):
    pass


class OutOfRange(DiscoTreeError, ValueError):
    pass


class TooShort(DiscoTreeError, ValueError):
    pass


class EmptyInput(DiscoTreeError, ValueError):
    pass


class GammaOutOfRange(DiscoTreeError, ValueError):
    pass


class GranularityOrder(DiscoTreeError, ValueError):
    pass


class DocMismatch(DiscoTreeError, ValueError):
    def __init__(self, message, missing_pred=(), missing_gold=()):
        super().__init__(message)
        self.missing_pred = tuple(missing_pred)
        self.missing_gold = tuple(missing_gold)


class UnitMismatch(DiscoTreeError, ValueError):
    pass


class EmptyTotal(DiscoTreeError, ZeroDivisionError):
    """Raised when no spans are available to score; precision is undefined."""


class MissingGenre(DiscoTreeError, KeyError):
    pass


class ConfigError(DiscoTreeError, ValueError):
    pass

"""Exception hierarchy shared across the package."""


class QFriendError(Exception):
    """Base class for every error raised by qfriend."""


class DimensionError(QFriendError, ValueError):
    """Operand shapes or subsystem dimensions do not fit together."""


class DimensionLimitError(DimensionError):
    """A Hilbert space would exceed the supported dimension cap."""


class ContractError(QFriendError, ValueError):
    """An input violates a structural precondition (Hermiticity, unitarity, ...)."""


class ImpossibleOutcomeError(QFriendError, ValueError):
    """Projection onto an outcome that has zero Born probability."""


class ConsistencyError(QFriendError):
    """History probabilities requested from an inconsistent framework."""


class HistoryLimitError(QFriendError):
    """The history set of a framework is too large to enumerate."""


class ScenarioError(QFriendError, ValueError):
    """A scenario is malformed or refers to unknown parts of itself."""


class DocumentError(QFriendError, ValueError):
    """A scenario, framework or report document failed to parse.

    ``where`` is a dotted field path (``events[2].targets``) or a
    ``line:column`` location for JSON syntax errors.
    """

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)

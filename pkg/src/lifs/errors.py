"""Exception hierarchy.

Every error carries the CLI exit code it maps to, so the command line layer
can translate failures without a lookup table.
"""


class LifsError(Exception):
    exit_code = 1


class SceneError(LifsError):
    exit_code = 3


class SchemaError(SceneError):
    pass


class OpenDomainRejected(SceneError):
    pass


class LipschitzMismatch(SceneError):
    pass


class OutOfBounds(SceneError, ValueError):
    pass


class InvalidSymbol(SceneError, ValueError):
    pass


class BudgetExceeded(LifsError):
    exit_code = 4


class EmptySetDistance(LifsError, ValueError):
    pass


class NonContractive(LifsError):
    pass


class NotGlobal(LifsError):
    pass


class NotGlobalizable(LifsError):
    pass


class DomainNotNested(LifsError):
    pass


class InadmissibleWord(LifsError):
    pass


class AtEndpoint(LifsError):
    pass


class Inconsistent(LifsError):
    pass


class EmptyEndpointSet(LifsError):
    pass

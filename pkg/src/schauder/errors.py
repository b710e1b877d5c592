"""Exception types raised by the toolkit."""


class SchauderError(ValueError):
    """Base class for all input and precondition errors."""


class DomainError(SchauderError):
    pass


class NoPathError(DomainError):
    """Two sample points lie in different connected components."""


class OrderUnavailable(SchauderError):
    pass


class PreconditionError(SchauderError):
    """A stated precondition of an operation does not hold on the inputs."""


class FamilyFileError(SchauderError):
    pass

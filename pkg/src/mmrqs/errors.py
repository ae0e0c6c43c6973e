"""Exception hierarchy shared by every solver and the command line."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


class NumericError(RuntimeError):
    """A numerical routine failed to produce a trustworthy result."""


class NonConvergenceError(NumericError):
    """An iterative procedure hit its iteration cap.

    ``last`` carries whatever partial state the caller may want to report.
    """

    def __init__(self, message, residual=None, iterations=None, last=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.last = last


class NoCoverageError(DomainError):
    """The worst-case link cannot reach the lowest SINR threshold at any range."""


class CapacityError(RuntimeError):
    """A brute-force enumeration exceeded its state cap."""

    def __init__(self, message, count):
        super().__init__(message)
        self.count = count

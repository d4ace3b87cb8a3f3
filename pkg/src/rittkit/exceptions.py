"""Exception hierarchy shared by all rittkit modules."""


class RittkitError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code = 1


class ConfigurationError(RittkitError, ValueError):
    """A parameter is outside its admissible range."""

    exit_code = 2


class StructuralError(RittkitError, ValueError):
    """Shapes, carriers or dimensions do not fit together."""

    exit_code = 2


class PreconditionError(RittkitError, ValueError):
    """An operation's mathematical precondition does not hold.

    ``witness`` carries the offending object (an eigenvalue, a pair of
    states, ...) when one is available.
    """

    exit_code = 4

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class InvalidSymbolError(PreconditionError):
    """A symbol has values outside the closed unit disc."""


class GuardError(RittkitError, MemoryError):
    """A tensor construction would exceed the dimension guard."""

    exit_code = 3


class NumericalError(RittkitError, ArithmeticError):
    """A numerical routine failed (e.g. eigensolver non-convergence)."""

    exit_code = 4

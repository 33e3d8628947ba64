"""Exception hierarchy shared by all modules.

Each CLI exit code maps onto one branch of this tree (see ``alcp.cli``).
"""


class AlcpError(Exception):
    """Base class for every error raised by this package."""


class ParseError(AlcpError):
    """Malformed input text. ``line``/``column`` are 1-based (0 if unknown)."""

    def __init__(self, message, line=0, column=0):
        self.message = message
        self.line = line
        self.column = column
        if line:
            message = f"{line}:{column}: {message}"
        super().__init__(message)


class UndeclaredVariableError(ParseError):
    def __init__(self, name, line=0, column=0):
        self.name = name
        super().__init__(f"undeclared context variable {name!r}", line, column)


class BoundsError(ParseError):
    """Probability bounds outside [0, 1] or with lower > upper."""


class SignatureTooLargeError(AlcpError):
    def __init__(self, size, limit):
        self.size = size
        self.limit = limit
        super().__init__(
            f"context signature has {size} variables; the limit is {limit} "
            f"(2^{size} worlds would be enumerated)"
        )


class InfeasibleConstraintsError(AlcpError):
    """The probabilistic constraint set has no model."""


class NonConvergenceError(AlcpError):
    def __init__(self, message, iterations=0, residual=float("nan")):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3e})")


class ResourceLimitError(AlcpError):
    """The tableau exceeded its node budget."""


class MEInconsistentError(AlcpError):
    """A positive-probability world induces an inconsistent restricted TBox."""

    def __init__(self, witness):
        self.witness = witness
        super().__init__(f"knowledge base is not ME-consistent; witness world {witness}")


class ZeroProbabilityContextError(AlcpError):
    def __init__(self, probability, eps):
        self.probability = probability
        super().__init__(
            f"conditioning context has ME probability {probability:.3e} <= {eps:.1e}"
        )

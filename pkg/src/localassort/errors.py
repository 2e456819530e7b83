"""Exception hierarchy shared by the library and the CLI.

The CLI maps :class:`InputError` subclasses to exit code 2 and
:class:`ComputationError` subclasses to exit code 3.
"""


class AssortError(Exception):
    """Base class for every error raised by :mod:`localassort`."""


class InputError(AssortError, ValueError):
    """Malformed input: bad files, unknown ids, invalid parameters."""


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SelfLoop(ParseError):
    pass


class DuplicateEdge(ParseError):
    pass


class UnknownNode(ParseError):
    pass


class RaggedRow(ParseError):
    pass


class ComputationError(AssortError):
    """The input was well formed but the requested quantity is undefined."""


class DegenerateAttribute(ComputationError):
    pass


class EmptyMixing(ComputationError):
    pass


class ConvergenceError(ComputationError):
    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (last residual {residual:.3e})")


class Infeasible(ComputationError):
    def __init__(self, message: str, block: tuple[int, int] | None = None):
        self.block = block
        super().__init__(message)

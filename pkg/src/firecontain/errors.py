"""Exception types shared across the package."""


class FireContainError(Exception):
    """Base class for all errors raised by this package."""


class MalformedInput(FireContainError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)


class EmptyTargets(FireContainError):
    pass


class PreconditionViolated(FireContainError):
    pass


class LevelOutOfRange(FireContainError):
    pass


class NonzeroBudget(FireContainError):
    pass


class BudgetOutOfRange(FireContainError):
    pass


class ResourceCap(FireContainError):
    """A configured size limit was exceeded; shrink the instance or raise the limit."""


class EmptyCollection(FireContainError):
    pass


class NoSolutionFound(FireContainError):
    pass


class ParameterOutOfRange(FireContainError):
    pass

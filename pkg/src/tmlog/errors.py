"""Exception types shared across the toolkit."""


class InvalidArgument(ValueError):
    pass


class UnsupportedInput(ValueError):
    pass


class IllConditionedPoint(ValueError):
    """Pointwise evaluation requested where the sampled data has a kink."""


class GrowthOverflow(OverflowError):
    def __init__(self, message, s=None, cell=None):
        super().__init__(message)
        self.s = s
        self.cell = cell


class StallError(RuntimeError):
    """Line search failed; ``state`` holds the last accepted iterate."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class UndefinedMultiplier(ValueError):
    pass


class CSVFormatError(ValueError):
    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line

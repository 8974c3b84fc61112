class TheoryViolationError(RuntimeError):
    """A computed ratio exceeded a proven upper bound; indicates a bug."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class EnumerationTooLargeError(ValueError):
    """Exhaustive enumeration over honest sets would be too expensive."""

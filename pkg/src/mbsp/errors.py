"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid user input: band plans, scheme options, scenario files."""


class NumericalError(ArithmeticError):
    """A computation could not be carried out (rank loss, overflow)."""


class RankDeficientError(NumericalError):
    pass

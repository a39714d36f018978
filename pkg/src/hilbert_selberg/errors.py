"""Error taxonomy shared across the package.

Exit-code mapping used by the command line front end:
    0  success
    1  validation failure (bad input, unsupported field, domain error)
    2  computational budget exceeded (bound exhausted, enumeration incomplete)
    3  internal invariant violation (dual algorithms disagree, census mismatch)
"""


class HilbertSelbergError(Exception):
    exit_code = 1


class ValidationError(HilbertSelbergError):
    exit_code = 1


class BudgetExceededError(HilbertSelbergError):
    exit_code = 2


class InvariantViolation(HilbertSelbergError):
    exit_code = 3

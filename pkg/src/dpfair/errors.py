"""Exception types raised by the package.

Every domain error derives from :class:`DPFairError` so callers (the CLI in
particular) can separate domain failures from programming errors.
"""


class DPFairError(ValueError):
    """Base class for domain errors."""


class BudgetExhausted(DPFairError):
    """A charge would push a ledger past its cap."""


class UnknownGroup(DPFairError, LookupError):
    """A group id is absent from a group budget policy."""


class EmptyGroup(DPFairError):
    """A group-conditional quantity was requested for a group with no records."""


class DegenerateLabels(DPFairError):
    """A group lacks one of the label classes needed for a conditional rate."""


class Infeasible(DPFairError):
    """No finite sample size satisfies the requested constraints."""


class NonFinite(DPFairError, ArithmeticError):
    """Training produced a non-finite loss or weight."""


class BothLikelihoodsZero(DPFairError, ZeroDivisionError):
    """Both membership hypotheses assign zero probability to the release."""

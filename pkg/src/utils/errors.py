"""Exception types shared by the entropy kernels and the harness."""
from typing import Optional


class EntropyError(ValueError):
    """Base class for every error raised by this package"""


class ConfigError(EntropyError):
    """Invalid experiment document or flag; `field` is the dotted path"""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class BudgetExceededError(EntropyError):
    def __init__(self, what: str, count: int, budget: int):
        self.what = what
        self.count = count
        self.budget = budget
        super().__init__(f"{what}: {count} exceeds budget {budget}")


class DyadicEpsilonError(EntropyError):
    def __init__(self, epsilon: float):
        self.epsilon = epsilon
        super().__init__(
            f"epsilon={epsilon} is a metric value 2^-t; ball boundaries are ambiguous there"
        )


class DomainError(EntropyError):
    """Truncation window too short for the requested orbit segment"""

    def __init__(self, required: int, available: int):
        self.required = required
        self.available = available
        super().__init__(f"truncation needs L >= {required}, have L = {available}")


class WindowError(EntropyError):
    """Sampled word does not cover a dynamic-ball window"""

    def __init__(self, required: int, missing: Optional[int] = None):
        self.required = required
        self.missing = missing
        super().__init__(f"word must cover {required} sites ({missing} missing)")


class IndexOverflowError(EntropyError):
    def __init__(self, needed: int, n_max: int):
        self.needed = needed
        self.n_max = n_max
        super().__init__(f"index {needed} beyond n_max={n_max}")


class HorizonError(EntropyError):
    pass


class NonMonotoneWeightError(EntropyError):
    pass


class MeasureError(EntropyError):
    pass


class RegularityError(EntropyError):
    """A set sequence violates e in N_0 or N_i + N_j within N_{i+j}"""

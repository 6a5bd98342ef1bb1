"""
Privacy budget accounting under basic composition.

A :class:`BudgetLedger` is an immutable value: :func:`charge` returns a new
ledger with one more entry, or raises :class:`BudgetExhausted` and leaves
the caller's ledger untouched. Epsilon and delta both add up across entries.

Sums are exact. Each amount is read as the decimal number its float prints
as (``0.1`` is one tenth), and totals are compared as rationals, so charges
of 0.1 and 0.2 exactly fill a cap of 0.3 and any positive charge beyond a
full cap is refused.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping

from .errors import BudgetExhausted, UnknownGroup
from .mechanisms import PrivacyBudget

__all__ = [
    "LedgerEntry",
    "BudgetLedger",
    "GroupBudgetPolicy",
    "charge",
    "group_epsilon",
    "exact_total",
    "split_budget",
]


def _exact(x: float) -> Fraction:
    return Fraction(repr(float(x)))


def exact_total(amounts) -> Fraction:
    """Exact sum of float amounts, each taken at its shortest decimal value."""
    return sum((_exact(a) for a in amounts), Fraction(0))


def split_budget(total: float, parts: int) -> float:
    """Largest float x with ``parts`` copies of x fitting exactly inside ``total``."""
    if parts < 1:
        raise ValueError(f"parts must be a positive count, got {parts}")
    x = total / parts
    while x > 0 and parts * _exact(x) > _exact(total):
        x = math.nextafter(x, 0.0)
    return x


@dataclass(frozen=True)
class LedgerEntry:
    label: str
    epsilon: float
    delta: float = 0.0

    def to_dict(self) -> dict:
        return {"label": self.label, "epsilon": self.epsilon, "delta": self.delta}


@dataclass(frozen=True)
class BudgetLedger:
    """Append-only record of privacy spent against a cap.

    ``cap.delta`` may be zero, in which case only pure-epsilon charges fit.
    """

    cap: PrivacyBudget
    entries: tuple[LedgerEntry, ...] = ()

    @classmethod
    def with_cap(cls, epsilon: float, delta: float = 0.0) -> "BudgetLedger":
        return cls(PrivacyBudget(epsilon, delta))

    @property
    def spent_epsilon(self) -> float:
        return float(exact_total(e.epsilon for e in self.entries))

    @property
    def spent_delta(self) -> float:
        return float(exact_total(e.delta for e in self.entries))

    @property
    def remaining_epsilon(self) -> float:
        return max(self.cap.epsilon - self.spent_epsilon, 0.0)

    @property
    def remaining_delta(self) -> float:
        return max(self.cap.delta - self.spent_delta, 0.0)

    def can_afford(self, epsilon: float, delta: float = 0.0) -> bool:
        eps_total = exact_total([*(e.epsilon for e in self.entries), epsilon])
        delta_total = exact_total([*(e.delta for e in self.entries), delta])
        return eps_total <= _exact(self.cap.epsilon) and delta_total <= _exact(self.cap.delta)

    def charge(self, epsilon: float, delta: float = 0.0, label: str = "") -> "BudgetLedger":
        return charge(self, epsilon, delta, label)

    def to_dict(self) -> dict:
        return {"cap": self.cap.to_dict(), "entries": [e.to_dict() for e in self.entries]}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, obj: Mapping) -> "BudgetLedger":
        cap = PrivacyBudget(float(obj["cap"]["epsilon"]), float(obj["cap"].get("delta", 0.0)))
        ledger = cls(cap)
        # Replay through charge() so a hand-edited file cannot smuggle in an overspend.
        for e in obj.get("entries", []):
            ledger = charge(ledger, float(e["epsilon"]), float(e.get("delta", 0.0)), str(e.get("label", "")))
        return ledger

    @classmethod
    def from_json(cls, text: str) -> "BudgetLedger":
        return cls.from_dict(json.loads(text))


def charge(ledger: BudgetLedger, epsilon: float, delta: float = 0.0, label: str = "") -> BudgetLedger:
    """Return ``ledger`` with one more entry.

    Raises
    ------
    BudgetExhausted
        If the running totals would exceed the cap in either coordinate.
    ValueError
        For negative or non-finite amounts.
    """
    epsilon, delta = float(epsilon), float(delta)
    if not (math.isfinite(epsilon) and epsilon >= 0):
        raise ValueError(f"epsilon charge must be finite and non-negative, got {epsilon}")
    if not (math.isfinite(delta) and delta >= 0):
        raise ValueError(f"delta charge must be finite and non-negative, got {delta}")
    if not ledger.can_afford(epsilon, delta):
        raise BudgetExhausted(
            f"charge {label!r} of (epsilon={epsilon}, delta={delta}) exceeds cap "
            f"(epsilon={ledger.cap.epsilon}, delta={ledger.cap.delta}); "
            f"already spent (epsilon={ledger.spent_epsilon}, delta={ledger.spent_delta})"
        )
    return BudgetLedger(ledger.cap, ledger.entries + (LedgerEntry(label, epsilon, delta),))


@dataclass(frozen=True)
class GroupBudgetPolicy:
    """Per-group epsilon levels, e.g. a looser budget for an under-represented group."""

    per_group: Mapping[Hashable, float] = field(default_factory=dict)

    def __post_init__(self):
        for g, eps in self.per_group.items():
            if not (math.isfinite(eps) and eps > 0):
                raise ValueError(f"group {g!r} needs a positive epsilon, got {eps}")

    def ledgers(self) -> dict:
        """One independent ledger per group, each capped at that group's epsilon."""
        return {g: BudgetLedger.with_cap(eps) for g, eps in self.per_group.items()}


def group_epsilon(policy: GroupBudgetPolicy, group: Hashable) -> float:
    try:
        return policy.per_group[group]
    except KeyError:
        raise UnknownGroup(f"group {group!r} not in policy (known: {sorted(map(str, policy.per_group))})") from None

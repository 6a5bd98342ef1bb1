"""
Privacy budget ledger
=====================

Charges add up until the cap is reached; the next charge is refused and
the ledger is left as it was.
"""

# %%
from dpfair.accountant import BudgetLedger, GroupBudgetPolicy, group_epsilon
from dpfair.errors import BudgetExhausted

ledger = BudgetLedger.with_cap(1.0)
for eps, label in [(0.3, "mean age"), (0.7, "smoker count")]:
    ledger = ledger.charge(eps, label=label)
    print(f"charged {eps} for {label!r}; spent {ledger.spent_epsilon}, left {ledger.remaining_epsilon}")

# %%
try:
    ledger.charge(0.1, label="one more")
except BudgetExhausted as exc:
    print("refused:", exc)
print("entries still", [e.label for e in ledger.entries])

# %%
# Ledgers serialise to JSON and refuse overspent files when loaded back.
text = ledger.to_json(indent=2)
print(text)
assert BudgetLedger.from_json(text) == ledger

# %%
# Group-specific budgets: a looser epsilon for the smaller group buys it
# less noise. Each group gets its own independent ledger.
policy = GroupBudgetPolicy({"minority": 2.0, "majority": 0.5})
for g in ("minority", "majority"):
    print(g, group_epsilon(policy, g))
print({g: led.cap.epsilon for g, led in policy.ledgers().items()})

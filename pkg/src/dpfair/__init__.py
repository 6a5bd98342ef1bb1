"""Differential-privacy mechanisms and privacy/utility/fairness tradeoff analysis."""

from . import accountant, attack, casestudy, fairness, frontier, mechanisms
from .accountant import BudgetLedger, GroupBudgetPolicy, charge, group_epsilon
from .errors import (
    BothLikelihoodsZero,
    BudgetExhausted,
    DegenerateLabels,
    DPFairError,
    EmptyGroup,
    Infeasible,
    NonFinite,
    UnknownGroup,
)
from .fairness import LabeledDataset, demographic_parity_gap, equalized_odds_gap, risk_difference
from .mechanisms import (
    Candidate,
    NoisyValue,
    PrivacyBudget,
    SensitivityBound,
    exponential_mechanism,
    gaussian_mechanism,
    gaussian_sigma,
    laplace_density,
    laplace_mechanism,
    sample_and_aggregate,
    sparse_vector,
)

__version__ = "0.1.0"

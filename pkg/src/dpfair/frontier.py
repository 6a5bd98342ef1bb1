"""
Closed-form privacy/utility/fairness bounds, a feasibility calculator, and
Pareto-front extraction.

The asymptotic bounds this module evaluates are only known up to constant
factors. Those constants are explicit in :class:`BoundConstants` and default
to 1, so every number produced here is reproducible.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import Infeasible
from .mechanisms import SensitivityBound, _check_epsilon, _l1

__all__ = [
    "TradeoffPoint",
    "BoundConstants",
    "FeasibilitySpec",
    "mse_lower_bound",
    "utility_bound",
    "fairness_bound",
    "se_ratio",
    "group_noise_se",
    "feasible",
    "critical_sample_size",
    "dominates",
    "pareto_front",
    "sweep",
    "sweep_csv",
    "write_sweep_csv",
    "SWEEP_CSV_HEADER",
]

SWEEP_CSV_HEADER = ("epsilon", "n", "p", "d", "utility", "fairness_violation", "feasible", "pareto")


@dataclass(frozen=True)
class TradeoffPoint:
    """One achievable (privacy, utility, fairness) configuration.

    Smaller ``epsilon`` is more private, larger ``utility`` is better and
    smaller ``fairness_violation`` is better.
    """

    epsilon: float
    utility: float
    fairness_violation: float
    n: float = 1
    p: float = 0.5
    d: int = 1
    feasible: bool | None = None

    def __post_init__(self):
        for name in ("epsilon", "utility", "fairness_violation", "n", "p"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.fairness_violation < 0:
            raise ValueError(f"fairness_violation must be non-negative, got {self.fairness_violation}")
        if not 0 < self.p < 1:
            raise ValueError(f"p must lie strictly inside (0, 1), got {self.p}")


@dataclass(frozen=True)
class BoundConstants:
    c_utility: float = 1.0
    c_fairness: float = 1.0

    def __post_init__(self):
        if not (self.c_utility > 0 and self.c_fairness > 0):
            raise ValueError("bound constants must be positive")


@dataclass(frozen=True)
class FeasibilitySpec:
    """Targets for the joint feasibility question.

    u0 is the utility reachable without privacy, u_threshold the utility
    floor, f_target the largest tolerated fairness violation, d the model
    dimension and p the minority group's share of the sample.
    """

    u0: float
    f_target: float
    d: int
    p: float
    u_threshold: float = 0.5

    def __post_init__(self):
        if not self.f_target > 0:
            raise ValueError(f"f_target must be positive, got {self.f_target}")
        if not self.d >= 1:
            raise ValueError(f"d must be a positive count, got {self.d}")
        if not 0 < self.p < 1:
            raise ValueError(f"p must lie strictly inside (0, 1), got {self.p}")
        if not (math.isfinite(self.u0) and math.isfinite(self.u_threshold)):
            raise ValueError("u0 and u_threshold must be finite")


_DEFAULT_CONSTS = BoundConstants()


def _check_n(n: float) -> float:
    if not (math.isfinite(n) and n > 0):
        raise ValueError(f"sample size must be positive, got {n}")
    return float(n)


def mse_lower_bound(sigma2_theta: float, n: float, sens: SensitivityBound | float, epsilon: float) -> float:
    """sigma2_theta / n + sens^2 / (epsilon^2 n): sampling error plus the privacy-noise floor."""
    if sigma2_theta < 0:
        raise ValueError(f"variance must be non-negative, got {sigma2_theta}")
    n = _check_n(n)
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    epsilon = _check_epsilon(epsilon)
    delta = _l1(sens)
    return sigma2_theta / n + delta * delta / (epsilon * epsilon * n)


def utility_bound(u0: float, d: int, epsilon: float, n: float, consts: BoundConstants = _DEFAULT_CONSTS) -> float:
    if d < 1:
        raise ValueError(f"d must be a positive count, got {d}")
    return u0 - consts.c_utility * d / (_check_epsilon(epsilon) * _check_n(n))


def fairness_bound(epsilon: float, n: float, p: float, consts: BoundConstants = _DEFAULT_CONSTS) -> float:
    """c / (epsilon * sqrt(n * p)): violation floor for a group holding share p of n records."""
    if not 0 < p < 1:
        raise ValueError(f"p must lie strictly inside (0, 1), got {p}")
    return consts.c_fairness / (_check_epsilon(epsilon) * math.sqrt(_check_n(n) * p))


def se_ratio(q: float, n_p: float, epsilon: float) -> tuple[float, float, float]:
    """Sampling vs privacy-noise standard error of a subgroup proportion.

    Returns ``(se_sampling, se_dp, se_dp / se_sampling)`` for a proportion
    ``q`` estimated from ``n_p`` subgroup records.
    """
    if not 0 < q < 1:
        raise ValueError(f"q must lie strictly inside (0, 1), got {q}")
    n_p = _check_n(n_p)
    epsilon = _check_epsilon(epsilon)
    se_sampling = math.sqrt(q * (1 - q) / n_p)
    se_dp = math.sqrt(2.0) / (epsilon * n_p)
    return se_sampling, se_dp, se_dp / se_sampling


def group_noise_se(n_a: float, epsilon: float) -> float:
    """1 / sqrt(n_a * epsilon^2), the group-level estimation error scale."""
    return 1.0 / math.sqrt(_check_n(n_a) * _check_epsilon(epsilon) ** 2)


def feasible(spec: FeasibilitySpec, epsilon: float, n: float, consts: BoundConstants = _DEFAULT_CONSTS) -> bool:
    """True when both the utility and the fairness requirement hold at sample size n."""
    epsilon = _check_epsilon(epsilon)
    n = _check_n(n)
    utility_ok = consts.c_utility * spec.d / (epsilon * n) < spec.u0 - spec.u_threshold
    fairness_ok = consts.c_fairness / (epsilon * math.sqrt(n * spec.p)) < spec.f_target
    return bool(utility_ok and fairness_ok)


def critical_sample_size(spec: FeasibilitySpec, epsilon: float, consts: BoundConstants = _DEFAULT_CONSTS) -> float:
    """Smallest n at which both requirements of :func:`feasible` can hold.

    Each requirement is solved for n separately and the larger (more
    restrictive) of the two is returned; :func:`feasible` is false at this
    n and true for every larger n.

    Raises
    ------
    Infeasible
        When ``u0 <= u_threshold``: the utility requirement then fails at
        every sample size.
    """
    epsilon = _check_epsilon(epsilon)
    margin = spec.u0 - spec.u_threshold
    if margin <= 0:
        raise Infeasible(f"u0={spec.u0} does not exceed u_threshold={spec.u_threshold}; no finite n works")
    n_utility = consts.c_utility * spec.d / (epsilon * margin)
    n_fairness = consts.c_fairness ** 2 / (epsilon ** 2 * spec.p * spec.f_target ** 2)
    return max(n_utility, n_fairness)


def dominates(a: TradeoffPoint, b: TradeoffPoint) -> bool:
    """a is at least as good as b everywhere and strictly better somewhere."""
    no_worse = a.epsilon <= b.epsilon and a.utility >= b.utility and a.fairness_violation <= b.fairness_violation
    better = a.epsilon < b.epsilon or a.utility > b.utility or a.fairness_violation < b.fairness_violation
    return no_worse and better


def pareto_front(points: Sequence[TradeoffPoint]) -> list[TradeoffPoint]:
    """Nondominated subset of ``points``, in input order.

    Points are visited in lexicographic (epsilon, -utility, violation)
    order. Anything that dominates a point sorts strictly before it, and
    dominance is transitive, so each point only has to be checked against
    the front built so far. Exact duplicates never dominate each other and
    are all kept.
    """
    if len(points) == 0:
        raise ValueError("pareto_front needs at least one point")
    keys = np.array([(p.epsilon, -p.utility, p.fairness_violation) for p in points], dtype=float)
    order = np.lexsort((keys[:, 2], keys[:, 1], keys[:, 0]))
    front = np.empty((0, 3))
    kept: list[int] = []
    for i in order:
        k = keys[i]
        if len(front):
            no_worse = np.all(front <= k, axis=1)
            better = np.any(front < k, axis=1)
            if np.any(no_worse & better):
                continue
        front = np.vstack([front, k])
        kept.append(int(i))
    return [points[i] for i in sorted(kept)]


Evaluator = Callable[[float, int, int], tuple[float, float]]


def sweep(
    epsilons: Iterable[float],
    ns: Iterable[int],
    spec: FeasibilitySpec,
    evaluator: str | Evaluator = "analytic",
    consts: BoundConstants = _DEFAULT_CONSTS,
) -> list[TradeoffPoint]:
    """Evaluate every (epsilon, n) cell of a grid.

    ``evaluator="analytic"`` fills utility from :func:`utility_bound` and the
    violation from :func:`fairness_bound`. Any callable
    ``evaluator(epsilon, n, cell_index) -> (utility, violation)`` may be
    given instead, e.g. :class:`dpfair.casestudy.EmpiricalEvaluator`.
    Cells are ordered epsilon-major. Each point is tagged with
    :func:`feasible`.
    """
    epsilons, ns = list(epsilons), list(ns)
    if not epsilons or not ns:
        raise ValueError("sweep grid needs at least one epsilon and one n")
    points = []
    for i, (eps, n) in enumerate((e, n) for e in epsilons for n in ns):
        if evaluator == "analytic":
            utility = utility_bound(spec.u0, spec.d, eps, n, consts)
            violation = fairness_bound(eps, n, spec.p, consts)
        elif callable(evaluator):
            utility, violation = evaluator(eps, n, i)
        else:
            raise ValueError(f"unknown evaluator {evaluator!r}")
        points.append(
            TradeoffPoint(
                epsilon=float(eps),
                utility=float(utility),
                fairness_violation=float(violation),
                n=n,
                p=spec.p,
                d=spec.d,
                feasible=feasible(spec, eps, n, consts),
            )
        )
    return points


def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def sweep_csv(points: Sequence[TradeoffPoint]) -> str:
    """Render sweep points as CSV text, marking the Pareto-optimal rows."""
    on_front = {id(p) for p in pareto_front(points)}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_CSV_HEADER)
    for p in points:
        w.writerow([
            _fmt(p.epsilon), _fmt(p.n), _fmt(p.p), int(p.d), _fmt(p.utility), _fmt(p.fairness_violation),
            int(bool(p.feasible)), int(id(p) in on_front),
        ])
    return buf.getvalue()


def write_sweep_csv(points: Sequence[TradeoffPoint], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(sweep_csv(points))

"""
Randomized release mechanisms for differential privacy.

Every mechanism takes its random source explicitly as a
``numpy.random.Generator``; nothing here touches global random state, so a
fixed seed always reproduces the same release.

Neighbouring databases follow the add/remove-one-record convention, which
gives counting queries an l1-sensitivity of 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Sequence

import numpy as np

__all__ = [
    "PrivacyBudget",
    "SensitivityBound",
    "NoisyValue",
    "Candidate",
    "COUNTING",
    "laplace_density",
    "laplace_noise",
    "laplace_mechanism",
    "gaussian_sigma",
    "gaussian_mechanism",
    "exponential_probabilities",
    "exponential_mechanism",
    "sparse_vector",
    "sample_and_aggregate",
]


@dataclass(frozen=True)
class PrivacyBudget:
    """An (epsilon, delta) pair. ``delta == 0`` means pure epsilon-DP."""

    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be a positive finite number, got {self.epsilon}")
        if not (0.0 <= self.delta < 1.0):
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")

    @property
    def is_pure(self) -> bool:
        return self.delta == 0.0

    def require_pure(self) -> None:
        if not self.is_pure:
            raise ValueError(f"mechanism requires pure epsilon-DP (delta = 0), got delta={self.delta}")

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "delta": self.delta}


@dataclass(frozen=True)
class SensitivityBound:
    """l1-sensitivity of a scalar query."""

    l1: float

    def __post_init__(self):
        if not (math.isfinite(self.l1) and self.l1 >= 0):
            raise ValueError(f"sensitivity must be a finite non-negative number, got {self.l1}")


COUNTING = SensitivityBound(1.0)


@dataclass(frozen=True)
class NoisyValue:
    """A released value together with the mechanism and budget that produced it.

    ``value`` is a float for a single release, or an ndarray when the
    mechanism was asked for several independent draws (``size=...``).
    """

    value: Any
    mechanism: str
    charged: PrivacyBudget

    def to_dict(self) -> dict:
        value = self.value.tolist() if isinstance(self.value, np.ndarray) else float(self.value)
        return {"value": value, "mechanism": self.mechanism, "charged": self.charged.to_dict()}


@dataclass(frozen=True)
class Candidate:
    id: Hashable
    utility: float

    def __post_init__(self):
        if not math.isfinite(self.utility):
            raise ValueError(f"candidate utility must be finite, got {self.utility}")


def _l1(sens: SensitivityBound | float) -> float:
    if isinstance(sens, SensitivityBound):
        return sens.l1
    return SensitivityBound(float(sens)).l1


def _check_epsilon(epsilon: float) -> float:
    if epsilon is None:
        raise ValueError("epsilon is required")
    epsilon = float(epsilon)
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise ValueError(f"epsilon must be a positive finite number, got {epsilon}")
    return epsilon


def laplace_density(eta, b: float):
    """Density of the zero-centred Laplace distribution with scale ``b``.

    ``eta`` may be a scalar or an array; the result has the same shape.
    """
    if not b > 0:
        raise ValueError(f"Laplace scale must be positive, got {b}")
    eta = np.asarray(eta, dtype=float)
    out = np.exp(-np.abs(eta) / b) / (2.0 * b)
    return float(out) if out.ndim == 0 else out


def laplace_noise(scale: float, rng: np.random.Generator, size=None):
    """Draw Laplace(0, scale) noise by inverting the CDF of a uniform draw.

    One uniform per output value, no rejection, so a seeded generator gives
    the same stream regardless of how the draws are used downstream.
    A scale of zero returns exact zeros.
    """
    if scale < 0:
        raise ValueError(f"Laplace scale must be non-negative, got {scale}")
    u = rng.random(size)
    if scale == 0:
        return np.zeros_like(u) if size is not None else 0.0
    # u == 0 would map to -inf; nudge it to the smallest positive double.
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    centred = u - 0.5
    noise = -scale * np.sign(centred) * np.log1p(-2.0 * np.abs(centred))
    return float(noise) if size is None else noise


def laplace_mechanism(
    true_answer: float,
    sens: SensitivityBound | float,
    epsilon: float,
    rng: np.random.Generator,
    size=None,
) -> NoisyValue:
    """Release ``true_answer + Lap(sens / epsilon)``.

    Parameters
    ----------
    true_answer : float
        Exact query answer f(D).
    sens : SensitivityBound or float
        l1-sensitivity of the query. Zero sensitivity releases the exact
        answer, since a constant query is private at any epsilon.
    epsilon : float
        Privacy parameter; the release is epsilon-DP.
    rng : numpy.random.Generator
    size : int or tuple, optional
        Number of independent releases to draw. Each one costs ``epsilon``
        on its own; the returned ``charged`` budget describes a single draw.

    Returns
    -------
    NoisyValue
    """
    epsilon = _check_epsilon(epsilon)
    scale = _l1(sens) / epsilon
    value = true_answer + laplace_noise(scale, rng, size)
    return NoisyValue(value, "laplace", PrivacyBudget(epsilon, 0.0))


def gaussian_sigma(epsilon: float, delta: float, sens: SensitivityBound | float) -> float:
    """Noise standard deviation sqrt(2 ln(1.25/delta)) * sens / epsilon.

    This is the classical calibration for (epsilon, delta)-DP; its standard
    proof only covers epsilon < 1, but the formula is applied as-is for any
    positive epsilon.
    """
    epsilon = _check_epsilon(epsilon)
    if not (0.0 < delta < 1.0):
        raise ValueError(f"gaussian mechanism needs delta in (0, 1), got {delta}")
    return math.sqrt(2.0 * math.log(1.25 / delta)) * _l1(sens) / epsilon


def gaussian_mechanism(
    true_answer: float,
    sens: SensitivityBound | float,
    budget: PrivacyBudget,
    rng: np.random.Generator,
    size=None,
) -> NoisyValue:
    """Release ``true_answer + N(0, sigma^2)`` with sigma from :func:`gaussian_sigma`."""
    sigma = gaussian_sigma(budget.epsilon, budget.delta, sens)
    noise = rng.standard_normal(size) * sigma
    value = true_answer + (float(noise) if size is None else noise)
    return NoisyValue(value, "gaussian", budget)


def exponential_probabilities(utilities: Sequence[float], delta_u: float, epsilon: float) -> np.ndarray:
    """Selection probabilities proportional to exp(epsilon * u / (2 * delta_u))."""
    epsilon = _check_epsilon(epsilon)
    if not delta_u > 0:
        raise ValueError(f"utility sensitivity must be positive, got {delta_u}")
    u = np.asarray(utilities, dtype=float)
    if u.size == 0:
        raise ValueError("need at least one candidate")
    logits = epsilon * (u - u.max()) / (2.0 * delta_u)
    w = np.exp(logits)
    return w / w.sum()


def exponential_mechanism(
    candidates: Sequence[Candidate],
    delta_u: float,
    epsilon: float,
    rng: np.random.Generator,
) -> Candidate:
    """Pick one candidate with probability proportional to exp(eps*u/(2*delta_u)).

    Sampling inverts the cumulative probabilities with a single uniform
    draw, so ties between equal utilities are broken by the draw alone.
    """
    if len(candidates) == 0:
        raise ValueError("exponential mechanism needs a non-empty candidate list")
    probs = exponential_probabilities([c.utility for c in candidates], delta_u, epsilon)
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return candidates[min(idx, len(candidates) - 1)]


def sparse_vector(
    answers: Sequence[float],
    threshold: float,
    epsilon: float,
    max_reports: int,
    rng: np.random.Generator,
) -> list[bool]:
    """Above-threshold reporting over a stream of sensitivity-1 queries.

    The threshold is perturbed once with Lap(2/epsilon); every query answer
    gets fresh Lap(4*max_reports/epsilon) noise. A query is flagged when its
    noisy answer reaches the noisy threshold. Processing stops right after
    the ``max_reports``-th flag, so the returned list may be shorter than
    ``answers``. The whole run is epsilon-DP.
    """
    epsilon = _check_epsilon(epsilon)
    if max_reports < 1:
        raise ValueError(f"max_reports must be at least 1, got {max_reports}")
    flags: list[bool] = []
    if len(answers) == 0:
        return flags
    noisy_threshold = threshold + laplace_noise(2.0 / epsilon, rng)
    query_scale = 4.0 * max_reports / epsilon
    reported = 0
    for a in answers:
        hit = a + laplace_noise(query_scale, rng) >= noisy_threshold
        flags.append(bool(hit))
        if hit:
            reported += 1
            if reported >= max_reports:
                break
    return flags


def sample_and_aggregate(
    records: Sequence,
    block_count: int,
    block_fn: Callable[[Sequence], float],
    output_range: tuple[float, float],
    epsilon: float,
    rng: np.random.Generator,
) -> NoisyValue:
    """Split records into contiguous blocks, average clamped block outputs, add Laplace noise.

    Changing one record moves at most one block output, and clamping keeps
    that output inside ``[lo, hi]``, so the average has sensitivity
    ``(hi - lo) / block_count``.
    """
    epsilon = _check_epsilon(epsilon)
    lo, hi = map(float, output_range)
    if not lo < hi:
        raise ValueError(f"output range must satisfy lo < hi, got ({lo}, {hi})")
    n = len(records)
    if not 1 <= block_count <= n:
        raise ValueError(f"block_count must be in [1, {n}], got {block_count}")
    # contiguous blocks whose sizes differ by at most one
    bounds = (np.arange(block_count + 1) * n) // block_count
    outputs = np.array([block_fn(records[bounds[i]:bounds[i + 1]]) for i in range(block_count)], dtype=float)
    aggregate = float(np.clip(outputs, lo, hi).mean())
    scale = (hi - lo) / (block_count * epsilon)
    return NoisyValue(aggregate + laplace_noise(scale, rng), "sample_aggregate", PrivacyBudget(epsilon, 0.0))

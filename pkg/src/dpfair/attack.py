"""
Bayesian membership inference against an aggregate release.

Setting: a database of ``database_size`` records reports how many of them
smoke. One slot is contested. If the target is in the database the slot
holds the target, who carries a genetic marker and smokes with probability
``marker_smoking_rate``; otherwise the slot holds some other member of the
population, who smokes at ``background_smoking_rate`` like everyone else.
The attacker knows all of these rates but not the other records, and
compares the likelihood of the observed release under both hypotheses.

With an exact release and a marker that nearly determines smoking, the
posterior jumps to ~1. Releasing through the Laplace mechanism caps the
posterior-to-prior odds ratio at e^epsilon.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import BothLikelihoodsZero
from .mechanisms import _check_epsilon, laplace_noise

__all__ = [
    "Scenario",
    "PosteriorReport",
    "membership_posterior",
    "release_log_likelihoods",
    "smoking_demo",
    "EXAMPLE_RELEASE_RATE",
]

# Smoker share released in the default example scenario.
EXAMPLE_RELEASE_RATE = 0.52


def _check_prob(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be a probability, got {value}")


@dataclass(frozen=True)
class Scenario:
    population_size: int = 1000
    marker_smoking_rate: float = 0.99
    background_smoking_rate: float = 0.3
    database_size: int = 100
    target_in_database_prior: float = 0.5

    def __post_init__(self):
        _check_prob("marker_smoking_rate", self.marker_smoking_rate)
        _check_prob("background_smoking_rate", self.background_smoking_rate)
        _check_prob("target_in_database_prior", self.target_in_database_prior)
        if self.population_size < 1 or self.database_size < 1:
            raise ValueError("population_size and database_size must be positive counts")
        if self.database_size > self.population_size:
            raise ValueError(
                f"database_size ({self.database_size}) cannot exceed population_size ({self.population_size})"
            )

    @classmethod
    def strongly_separating(cls, **overrides) -> "Scenario":
        """Marker almost always means smoking, and nobody else in the database smokes.

        The target's record then dominates the released count.
        """
        params = dict(marker_smoking_rate=0.99, background_smoking_rate=0.0)
        params.update(overrides)
        return cls(**params)


@dataclass(frozen=True)
class PosteriorReport:
    """Outcome of :func:`smoking_demo`.

    ``posterior`` is the mean posterior P(target in database | release) over
    trials in which the target really is in the database; ``odds_ratio`` is
    that mean posterior's odds divided by the prior odds. The per-trial
    likelihood ratios are summarised by their min and max, and
    ``epsilon_bound_satisfied`` says whether every one of them stayed inside
    [e^-eps, e^eps]. It is None for an exact (non-private) release.
    """

    prior: float
    posterior: float
    odds_ratio: float
    epsilon_bound_satisfied: bool | None
    release: str = "deterministic"
    epsilon: float | None = None
    trials: int = 0
    min_trial_odds_ratio: float = math.nan
    max_trial_odds_ratio: float = math.nan
    undetermined_trials: int = 0

    def to_dict(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, float) and not math.isfinite(v):
                out[k] = None
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def membership_posterior(prior: float, likelihood_in: float, likelihood_out: float) -> float:
    """Bayes' rule for the two hypotheses "in the database" / "not in it"."""
    _check_prob("prior", prior)
    if likelihood_in < 0 or likelihood_out < 0:
        raise ValueError("likelihoods must be non-negative")
    num = prior * likelihood_in
    den = num + (1.0 - prior) * likelihood_out
    if likelihood_in == 0 and likelihood_out == 0:
        raise BothLikelihoodsZero("the release is impossible under both hypotheses")
    if den == 0:
        # prior sits on the hypothesis that cannot produce the release
        return 0.0 if prior == 0 else 1.0
    return num / den


def _odds_posterior(prior: float, log_lr: np.ndarray) -> np.ndarray:
    """Vectorised Bayes' rule in log-odds form; log_lr = log L_in - log L_out."""
    if prior == 0.0 or prior == 1.0:
        return np.full(np.shape(log_lr), prior)
    logit = math.log(prior) - math.log1p(-prior) + log_lr
    return 1.0 / (1.0 + np.exp(-logit))


def _non_target_pmf(scenario: Scenario, rng: np.random.Generator, resamples: int) -> np.ndarray:
    others = scenario.database_size - 1
    draws = rng.binomial(others, scenario.background_smoking_rate, size=resamples)
    return np.bincount(draws, minlength=others + 1) / resamples


def release_log_likelihoods(
    observed,
    scenario: Scenario,
    pmf: np.ndarray,
    release: str = "deterministic",
    epsilon: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Log-likelihood of each observed release under the "in" and "out" hypotheses.

    ``pmf[k]`` is the (estimated) probability that the non-target records
    contain k smokers. An exact release matches a count within half a count;
    a Laplace release uses the Laplace(1/epsilon) density.
    """
    observed = np.atleast_1d(np.asarray(observed, dtype=float))[:, None]
    support = np.flatnonzero(pmf > 0)
    log_w = np.log(pmf[support])[None, :]
    k = support[None, :].astype(float)

    if release == "deterministic":
        def log_g(x):
            return np.where(np.abs(x) <= 0.5, 0.0, -np.inf)
    elif release == "laplace":
        eps = _check_epsilon(epsilon)

        def log_g(x):
            return math.log(eps / 2.0) - eps * np.abs(x)
    else:
        raise ValueError(f"unknown release {release!r}; expected 'deterministic' or 'laplace'")

    smoke, abstain = log_g(observed - k - 1.0), log_g(observed - k)

    def mix(theta: float) -> np.ndarray:
        with np.errstate(divide="ignore"):
            a, b = math.log(theta) if theta > 0 else -np.inf, math.log1p(-theta) if theta < 1 else -np.inf
        slot = np.logaddexp(a + smoke, b + abstain)
        return logsumexp(log_w + slot, axis=1)

    with np.errstate(invalid="ignore", divide="ignore"):
        return mix(scenario.marker_smoking_rate), mix(scenario.background_smoking_rate)


def smoking_demo(
    scenario: Scenario,
    release: str = "deterministic",
    epsilon: float | None = None,
    rng: np.random.Generator | None = None,
    trials: int = 10_000,
    resamples: int = 20_000,
) -> PosteriorReport:
    """Simulate the attack with the target in the database.

    Each trial draws the non-target records (and the Laplace noise, for a
    private release). The target's own smoking status is averaged out
    exactly with weights ``marker_smoking_rate`` / ``1 - marker_smoking_rate``
    under common random numbers, which removes the coin-flip variance from
    the mean posterior. The attacker's model of the non-target smoker count
    is a Monte-Carlo histogram of ``resamples`` draws.

    A trial whose release has zero estimated likelihood under both
    hypotheses keeps the prior and is counted in ``undetermined_trials``.
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    if resamples < 1:
        raise ValueError(f"resamples must be at least 1, got {resamples}")
    if release == "laplace":
        epsilon = _check_epsilon(epsilon)
    elif release != "deterministic":
        raise ValueError(f"unknown release {release!r}; expected 'deterministic' or 'laplace'")
    rng = np.random.default_rng() if rng is None else rng

    pmf = _non_target_pmf(scenario, rng, resamples)
    k_true = rng.binomial(scenario.database_size - 1, scenario.background_smoking_rate, size=trials)
    noise = laplace_noise(1.0 / epsilon, rng, size=trials) if release == "laplace" else np.zeros(trials)

    a = scenario.marker_smoking_rate
    prior = scenario.target_in_database_prior
    posterior = np.zeros(trials)
    log_lrs = []
    undetermined = np.zeros(trials, dtype=bool)
    for status, weight in ((1, a), (0, 1.0 - a)):
        if weight == 0:
            continue
        observed = k_true + status + noise
        log_in, log_out = release_log_likelihoods(observed, scenario, pmf, release, epsilon)
        both_zero = np.isneginf(log_in) & np.isneginf(log_out)
        with np.errstate(invalid="ignore"):
            log_lr = np.where(both_zero, 0.0, log_in - log_out)
        undetermined |= both_zero
        posterior += weight * _odds_posterior(prior, log_lr)
        log_lrs.append(log_lr)

    mean_post = float(posterior.mean())
    log_lrs = np.concatenate(log_lrs)
    with np.errstate(over="ignore"):
        lo, hi = float(np.exp(log_lrs.min())), float(np.exp(log_lrs.max()))

    if 0 < prior < 1 and 0 < mean_post < 1:
        odds_ratio = (mean_post / (1 - mean_post)) / (prior / (1 - prior))
    elif 0 < prior < 1 and mean_post == 1:
        odds_ratio = math.inf
    elif 0 < prior < 1 and mean_post == 0:
        odds_ratio = 0.0
    else:
        odds_ratio = math.nan

    bound_ok = None
    if release == "laplace":
        bound_ok = bool(np.all(np.abs(log_lrs) <= epsilon))

    return PosteriorReport(
        prior=prior,
        posterior=mean_post,
        odds_ratio=odds_ratio,
        epsilon_bound_satisfied=bound_ok,
        release=release,
        epsilon=epsilon,
        trials=trials,
        min_trial_odds_ratio=lo,
        max_trial_odds_ratio=hi,
        undetermined_trials=int(undetermined.sum()),
    )

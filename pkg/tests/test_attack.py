import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from dpfair.attack import (
    EXAMPLE_RELEASE_RATE,
    Scenario,
    membership_posterior,
    release_log_likelihoods,
    smoking_demo,
)
from dpfair.errors import BothLikelihoodsZero


class TestPosterior:
    def test_equal_likelihoods(self):
        assert membership_posterior(0.37, 0.2, 0.2) == pytest.approx(0.37, rel=1e-15)

    def test_degenerate_priors(self):
        assert membership_posterior(0.0, 0.9, 0.1) == 0.0
        assert membership_posterior(1.0, 0.1, 0.9) == 1.0

    def test_odds_99(self):
        assert membership_posterior(0.5, 0.99, 0.01) == pytest.approx(0.99, rel=1e-15)

    def test_both_zero(self):
        with pytest.raises(BothLikelihoodsZero):
            membership_posterior(0.5, 0.0, 0.0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            membership_posterior(1.5, 0.1, 0.1)
        with pytest.raises(ValueError):
            membership_posterior(0.5, -0.1, 0.1)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.01, 0.99), st.floats(0.01, 1), st.floats(0.01, 1), st.floats(1.01, 3))
    def test_monotone(self, prior, lin, lout, k):
        base = membership_posterior(prior, lin, lout)
        assert membership_posterior(prior, lin * k, lout) >= base
        assert membership_posterior(prior, lin, lout * k) <= base


class TestScenario:
    def test_defaults(self):
        s = Scenario()
        assert s.population_size == 1000
        assert s.marker_smoking_rate == 0.99
        assert EXAMPLE_RELEASE_RATE == 0.52

    def test_database_bigger_than_population(self):
        with pytest.raises(ValueError):
            Scenario(population_size=10, database_size=11)

    def test_bad_rate(self):
        with pytest.raises(ValueError):
            Scenario(background_smoking_rate=1.2)


def exact_non_target_pmf(s: Scenario):
    k = np.arange(s.database_size)
    return stats.binom.pmf(k, s.database_size - 1, s.background_smoking_rate)


class TestLikelihoods:
    def test_deterministic_matches_closed_form(self):
        s = Scenario(database_size=20, background_smoking_rate=0.3)
        pmf = exact_non_target_pmf(s)
        obs = np.arange(21)
        log_in, log_out = release_log_likelihoods(obs, s, pmf)
        # observed count m = k + target status
        pad = np.concatenate([[0.0], pmf])
        base = np.concatenate([pmf, [0.0]])
        for theta, got in ((0.99, log_in), (0.3, log_out)):
            want = theta * pad + (1 - theta) * base
            np.testing.assert_allclose(np.exp(got), want, rtol=1e-12, atol=1e-300)

    def test_laplace_matches_quadrature(self):
        s = Scenario(database_size=6)
        pmf = exact_non_target_pmf(s)
        eps, x = 0.7, 3.3
        log_in, _ = release_log_likelihoods([x], s, pmf, "laplace", eps)
        want = 0.0
        for k, w in enumerate(pmf):
            for status, pr in ((1, 0.99), (0, 0.01)):
                want += w * pr * eps / 2 * math.exp(-eps * abs(x - k - status))
        assert math.exp(log_in[0]) == pytest.approx(want, rel=1e-12)


class TestDemo:
    def test_deterministic_strongly_separating(self):
        rep = smoking_demo(Scenario.strongly_separating(), rng=np.random.default_rng(0))
        # background 0: every release identifies the target's own smoking status
        assert rep.posterior == pytest.approx(0.99 + 0.01 * (0.005 / 0.505), rel=1e-12)
        assert rep.posterior > 0.99
        assert rep.epsilon_bound_satisfied is None

    def test_no_signal_when_rates_match(self):
        s = Scenario(marker_smoking_rate=0.3, background_smoking_rate=0.3)
        rep = smoking_demo(s, rng=np.random.default_rng(1), trials=2000)
        assert rep.posterior == pytest.approx(0.5, abs=1e-12)

    def test_default_scenario_barely_moves(self):
        rep = smoking_demo(Scenario(), rng=np.random.default_rng(2), trials=4000)
        assert 0.5 < rep.posterior < 0.55

    @pytest.mark.parametrize("eps", [0.1, 1.0])
    def test_laplace_bound_every_trial(self, eps):
        rep = smoking_demo(Scenario.strongly_separating(), "laplace", eps, np.random.default_rng(3))
        assert rep.epsilon_bound_satisfied is True
        assert rep.trials == 10_000
        assert math.exp(-eps) <= rep.min_trial_odds_ratio <= rep.max_trial_odds_ratio <= math.exp(eps)
        assert rep.odds_ratio <= math.exp(eps)

    def test_odds_ratio_definition(self):
        rep = smoking_demo(Scenario(), "laplace", 2.0, np.random.default_rng(4), trials=500)
        post, prior = rep.posterior, rep.prior
        assert rep.odds_ratio == pytest.approx((post / (1 - post)) / (prior / (1 - prior)), rel=1e-12)

    def test_seeded_reproducible(self):
        a = smoking_demo(Scenario(), "laplace", 0.5, np.random.default_rng(9), trials=300)
        b = smoking_demo(Scenario(), "laplace", 0.5, np.random.default_rng(9), trials=300)
        assert a == b

    def test_json(self):
        rep = smoking_demo(Scenario(), rng=np.random.default_rng(5), trials=100)
        d = json.loads(rep.to_json())
        assert {"prior", "posterior", "odds_ratio", "epsilon_bound_satisfied"} <= set(d)

    def test_bad_release(self):
        with pytest.raises(ValueError):
            smoking_demo(Scenario(), "rounded", rng=np.random.default_rng())
        with pytest.raises(ValueError):
            smoking_demo(Scenario(), "laplace", None, rng=np.random.default_rng())
        with pytest.raises(ValueError):
            smoking_demo(Scenario(), trials=0, rng=np.random.default_rng())

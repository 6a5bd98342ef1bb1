import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpfair.errors import Infeasible
from dpfair.frontier import (
    SWEEP_CSV_HEADER,
    BoundConstants,
    FeasibilitySpec,
    TradeoffPoint,
    critical_sample_size,
    dominates,
    fairness_bound,
    feasible,
    group_noise_se,
    mse_lower_bound,
    pareto_front,
    se_ratio,
    sweep,
    sweep_csv,
    utility_bound,
)
from oracles import brute_force_front


class TestClosedForms:
    def test_mse(self):
        assert mse_lower_bound(1.0, 100, 1.0, 1.0) == pytest.approx(0.02, rel=1e-15)

    def test_mse_zero_sensitivity(self):
        assert mse_lower_bound(3.0, 7, 0.0, 0.5) == 3.0 / 7

    def test_mse_decreasing_in_eps(self):
        vals = [mse_lower_bound(1.0, 50, 1.0, e) for e in np.linspace(0.1, 5, 30)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_utility(self):
        assert utility_bound(0.9, 10, 1.0, 1000) == pytest.approx(0.89, abs=1e-15)

    def test_utility_limit(self):
        assert 0.9 - utility_bound(0.9, 10, 1.0, 1e9) < 1e-7

    def test_utility_doubling_n(self):
        pen1 = 0.9 - utility_bound(0.9, 10, 1.0, 500)
        pen2 = 0.9 - utility_bound(0.9, 10, 1.0, 1000)
        assert pen2 == pytest.approx(pen1 / 2, rel=1e-12)

    def test_fairness_value(self):
        assert fairness_bound(1.0, 5000, 0.1) == pytest.approx(1 / math.sqrt(500), rel=1e-12)

    def test_fairness_ratio_small_vs_large_group(self):
        # group sizes 100 and 10000 inside the same pool
        n = 10100
        small = fairness_bound(1.0, n, 100 / n)
        large = fairness_bound(1.0, n, 10000 / n)
        assert small / large == pytest.approx(10.0, rel=1e-14)

    def test_fairness_halves_with_double_eps(self):
        assert fairness_bound(2.0, 400, 0.3) == pytest.approx(fairness_bound(1.0, 400, 0.3) / 2, rel=1e-15)

    def test_se_ratio(self):
        s, d, r = se_ratio(0.5, 100, 1.0)
        assert s == pytest.approx(0.05, rel=1e-15)
        assert d == pytest.approx(0.0141421356237309505, rel=1e-14)
        assert r == pytest.approx(0.282842712474619010, rel=1e-14)

    @pytest.mark.parametrize("q", [0.1, 0.25, 0.4])
    def test_se_ratio_symmetric(self, q):
        assert se_ratio(q, 80, 0.7)[2] == pytest.approx(se_ratio(1 - q, 80, 0.7)[2], rel=1e-14)

    def test_se_ratio_scaling(self):
        assert se_ratio(0.3, 400, 1.0)[2] == pytest.approx(se_ratio(0.3, 100, 1.0)[2] / 2, rel=1e-14)

    def test_group_noise_se_values(self):
        a, b = group_noise_se(5000, 1.0), group_noise_se(500, 1.0)
        assert a == pytest.approx(0.0141421356237309505, rel=1e-14)
        assert b == pytest.approx(0.0447213595499957939, rel=1e-14)
        assert b / a == pytest.approx(math.sqrt(10), rel=1e-14)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1, 1e7), st.floats(1e-3, 100))
    def test_group_noise_se_identity(self, n, eps):
        assert group_noise_se(n, eps) * math.sqrt(n) * eps == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.2])
    def test_bad_share(self, bad):
        with pytest.raises(ValueError):
            fairness_bound(1.0, 10, bad)


class TestFeasibility:
    def test_fairness_dominated(self):
        spec = FeasibilitySpec(u0=1.5, f_target=0.05, d=1, p=0.1)
        assert critical_sample_size(spec, 1.0) == pytest.approx(4000.0, rel=1e-12)

    def test_utility_dominated(self):
        spec = FeasibilitySpec(u0=0.6, f_target=1.0, d=10**6, p=0.5)
        assert critical_sample_size(spec, 1.0) == pytest.approx(1e7, rel=1e-12)

    def test_large_n(self):
        assert feasible(FeasibilitySpec(u0=0.9, f_target=0.05, d=10, p=0.1), 1.0, 1e12)

    def test_tiny_n(self):
        assert not feasible(FeasibilitySpec(u0=0.9, f_target=0.5, d=100, p=0.5), 0.1, 1)

    def test_infeasible_margin(self):
        with pytest.raises(Infeasible):
            critical_sample_size(FeasibilitySpec(u0=0.5, f_target=0.1, d=1, p=0.2), 1.0)

    @pytest.mark.parametrize("field,values", [
        ("epsilon", [0.2, 0.5, 1.0, 2.0, 4.0]),
        ("p", [0.05, 0.1, 0.2, 0.4]),
        ("f_target", [0.01, 0.05, 0.1, 0.3]),
    ])
    def test_n_star_decreasing(self, field, values):
        base = dict(u0=0.9, f_target=0.05, d=5, p=0.1)
        out = []
        for v in values:
            if field == "epsilon":
                out.append(critical_sample_size(FeasibilitySpec(**base), v))
            else:
                out.append(critical_sample_size(FeasibilitySpec(**{**base, field: v}), 1.0))
        assert all(a > b for a, b in zip(out, out[1:]))

    @settings(max_examples=300, deadline=None)
    @given(
        st.floats(0.51, 2.0), st.floats(1e-3, 1.0), st.integers(1, 1000),
        st.floats(0.01, 0.99), st.floats(0.01, 10.0),
    )
    def test_boundary_and_monotone(self, u0, f, d, p, eps):
        spec = FeasibilitySpec(u0=u0, f_target=f, d=d, p=p)
        n_star = critical_sample_size(spec, eps)
        assert feasible(spec, eps, n_star * (1 + 1e-6))
        assert not feasible(spec, eps, n_star * (1 - 1e-6))
        for k in (2, 10, 1000):
            assert feasible(spec, eps, n_star * k)

    def test_custom_constants(self):
        spec = FeasibilitySpec(u0=1.5, f_target=0.05, d=1, p=0.1)
        consts = BoundConstants(c_utility=1.0, c_fairness=2.0)
        assert critical_sample_size(spec, 1.0, consts) == pytest.approx(16000.0, rel=1e-12)


def pt(e, u, f):
    return TradeoffPoint(epsilon=e, utility=u, fairness_violation=f)


class TestPareto:
    def test_single(self):
        p = pt(1, 1, 1)
        assert pareto_front([p]) == [p]

    def test_strict_domination(self):
        a, b = pt(1, 2, 0.1), pt(2, 1, 0.2)
        assert dominates(a, b) and not dominates(b, a)
        assert pareto_front([b, a]) == [a]

    def test_duplicates_kept(self):
        a, b, c = pt(1, 1, 1), pt(1, 1, 1), pt(2, 0.5, 2)
        assert pareto_front([a, c, b]) == [a, b]

    def test_tradeoffs_all_kept(self):
        pts = [pt(0.5, 0.6, 0.3), pt(1.0, 0.8, 0.3), pt(2.0, 0.9, 0.1)]
        assert pareto_front(pts) == pts

    def test_empty(self):
        with pytest.raises(ValueError):
            pareto_front([])

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = 200
        # coarse grid forces ties and exact duplicates
        vals = rng.integers(1, 8, size=(n, 3)).astype(float)
        pts = [pt(e, u, f) for e, u, f in vals]
        got = [id(p) for p in pareto_front(pts)]
        want = [id(pts[i]) for i in brute_force_front(pts)]
        assert got == want

    @pytest.mark.parametrize("seed", range(5))
    def test_front_properties(self, seed):
        rng = np.random.default_rng(100 + seed)
        pts = [pt(*row) for row in rng.uniform(0.1, 1, size=(150, 3))]
        front = pareto_front(pts)
        assert not any(dominates(a, b) for a in front for b in front)
        for p in pts:
            if p not in front:
                assert any(dominates(q, p) for q in front)


SPEC = FeasibilitySpec(u0=0.9, f_target=0.05, d=10, p=0.1)


class TestSweep:
    def test_one_cell(self):
        (p,) = sweep([1.0], [1000], SPEC)
        assert p.utility == utility_bound(0.9, 10, 1.0, 1000)
        assert p.fairness_violation == fairness_bound(1.0, 1000, 0.1)
        assert p.feasible == feasible(SPEC, 1.0, 1000)

    def test_utility_increasing_in_eps(self):
        pts = sweep([0.5, 1.0, 2.0], [2000], SPEC)
        assert pts[0].utility < pts[1].utility < pts[2].utility

    def test_grid_matches_hand_recomputation(self):
        eps, ns = [0.5, 1.0, 2.0], [100, 1000, 10000]
        pts = sweep(eps, ns, SPEC)
        assert len(pts) == 9
        k = 0
        for e in eps:
            for n in ns:
                p = pts[k]
                assert (p.epsilon, p.n) == (e, n)
                assert p.utility == pytest.approx(0.9 - 10 / (e * n), rel=1e-14)
                assert p.fairness_violation == pytest.approx(1 / (e * math.sqrt(0.1 * n)), rel=1e-14)
                assert p.feasible == (10 / (e * n) < 0.4 and 1 / (e * math.sqrt(0.1 * n)) < 0.05)
                k += 1

    def test_deterministic(self):
        assert sweep_csv(sweep([0.5, 1], [10, 100], SPEC)) == sweep_csv(sweep([0.5, 1], [10, 100], SPEC))

    def test_callable_evaluator(self):
        calls = []

        def ev(e, n, i):
            calls.append(i)
            return e, 1.0 / n

        pts = sweep([1, 2], [10, 20], SPEC, ev)
        assert calls == [0, 1, 2, 3]
        assert [p.utility for p in pts] == [1, 1, 2, 2]

    def test_bad_evaluator(self):
        with pytest.raises(ValueError):
            sweep([1], [10], SPEC, "quantum")

    def test_csv(self):
        text = sweep_csv(sweep([0.5, 2.0], [100, 100000], SPEC))
        lines = text.splitlines()
        assert lines[0] == ",".join(SWEEP_CSV_HEADER)
        assert len(lines) == 5
        rows = [line.split(",") for line in lines[1:]]
        # larger n wins at fixed eps; across eps the two n=1e5 cells trade off
        assert [r[-1] for r in rows] == ["0", "1", "0", "1"]
        assert rows[3][6] == "1"

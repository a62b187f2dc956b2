import numpy as np
import pytest

from helpers import random_mac, random_sdrc
from binfwd.channels import SdRcSpec, example_channel
from binfwd.errors import BudgetExceededError, DomainError
from binfwd.optimize import OptOptions, grid_search, maximize, project_rows, trace_region
from binfwd.rates import (mac_bounds, ptp_se_noncausal, ptp_se_objective, sdrc_causal_value,
                          sdrc_objective, sdrc_value)


def noiseless_spec():
    # Y = X, Z constant, single state
    k = np.zeros((2, 2, 1, 1, 2))
    k[0, :, 0, 0, 0] = k[1, :, 0, 0, 1] = 1
    return SdRcSpec([1.0], np.zeros((2, 2, 1), int), k)


class TestProjection:
    def test_rows_on_simplex(self):
        rng = np.random.default_rng(0)
        x = project_rows(rng.normal(size=(50, 4)) * 3)
        assert np.all(x >= 0)
        np.testing.assert_allclose(x.sum(axis=-1), 1.0, atol=1e-12)

    def test_fixed_point(self):
        p = np.array([[0.2, 0.3, 0.5], [1.0, 0.0, 0.0]])
        np.testing.assert_allclose(project_rows(p), p, atol=1e-15)


class TestMaximize:
    def test_noiseless_ptp(self):
        rep = maximize(sdrc_objective(noiseless_spec(), 1), restarts=8, seed=0)
        assert rep.best_value == pytest.approx(1.0, abs=1e-6)
        assert rep.feasible

    def test_example_channel_noncausal(self):
        rep = maximize(ptp_se_objective(example_channel(0.5, 0.2), 3), restarts=16, seed=0)
        assert rep.best_value >= 0.8644 - 1e-3
        v = ptp_se_noncausal(example_channel(0.5, 0.2), rep.decision["p_u_s"], rep.decision["p_x2_u"])
        assert v["value"] == pytest.approx(rep.best_value, abs=1e-9)
        assert v["constraint_slack"] >= -1e-9

    def test_against_grid_oracle(self):
        # causal 2-ary relay: 5 free parameters, 11^5 grid points at resolution 1/10
        spec = random_sdrc(np.random.default_rng(1))
        obj = sdrc_objective(spec, mode="causal")
        grid_value, _, pts = grid_search(obj, 10)
        assert pts == 11 ** 5
        rep = maximize(obj, restarts=16, seed=0)
        assert rep.best_value >= grid_value - 1e-6
        assert rep.best_value <= grid_value + 2e-2
        assert sdrc_causal_value(spec, rep.decision).value == pytest.approx(rep.best_value, abs=1e-9)

    def test_decision_matches_evaluator(self):
        spec = random_sdrc(np.random.default_rng(2))
        rep = maximize(sdrc_objective(spec, 2), restarts=8, seed=3)
        v = sdrc_value(spec, rep.decision)
        assert v.value == pytest.approx(rep.best_value, abs=1e-9)
        assert v.slack >= -1e-9

    def test_deterministic_across_threads(self):
        spec = random_sdrc(np.random.default_rng(4))
        a = maximize(sdrc_objective(spec, 2), restarts=6, seed=7)
        b = maximize(sdrc_objective(spec, 2), restarts=6, seed=7, threads=3)
        assert a.best_value == b.best_value
        for k in a.argmax:
            np.testing.assert_array_equal(a.argmax[k], b.argmax[k])

    def test_larger_u_never_worse(self):
        # a |U|=2 decision embeds in |U|=3, so the best of many restarts cannot drop much
        spec = example_channel(0.5, 0.2)
        v2 = maximize(ptp_se_objective(spec, 2), restarts=16, seed=0).best_value
        v3 = maximize(ptp_se_objective(spec, 3), restarts=16, seed=0).best_value
        assert v3 >= v2 - 1e-4

    def test_bad_options(self):
        obj = sdrc_objective(noiseless_spec(), 1)
        with pytest.raises(DomainError):
            maximize(obj, bogus=1)
        with pytest.raises(DomainError):
            maximize(obj, restarts=0)

    def test_grid_budget(self):
        obj = sdrc_objective(random_sdrc(np.random.default_rng(5)), 2)
        with pytest.raises(BudgetExceededError):
            grid_search(obj, 50)

    def test_report_serializes(self):
        import json
        rep = maximize(sdrc_objective(noiseless_spec(), 1), OptOptions(restarts=2, seed=1))
        json.dumps(rep.to_dict())


class TestTraceRegion:
    def test_points_are_achievable_and_sorted(self):
        spec = random_mac(np.random.default_rng(6))
        weights = [(1, 0), (1, 1), (0, 1)]
        pts = trace_region(spec, weights, u_size=2, opts=OptOptions(restarts=6, seed=0))
        assert len(pts) == 3
        r1 = [p.r1 for p, _, _ in pts]
        assert r1 == sorted(r1)
        for p, (w1, w2), value in pts:
            assert w1 * p.r1 + w2 * p.r2 == pytest.approx(value, abs=1e-9)

    def test_extreme_points_bracket_sum(self):
        spec = random_mac(np.random.default_rng(7))
        pts = trace_region(spec, [(1, 0), (0, 1), (1, 1)], opts=OptOptions(restarts=6, seed=0))
        by_w = {w: (p, v) for p, w, v in pts}
        best_r1 = by_w[(1, 0)][1]
        best_r2 = by_w[(0, 1)][1]
        best_sum = by_w[(1, 1)][1]
        assert max(best_r1, best_r2) <= best_sum + 1e-6
        assert best_sum <= best_r1 + best_r2 + 1e-6

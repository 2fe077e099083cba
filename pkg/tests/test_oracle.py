import math

import numpy as np
import pytest

from optreins import (
    CededContract,
    GridTooLarge,
    InvalidParameter,
    ProblemSpec,
    brute_force_min,
    ceded_risk,
    constants,
    cross_validate,
    distortion_risk,
    identity,
    monte_carlo_risk,
    objective_direct,
    solve,
    tvar,
    var_step,
)
from optreins.solver import SolutionReport
from suites import random_contract, random_distribution, random_risk_distortion, random_spec

VAR05 = -1000.0 * math.log(0.05)
SLOPES = [0.0, 0.25, 0.5, 0.75, 1.0]
FINE = np.arange(0.0, 8001.0, 5.0)


class TestBruteForce:
    def test_stop_loss_example(self, example_spec):
        o = brute_force_min(example_spec(0.7), 1, SLOPES, FINE)
        assert o.best_contract.slopes == (1.0,)
        assert o.best_contract.retentions[0] == pytest.approx(875.0, abs=5)

    def test_zero_contract_example(self, example_spec):
        spec = example_spec(0.55)
        o = brute_force_min(spec, 1, SLOPES, FINE)
        k = constants(spec)
        assert o.best_objective == pytest.approx(k.m1 * VAR05 - k.D, rel=1e-9)

    def test_flat_objective(self, example_spec):
        spec = example_spec(0.5, lambdas=(0, 0, 0))
        grid = np.linspace(0, 5000, 11)
        values = [objective_direct(spec, CededContract.stop_loss(d, c)) for c in SLOPES for d in grid]
        assert max(values) - min(values) <= 1e-9 * abs(values[0])
        assert brute_force_min(spec, 2, SLOPES, grid).best_objective == pytest.approx(values[0], rel=1e-9)

    def test_best_objective_is_direct(self, example_spec):
        spec = example_spec(0.7)
        o = brute_force_min(spec, 2)
        assert o.best_objective == objective_direct(spec, o.best_contract)

    def test_refinement_never_hurts(self, example_spec):
        spec = example_spec(0.7)
        coarse = brute_force_min(spec, 1, SLOPES, np.arange(0, 8001, 40.0))
        fine = brute_force_min(spec, 1, SLOPES, np.arange(0, 8001, 20.0))
        assert fine.best_objective <= coarse.best_objective + 1e-12

    def test_two_layer_enumerates_ordered(self, example_spec):
        o = brute_force_min(example_spec(0.7), 2, [0, 0.5, 1], [0, 100, 200])
        # 6 slope pairs with C1 + C2 <= 1, 6 ordered retention pairs
        assert o.evaluations == 6 * 6

    def test_grid_too_large(self, example_spec):
        with pytest.raises(GridTooLarge):
            brute_force_min(example_spec(0.7), 2, np.linspace(0, 1, 50), np.arange(10_000.0))

    def test_bad_grids(self, example_spec):
        with pytest.raises(InvalidParameter):
            brute_force_min(example_spec(0.7), 1, [], [0.0])
        with pytest.raises(InvalidParameter):
            brute_force_min(example_spec(0.7), 1, SLOPES, [5.0, 1.0])
        with pytest.raises(InvalidParameter):
            brute_force_min(example_spec(0.7), 3)


class TestMonteCarlo:
    def test_null_contract(self, exp_loss):
        r = monte_carlo_risk(var_step(0.05), exp_loss, CededContract.null(), 1000, 3)
        assert (r.value, r.abs_error_estimate) == (0.0, 0.0)

    def test_tiny_count(self, exp_loss):
        with pytest.raises(InvalidParameter):
            monte_carlo_risk(identity(), exp_loss, CededContract.full(), 10, 1)

    def test_deterministic(self, exp_loss):
        a = monte_carlo_risk(tvar(0.1), exp_loss, CededContract.full(), 5000, 9)
        b = monte_carlo_risk(tvar(0.1), exp_loss, CededContract.full(), 5000, 9)
        assert a == b

    def test_against_quadrature(self):
        rng = np.random.default_rng(99)
        for i in range(30):
            g = random_risk_distortion(rng)
            dist = random_distribution(rng)
            h = random_contract(rng, dist)
            mc = monte_carlo_risk(g, dist, h, 10**5, seed=1000 + i)
            exact = ceded_risk(g, dist, h).value
            assert abs(mc.value - exact) <= 4 * mc.abs_error_estimate + 1e-9


class TestCrossValidate:
    def test_stop_loss_example(self, example_spec):
        spec = example_spec(0.7)
        v = cross_validate(spec, solve(spec), brute_force_min(spec, 1, SLOPES, FINE))
        assert v.passed
        assert 0 <= v.margin <= 1.0

    def test_zero_example(self, example_spec):
        spec = example_spec(0.55)
        v = cross_validate(spec, solve(spec), brute_force_min(spec, 1, SLOPES, FINE))
        assert v.passed
        assert abs(v.margin) <= 1e-6

    def test_verdict_logic(self, example_spec):
        spec = example_spec(0.7)
        rep = solve(spec)
        oracle = brute_force_min(spec, 1, SLOPES, FINE)
        better = SolutionReport(rep.constants, rep.profile, rep.case_label, rep.f_star, rep.objective - 10)
        worse = SolutionReport(rep.constants, rep.profile, rep.case_label, rep.f_star, rep.objective + 10)
        assert cross_validate(spec, better, oracle).passed
        assert not cross_validate(spec, worse, oracle).passed

    def test_serializes(self, example_spec):
        import json

        spec = example_spec(0.7)
        v = cross_validate(spec, solve(spec), brute_force_min(spec, 1), seeds=(7,))
        data = json.loads(json.dumps(v.to_dict()))
        assert data["pass"] is True and data["seeds"] == [7]

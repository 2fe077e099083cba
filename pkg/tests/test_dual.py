import math

import numpy as np
import pytest

from optreins import (
    CededContract,
    ConstraintSet,
    Infeasible,
    InvalidParameter,
    ProblemSpec,
    check_feasibility,
    distortion_risk,
    identity,
    premium,
    primal_objective,
    solve,
    solve_constrained,
    var_step,
)

VAR05 = -1000.0 * math.log(0.05)


@pytest.fixture(scope="module")
def base():
    from optreins import exponential

    return ProblemSpec(0.7, 0.2, var_step(0.05), identity(), exponential(0.001))


@pytest.fixture(scope="module")
def free_premium(base):
    return premium(base, solve(base).f_star).value


class TestCheckFeasibility:
    def test_null_contract_reinsurer(self, base):
        assert check_feasibility(base, CededContract.null(), ConstraintSet(L2=0.0)) == (None, 0.0, None)

    def test_full_premium(self, base):
        s = check_feasibility(base, CededContract.full(), ConstraintSet(L3=1200.0))
        assert s[2] == pytest.approx(0.0, abs=1e-3)

    def test_stop_loss_premium(self, base):
        s = check_feasibility(base, CededContract.stop_loss(VAR05), ConstraintSet(L3=100.0))
        assert s[2] == pytest.approx(-40.0, abs=0.1)

    def test_empty_constraints(self):
        with pytest.raises(InvalidParameter):
            ConstraintSet()


class TestSolveConstrained:
    def test_slack_budget(self, base, free_premium):
        sol = solve_constrained(base, ConstraintSet(L3=free_premium * 1.5))
        assert sol.lambdas == (0.0, 0.0, 0.0)
        assert sol.report.f_star == solve(base).f_star

    def test_binding_budget(self, base, free_premium):
        L3 = 0.5 * free_premium
        sol = solve_constrained(base, ConstraintSet(L3=L3))
        assert sol.lambdas[2] > 0
        assert abs(premium(base, sol.report.f_star).value - L3) <= 1e-3 * L3
        assert sol.kkt_residual <= 1e-3 * (1 + abs(sol.primal_objective))

    def test_binding_budget_against_lambda_scan(self, base, free_premium):
        # 1-D brute force over lambda_3: the multiplier whose minimizer spends exactly L3
        L3 = 0.5 * free_premium
        lams = np.linspace(0.0, 2.0, 401)
        spend = [premium(base, solve(base.replace(lambdas=(0, 0, l), levels=(None, None, L3))).f_star).value for l in lams]
        first = lams[int(np.argmax(np.asarray(spend) <= L3 * (1 + 1e-6)))]
        sol = solve_constrained(base, ConstraintSet(L3=L3))
        assert sol.lambdas[2] == pytest.approx(first, abs=lams[1] - lams[0])

    def test_insurer_cap_at_no_reinsurance_level(self, base):
        sol = solve_constrained(base, ConstraintSet(L1=distortion_risk(base.g_alpha, base.dist).value))
        assert sol.slacks[0] <= 0
        assert sol.lambdas[0] >= 0

    def test_infeasible(self, base):
        # the insurer's total risk is at least its premium-free floor
        with pytest.raises(Infeasible):
            solve_constrained(base, ConstraintSet(L1=1.0))

    def test_weak_duality(self, base, free_premium):
        cons = ConstraintSet(L3=0.5 * free_premium)
        feasible = [
            h for h in (CededContract.stop_loss(d) for d in np.linspace(0, 6000, 61))
            if check_feasibility(base, h, cons)[2] <= 0
        ] + [CededContract.null()]
        best_primal = min(primal_objective(base, h) for h in feasible)
        for lam in (0.0, 0.01, 0.1, 0.4, 1.0, 10.0):
            spec = base.replace(lambdas=(0, 0, lam), levels=cons.levels)
            assert solve(spec).objective <= best_primal + 1e-9

    def test_two_constraints(self, base, free_premium):
        cons = ConstraintSet(L2=500.0, L3=0.7 * free_premium)
        sol = solve_constrained(base, cons)
        for i in cons.active:
            assert sol.slacks[i] <= cons.tolerance(i)

    def test_monotone_tightening(self, base, free_premium):
        ladder = [f * free_premium for f in (1.1, 0.9, 0.7, 0.5, 0.3)]
        objs = [solve_constrained(base, ConstraintSet(L3=L)).primal_objective for L in ladder]
        assert all(b >= a - 1e-6 for a, b in zip(objs, objs[1:]))

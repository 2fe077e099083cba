import math

import numpy as np
import pytest

from optreins import (
    CededContract,
    InvalidParameter,
    ProblemSpec,
    ceded_risk,
    distortion_risk,
    identity,
    insurer_total_risk,
    lagrangian_value,
    objective_direct,
    objective_layered,
    premium,
    reinsurer_total_risk,
    retained_risk,
    tvar,
    var_step,
)
from optreins.distortion import quantile_stieltjes
from suites import random_contract, random_distribution, random_risk_distortion, random_spec

VAR05 = -1000.0 * math.log(0.05)


@pytest.fixture
def spec_b1(exp_loss, var05):
    return ProblemSpec(1.0, 0.2, var05, identity(), exp_loss)


class TestCededRisk:
    def test_full_cession_mean(self, exp_loss):
        assert ceded_risk(identity(), exp_loss, CededContract.full()).value == pytest.approx(1000, abs=1e-3)

    def test_null(self, exp_loss):
        for g in (identity(), var_step(0.05), tvar(0.1)):
            assert ceded_risk(g, exp_loss, CededContract.null()).value == 0.0

    def test_stop_loss_closed_form(self, exp_loss):
        # int_d^inf exp(-0.001 x) dx = 1000 exp(-0.001 d) = 50 at d = VaR_0.05
        got = ceded_risk(identity(), exp_loss, CededContract.stop_loss(VAR05)).value
        assert got == pytest.approx(50.0, abs=0.01)

    def test_layered_form_matches_quantile_form(self, exp_loss):
        h = CededContract(((0.4, 100.0), (0.5, 1500.0)))
        for g in (identity(), var_step(0.05), tvar(0.2)):
            direct = ceded_risk(g, exp_loss, h).value
            quant = quantile_stieltjes(g, exp_loss, 0.0, 1.0, h, h.kinks).value
            assert direct == pytest.approx(quant, rel=1e-8)


class TestTotalRisks:
    def test_insurer_no_reinsurance(self, spec_b1):
        assert insurer_total_risk(spec_b1, CededContract.null()).value == pytest.approx(2995.73, abs=0.01)

    def test_insurer_full_cession(self, exp_loss):
        spec = ProblemSpec(1.0, 0.2, identity(), identity(), exp_loss)
        assert insurer_total_risk(spec, CededContract.full()).value == pytest.approx(1200, abs=1e-3)

    def test_insurer_tvar(self, exp_loss):
        spec = ProblemSpec(1.0, 0.2, tvar(0.05), identity(), exp_loss)
        assert insurer_total_risk(spec, CededContract.null()).value == pytest.approx(3995.73, abs=0.01)

    def test_reinsurer(self, spec_b1, exp_loss):
        assert reinsurer_total_risk(spec_b1, CededContract.null()).value == 0.0
        assert reinsurer_total_risk(spec_b1, CededContract.full()).value == pytest.approx(1795.73, abs=0.01)
        spec = ProblemSpec(1.0, 0.2, identity(), identity(), exp_loss)
        assert reinsurer_total_risk(spec, CededContract.full()).value == pytest.approx(-200, abs=1e-3)

    def test_premium(self, spec_b1):
        assert premium(spec_b1, CededContract.stop_loss(VAR05)).value == pytest.approx(60.0, abs=0.01)


class TestObjective:
    def test_no_reinsurance(self, spec_b1):
        assert objective_direct(spec_b1, CededContract.null()) == pytest.approx(2995.73, abs=0.01)

    def test_full_cession(self, spec_b1):
        assert objective_direct(spec_b1, CededContract.full()) == pytest.approx(1200, abs=0.01)

    def test_flat_at_half(self, exp_loss, var05):
        spec = ProblemSpec(0.5, 0.2, var05, identity(), exp_loss)
        for h in (CededContract.null(), CededContract.full(), CededContract.stop_loss(500.0)):
            assert objective_direct(spec, h) == pytest.approx(0.5 * VAR05, abs=0.01)

    @pytest.mark.parametrize("h", [CededContract.null(), CededContract.full()], ids=["null", "full"])
    def test_layered_form_on_examples(self, spec_b1, h):
        assert objective_layered(spec_b1, h) == pytest.approx(objective_direct(spec_b1, h), abs=0.02)

    def test_layered_form_random(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            spec = random_spec(rng)
            h = random_contract(rng, spec.dist)
            assert objective_layered(spec, h) == pytest.approx(objective_direct(spec, h), rel=1e-5)

    def test_interface_alias(self):
        import optreins

        assert optreins.objective_lemma31 is objective_layered

    def test_budget_identity(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            spec = random_spec(rng)
            h = random_contract(rng, spec.dist)
            assert lagrangian_value(spec, h) == pytest.approx(objective_direct(spec, h), rel=1e-6)

    def test_comonotonic_split(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            g = random_risk_distortion(rng)
            dist = random_distribution(rng)
            h = random_contract(rng, dist)
            whole = distortion_risk(g, dist).value
            parts = ceded_risk(g, dist, h).value + retained_risk(g, dist, h).value
            assert parts == pytest.approx(whole, rel=1e-6)

    def test_retained_risk_by_quantile(self, exp_loss):
        # independent route: integrate x - h(x) against dg directly
        h = CededContract(((0.3, 0.0), (0.5, 800.0)))
        for g in (var_step(0.05), tvar(0.1), identity()):
            via_split = retained_risk(g, exp_loss, h).value
            direct = quantile_stieltjes(g, exp_loss, 0.0, 1.0, h.retained, h.kinks).value
            assert via_split == pytest.approx(direct, rel=1e-7)


class TestProblemSpec:
    def test_bad_beta(self, exp_loss, var05):
        with pytest.raises(InvalidParameter):
            ProblemSpec(1.2, 0.2, var05, identity(), exp_loss)

    def test_negative_lambda(self, exp_loss, var05):
        with pytest.raises(InvalidParameter):
            ProblemSpec(0.5, 0.2, var05, identity(), exp_loss, (0.0, -1.0, 0.0))

    def test_level_above_atom(self, var05):
        from optreins import empirical

        with pytest.raises(InvalidParameter):
            ProblemSpec(0.5, 0.2, var_step(0.6), identity(), empirical([0, 0, 0, 5.0]))

    def test_round_trip(self, example_spec):
        spec = example_spec(0.7)
        assert ProblemSpec.from_dict(spec.to_dict()) == spec

    def test_unknown_key(self, example_spec):
        data = example_spec(0.7).to_dict()
        data["lamdbas"] = [0, 0, 0]
        with pytest.raises(InvalidParameter, match="lamdbas"):
            ProblemSpec.from_dict(data)

    def test_missing_beta(self, example_spec):
        data = example_spec(0.7).to_dict()
        del data["beta"]
        with pytest.raises(InvalidParameter, match="beta"):
            ProblemSpec.from_dict(data)

    def test_D(self, example_spec):
        spec = example_spec(0.7).replace(levels=(100.0, None, 10.0))
        assert spec.D == pytest.approx(0.3 * 100 + 0.3 * 10)

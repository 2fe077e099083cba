import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from optreins import CededContract, InvalidParameter, contract_eval


class TestEval:
    def test_kink(self):
        assert contract_eval(CededContract.stop_loss(2995.73), 2995.73) == 0.0

    def test_linear_excess(self):
        assert contract_eval(CededContract.stop_loss(2995.73), 4000.0) == pytest.approx(1004.27)

    def test_layers_add(self):
        h = CededContract(((0.5, 0.0), (0.5, 100.0)))
        assert contract_eval(h, 200.0) == pytest.approx(150.0)

    def test_null(self):
        assert contract_eval(CededContract.null(), 123.0) == 0.0

    def test_vectorized(self):
        h = CededContract(((0.3, 10.0), (0.6, 50.0)))
        xs = np.linspace(0, 200, 41)
        np.testing.assert_allclose(h(xs), [h(float(x)) for x in xs])

    def test_negative_loss(self):
        with pytest.raises(InvalidParameter):
            contract_eval(CededContract.full(), -1.0)


class TestValidation:
    def test_slopes_over_one(self):
        with pytest.raises(InvalidParameter):
            CededContract(((0.7, 0.0), (0.4, 10.0)))

    def test_float_dust_accepted(self):
        h = CededContract(((0.1, 0.0),) * 10)
        assert h.total_slope == pytest.approx(1.0)

    def test_negative_slope(self):
        with pytest.raises(InvalidParameter):
            CededContract(((-0.1, 0.0),))

    def test_negative_retention(self):
        with pytest.raises(InvalidParameter):
            CededContract(((0.5, -1.0),))

    def test_terms_sorted(self):
        h = CededContract(((0.2, 50.0), (0.3, 10.0)))
        assert h.retentions == (10.0, 50.0)

    def test_json_round_trip(self):
        h = CededContract(((0.123456789012345, 17.000000000001), (0.5, 1234.5678)))
        again = CededContract.from_json(h.to_json())
        assert again == h

    def test_json_schema(self):
        assert CededContract.stop_loss(5.0).to_list() == [{"slope": 1.0, "retention": 5.0}]

    def test_bad_json(self):
        with pytest.raises(InvalidParameter):
            CededContract.from_list([{"slope": 1.0}])


contracts = st.lists(
    st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 1e4)), min_size=0, max_size=4
).map(lambda ts: CededContract(tuple((c / max(1.0, sum(x for x, _ in ts)), d) for c, d in ts)))


@settings(max_examples=100, deadline=None)
@given(h=contracts, xs=st.lists(st.floats(0.0, 2e4), min_size=2, max_size=30))
def test_class_properties(h, xs):
    xs = np.sort(np.asarray(xs))
    vals = h(xs)
    assert np.all(vals >= 0)
    assert np.all(vals <= xs + 1e-9)
    assert h(0.0) == 0.0
    # 1-Lipschitz and increasing
    dv, dx = np.diff(vals), np.diff(xs)
    assert np.all(dv >= -1e-9)
    assert np.all(dv <= dx + 1e-9)
    # slopes nondecreasing
    slopes = [h.slope_after(x) for x in xs]
    assert all(b >= a - 1e-12 for a, b in zip(slopes, slopes[1:]))

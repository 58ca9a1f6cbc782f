import math
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsqueeze import model
from qsqueeze.model import DetuningWarning, ParameterError, SystemParams


def params8(n_th: float = 0.0) -> SystemParams:
    return SystemParams(omega_m=0.1, omega_a=8.0, g=1.0, gamma=0.1, n_th=n_th)


valid_params = st.builds(
    SystemParams,
    omega_m=st.floats(0.01, 2.0),
    omega_a=st.floats(6.0, 100.0),
    g=st.just(1.0),
    gamma=st.floats(0.01, 2.0),
    n_th=st.floats(0.0, 5.0),
)


class TestValidate:
    @pytest.mark.parametrize(
        "field,value",
        [("omega_m", 0.0), ("omega_m", -1.0), ("omega_a", 0.0), ("g", -0.5),
         ("gamma", -0.1), ("n_th", -0.2), ("omega_m", math.nan), ("omega_a", math.inf)],
    )
    def test_rejects_bad_field_naming_it(self, field, value):
        kwargs = dict(omega_m=0.1, omega_a=8.0, g=1.0, gamma=0.1, n_th=0.0)
        kwargs[field] = value
        with pytest.raises(ParameterError, match=field):
            model.validate(SystemParams(**kwargs))

    def test_warns_when_detuning_not_large(self):
        with pytest.warns(DetuningWarning):
            model.validate(SystemParams(omega_m=0.1, omega_a=4.0, g=1.0, gamma=0.1))

    def test_silent_when_dispersive(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            model.validate(params8())

    def test_delta_and_dispersive(self):
        p = SystemParams(omega_m=0.1, omega_a=8.0, g=1.0)
        assert p.delta == pytest.approx(7.9)
        assert p.dispersive
        assert not SystemParams(omega_m=0.1, omega_a=5.0, g=1.0).dispersive


class TestSteadyStateMoments:
    def test_working_point_closed_form(self):
        m = model.steady_state_moments(params8())
        assert m.var_x1 == pytest.approx(0.6, abs=1e-15)
        assert m.var_x2 == pytest.approx(3.4, abs=1e-15)
        assert m.cov_x1x2 == pytest.approx(-0.2, abs=1e-15)
        assert m.determinant == pytest.approx(2.0, abs=1e-14)
        assert m.purity == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-14)

    def test_large_detuning_value(self):
        p = SystemParams(omega_m=0.1, omega_a=15.0, g=1.0, gamma=0.1)
        assert model.steady_state_moments(p).var_x1 == pytest.approx(
            0.6595744680851063, abs=1e-15
        )

    def test_very_large_detuning_value(self):
        p = SystemParams(omega_m=0.1, omega_a=50.0, g=1.0, gamma=0.1)
        assert model.steady_state_moments(p).var_x1 == pytest.approx(
            0.8048780487804879, abs=1e-15
        )

    def test_thermal_scaling(self):
        cold = model.steady_state_moments(params8(0.0))
        hot = model.steady_state_moments(params8(3.0))
        assert hot.var_x1 == pytest.approx(7.0 * cold.var_x1, rel=1e-14)
        assert hot.var_x2 == pytest.approx(7.0 * cold.var_x2, rel=1e-14)

    def test_undamped_has_no_steady_state(self):
        with pytest.raises(ParameterError, match="gamma"):
            model.steady_state_moments(SystemParams(omega_m=0.1, omega_a=8.0, g=1.0))

    @given(valid_params)
    def test_uncertainty_always_respected(self, p):
        m = model.steady_state_moments(p)
        assert m.determinant >= 1.0 - 1e-12

    @given(valid_params)
    def test_x1_always_below_thermal(self, p):
        m = model.steady_state_moments(p)
        assert m.var_x1 < (1.0 + 2.0 * p.n_th)
        assert m.var_x2 > (1.0 + 2.0 * p.n_th)


class TestRenormalizedVariance:
    def test_independent_of_n_th_exactly(self):
        values = {model.renormalized_variance(params8(n)) for n in (0.0, 0.2, 1.0, 3.0, 5.0)}
        assert len(values) == 1

    def test_working_point_value(self):
        assert model.renormalized_variance(params8()) == pytest.approx(0.6, abs=1e-15)

    @given(valid_params)
    def test_below_one_whenever_coupled(self, p):
        assert 0.0 < model.renormalized_variance(p) < 1.0

    def test_matches_variance_ratio(self):
        p = params8(0.4)
        m = model.steady_state_moments(p)
        assert model.renormalized_variance(p) == pytest.approx(
            m.var_x1 / (1.0 + 2.0 * p.n_th), rel=1e-14
        )

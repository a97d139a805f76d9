import numpy as np
import pytest
from hypothesis import given, settings, strategies as hyp_st
from scipy import integrate

from nsdetermine.viscosity import ViscosityModel, bounds, kbar, phi
from nsdetermine.utils import (ConfigError, InsufficientHorizonError, PreconditionError, TimeProfile,
                               ViscosityKind, ViscosityModelError)


def test_bounds():
    assert bounds(ViscosityModel.constant(0.1)) == (0.1, 0.1)
    assert bounds(ViscosityModel.sinusoidal(1.0, 0.5), (0.0, 4 * np.pi)) == pytest.approx((0.5, 1.5), rel=1e-12)
    assert bounds(ViscosityModel.piecewise([(0.0, 1.0), (5.0, 0.2)]), (0.0, 10.0)) == (0.2, 1.0)
    assert bounds(ViscosityModel.piecewise([(0.0, 1.0), (5.0, 0.2)]), (0.0, 4.0)) == (1.0, 1.0)
    low, high = bounds(ViscosityModel.decaying(1.0, 0.2, 0.5))
    assert (low, high) == pytest.approx((0.2, 1.0))


def test_bounds_short_window_of_sine():
    model = ViscosityModel.sinusoidal(1.0, 0.5)
    low, high = bounds(model, (0.0, 1.0))
    samples = model.at(np.linspace(0.0, 1.0, 100001))
    assert low == pytest.approx(samples.min(), rel=1e-6)
    assert high == pytest.approx(samples.max(), rel=1e-6)
    assert low <= samples.min() and high >= samples.max()


def test_bounds_errors():
    with pytest.raises(ViscosityModelError):
        ViscosityModel.sinusoidal(1.0, 1.5)
    with pytest.raises(ViscosityModelError):
        ViscosityModel.constant(-0.1)
    with pytest.raises(PreconditionError):
        bounds(ViscosityModel.constant(1.0), (2.0, 1.0))
    declared = ViscosityModel(ViscosityKind.TIME_VARYING, 1.0, TimeProfile.SINUSOIDAL, epsilon=0.5, lower=0.6)
    with pytest.raises(ViscosityModelError):
        bounds(declared, (0.0, 10.0))


def test_phi_closed_forms():
    assert phi(ViscosityModel.constant(0.3), 0.0, 2.0) == pytest.approx(0.6)
    assert phi(ViscosityModel.sinusoidal(1.0, 0.5), 0.0, 2 * np.pi) == pytest.approx(2 * np.pi, rel=1e-14)
    model = ViscosityModel.sinusoidal(1.0, 0.5, 2.0)
    oracle, _ = integrate.quad(lambda z: 1.0 + 0.5 * np.sin(2.0 * z), 0.3, 1.7, epsabs=0.0, epsrel=1e-13)
    assert phi(model, 0.3, 1.7) == pytest.approx(oracle, rel=1e-10)


@pytest.mark.parametrize('model', [
    ViscosityModel.piecewise([(0.0, 1.0), (2.0, 0.2), (3.5, 0.7)]),
    ViscosityModel.decaying(1.0, 0.1, 0.8),
    ViscosityModel.sinusoidal(0.5, 0.3, 3.0),
])
def test_phi_closed_form_matches_quadrature(model):
    for s, t in ((0.0, 1.0), (0.5, 4.0), (1.9, 2.1)):
        assert phi(model, s, t) == pytest.approx(phi(model, s, t, method='quad'), rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(hyp_st.floats(0.0, 10.0), hyp_st.floats(0.0, 10.0), hyp_st.floats(0.0, 10.0))
def test_phi_additive_and_bracketed(a, b, c):
    s, r, t = sorted((a, b, c))
    model = ViscosityModel.sinusoidal(1.0, 0.5)
    total = phi(model, s, t)
    assert total == pytest.approx(phi(model, s, r) + phi(model, r, t), abs=1e-12)
    low, high = bounds(model)
    assert low * (t - s) - 1e-12 <= total <= high * (t - s) + 1e-12


def test_phi_errors():
    with pytest.raises(PreconditionError):
        phi(ViscosityModel.constant(1.0), 2.0, 1.0)
    with pytest.raises(ViscosityModelError):
        phi(ViscosityModel.space_varying(1.0, 0.1), 0.0, 1.0)


def test_kbar_constant():
    assert kbar(ViscosityModel.constant(1.0), 1.0) == pytest.approx(1.0, rel=1e-12)
    assert kbar(ViscosityModel.constant(2.0), 1.0) == pytest.approx(0.5, rel=1e-12)
    assert kbar(ViscosityModel.sinusoidal(0.4, 0.0), 1.0) == pytest.approx(2.5, rel=1e-6)


def test_kbar_sinusoidal_against_ode():
    model = ViscosityModel.sinusoidal(1.0, 0.5)
    horizon = 80.0
    # K(t) = ∫₀ᵗ e^{−φ_s(t)} ds solves K' = 1 − ν(t)K, K(0) = 0
    solution = integrate.solve_ivp(lambda t, k: 1.0 - model.at(t) * k, (0.0, horizon), [0.0], method='DOP853',
                                   rtol=1e-12, atol=1e-14, dense_output=True)
    oracle = solution.sol(np.linspace(0.5 * horizon, horizon, 200001))[0].max()
    value = kbar(model, 1.0, horizon)
    assert value == pytest.approx(oracle, rel=1e-6)
    assert 1.0 / 1.5 <= value <= 1.0 / 0.5


def test_kbar_errors():
    with pytest.raises(InsufficientHorizonError):
        kbar(ViscosityModel.constant(1.0), 1.0, horizon=5.0)
    with pytest.raises(ViscosityModelError):
        kbar(ViscosityModel.space_varying(1.0, 0.1))
    with pytest.raises(PreconditionError):
        kbar(ViscosityModel.constant(1.0), tail_fraction=1.0)


def test_space_varying_model():
    model = ViscosityModel.space_varying(1.0, 0.1)
    assert bounds(model) == pytest.approx((0.9, 1.1))
    field = model.field(16)
    assert field.lower == pytest.approx(0.9) and field.upper == pytest.approx(1.1)
    assert field.mean == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(PreconditionError):
        model.at(0.0)


def test_model_config_round_trip():
    model = ViscosityModel.from_dict({'kind': 'time_varying', 'nu0': 1.0, 'profile': 'sinusoidal',
                                      'epsilon': 0.5, 'omega': 2.0})
    assert model.is_time_varying and not model.has_constant_profile
    assert ViscosityModel.from_dict(model.to_dict()) == model
    with pytest.raises(ConfigError):
        ViscosityModel.from_dict({'kind': 'constant', 'nu0': 1.0, 'gamma': 2.0})
    with pytest.raises(ConfigError):
        ViscosityModel.from_dict({'kind': 'viscous', 'nu0': 1.0})


if __name__ == '__main__':
    pytest.main()

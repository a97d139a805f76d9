from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from conftest import laminar_config
from nsdetermine.fields import SpectralField, compute_norms, vdual_norm
from nsdetermine.models import TrajectorySample
from nsdetermine.solver import (ForcingSpec, InitialSpec, SolverConfig, Stepper, energy_balance_residual,
                                integrate, step, trajectory_gen)
from nsdetermine.utils import BlowUpError, ConfigError, ForcingKind, InitialKind, PreconditionError
from nsdetermine.viscosity import ViscosityModel


def decay_config(dt: float, t_end: float = 1.0, nu: float = 0.1, **initial) -> SolverConfig:
    initial = initial or {'kind': InitialKind.TAYLOR_GREEN}
    return SolverConfig(resolution=16, dt=dt, t_end=t_end, viscosity=ViscosityModel.constant(nu),
                        initial=InitialSpec(**initial), sample_stride=max(1, int(round(0.1 / dt))))


def final_state(record):
    return record.snapshots[-1][1]


def test_forcing_norm():
    forcing = ForcingSpec.kolmogorov(1.0, 2)
    assert vdual_norm(forcing.at(16, 0.0)) == pytest.approx(1.0 / (2.0 * np.sqrt(2.0)), rel=1e-14)
    modulated = ForcingSpec(ForcingKind.MODULATED, 1.0, 2, epsilon=0.5, omega=2.0)
    assert modulated.modulation(np.pi / 4) == pytest.approx(1.5)
    assert modulated.peak_amplitude() == pytest.approx(1.5)
    perturbed = forcing.perturbed(0.1, (4, 1), 0.5)
    gap = SpectralField.trusted(perturbed.at(16, 2.0).coeffs - forcing.at(16, 2.0).coeffs, True)
    assert compute_norms(gap).h_norm == pytest.approx(0.1 * np.exp(-1.0), rel=1e-12)


def test_stokes_mode_decay():
    config = decay_config(0.01, kind=InitialKind.MODE, wavevector=(2, 1))
    record = integrate(config)
    half = 0.5 * config.dt * 0.1 * 5
    discrete = ((1.0 - half) / (1.0 + half)) ** config.n_steps
    assert record.h_norm[-1] == pytest.approx(discrete, rel=1e-12)
    assert record.h_norm[-1] == pytest.approx(np.exp(-0.5 * config.t_end), rel=1e-5)


def test_taylor_green_second_order():
    errors = []
    for dt in (0.1, 0.05, 0.025):
        record = integrate(decay_config(dt))
        exact = SpectralField.taylor_green(16, np.exp(-2.0 * 0.1 * 1.0))
        errors.append(compute_norms(final_state(record) - exact).h_norm)
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(np.abs(orders - 2.0) <= 0.2)


def test_laminar_fixed_point():
    record = integrate(laminar_config(t_end=60.0))
    amplitude = 1.0 / (0.5 * 2 ** 2)
    assert record.h_norm[-1] == pytest.approx(amplitude / np.sqrt(2.0), abs=1e-8)
    exact = SpectralField.shear(16, 2, amplitude)
    assert compute_norms(final_state(record) - exact).h_norm < 1e-8
    assert abs(record.residual[-1]) <= 1e-10


def test_zero_state_has_zero_residual():
    config = decay_config(0.05, t_end=1.0, kind=InitialKind.ZERO)
    record = integrate(config)
    assert np.all(record.residual == 0.0)
    assert np.all(energy_balance_residual(record) == 0.0)


def test_residual_second_order():
    scale = []
    for dt, stride in ((0.1, 1), (0.05, 2)):
        config = replace(decay_config(dt, t_end=2.0, kind=InitialKind.MODE, wavevector=(1, 0)), sample_stride=stride)
        scale.append(np.abs(energy_balance_residual(integrate(config))).max())
    assert scale[0] / scale[1] == pytest.approx(4.0, rel=0.05)


def test_solenoidal_and_zero_mean_along_trajectory():
    config = SolverConfig(resolution=32, dt=0.02, t_end=4.0, viscosity=ViscosityModel.constant(0.05),
                          forcing=ForcingSpec.kolmogorov(0.5, 4), initial=InitialSpec(amplitude=0.5),
                          sample_stride=5, seed=3)
    for _, state in trajectory_gen(config):
        assert state.divergence_norm() <= 1e-12 * max(compute_norms(state).h_norm, 1e-300)
        assert np.all(state.mean == 0.0)


@pytest.mark.parametrize('model', [
    ViscosityModel.constant(0.2),
    ViscosityModel.sinusoidal(0.2, 0.5, 3.0),
    ViscosityModel.decaying(0.3, 0.1, 1.0),
    ViscosityModel.space_varying(0.2, 0.05, (1, 1)),
])
def test_unforced_energy_decays(model):
    config = SolverConfig(resolution=16, dt=0.01, t_end=2.0, viscosity=model,
                          initial=InitialSpec(amplitude=0.5), seed=1)
    record = integrate(config)
    assert np.all(np.diff(record.h_norm) <= 0.0)


def test_constant_profile_matches_constant_path():
    reference = integrate(laminar_config(t_end=5.0))
    for viscosity in ({'kind': 'time_varying', 'nu0': 0.5, 'profile': 'sinusoidal', 'epsilon': 0.0},
                      {'kind': 'time_varying', 'profile': 'piecewise', 'schedule': [[0.0, 0.5]]}):
        record = integrate(laminar_config(t_end=5.0, **viscosity))
        assert np.allclose(record.h_norm, reference.h_norm, rtol=1e-12, atol=0.0)
        assert np.allclose(record.v_norm, reference.v_norm, rtol=1e-12, atol=0.0)


def test_determinism():
    first, second = integrate(laminar_config(t_end=2.0)), integrate(laminar_config(t_end=2.0))
    for name in ('time', 'h_norm', 'v_norm', 'residual'):
        assert np.array_equal(getattr(first, name), getattr(second, name))
    assert np.array_equal(final_state(first).coeffs, final_state(second).coeffs)


def test_single_step():
    config = decay_config(0.05)
    tg = SpectralField.taylor_green(16)
    half = 0.5 * 0.05 * 0.1 * 2
    result = step(tg, 0.3, 0.05, config)
    assert np.allclose(result.coeffs, (1.0 - half) / (1.0 + half) * tg.coeffs, atol=1e-15)
    assert result.is_solenoidal()
    with pytest.raises(PreconditionError):
        step(SpectralField.from_physical(np.ones((2, 16, 16)) * np.arange(16)[None, :, None]), 0.0, 0.05, config)
    with pytest.raises(ConfigError):
        step(tg, 0.0, 0.5, config)


def test_runtime_cfl_blow_up():
    config = laminar_config()
    stepper = Stepper(config)
    stepper.overwrite(SpectralField.mode(16, (1, 0), 100.0))
    with pytest.raises(BlowUpError) as info:
        stepper.check_cfl()
    assert info.value.time == 0.0


def test_config_validation():
    config = laminar_config()
    config.validate()
    with pytest.raises(ConfigError):
        replace(config, dt=0.5).validate()
    with pytest.raises(ConfigError):
        replace(config, t_end=1.01).validate()
    with pytest.raises(ConfigError):
        replace(config, resolution=18, forcing=ForcingSpec.kolmogorov(1.0, 6)).validate()
    with pytest.raises(ConfigError):
        replace(config, resolution=15).validate()
    with pytest.raises(ConfigError):
        replace(config, dt=0.1, viscosity=ViscosityModel.space_varying(1.0, 0.9)).validate()


def test_config_from_dict():
    data = {'seed': 4, 'solver': {'resolution': 16, 'dt': 0.05, 't_end': 1.0},
            'viscosity': {'kind': 'constant', 'nu0': 0.5},
            'forcing': {'kind': 'kolmogorov', 'amplitude': 1.0, 'wavenumber': 2}}
    config = SolverConfig.from_dict(data)
    assert config.seed == 4 and config.n_steps == 20
    assert SolverConfig.from_dict(config.to_dict()) == config
    with pytest.raises(ConfigError):
        SolverConfig.from_dict({**data, 'solver': {'resolution': 16, 'dt': 0.05}})
    with pytest.raises(ConfigError):
        SolverConfig.from_dict({**data, 'solver': {**data['solver'], 'order': 3}})
    with pytest.raises(ConfigError):
        SolverConfig.from_dict({key: value for key, value in data.items() if key != 'viscosity'})


def test_record_views():
    record = integrate(laminar_config(t_end=1.0))
    assert len(record) == 6
    frame = record.frame(use_dataframe=True)
    assert isinstance(frame, pd.DataFrame)
    assert list(frame.columns[:6]) == ['time', 'h_norm', 'v_norm', 'f_vdual', 'nu', 'residual']
    it = record.frame(use_dataframe=False)
    sample = next(it)
    assert isinstance(sample, TrajectorySample)
    assert sample.time == 0.0 and sample.residual == 0.0
    assert record.config['solver']['resolution'] == 16
    with pytest.raises(PreconditionError):
        replace(record, time=record.time[::-1])


def test_energy_balance_needs_three_samples():
    config = replace(laminar_config(t_end=0.2), sample_stride=4)
    record = integrate(config)
    assert len(record) == 2
    with pytest.raises(PreconditionError):
        energy_balance_residual(record)


if __name__ == '__main__':
    pytest.main()

from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from conftest import laminar_config
from nsdetermine.estimates import n_bound_from_limits
from nsdetermine.experiments import (ExperimentConfig, ProjectionSpec, TwinSpec, certify_projection, cutoff_sweep,
                                     estimate_suite, load_certification, suite_frame, twin_run)
from nsdetermine.fields import vdual_norm
from nsdetermine.gronwall import gronwall_generalized_check
from nsdetermine.models import CertificationArtifact, TwinSample
from nsdetermine.session import Session
from nsdetermine.solver import ForcingSpec, InitialSpec, SolverConfig
from nsdetermine.utils import ConfigError, GronwallOutcome, ProjectionKind, TwinMode, TwinVerdict
from nsdetermine.viscosity import ViscosityModel

TOML = """
seed = 5
epsilon_h = 1e-6

[solver]
resolution = 32
dt = 0.05
t_end = 2.0

[viscosity]
kind = "constant"
nu0 = 0.2

[forcing]
kind = "kolmogorov"
amplitude = 0.1
wavenumber = 2

[initial]
kind = "random"
amplitude = 0.1
k_max = 4

[projection]
kind = "modal"
parameter = 3

[twin]
mode = "slaving"
sigma = 0.5
perturbation_amplitude = 0.1
perturbation_wavevector = [4, 1]
"""


def twin_config(t_end: float = 60.0, **projection) -> ExperimentConfig:
    solver = SolverConfig(resolution=32, dt=0.05, t_end=t_end, viscosity=ViscosityModel.constant(0.2),
                          forcing=ForcingSpec.kolmogorov(0.1, 2), initial=InitialSpec(amplitude=0.1, k_max=4),
                          sample_stride=10, seed=5)
    return ExperimentConfig(solver=solver, projection=ProjectionSpec(**(projection or {'parameter': 3})),
                            twin=TwinSpec(sigma=0.5, perturbation_amplitude=0.1, perturbation_wavevector=(4, 1)))


def chaotic_config(parameter, t_end: float = 40.0) -> ExperimentConfig:
    """Турбулентный режим Колмогорова: ν = 0.05, k_f = 4, a = 14, n = 64."""
    solver = SolverConfig(resolution=64, dt=0.002, t_end=t_end, viscosity=ViscosityModel.constant(0.05),
                          forcing=ForcingSpec.kolmogorov(14.0, 4), initial=InitialSpec(amplitude=1.0, k_max=8),
                          sample_stride=50, seed=3)
    return ExperimentConfig(solver=solver, projection=ProjectionSpec(parameter=parameter),
                            twin=TwinSpec(sigma=0.5, perturbation_amplitude=0.1, perturbation_wavevector=(4, 1)))


@pytest.fixture(scope='module')
def laminar_twin():
    return twin_run(twin_config())


def test_config_from_file(tmp_path):
    path = tmp_path / 'twin.toml'
    path.write_text(TOML, encoding='utf-8')
    config = ExperimentConfig.from_file(path)
    assert config.seed == 5
    assert config.projection.kind is ProjectionKind.MODAL and config.projection.parameter == 3
    assert config.twin.mode is TwinMode.SLAVING and config.twin.perturbation_wavevector == (4, 1)
    assert config.solver == twin_config(t_end=2.0).solver
    assert ExperimentConfig.from_dict(config.to_dict()) == config


def test_config_errors():
    data = twin_config(t_end=2.0).to_dict()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**data, 'projection': {'kind': 'modal', 'radius': 3}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**data, 'projection': {'kind': 'modal', 'parameter': 'half'}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**data, 'twin': {'mode': 'mirroring'}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**data, 'epsilon_h': 0.0})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**data, 'twin': {'sigma': -1.0}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file('missing.toml')


def test_twin_determined(laminar_twin):
    report = laminar_twin
    assert report.verdict is TwinVerdict.DETERMINED and report.determined
    assert report.n_functionals == 28
    assert report.projection_held
    assert report.trailing_diff < 1e-6
    assert np.all(report.projected_diff == 0.0)
    assert report.h_diff[0] > 1e-3
    assert report.time[-1] == pytest.approx(60.0)
    frame = report.frame()
    assert isinstance(frame, pd.DataFrame)
    assert list(frame.columns) == ['time', 'h_diff', 'projected_diff', 'alpha', 'beta', 'y']
    assert np.allclose(frame['y'], frame['h_diff'] ** 2)
    assert isinstance(next(report.frame(use_dataframe=False)), TwinSample)
    assert report.to_dict()['verdict'] == 'determined'


def test_twin_with_empty_projection_is_not_determined():
    report = twin_run(twin_config(t_end=2.0, parameter='empty'))
    assert report.verdict is TwinVerdict.NOT_DETERMINED
    assert report.n_functionals == 0
    assert report.trailing_diff > 1e-3


def test_twin_series_satisfy_gronwall_hypotheses(laminar_twin):
    report = laminar_twin
    verdict = gronwall_generalized_check(report.alpha, report.beta, report.y, 5.0, report.time)
    assert verdict.verdict is GronwallOutcome.CONSISTENT
    assert verdict.hypotheses_met and verdict.m > 0.0
    assert verdict.beta_plus_limit <= 1e-6 and verdict.y_limit <= 1e-12


def test_twin_series_without_projection_fail_gronwall_hypotheses():
    report = twin_run(twin_config(t_end=10.0, parameter='empty'))
    assert np.all(report.alpha < 0.0)
    verdict = gronwall_generalized_check(report.alpha, report.beta, report.y, 2.0, report.time)
    assert verdict.verdict is GronwallOutcome.HYPOTHESES_NOT_MET
    assert not verdict.hypotheses_met and verdict.m < 0.0


@pytest.mark.slow
def test_twin_separates_projections_in_chaotic_regime():
    force = vdual_norm(ForcingSpec.kolmogorov(14.0, 4).at(64, 0.0))
    empty = twin_run(chaotic_config('empty'))
    assert empty.n_functionals == 0
    assert empty.verdict is TwinVerdict.NOT_DETERMINED and empty.trailing_diff > 1e-2
    coarse = twin_run(chaotic_config(1))
    assert coarse.n_functionals == 4
    assert coarse.verdict is TwinVerdict.NOT_DETERMINED and coarse.trailing_diff > coarse.epsilon_h
    fine = twin_run(chaotic_config(10))
    assert fine.n_functionals == 316
    assert fine.verdict is TwinVerdict.DETERMINED and fine.trailing_diff < 1e-6
    expected = n_bound_from_limits(ViscosityModel.constant(0.05), fine.c1, fine.gamma, force)
    assert fine.n_bound == expected
    assert fine.n_functionals < fine.n_bound


def test_twin_slaving_rejects_volume_projection():
    with pytest.raises(ConfigError):
        twin_run(twin_config(t_end=2.0, kind='volume', parameter=4))


def test_twin_rejects_foreign_certificate():
    certificate = CertificationArtifact(kind='volume', family=(2, 4), n_values=(8, 32), ratios=(0.5, 0.25),
                                        c1_fitted=1.0, gamma=0.5, fit_residual=0.0, c1_analytic=1.0, c1=1.0,
                                        sample_count=50, resolution=32, seed=0)
    with pytest.raises(ConfigError):
        twin_run(twin_config(t_end=2.0), certificate)


@pytest.mark.slow
def test_twin_nudging_volume_projection():
    config = twin_config(kind='volume', parameter=8)
    config = replace(config, twin=replace(config.twin, mode=TwinMode.NUDGING))
    report = twin_run(config)
    assert report.mu == pytest.approx(2.0)
    assert report.n_functionals == 128
    assert report.determined


def test_cutoff_sweep():
    reports = cutoff_sweep(twin_config(t_end=1.0), [1, 3])
    assert sorted(reports) == [1, 3]
    assert reports[1].n_functionals == 4 and reports[3].n_functionals == 28


def test_estimate_suite():
    config = ExperimentConfig(solver=laminar_config())
    record, reports = estimate_suite(config)
    assert len(record) == 126
    assert len(reports) == 5
    assert all(report.satisfied for report in reports)
    frame = suite_frame(reports)
    assert list(frame['estimate']) == ['energy1', 'energy2', 'time-energy1', 'time-energy3', 'energy2-time', 'all']
    assert bool(frame['satisfied'].iloc[-1])


def test_certification_round_trip(tmp_path):
    config = ExperimentConfig(solver=laminar_config(), projection=ProjectionSpec(family=(1, 2, 4), samples=50))
    with Session(out_dir=tmp_path, seed=0) as collector:
        artifact = certify_projection(config, collector)
    path = tmp_path / 'certificate.json'
    assert collector.written == [path]
    loaded = load_certification(path)
    assert loaded == artifact
    assert loaded.c1 >= loaded.c1_analytic and loaded.gamma > 0.0


def test_load_certification_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_certification(tmp_path / 'absent.json')
    broken = tmp_path / 'broken.json'
    broken.write_text('{"kind": ', encoding='utf-8')
    with pytest.raises(ConfigError):
        load_certification(broken)
    partial = tmp_path / 'partial.json'
    partial.write_text('{"kind": "modal", "gamma": 0.5}', encoding='utf-8')
    with pytest.raises(ConfigError):
        load_certification(partial)


if __name__ == '__main__':
    pytest.main()

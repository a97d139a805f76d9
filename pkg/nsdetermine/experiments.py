"""
Эксперименты: пара решений с навязанным условием на проекции, набор
априорных оценок и сертификация констант аппроксимации.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from nsdetermine.estimates import applicable_estimates, n_bound_from_limits, verify_apriori
from nsdetermine.fields import SpectralField, compute_norms, project_coeffs, stokes_lambda1, vdual_norm
from nsdetermine.models import CertificationArtifact, EstimateReport, TrajectoryRecord, TwinReport
from nsdetermine.operators import gradnu_gradu
from nsdetermine.projections import (ProjectionOperator, analytic_constants, certify, make_projection,
                                     modal_projection, projected_norm, volume_projection)
from nsdetermine.session import Collector, load_config
from nsdetermine.solver import SolverConfig, Stepper, integrate
from nsdetermine.utils import (ConfigError, InitialKind, ProjectionKind, TwinMode, TwinVerdict, enum_value, json,
                               pd)

logger = logging.getLogger(__name__)

TRAILING_FRACTION = 0.1
NUDGING_FACTOR = 10.0


def _check_keys(section: str, data: dict, cls: type) -> None:
    allowed = {item.name for item in fields(cls)}
    if unknown := set(data) - allowed:
        raise ConfigError(f"{section}: unknown keys {sorted(unknown)}")


@dataclass(frozen=True)
class ProjectionSpec:
    """
    Секция `[projection]`.

    Attributes
    ----------
    kind : ProjectionKind
        Семейство.
    parameter : int | str
        K_cut или M; "full" и "empty" - все моды или ни одной.
    family : tuple[int, ...]
        Параметры для сертификации.
    samples : int
        Число случайных полей при сертификации.
    certificate : str
        Путь к сохраненному сертификату (пустая строка - не задан).
    """
    kind: ProjectionKind = ProjectionKind.MODAL
    parameter: Union[int, str] = 3
    family: Tuple[int, ...] = (2, 4, 8, 16)
    samples: int = 100
    certificate: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'kind', enum_value(ProjectionKind, self.kind, 'projection.kind'))
        object.__setattr__(self, 'family', tuple(int(item) for item in self.family))
        if isinstance(self.parameter, str) and self.parameter not in ('full', 'empty'):
            raise ConfigError(f"projection.parameter must be an integer, `full` or `empty`, got {self.parameter}")

    def build(self, resolution: int) -> ProjectionOperator:
        return make_projection(self.kind, self.parameter, resolution)

    def to_dict(self) -> dict:
        return dict(kind=self.kind.value, parameter=self.parameter, family=list(self.family), samples=self.samples,
                    certificate=self.certificate)


@dataclass(frozen=True)
class TwinSpec:
    """
    Секция `[twin]`.

    Attributes
    ----------
    mode : TwinMode
        Навязывание условия на проекции (slaving) или релаксация (nudging).
    mu : float
        Коэффициент релаксации, 0 - по умолчанию 10·ν̲·λ₁.
    sigma : float
        Скорость сходимости g → f.
    perturbation_amplitude : float
        Амплитуда возмущения силы d.
    perturbation_wavevector : tuple[int, int]
        Волновой вектор возмущения.
    seed_offset : int
        Сдвиг зерна начальных данных второго решения.
    """
    mode: TwinMode = TwinMode.SLAVING
    mu: float = 0.0
    sigma: float = 0.5
    perturbation_amplitude: float = 0.1
    perturbation_wavevector: Tuple[int, int] = (4, 1)
    seed_offset: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'mode', enum_value(TwinMode, self.mode, 'twin.mode'))
        object.__setattr__(self, 'perturbation_wavevector', tuple(int(k) for k in self.perturbation_wavevector))

    def to_dict(self) -> dict:
        return dict(mode=self.mode.value, mu=self.mu, sigma=self.sigma,
                    perturbation_amplitude=self.perturbation_amplitude,
                    perturbation_wavevector=list(self.perturbation_wavevector), seed_offset=self.seed_offset)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Конфигурация эксперимента.

    Attributes
    ----------
    solver : SolverConfig
        Конфигурация расчета (в том числе зерно).
    projection : ProjectionSpec
        Проектор.
    twin : TwinSpec
        Параметры пары решений.
    epsilon_h : float
        Порог сходимости ε_H.
    """
    solver: SolverConfig
    projection: ProjectionSpec = field(default_factory=ProjectionSpec)
    twin: TwinSpec = field(default_factory=TwinSpec)
    epsilon_h: float = 1e-6

    @property
    def seed(self) -> int:
        return self.solver.seed

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        """
        Конфигурация из словаря (разобранного TOML).

        Raises
        ------
        ConfigError
            При неизвестных ключах или некорректных значениях.
        """
        data = dict(data)
        projection = data.pop('projection', {})
        twin = data.pop('twin', {})
        epsilon_h = data.pop('epsilon_h', 1e-6)
        _check_keys('projection', projection, ProjectionSpec)
        _check_keys('twin', twin, TwinSpec)
        config = cls(solver=SolverConfig.from_dict(data), projection=ProjectionSpec(**projection),
                     twin=TwinSpec(**twin), epsilon_h=float(epsilon_h))
        return config.validate()

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> ExperimentConfig:
        return cls.from_dict(load_config(path))

    def validate(self) -> ExperimentConfig:
        if not self.epsilon_h > 0.0:
            raise ConfigError(f"epsilon_h must be positive, got {self.epsilon_h}")
        if self.twin.mu < 0.0:
            raise ConfigError(f"twin.mu must be positive (0 selects the default), got {self.twin.mu}")
        if self.twin.sigma < 0.0:
            raise ConfigError(f"twin.sigma must be non-negative, got {self.twin.sigma}")
        return self

    def to_dict(self) -> dict:
        data = self.solver.to_dict()
        data.update(projection=self.projection.to_dict(), twin=self.twin.to_dict(), epsilon_h=self.epsilon_h)
        return data


def load_certification(path: Union[str, Path]) -> CertificationArtifact:
    """
    Загрузка сертификата констант.

    Raises
    ------
    ConfigError
        Если файл не читается или не является сертификатом.
    """
    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
    except OSError as exc:
        raise ConfigError(f"Cannot read certificate `{path}`: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Certificate `{path}` is not valid JSON: {exc}") from None
    return CertificationArtifact.from_dict(data)


def _constants(operator: ProjectionOperator, certificate: Optional[CertificationArtifact]) -> Tuple[float, float]:
    if certificate is not None:
        if certificate.kind is not operator.kind:
            raise ConfigError(f"Certificate is for {certificate.kind.value} projections, not {operator.kind.value}")
        return certificate.c1, certificate.gamma
    if operator.is_full or operator.is_empty:
        reference = modal_projection(1) if operator.kind is ProjectionKind.MODAL else volume_projection(2)
        return analytic_constants(reference, 0.5), 0.5
    return analytic_constants(operator, 0.5), 0.5


def _second_initial(config: ExperimentConfig, first: SpectralField) -> SpectralField:
    solver = config.solver
    seed = solver.seed + config.twin.seed_offset
    if solver.initial.kind is InitialKind.RANDOM:
        return solver.initial.build(solver.resolution, seed)
    scale = max(compute_norms(first).h_norm, solver.initial.amplitude, 1e-3)
    return first + SpectralField.random(solver.resolution, seed, k_max=solver.resolution / 6, amplitude=0.1 * scale)


def twin_run(config: ExperimentConfig, certificate: CertificationArtifact = None) -> TwinReport:
    """
    Две траектории: u под силой f и v под силой g = f + e^{−σt}·d с разными начальными данными.

    Условие на проекции навязывается либо заменой R_N v := R_N u после
    каждого шага (только для усечения), либо релаксацией −μ·P(R_N(v − u))
    в правой части для v.

    Parameters
    ----------
    config : ExperimentConfig
        Конфигурация.
    certificate : CertificationArtifact, optional
        Сертификат (C1, γ), по умолчанию из `projection.certificate` или аналитическая оценка.

    Returns
    -------
    return : TwinReport
        Ряды ‖u − v‖_H, ‖R_N(u − v)‖, α, β, y и вердикт.

    Raises
    ------
    ConfigError
        Если замена запрошена для средних по ячейкам.
    BlowUpError
        При потере устойчивости любого из решений.
    """
    config = config.validate()
    solver, twin = config.solver, config.twin
    n = solver.resolution
    operator = config.projection.build(n)
    if twin.mode is TwinMode.SLAVING and operator.kind is ProjectionKind.VOLUME:
        raise ConfigError("Slaving needs an orthogonal projection onto V; use twin.mode = \"nudging\" "
                          "for volume projections")
    if certificate is None and config.projection.certificate:
        certificate = load_certification(config.projection.certificate)
    c1, gamma = _constants(operator, certificate)

    first = solver.initial.build(n, solver.seed)
    second = _second_initial(config, first)
    perturbed = replace(solver, forcing=solver.forcing.perturbed(twin.perturbation_amplitude,
                                                                 twin.perturbation_wavevector, twin.sigma))
    u_stepper, v_stepper = Stepper(solver, first), Stepper(perturbed, second)
    nu_lower = u_stepper.nu_lower
    mu = twin.mu or NUDGING_FACTOR * nu_lower * stokes_lambda1()
    mask = operator.mask(n) if twin.mode is TwinMode.SLAVING else None
    scale = operator.n_functionals ** (2.0 * gamma)
    logger.info("Twin run: %s projection, N=%d, mode=%s, mu=%g", operator.kind.value, operator.n_functionals,
                twin.mode.value, mu)

    def _slave() -> None:
        v_stepper.overwrite(SpectralField.trusted(np.where(mask, u_stepper.state.coeffs, v_stepper.state.coeffs)))

    series = {name: [] for name in ('time', 'h_diff', 'projected_diff', 'alpha', 'beta', 'y', 'f_vdual', 'gradnu')}

    def _sample() -> None:
        t = u_stepper.t
        diff = u_stepper.state - v_stepper.state
        h_diff = compute_norms(diff).h_norm
        projected = projected_norm(operator, diff)
        v_norm = compute_norms(u_stepper.state).v_norm
        forcing_gap = vdual_norm(SpectralField.trusted(u_stepper.forcing(t) - v_stepper.forcing(t), True))
        series['time'].append(t)
        series['h_diff'].append(h_diff)
        series['projected_diff'].append(projected)
        series['y'].append(h_diff ** 2)
        series['alpha'].append(nu_lower * scale / (2.0 * c1 ** 2) - 2.0 / nu_lower * v_norm ** 2)
        series['beta'].append(2.0 / nu_lower * forcing_gap ** 2 + nu_lower * scale / c1 ** 2 * projected ** 2)
        series['f_vdual'].append(vdual_norm(SpectralField.trusted(u_stepper.forcing(t), True)))
        if u_stepper.nu_field is not None:
            series['gradnu'].append(compute_norms(gradnu_gradu(u_stepper.nu_field, u_stepper.state)).vdual_norm)
        else:
            series['gradnu'].append(0.0)

    if mask is not None:
        _slave()
    _sample()
    while u_stepper.steps < solver.n_steps:
        extra = None
        if twin.mode is TwinMode.NUDGING:
            gap = operator.apply_coeffs(v_stepper.state.coeffs - u_stepper.state.coeffs)
            extra = -mu * project_coeffs(gap)
        u_stepper.advance()
        v_stepper.advance(extra)
        if mask is not None:
            _slave()
        if u_stepper.steps % solver.sample_stride == 0 or u_stepper.steps == solver.n_steps:
            u_stepper.check_cfl()
            v_stepper.check_cfl()
            _sample()

    time = np.asarray(series['time'])
    tail = time >= time[-1] - TRAILING_FRACTION * (time[-1] - time[0])
    trailing_diff = float(np.max(np.asarray(series['h_diff'])[tail]))
    trailing_projected = float(np.max(np.asarray(series['projected_diff'])[tail]))
    projection_held = trailing_projected < config.epsilon_h
    determined = trailing_diff < config.epsilon_h and projection_held
    half = time >= time[-1] - 0.5 * (time[-1] - time[0])
    bound = n_bound_from_limits(solver.viscosity, c1, gamma, float(np.max(np.asarray(series['f_vdual'])[half])),
                                float(np.max(np.asarray(series['gradnu'])[half])))
    report = TwinReport(time=time, h_diff=series['h_diff'], projected_diff=series['projected_diff'],
                        alpha=series['alpha'], beta=series['beta'], y=series['y'], mode=twin.mode,
                        n_functionals=operator.n_functionals, n_bound=bound, mu=mu, c1=c1, gamma=gamma,
                        epsilon_h=config.epsilon_h, trailing_diff=trailing_diff, projection_held=projection_held,
                        verdict=TwinVerdict.DETERMINED if determined else TwinVerdict.NOT_DETERMINED,
                        config=config.to_dict())
    logger.info("Twin verdict: %s (trailing |u-v|_H = %.3g, N = %d, n_bound = %d)", report.verdict.value,
                trailing_diff, operator.n_functionals, bound)
    return report


def cutoff_sweep(config: ExperimentConfig, cutoffs: Sequence[int]) -> Dict[int, TwinReport]:
    """Пары решений для нескольких K_cut (модальные проекторы)."""
    reports = {}
    for k_cut in cutoffs:
        projection = replace(config.projection, kind=ProjectionKind.MODAL, parameter=int(k_cut))
        reports[int(k_cut)] = twin_run(replace(config, projection=projection))
    return reports


def estimate_suite(config: ExperimentConfig) -> Tuple[TrajectoryRecord, List[EstimateReport]]:
    """
    Расчет траектории и проверка всех оценок, применимых к модели вязкости.

    Returns
    -------
    return : tuple[TrajectoryRecord, list[EstimateReport]]
        Запись и отчеты по оценкам.

    Raises
    ------
    InsufficientHorizonError
        Если горизонт короче 10 времен диссипации.
    """
    record = integrate(config.solver)
    model = config.solver.viscosity
    reports = [verify_apriori(record, model, which) for which in applicable_estimates(model)]
    if model.is_time_varying:
        average = float(trapezoid(record.inv_nu_dissipation, record.time) / record.span)
        logger.info("Diagnostic time average of |u|_V^2 / nu: %.6g", average)
    return record, reports


def suite_frame(reports: Sequence[EstimateReport]) -> pd.DataFrame:
    """Одна строка на оценку и итоговая строка `all`."""
    rows = [report.to_dict() for report in reports]
    for row in rows:
        row['window'] = f"{row['window'][0]:.17g}:{row['window'][1]:.17g}"
    frame = pd.DataFrame(rows)
    summary = {'estimate': 'all', 'satisfied': all(report.satisfied for report in reports)}
    return pd.concat([frame, pd.DataFrame([summary])], ignore_index=True)


def certify_projection(config: ExperimentConfig, collector: Collector = None) -> CertificationArtifact:
    """
    Сертификация (C1, γ) для семейства из секции `[projection]`.

    Сертификат сохраняется в `certificate.json`, если передан `collector`.
    """
    projection = config.projection
    artifact = certify(projection.kind, projection.family, projection.samples, config.seed,
                       config.solver.resolution)
    if collector is not None:
        collector.write_json('certificate.json', artifact)
    return artifact

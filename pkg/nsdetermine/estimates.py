"""
Число Грасгофа, достаточное число функционалов N и проверка априорных оценок на траекториях.

lim sup по бесконечному горизонту заменяется максимумом по второй половине
записи, средние по времени - максимумом средних по окнам длины T с
началом во второй половине записи.
"""
from __future__ import annotations

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from nsdetermine.fields import ScalarField, SpectralField, compute_norms, poincare_constant, stokes_lambda1
from nsdetermine.models import CoercivityReport, EstimateReport, TrajectoryRecord
from nsdetermine.operators import a_nu
from nsdetermine.utils import (EstimateId, InsufficientHorizonError, PreconditionError, ViscosityKind,
                               enum_value)
from nsdetermine.viscosity import ViscosityModel, bounds, kbar

logger = logging.getLogger(__name__)

HORIZON_DISSIPATION_TIMES = 10.0
TOLERANCE_FLOOR = 1e-8
TOLERANCE_FACTOR = 5.0

_VALID_KINDS = {
    EstimateId.ENERGY1: {ViscosityKind.CONSTANT},
    EstimateId.ENERGY2: {ViscosityKind.CONSTANT},
    EstimateId.TIME_ENERGY1: {ViscosityKind.CONSTANT, ViscosityKind.TIME_VARYING},
    EstimateId.TIME_ENERGY3: {ViscosityKind.CONSTANT, ViscosityKind.TIME_VARYING},
    EstimateId.ENERGY2_TIME: {ViscosityKind.CONSTANT, ViscosityKind.TIME_VARYING},
    EstimateId.ENERGY1_SPACE: {ViscosityKind.CONSTANT, ViscosityKind.SPACE_VARYING},
    EstimateId.ENERGY2_SPACE: {ViscosityKind.CONSTANT, ViscosityKind.SPACE_VARYING},
}
_TIME_AVERAGED = {EstimateId.ENERGY2, EstimateId.TIME_ENERGY3, EstimateId.ENERGY2_TIME, EstimateId.ENERGY2_SPACE}


def applicable_estimates(model: ViscosityModel) -> list:
    """
    Идентификаторы оценок для набора проверок.

    Для постоянной вязкости оценки для вязкости, зависящей от координат,
    не включаются (они допустимы в `verify_apriori`, но грубее).
    """
    return [estimate for estimate, kinds in _VALID_KINDS.items() if model.kind in kinds and
            not (model.kind is ViscosityKind.CONSTANT and ViscosityKind.SPACE_VARYING in kinds)]


def dissipation_time(nu_lower: float, c_rho: float = None) -> float:
    """Время диссипации c_ρ²/ν̲."""
    c_rho = poincare_constant() if c_rho is None else c_rho
    return c_rho ** 2 / nu_lower


def trailing_window(record: TrajectoryRecord, nu_lower: float = None, c_rho: float = None) -> Tuple[float, float]:
    """
    Вторая половина записи.

    Parameters
    ----------
    record : TrajectoryRecord
        Запись.
    nu_lower : float, optional
        Если задано, запись обязана покрывать 10 времен диссипации.
    c_rho : float, optional
        Константа Пуанкаре.

    Returns
    -------
    return : tuple[float, float]
        Окно (t₀, t₁).

    Raises
    ------
    InsufficientHorizonError
        Если окно пустое или запись короче 10 времен диссипации.
    """
    if len(record) < 2:
        raise InsufficientHorizonError("Record has fewer than two samples, the window is empty")
    if nu_lower is not None:
        required = HORIZON_DISSIPATION_TIMES * dissipation_time(nu_lower, c_rho)
        if record.span < required:
            raise InsufficientHorizonError(f"Record spans {record.span:.6g}, need {required:.6g} "
                                           f"({HORIZON_DISSIPATION_TIMES:g} dissipation times)")
    end = float(record.time[-1])
    return end - 0.5 * record.span, end


def limsup(time: np.ndarray, values: np.ndarray, window: Tuple[float, float]) -> float:
    """Максимум ряда на окне."""
    selected = values[(time >= window[0]) & (time <= window[1])]
    if selected.size == 0:
        raise InsufficientHorizonError(f"No samples inside window {window}")
    return float(selected.max())


def window_averages(time: np.ndarray, values: np.ndarray, length: float, first_start: float) -> np.ndarray:
    """
    Средние (1/T)∫_s^{s+T} по окнам с началами s ≥ `first_start` в узлах записи, s + T ≤ t_end.

    Raises
    ------
    InsufficientHorizonError
        Если ни одно окно не помещается в запись.
    """
    time = np.asarray(time, dtype=float)
    cumulative = cumulative_trapezoid(values, time, initial=0.0)
    starts = time[(time >= first_start) & (time + length <= time[-1] * (1.0 + 1e-12))]
    if starts.size == 0:
        raise InsufficientHorizonError(f"No window of length {length:.6g} starts after t = {first_start:.6g}")
    ends = np.minimum(starts + length, time[-1])
    return (np.interp(ends, time, cumulative) - np.interp(starts, time, cumulative)) / length


def tolerance(record: TrajectoryRecord, bound: float) -> float:
    """max(1e-8, 5·ρ·|bound|), ρ - наибольшая относительная невязка энергетического баланса."""
    rho = float(np.abs(record.residual).max(initial=0.0))
    return max(TOLERANCE_FLOOR, TOLERANCE_FACTOR * rho * abs(bound))


def forcing_limsup(record: TrajectoryRecord, window: Tuple[float, float] = None) -> float:
    """F = lim sup √λ₁‖f‖_{V′}."""
    window = trailing_window(record) if window is None else window
    return np.sqrt(stokes_lambda1()) * limsup(record.time, record.f_vdual, window)


def grashof(record: TrajectoryRecord, nu_lower: float = None) -> float:
    """
    Число Грасгофа Gr = F / (λ₁ ν̲²).

    Parameters
    ----------
    record : TrajectoryRecord
        Запись траектории.
    nu_lower : float, optional
        ν̲, по умолчанию из записи.

    Returns
    -------
    return : float
        Gr.

    Raises
    ------
    InsufficientHorizonError
        Если окно пустое.
    """
    nu_lower = record.nu_lower if nu_lower is None else float(nu_lower)
    if not nu_lower > 0.0:
        raise PreconditionError(f"nu_lower must be positive, got {nu_lower}")
    return forcing_limsup(record) / (stokes_lambda1() * nu_lower ** 2)


def _kbar(model: ViscosityModel, c_rho: float) -> float:
    if model.kind is ViscosityKind.CONSTANT:
        return c_rho ** 2 / model.nu0
    return kbar(model, c_rho)


def _gradnu_limsup(record: TrajectoryRecord, window: Tuple[float, float]) -> float:
    return limsup(record.time, record.gradnu_vdual, window)


def n_bound(record: TrajectoryRecord,
            model: ViscosityModel,
            c1: float,
            gamma: float,
            c_rho: float = None) -> int:
    """
    Наименьшее N, при котором N^{2γ} > X.

    Постоянная вязкость: X = 8C1²(F/ν²)². Вязкость, зависящая от времени:
    X = (4C1²/ν̲²)·((K̄ν̲ + c_ρ²)/(ν̲²c_ρ²))F² (производное расширение, сводится к
    постоянному случаю при постоянном профиле). Вязкость, зависящая от координат:
    X = (4C1²/ν̲²)·(F² + G²)/ν̲², G = lim sup ‖P(∇ν·∇u)‖_{V′} (условно, при коэрцитивности).

    Parameters
    ----------
    record : TrajectoryRecord
        Запись, по которой берется lim sup ‖f‖_{V′}.
    model : ViscosityModel
        Модель вязкости.
    c1, gamma : float
        Сертифицированные константы аппроксимации.
    c_rho : float, optional
        Константа Пуанкаре.

    Returns
    -------
    return : int
        N.

    Raises
    ------
    PreconditionError
        Если константы не сертифицированы (не положительны).
    """
    window = trailing_window(record)
    return n_bound_from_limits(model, c1, gamma, forcing_limsup(record, window), _gradnu_limsup(record, window),
                               c_rho)


def n_bound_from_limits(model: ViscosityModel,
                        c1: float,
                        gamma: float,
                        force: float,
                        gradnu: float = 0.0,
                        c_rho: float = None) -> int:
    """`n_bound` по уже измеренным F = lim sup ‖f‖_{V′} и G = lim sup ‖P(∇ν·∇u)‖_{V′}."""
    if not (c1 > 0.0 and gamma > 0.0):
        raise PreconditionError(f"Uncertified constants C1={c1}, gamma={gamma}")
    c_rho = poincare_constant() if c_rho is None else c_rho
    nu_lower, _ = bounds(model)
    c2 = c_rho ** 2
    if model.kind is ViscosityKind.CONSTANT:
        threshold = 8.0 * c1 ** 2 * (force / model.nu0 ** 2) ** 2
    elif model.kind is ViscosityKind.TIME_VARYING:
        energy = (_kbar(model, c_rho) * nu_lower + c2) / (nu_lower ** 2 * c2) * force ** 2
        threshold = 4.0 * c1 ** 2 / nu_lower ** 2 * energy
    else:
        energy = (force ** 2 + gradnu ** 2) / nu_lower ** 2
        threshold = 4.0 * c1 ** 2 / nu_lower ** 2 * energy
    return int(np.floor(threshold ** (1.0 / (2.0 * gamma)))) + 1


def verify_apriori(record: TrajectoryRecord,
                   model: ViscosityModel,
                   which,
                   averaging_time: float = None,
                   c_rho: float = None) -> EstimateReport:
    """
    Проверка одной априорной оценки на записи траектории.

    Parameters
    ----------
    record : TrajectoryRecord
        Запись, полученная с той же моделью вязкости.
    model : ViscosityModel
        Модель вязкости.
    which : EstimateId | str
        Идентификатор оценки.
    averaging_time : float, optional
        T для оценок, усредненных по времени; по умолчанию c_ρ²/ν̲.
    c_rho : float, optional
        Константа Пуанкаре.

    Returns
    -------
    return : EstimateReport
        Измеренная левая часть, правая часть, запас и вердикт.

    Raises
    ------
    PreconditionError
        Если модель не подходит для оценки или T < c_ρ²/ν̲.
    InsufficientHorizonError
        Если запись короче 10 времен диссипации.
    """
    which = enum_value(EstimateId, which, 'estimate')
    if model.kind not in _VALID_KINDS[which]:
        raise PreconditionError(f"Estimate {which.value} does not apply to {model.kind.value} viscosity")
    recorded_kind = record.config.get('viscosity', {}).get('kind', model.kind.value)
    if recorded_kind != model.kind.value:
        raise PreconditionError(f"Record was produced with {recorded_kind} viscosity, not {model.kind.value}")
    c_rho = poincare_constant() if c_rho is None else c_rho
    c2 = c_rho ** 2
    nu_lower, _ = bounds(model)
    window = trailing_window(record, nu_lower, c_rho)
    force2 = forcing_limsup(record, window) ** 2
    threshold = dissipation_time(nu_lower, c_rho)
    if which in _TIME_AVERAGED:
        averaging_time = threshold if averaging_time is None else float(averaging_time)
        if averaging_time < threshold * (1.0 - 1e-12):
            raise PreconditionError(f"T = {averaging_time:.6g} is below the threshold c^2/nu = {threshold:.6g}")
    else:
        averaging_time = None

    note = ''
    coercivity_satisfied = coercivity_margin = None
    if which is EstimateId.ENERGY1:
        bound = c2 / model.nu0 ** 2 * force2
    elif which is EstimateId.ENERGY2:
        bound = 2.0 / model.nu0 ** 2 * force2
    elif which is EstimateId.TIME_ENERGY1:
        bound = _kbar(model, c_rho) / nu_lower * force2
    elif which is EstimateId.TIME_ENERGY3:
        bound = (_kbar(model, c_rho) * nu_lower + c2) / (nu_lower ** 2 * c2) * force2
    elif which is EstimateId.ENERGY2_TIME:
        bound = (_kbar(model, c_rho) * nu_lower + c2) / (nu_lower * c2) * force2
    else:
        gradnu2 = _gradnu_limsup(record, window) ** 2
        if which is EstimateId.ENERGY1_SPACE:
            bound = c2 / (2.0 * nu_lower ** 2) * (force2 + gradnu2)
        else:
            bound = (force2 + gradnu2) / nu_lower ** 2
        margins = record.coercivity_margin[record.time >= window[0]]
        coercivity_margin = float(margins.min())
        coercivity_satisfied = bool(coercivity_margin >= -TOLERANCE_FLOOR)
        note = 'conditional on coercivity' + ('' if coercivity_satisfied else ' (violated)')

    if which in (EstimateId.ENERGY1, EstimateId.TIME_ENERGY1, EstimateId.ENERGY1_SPACE):
        measured = limsup(record.time, record.h_norm ** 2, window)
    else:
        series = record.v_norm ** 2
        if which is EstimateId.ENERGY2_TIME:
            series = record.nu * series
        measured = float(window_averages(record.time, series, averaging_time, window[0]).max())

    tol = tolerance(record, bound)
    margin = bound - measured
    report = EstimateReport(estimate=which, measured=measured, bound=bound, margin=margin, tolerance=tol,
                            window=window, satisfied=bool(margin >= -tol), averaging_time=averaging_time,
                            coercivity_satisfied=coercivity_satisfied, coercivity_margin=coercivity_margin,
                            note=note)
    logger.info("Estimate %s: measured %.6g, bound %.6g, %s", which.value, measured, bound,
                'satisfied' if report.satisfied else 'VIOLATED')
    return report


def coercivity_check(nu: ScalarField, u: SpectralField) -> CoercivityReport:
    """
    Измерение a(νu, u) и сравнение с ν̲‖u‖²_V (без утверждения неравенства).

    Example
    -------
    .. code-block:: python

        >>> nu = ScalarField.from_function(32, lambda x, y: 1 + 0.1 * np.sin(x))
        >>> report = coercivity_check(nu, SpectralField.taylor_green(32))
        >>> round(report.margin, 12)
        0.1
    """
    value = a_nu(nu, u, u).value
    lower = nu.lower * compute_norms(u).v_norm ** 2
    margin = value - lower
    satisfied = bool(margin >= -1e-12 * max(abs(value), abs(lower), 1.0))
    if not satisfied:
        logger.warning("Coercivity violated: a(nu u, u) = %.6g < %.6g", value, lower)
    return CoercivityReport(a_nu=value, lower_bound=lower, margin=margin, satisfied=satisfied)


def coercivity_sweep(count: int = 100,
                     seed: int = 0,
                     n: int = 32,
                     max_epsilon: float = 0.9,
                     max_wavenumber: int = 3) -> Tuple[float, np.ndarray]:
    """
    Доля случайных пар ν(x) = 1 + ε sin(k·x + θ), u, для которых a(νu, u) ≥ ν̲‖u‖²_V.

    Returns
    -------
    return : tuple[float, np.ndarray]
        Доля выполненных неравенств и запасы по всем парам.
    """
    rng = np.random.default_rng(seed)
    margins = np.empty(count)
    satisfied = 0
    for i in range(count):
        epsilon = max_epsilon * rng.random()
        kx, ky = rng.integers(0, max_wavenumber + 1, size=2)
        if kx == 0 and ky == 0:
            kx = 1
        phase = 2.0 * np.pi * rng.random()
        nu = ScalarField.from_function(n, lambda x, y: 1.0 + epsilon * np.sin(kx * x + ky * y + phase),
                                       lower=1.0 - epsilon, upper=1.0 + epsilon)
        report = coercivity_check(nu, SpectralField.random(n, rng, k_max=n / 6))
        margins[i] = report.margin
        satisfied += report.satisfied
    fraction = satisfied / count
    logger.info("Coercivity satisfied for %.1f%% of %d pairs", 100.0 * fraction, count)
    return fraction, margins

"""
Определяющие проекторы R_N: спектральное усечение и средние по ячейкам.

Число N - количество вещественных скалярных функционалов: для усечения
это число волновых векторов 0 < |k| ≤ K_cut (с учетом бездивергентности и
сопряженной симметрии), для средних по ячейкам N = 2M².
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from nsdetermine.fields import SpectralField, compute_norms, to_grid, to_spectral, wavenumbers
from nsdetermine.models import ApproxInequalityReport, CertificationArtifact
from nsdetermine.utils import (DegenerateDataError, PreconditionError, ProjectionKind, ResolutionMismatchError,
                               enum_value)

logger = logging.getLogger(__name__)

MIN_SAMPLES = 50
MIN_FAMILY = 4
ANNULUS_WIDTH = 1.05


@dataclass(frozen=True)
class ProjectionOperator:
    """
    Определяющий проектор.

    Attributes
    ----------
    kind : ProjectionKind
        Семейство.
    parameter : int, optional
        K_cut для усечения (None - все разрешенные моды) или M для средних по ячейкам.
    n_functionals : int
        Число функционалов N.
    """
    kind: ProjectionKind
    parameter: Optional[int]
    n_functionals: int

    def __post_init__(self):
        object.__setattr__(self, 'kind', enum_value(ProjectionKind, self.kind, 'projection.kind'))

    @property
    def is_full(self) -> bool:
        return self.kind is ProjectionKind.MODAL and self.parameter is None

    @property
    def is_empty(self) -> bool:
        return self.n_functionals == 0 and not self.is_full

    def mask(self, n: int) -> np.ndarray:
        """Маска сохраняемых мод (только для усечения)."""
        if self.kind is not ProjectionKind.MODAL:
            raise PreconditionError("Only modal projections are spectral masks")
        wn = wavenumbers(n)
        if self.is_full:
            return wn.k2 > 0
        if 3 * self.parameter >= n and self.parameter:
            raise PreconditionError(f"K_cut = {self.parameter} is outside the dealiased band of n = {n}")
        return (wn.k2 > 0) & (wn.k2 <= self.parameter ** 2)

    def check(self, n: int) -> None:
        if self.kind is ProjectionKind.VOLUME and n % self.parameter:
            raise ResolutionMismatchError(f"M = {self.parameter} does not divide n = {n}")
        if self.kind is ProjectionKind.MODAL:
            self.mask(n)

    def apply_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        """Коэффициенты R_N u на сетке поля (для средних - кусочно-постоянная функция в узлах)."""
        n = coeffs.shape[-1]
        self.check(n)
        if self.kind is ProjectionKind.MODAL:
            return coeffs * self.mask(n)
        return to_spectral(_cell_averages(coeffs, self.parameter).to_grid(n))

    def to_dict(self) -> dict:
        return dict(kind=self.kind.value, parameter=self.parameter, n_functionals=self.n_functionals)


@dataclass(frozen=True, eq=False)
class CellAverages:
    """
    Средние по M² ячейкам, кусочно-постоянное представление R_N u.

    Attributes
    ----------
    values : np.ndarray
        Средние компонент, форма (2, M, M).
    """
    values: np.ndarray

    @property
    def cells(self) -> int:
        return self.values.shape[-1]

    def to_grid(self, n: int) -> np.ndarray:
        if n % self.cells:
            raise ResolutionMismatchError(f"M = {self.cells} does not divide n = {n}")
        repeat = n // self.cells
        return np.repeat(np.repeat(self.values, repeat, axis=1), repeat, axis=2)

    def to_field(self, n: int) -> SpectralField:
        """Кусочно-постоянное поле в узлах сетки (не бездивергентное)."""
        return SpectralField(to_spectral(self.to_grid(n)))

    def norm(self) -> float:
        """‖R_N u‖_{L²}."""
        return float(np.sqrt(np.mean(np.sum(self.values ** 2, axis=0))))

    def coarsened(self, cells: int) -> CellAverages:
        if self.cells % cells:
            raise ResolutionMismatchError(f"M = {cells} does not divide {self.cells}")
        block = self.cells // cells
        values = self.values.reshape(2, cells, block, cells, block).mean(axis=(2, 4))
        return CellAverages(values)


def _cell_averages(coeffs: np.ndarray, cells: int) -> CellAverages:
    n = coeffs.shape[-1]
    if n % cells:
        raise ResolutionMismatchError(f"M = {cells} does not divide n = {n}")
    wn = wavenumbers(n)
    h = 2.0 * np.pi / cells
    factor = np.sinc(wn.kx * h / (2.0 * np.pi)) * np.sinc(wn.ky * h / (2.0 * np.pi))
    shifted = coeffs * factor * np.exp(0.5j * (wn.kx + wn.ky) * h)
    step = n // cells
    return CellAverages(to_grid(shifted)[:, ::step, ::step])


def _count_modes(k_cut: float) -> int:
    k = int(np.floor(k_cut))
    kx, ky = np.meshgrid(np.arange(-k, k + 1), np.arange(-k, k + 1), indexing='ij')
    k2 = kx ** 2 + ky ** 2
    return int(np.count_nonzero((k2 > 0) & (k2 <= k_cut ** 2)))


def _tail_radius(k_cut: float) -> float:
    """Наименьший радиус |k| точек решетки, больший K_cut."""
    k = int(np.floor(k_cut)) + 1
    kx, ky = np.meshgrid(np.arange(0, k + 1), np.arange(0, k + 1), indexing='ij')
    k2 = (kx ** 2 + ky ** 2).ravel()
    return float(np.sqrt(k2[k2 > k_cut ** 2].min()))


def modal_projection(k_cut: int, resolution: int = None) -> ProjectionOperator:
    """
    Спектральное усечение: сохраняются û(k) с 0 < |k| ≤ K_cut.

    Parameters
    ----------
    k_cut : int
        Радиус усечения, K_cut ≥ 1.
    resolution : int, optional
        Разрешение для проверки K_cut < n/3.

    Returns
    -------
    return : ProjectionOperator
        Проектор с N = #{k : 0 < |k| ≤ K_cut}.

    Raises
    ------
    PreconditionError
        Если K_cut вне полосы без алиасинга.
    """
    if k_cut < 1:
        raise PreconditionError(f"K_cut must be >= 1, got {k_cut}")
    operator = ProjectionOperator(ProjectionKind.MODAL, int(k_cut), _count_modes(k_cut))
    if resolution is not None:
        operator.check(resolution)
    return operator


def volume_projection(cells: int, resolution: int = None) -> ProjectionOperator:
    """
    Средние по M × M квадратным ячейкам, N = 2M².

    Raises
    ------
    PreconditionError
        Если M < 2.
    ResolutionMismatchError
        Если M не делит разрешение.
    """
    if cells < 2:
        raise PreconditionError(f"M must be >= 2, got {cells}")
    operator = ProjectionOperator(ProjectionKind.VOLUME, int(cells), 2 * int(cells) ** 2)
    if resolution is not None:
        operator.check(resolution)
    return operator


def full_projection(resolution: int) -> ProjectionOperator:
    """Усечение, сохраняющее все разрешенные моды."""
    mask = wavenumbers(resolution).k2 > 0
    return ProjectionOperator(ProjectionKind.MODAL, None, int(np.count_nonzero(mask)))


def empty_projection() -> ProjectionOperator:
    return ProjectionOperator(ProjectionKind.MODAL, 0, 0)


def make_projection(kind: Union[ProjectionKind, str], parameter, resolution: int) -> ProjectionOperator:
    """Проектор по секции конфигурации; `parameter` может быть "full" или "empty"."""
    kind = enum_value(ProjectionKind, kind, 'projection.kind')
    if parameter == 'full':
        return full_projection(resolution)
    if parameter == 'empty':
        return empty_projection()
    if kind is ProjectionKind.MODAL:
        return modal_projection(int(parameter), resolution)
    return volume_projection(int(parameter), resolution)


def apply(operator: ProjectionOperator, u: Union[SpectralField, CellAverages]) -> Union[SpectralField, CellAverages]:
    """
    Применение R_N.

    Parameters
    ----------
    operator : ProjectionOperator
        Проектор.
    u : SpectralField | CellAverages
        Поле или кусочно-постоянное представление (для средних).

    Returns
    -------
    return : SpectralField | CellAverages
        Для усечения поле, для средних по ячейкам `CellAverages`.
    """
    if isinstance(u, CellAverages):
        if operator.kind is not ProjectionKind.VOLUME:
            raise PreconditionError("Cell averages can be projected only by a volume projection")
        return u.coarsened(operator.parameter)
    operator.check(u.n)
    if operator.kind is ProjectionKind.MODAL:
        return SpectralField.trusted(u.coeffs * operator.mask(u.n), u.solenoidal)
    return _cell_averages(u.coeffs, operator.parameter)


def projected_norm(operator: ProjectionOperator, u: SpectralField) -> float:
    """‖R_N u‖_{L²}."""
    projected = apply(operator, u)
    if isinstance(projected, CellAverages):
        return projected.norm()
    return float(np.sqrt(np.sum(np.abs(projected.coeffs) ** 2)))


def error_norm(operator: ProjectionOperator, u: SpectralField) -> float:
    """
    ‖u − R_N u‖_{L²}.

    Для средних по ячейкам используется ортогональность R_N в L²:
    ‖u − R_N u‖² = ‖u‖² − ‖R_N u‖².
    """
    total = float(np.sum(np.abs(u.coeffs) ** 2))
    kept = projected_norm(operator, u) ** 2
    return float(np.sqrt(max(total - kept, 0.0)))


def analytic_constants(operator: ProjectionOperator, gamma: float = 0.5) -> float:
    """
    C1 из аналитической оценки ‖u − R_N u‖ ≤ C1 N^{−γ} ‖u‖_V.

    Для усечения ‖u − R_N u‖ ≤ ‖u‖_V / K_tail, K_tail - наименьший радиус
    решетки больше K_cut; для средних по ячейкам со стороной h действует
    неравенство Пуанкаре в ячейке с константой h/π.
    """
    if operator.n_functionals < 1 or operator.is_full:
        raise PreconditionError("Analytic constants need a nonempty finite projection")
    scale = operator.n_functionals ** gamma
    if operator.kind is ProjectionKind.MODAL:
        return scale / _tail_radius(operator.parameter)
    return scale * (2.0 * np.pi / operator.parameter) / np.pi


def _band_radius(n: int) -> float:
    wn = wavenumbers(n)
    band = wn.dealias & ~wn.nyquist
    return float(np.sqrt(wn.k2[band].max()))


def sample_fields(n: int, count: int, seed, k_max: float = None):
    """
    Случайные поля в тонких кольцах [ρ, 1.05ρ], ρ стратифицировано равномерно по log ρ на [1, k_max].
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    k_max = _band_radius(n) if k_max is None else float(k_max)
    edges = np.exp(np.log(k_max) * (np.arange(count) + rng.random(count)) / count)
    for rho in edges:
        outer = ANNULUS_WIDTH * rho
        field = SpectralField.random(n, rng, k_max=outer, k_min=rho)
        while not np.any(field.coeffs) and outer < 2 * _band_radius(n):
            outer *= ANNULUS_WIDTH
            field = SpectralField.random(n, rng, k_max=outer, k_min=min(rho, k_max))
        if np.any(field.coeffs):
            yield field


def _measure_ratios(kind: ProjectionKind, family: Sequence[int], sample_count: int, seed, resolution: int,
                    k_max: float = None) -> Tuple[list, np.ndarray, np.ndarray]:
    if sample_count < MIN_SAMPLES:
        raise PreconditionError(f"sample_count must be >= {MIN_SAMPLES}, got {sample_count}")
    operators = [make_projection(kind, parameter, resolution) for parameter in family]
    n_values = np.array([operator.n_functionals for operator in operators])
    if len(set(n_values)) < 2:
        raise DegenerateDataError("Family spans a single value of N, the exponent cannot be fitted")
    if len(set(n_values)) < MIN_FAMILY:
        logger.warning("Family spans only %d values of N, fit is weakly constrained", len(set(n_values)))
    ratios = np.zeros(len(operators))
    for field in sample_fields(resolution, sample_count, seed, k_max):
        v_norm = compute_norms(field).v_norm
        for i, operator in enumerate(operators):
            ratios[i] = max(ratios[i], error_norm(operator, field) / v_norm)
    return operators, n_values, ratios


def _fit(n_values: np.ndarray, ratios: np.ndarray) -> Tuple[float, float, float]:
    if np.any(ratios <= 0.0):
        raise DegenerateDataError("Some sampled ratios vanish: fields lie inside the retained band")
    x, y = np.log(n_values), np.log(ratios)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(np.exp(intercept)), float(-slope), residual


def estimate_constants(kind: Union[ProjectionKind, str],
                       family: Sequence[int],
                       sample_count: int,
                       seed: int,
                       resolution: int = 128,
                       k_max: float = None) -> Tuple[float, float, float]:
    """
    Оценка (C1, γ) по случайным полям.

    Для каждого N вычисляется r(N) = max ‖u − R_N u‖ / ‖u‖_V по выборке и
    подгоняется log r = log C1 − γ log N методом наименьших квадратов.

    Parameters
    ----------
    kind : ProjectionKind | str
        Семейство.
    family : Sequence[int]
        Параметры (K_cut или M).
    sample_count : int
        Число полей, не меньше 50.
    seed : int
        Зерно генератора.
    resolution : int
        Разрешение.
    k_max : float, optional
        Верхний радиус колец выборки.

    Returns
    -------
    return : tuple[float, float, float]
        (C1, γ, среднеквадратичная невязка подгонки).

    Raises
    ------
    DegenerateDataError
        Если в семействе одно значение N или r(N) обращается в ноль.
    """
    _, n_values, ratios = _measure_ratios(enum_value(ProjectionKind, kind), family, sample_count, seed,
                                          resolution, k_max)
    return _fit(n_values, ratios)


def certify(kind: Union[ProjectionKind, str],
            family: Sequence[int],
            sample_count: int,
            seed: int,
            resolution: int = 128,
            k_max: float = None) -> CertificationArtifact:
    """
    Сертификат констант: подгонка и аналитическая оценка, C1 = max(подгонка, аналитика).

    Returns
    -------
    return : CertificationArtifact
        Сертификат.
    """
    kind = enum_value(ProjectionKind, kind, 'projection.kind')
    operators, n_values, ratios = _measure_ratios(kind, family, sample_count, seed, resolution, k_max)
    c1_fitted, gamma, residual = _fit(n_values, ratios)
    c1_analytic = max(analytic_constants(operator, gamma) for operator in operators)
    artifact = CertificationArtifact(kind=kind, family=tuple(family), n_values=tuple(n_values),
                                     ratios=tuple(ratios), c1_fitted=c1_fitted, gamma=gamma,
                                     fit_residual=residual, c1_analytic=c1_analytic,
                                     c1=max(c1_fitted, c1_analytic), sample_count=sample_count,
                                     resolution=resolution, seed=seed)
    logger.info("Certified %s family %s: C1=%.6g, gamma=%.4f", kind.value, list(family), artifact.c1, gamma)
    return artifact


def check_approx_inequalities(operator: ProjectionOperator,
                              u: SpectralField,
                              c1: float,
                              gamma: float) -> ApproxInequalityReport:
    """
    Проверка квадратичных следствий аппроксимационного неравенства.

    ‖u‖² ≤ 2C1²N^{−2γ}‖u‖²_V + 2‖R_N u‖² и
    ‖u‖²_V ≥ [N^{2γ}/(2C1²)]‖u‖² − [N^{2γ}/C1²]‖R_N u‖².

    Raises
    ------
    PreconditionError
        Если константы не положительны или N = 0.
    """
    if not (c1 > 0.0 and gamma > 0.0):
        raise PreconditionError(f"Uncertified constants C1={c1}, gamma={gamma}")
    if operator.n_functionals < 1:
        raise PreconditionError("Approximation inequalities need N >= 1")
    norms = compute_norms(u)
    h2, v2 = norms.h_norm ** 2, norms.v_norm ** 2
    p2 = projected_norm(operator, u) ** 2
    scale = operator.n_functionals ** (2.0 * gamma)
    first_rhs = 2.0 * c1 ** 2 / scale * v2 + 2.0 * p2
    second_rhs = scale / (2.0 * c1 ** 2) * h2 - scale / c1 ** 2 * p2
    first_margin, second_margin = first_rhs - h2, v2 - second_rhs
    tolerance = 1e-12 * max(h2, v2, 1e-300)
    return ApproxInequalityReport(first_lhs=h2, first_rhs=first_rhs, first_margin=first_margin,
                                  second_lhs=v2, second_rhs=second_rhs, second_margin=second_margin,
                                  satisfied=bool(first_margin >= -tolerance and second_margin >= -tolerance))

"""
Спектральное представление полей на периодическом квадрате [0, 2π)².

Коэффициенты нормированы так, что ‖u‖²_H = Σ_k |û(k)|², то есть
‖u‖²_H = |Ω|⁻¹∫|u|². Массив коэффициентов имеет форму (2, n, n) и
индексируется как [компонента, kx, ky] в порядке `fftfreq`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import fft

from nsdetermine.models.common import NormReport
from nsdetermine.utils import PreconditionError, ResolutionMismatchError, ViscosityModelError

logger = logging.getLogger(__name__)

PERIOD = 2.0 * np.pi
SOLENOIDAL_RTOL = 1e-10
SNAPSHOT_COLUMNS = ('kx', 'ky', 're_u1', 'im_u1', 're_u2', 'im_u2')


@dataclass(frozen=True, eq=False)
class Wavenumbers:
    """
    Сетка волновых векторов для разрешения `n`.

    Attributes
    ----------
    n : int
        Число мод по каждому направлению.
    kx, ky : np.ndarray
        Компоненты волнового вектора, форма (n, n).
    k2 : np.ndarray
        |k|².
    inv_k2 : np.ndarray
        |k|⁻², ноль для k = 0.
    dealias : np.ndarray
        Маска правила 2/3: |k_j| < n/3.
    nyquist : np.ndarray
        Маска мод Найквиста (k_j = −n/2).
    """
    n: int
    kx: np.ndarray
    ky: np.ndarray
    k2: np.ndarray
    inv_k2: np.ndarray
    dealias: np.ndarray
    nyquist: np.ndarray


@lru_cache(maxsize=None)
def wavenumbers(n: int) -> Wavenumbers:
    k = fft.fftfreq(n, 1.0 / n)
    kx, ky = np.meshgrid(k, k, indexing='ij')
    k2 = kx ** 2 + ky ** 2
    inv_k2 = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv_k2, where=k2 > 0)
    dealias = (3 * np.abs(kx) < n) & (3 * np.abs(ky) < n)
    nyquist = (kx == -n // 2) | (ky == -n // 2)
    for arr in (kx, ky, k2, inv_k2, dealias, nyquist):
        arr.setflags(write=False)
    return Wavenumbers(n, kx, ky, k2, inv_k2, dealias, nyquist)


def grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Узлы коллокационной сетки.

    Parameters
    ----------
    n : int
        Разрешение.

    Returns
    -------
    return : tuple[np.ndarray, np.ndarray]
        Координаты X, Y формы (n, n) (индексация 'ij').
    """
    x = PERIOD * np.arange(n) / n
    return np.meshgrid(x, x, indexing='ij')


def reflect(coeffs: np.ndarray) -> np.ndarray:
    """Коэффициенты в точке −k (по двум последним осям)."""
    return np.roll(np.flip(coeffs, axis=(-2, -1)), 1, axis=(-2, -1))


def to_spectral(values: np.ndarray) -> np.ndarray:
    return fft.fft2(values, axes=(-2, -1), norm='forward')


def to_grid(coeffs: np.ndarray) -> np.ndarray:
    return fft.ifft2(coeffs, axes=(-2, -1), norm='forward').real


def _check_resolution(n: int) -> None:
    if n % 2 or n < 8:
        raise ResolutionMismatchError(f"Resolution must be even and at least 8, got {n}")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """
    Двумерное векторное поле скорости в виде коэффициентов Фурье.

    Объект неизменяем: массив коэффициентов копируется при создании и
    помечается как доступный только для чтения.

    Attributes
    ----------
    coeffs : np.ndarray
        Комплексные коэффициенты формы (2, n, n).
    solenoidal : bool
        Признак бездивергентного поля (выставляется проектором Лерэ).

    Example
    -------
    .. code-block:: python

        >>> u = SpectralField.taylor_green(32)
        >>> compute_norms(u).h_norm
        0.7071067811865476
    """
    coeffs: np.ndarray
    solenoidal: bool = False

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        if coeffs.ndim != 3 or coeffs.shape[0] != 2:
            raise ResolutionMismatchError(f"Expected coefficients of shape (2, n, n), got {coeffs.shape}")
        if coeffs.shape[1] != coeffs.shape[2]:
            raise ResolutionMismatchError(f"Components must share one square resolution, got {coeffs.shape[1:]}")
        _check_resolution(coeffs.shape[1])
        coeffs.setflags(write=False)
        object.__setattr__(self, 'coeffs', coeffs)

    @classmethod
    def trusted(cls, coeffs: np.ndarray, solenoidal: bool = False) -> SpectralField:
        """Обертка над готовым массивом без копирования и проверок (для внутренних циклов)."""
        obj = object.__new__(cls)
        coeffs.setflags(write=False)
        object.__setattr__(obj, 'coeffs', coeffs)
        object.__setattr__(obj, 'solenoidal', solenoidal)
        return obj

    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.coeffs[:, 0, 0]

    @classmethod
    def from_physical(cls, values: np.ndarray, solenoidal: bool = False, pin_mean: bool = True) -> SpectralField:
        """
        Создание поля по значениям в узлах сетки.

        Parameters
        ----------
        values : np.ndarray
            Вещественные значения формы (2, n, n).
        solenoidal : bool
            Если `True`, результат проектируется на бездивергентные поля.
        pin_mean : bool
            Обнулить среднее (моду k = 0).

        Returns
        -------
        return : SpectralField
            Поле.
        """
        values = np.asarray(values, dtype=float)
        if values.ndim != 3 or values.shape[0] != 2 or values.shape[1] != values.shape[2]:
            raise ResolutionMismatchError(f"Expected grid values of shape (2, n, n), got {values.shape}")
        coeffs = to_spectral(values)
        if pin_mean:
            coeffs[:, 0, 0] = 0.0
        field = cls(coeffs)
        return leray_project(field) if solenoidal else field

    @classmethod
    def zeros(cls, n: int) -> SpectralField:
        return cls(np.zeros((2, n, n), dtype=complex), solenoidal=True)

    @classmethod
    def mode(cls, n: int, k: Sequence[int], amplitude: float = 1.0) -> SpectralField:
        """
        Одна бездивергентная мода u = √2·A·e⊥·cos(k·x), где e⊥ = (−k_y, k_x)/|k|.

        Нормировка выбрана так, что ‖u‖_H = |A|.

        Parameters
        ----------
        n : int
            Разрешение.
        k : Sequence[int]
            Волновой вектор (k_x, k_y), k ≠ 0.
        amplitude : float
            Амплитуда A.

        Returns
        -------
        return : SpectralField
            Поле.
        """
        kx, ky = int(k[0]), int(k[1])
        if kx == 0 and ky == 0:
            raise PreconditionError("Mode k = 0 carries the mean and is not allowed")
        if 2 * max(abs(kx), abs(ky)) >= n:
            raise ResolutionMismatchError(f"Mode {(kx, ky)} is not resolved at n = {n}")
        norm = np.hypot(kx, ky)
        coeffs = np.zeros((2, n, n), dtype=complex)
        value = amplitude / np.sqrt(2.0)
        for sign in (1, -1):
            coeffs[0, (sign * kx) % n, (sign * ky) % n] = -ky / norm * value
            coeffs[1, (sign * kx) % n, (sign * ky) % n] = kx / norm * value
        return cls(coeffs, solenoidal=True)

    @classmethod
    def taylor_green(cls, n: int, amplitude: float = 1.0) -> SpectralField:
        """Вихрь Тейлора–Грина A·(sin x cos y, −cos x sin y)."""
        x, y = grid(n)
        values = amplitude * np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)])
        return cls.from_physical(values, solenoidal=True)

    @classmethod
    def shear(cls, n: int, k: int = 1, amplitude: float = 1.0) -> SpectralField:
        """Сдвиговое течение A·(sin(k y), 0)."""
        x, y = grid(n)
        values = amplitude * np.stack([np.sin(k * y), np.zeros_like(x)])
        return cls.from_physical(values, solenoidal=True)

    @classmethod
    def random(cls,
               n: int,
               seed: Union[int, np.random.Generator, None] = None,
               k_max: float = None,
               amplitude: float = 1.0,
               k_min: float = 1.0) -> SpectralField:
        """
        Случайное бездивергентное поле с ограниченным спектром.

        Parameters
        ----------
        n : int
            Разрешение.
        seed : int | np.random.Generator
            Зерно генератора.
        k_max : float, optional
            Верхняя граница |k|, по умолчанию вся полоса без алиасинга.
        amplitude : float
            Целевая норма ‖u‖_H.
        k_min : float
            Нижняя граница |k|.

        Returns
        -------
        return : SpectralField
            Поле.
        """
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        wn = wavenumbers(n)
        band = wn.dealias & ~wn.nyquist & (wn.k2 >= k_min ** 2)
        if k_max is not None:
            band &= wn.k2 <= k_max ** 2
        coeffs = (rng.standard_normal((2, n, n)) + 1j * rng.standard_normal((2, n, n))) * band
        return _random_from_coeffs(coeffs, amplitude)

    def to_physical(self) -> np.ndarray:
        return to_grid(self.coeffs)

    def _compatible(self, other: SpectralField) -> None:
        if self.coeffs.shape != other.coeffs.shape:
            raise ResolutionMismatchError(f"Resolutions differ: {self.n} != {other.n}")

    def __add__(self, other: SpectralField) -> SpectralField:
        self._compatible(other)
        return SpectralField.trusted(self.coeffs + other.coeffs, self.solenoidal and other.solenoidal)

    def __sub__(self, other: SpectralField) -> SpectralField:
        self._compatible(other)
        return SpectralField.trusted(self.coeffs - other.coeffs, self.solenoidal and other.solenoidal)

    def __neg__(self) -> SpectralField:
        return SpectralField.trusted(-self.coeffs, self.solenoidal)

    def __mul__(self, scalar: float) -> SpectralField:
        return SpectralField.trusted(float(scalar) * self.coeffs, self.solenoidal)

    __rmul__ = __mul__

    def inner(self, other: SpectralField) -> float:
        """Скалярное произведение (u, v)_H."""
        self._compatible(other)
        return float(np.real(np.vdot(other.coeffs, self.coeffs)))

    def divergence_norm(self) -> float:
        """Спектральная норма дивергенции (Σ|k·û(k)|²)^{1/2}."""
        wn = wavenumbers(self.n)
        div = wn.kx * self.coeffs[0] + wn.ky * self.coeffs[1]
        return float(np.sqrt(np.sum(np.abs(div) ** 2)))

    def is_real(self, atol: float = 1e-12) -> bool:
        """Проверка сопряженной симметрии û(−k) = conj(û(k))."""
        scale = max(float(np.abs(self.coeffs).max(initial=0.0)), 1.0)
        return bool(np.abs(self.coeffs - np.conj(reflect(self.coeffs))).max(initial=0.0) <= atol * scale)

    def is_solenoidal(self, rtol: float = SOLENOIDAL_RTOL) -> bool:
        if self.solenoidal:
            return True
        wn = wavenumbers(self.n)
        v = np.sqrt(np.sum(wn.k2 * np.abs(self.coeffs) ** 2))
        return self.divergence_norm() <= rtol * v

    def truncated(self, mask: np.ndarray = None) -> SpectralField:
        """Поле, усеченное до полосы без алиасинга (или до заданной маски)."""
        mask = wavenumbers(self.n).dealias if mask is None else mask
        return SpectralField.trusted(self.coeffs * mask, self.solenoidal)


def _random_from_coeffs(coeffs: np.ndarray, amplitude: float) -> SpectralField:
    coeffs = 0.5 * (coeffs + np.conj(reflect(coeffs)))
    coeffs[:, 0, 0] = 0.0
    field = leray_project(SpectralField(coeffs))
    h = np.sqrt(np.sum(np.abs(field.coeffs) ** 2))
    if h == 0.0:
        return field
    return SpectralField.trusted(field.coeffs * (amplitude / h), solenoidal=True)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """
    Вещественное скалярное поле (например, вязкость ν(x)) в узлах сетки.

    Attributes
    ----------
    values : np.ndarray
        Значения формы (n, n).
    lower : float
        Объявленная нижняя граница (по умолчанию минимум по сетке).
    upper : float
        Объявленная верхняя граница (по умолчанию максимум по сетке).
    """
    values: np.ndarray
    lower: Optional[float] = None
    upper: Optional[float] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ResolutionMismatchError(f"Expected scalar grid of shape (n, n), got {values.shape}")
        _check_resolution(values.shape[0])
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        lower = float(values.min()) if self.lower is None else float(self.lower)
        upper = float(values.max()) if self.upper is None else float(self.upper)
        slack = 1e-12 * max(abs(upper), 1.0)
        if lower > values.min() + slack or upper < values.max() - slack:
            raise ViscosityModelError(f"Declared bounds [{lower}, {upper}] do not bracket the field")
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @classmethod
    def from_function(cls, n: int, func: Callable[[np.ndarray, np.ndarray], np.ndarray], **bounds) -> ScalarField:
        x, y = grid(n)
        return cls(np.broadcast_to(func(x, y), (n, n)), **bounds)

    @classmethod
    def constant(cls, n: int, value: float) -> ScalarField:
        return cls(np.full((n, n), float(value)))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def coeffs(self) -> np.ndarray:
        return to_spectral(self.values)

    @property
    def is_constant(self) -> bool:
        return bool(np.ptp(self.values) == 0.0)

    def band_limited(self) -> np.ndarray:
        """Значения, усеченные до полосы без алиасинга."""
        return to_grid(self.coeffs * wavenumbers(self.n).dealias)

    def gradient(self) -> np.ndarray:
        """∇ν в узлах сетки (после усечения по правилу 2/3), форма (2, n, n)."""
        wn = wavenumbers(self.n)
        coeffs = self.coeffs * wn.dealias
        return to_grid(np.stack([1j * wn.kx * coeffs, 1j * wn.ky * coeffs]))


def leray_project(field: SpectralField) -> SpectralField:
    """
    Проектор Лерэ P: û(k) ↦ (I − k kᵀ/|k|²) û(k).

    Моды Найквиста и средняя мода обнуляются.

    Parameters
    ----------
    field : SpectralField
        Вещественное поле (с сопряженной симметрией).

    Returns
    -------
    return : SpectralField
        Бездивергентное поле.

    Raises
    ------
    PreconditionError
        Если поле не обладает сопряженной симметрией.
    """
    if not field.is_real():
        raise PreconditionError("Leray projection requires a conjugate-symmetric (real) field")
    return SpectralField.trusted(project_coeffs(field.coeffs), solenoidal=True)


def project_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """Проекция Лерэ на уровне массивов коэффициентов (без проверок)."""
    wn = wavenumbers(coeffs.shape[-1])
    div = (wn.kx * coeffs[0] + wn.ky * coeffs[1]) * wn.inv_k2
    out = np.stack([coeffs[0] - wn.kx * div, coeffs[1] - wn.ky * div])
    out[:, wn.nyquist] = 0.0
    out[:, 0, 0] = 0.0
    return out


def compute_norms(field: SpectralField) -> NormReport:
    """
    Нормы поля в шкале H, V, V′.

    Parameters
    ----------
    field : SpectralField
        Вещественное поле с нулевым средним.

    Returns
    -------
    return : NormReport
        h = (Σ|û|²)^{1/2}, v = (Σ|k|²|û|²)^{1/2}, vdual = (Σ|k|⁻²|û|²)^{1/2}.

    Raises
    ------
    PreconditionError
        Если среднее поля не равно нулю или нарушена сопряженная симметрия.
    """
    if not field.is_real():
        raise PreconditionError("Norms require a conjugate-symmetric (real) field")
    power = np.abs(field.coeffs) ** 2
    h2 = float(power.sum())
    if np.abs(field.mean).max() > 1e-14 * max(np.sqrt(h2), 1e-300):
        raise PreconditionError("Field has a nonzero mean mode, the V' norm is undefined")
    wn = wavenumbers(field.n)
    total = power.sum(axis=0)
    return NormReport(h_norm=np.sqrt(h2),
                      v_norm=float(np.sqrt(np.sum(wn.k2 * total))),
                      vdual_norm=float(np.sqrt(np.sum(wn.inv_k2 * total))))


def vdual_norm(field: SpectralField) -> float:
    """‖P f‖_{V′}: двойственная норма после проекции Лерэ."""
    wn = wavenumbers(field.n)
    coeffs = project_coeffs(field.coeffs)
    return float(np.sqrt(np.sum(wn.inv_k2 * np.abs(coeffs) ** 2)))


def stokes_lambda1() -> float:
    """
    Наименьшее собственное значение оператора Стокса на [0, 2π)² при нулевом среднем.

    Returns
    -------
    return : float
        λ₁ = (2π/L)² = 1.
    """
    return (2.0 * np.pi / PERIOD) ** 2


def poincare_constant() -> float:
    """Константа Пуанкаре c_ρ = λ₁^{−1/2}."""
    return stokes_lambda1() ** -0.5


def save_snapshot(field: SpectralField, path: Union[str, Path]) -> Path:
    """
    Сохранение поля в формате (kx, ky, Re û₁, Im û₁, Re û₂, Im û₂).

    Parameters
    ----------
    field : SpectralField
        Поле.
    path : str | Path
        Путь. Суффикс `.csv` выбирает текстовый формат, иначе пишется
        плоский двоичный файл float64 с порядком байт little-endian.

    Returns
    -------
    return : Path
        Путь к записанному файлу.
    """
    path = Path(path)
    wn = wavenumbers(field.n)
    rows = np.column_stack([wn.kx.ravel(), wn.ky.ravel(),
                            field.coeffs[0].real.ravel(), field.coeffs[0].imag.ravel(),
                            field.coeffs[1].real.ravel(), field.coeffs[1].imag.ravel()])
    if path.suffix == '.csv':
        np.savetxt(path, rows, fmt='%.17g', delimiter=',', header=','.join(SNAPSHOT_COLUMNS), comments='')
    else:
        rows.astype('<f8').tofile(path)
    logger.debug("Snapshot of n=%d written to %s", field.n, path)
    return path


def load_snapshot(path: Union[str, Path]) -> SpectralField:
    """
    Загрузка поля, записанного `save_snapshot`.

    Raises
    ------
    ResolutionMismatchError
        Если число строк или порядок волновых векторов не соответствуют формату.
    """
    path = Path(path)
    if path.suffix == '.csv':
        rows = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
    else:
        rows = np.fromfile(path, dtype='<f8').reshape(-1, len(SNAPSHOT_COLUMNS))
    n = int(round(np.sqrt(rows.shape[0])))
    if n * n != rows.shape[0]:
        raise ResolutionMismatchError(f"Snapshot has {rows.shape[0]} rows, not a square resolution")
    _check_resolution(n)
    wn = wavenumbers(n)
    if not (np.array_equal(rows[:, 0], wn.kx.ravel()) and np.array_equal(rows[:, 1], wn.ky.ravel())):
        raise ResolutionMismatchError("Snapshot wavevectors are not in FFT order")
    coeffs = np.stack([(rows[:, 2] + 1j * rows[:, 3]).reshape(n, n),
                       (rows[:, 4] + 1j * rows[:, 5]).reshape(n, n)])
    field = SpectralField(coeffs)
    return SpectralField(field.coeffs, solenoidal=field.is_solenoidal())

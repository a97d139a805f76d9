"""
Модели вязкости: постоянная, зависящая от времени и зависящая от координат.

Для моделей, зависящих от времени, вычисляются накопленная вязкость
φ_s(t) = ∫_s^t ν(z) dz и величина K̄ = lim sup_t ∫₀ᵗ e^{−φ_s(t)/c_ρ²} ds.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize

from nsdetermine.fields import ScalarField, poincare_constant
from nsdetermine.utils import (InsufficientHorizonError, PreconditionError, TimeProfile, ViscosityKind,
                               ViscosityModelError, ConfigError, enum_value)

logger = logging.getLogger(__name__)

DECAY_CRITERION = 1e-12
_DENSE_SAMPLES = 20001
_KBAR_GRID = 257


@dataclass(frozen=True)
class ViscosityModel:
    """
    Модель вязкости с гарантированными границами ν̲ ≤ ν ≤ ν̄.

    Attributes
    ----------
    kind : ViscosityKind
        Тип модели.
    nu0 : float
        Базовое значение ν₀.
    profile : TimeProfile
        Профиль по времени (для `TIME_VARYING`).
    epsilon : float
        Относительная амплитуда синусоиды во времени или абсолютная амплитуда по пространству.
    omega : float
        Частота синусоидального профиля.
    schedule : tuple
        Кусочно-постоянное расписание ((t_start, value), ...).
    floor : float
        Предельное значение затухающего профиля.
    rate : float
        Скорость затухания.
    wavevector : tuple
        Волновой вектор пространственной модуляции ν(x) = ν₀ + ε sin(k·x).
    lower, upper : float, optional
        Объявленные границы, они обязаны охватывать модель.

    Example
    -------
    .. code-block:: python

        >>> model = ViscosityModel.sinusoidal(1.0, 0.5)
        >>> bounds(model, (0.0, 4 * np.pi))
        (0.5, 1.5)
    """
    kind: ViscosityKind
    nu0: float
    profile: TimeProfile = TimeProfile.CONSTANT
    epsilon: float = 0.0
    omega: float = 1.0
    schedule: Tuple[Tuple[float, float], ...] = field(default=())
    floor: float = 0.0
    rate: float = 0.0
    wavevector: Tuple[int, int] = (1, 0)
    lower: Optional[float] = None
    upper: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', enum_value(ViscosityKind, self.kind, 'viscosity.kind'))
        object.__setattr__(self, 'profile', enum_value(TimeProfile, self.profile, 'viscosity.profile'))
        schedule = tuple(sorted((float(start), float(value)) for start, value in self.schedule))
        object.__setattr__(self, 'schedule', schedule)
        object.__setattr__(self, 'wavevector', tuple(int(k) for k in self.wavevector))
        if self.kind is ViscosityKind.TIME_VARYING and self.profile is TimeProfile.PIECEWISE:
            if not schedule:
                raise ViscosityModelError("Piecewise profile requires a non-empty schedule")
            object.__setattr__(self, 'nu0', schedule[0][1])
        lowest, _ = self._extrema()
        if not lowest > 0.0:
            raise ViscosityModelError(f"Viscosity profile dips to {lowest:.6g} <= 0")

    @classmethod
    def constant(cls, nu0: float) -> ViscosityModel:
        return cls(ViscosityKind.CONSTANT, float(nu0))

    @classmethod
    def sinusoidal(cls, nu0: float, epsilon: float, omega: float = 1.0) -> ViscosityModel:
        """ν(t) = ν₀(1 + ε sin ωt)."""
        return cls(ViscosityKind.TIME_VARYING, float(nu0), TimeProfile.SINUSOIDAL, epsilon=float(epsilon),
                   omega=float(omega))

    @classmethod
    def piecewise(cls, schedule: Sequence[Tuple[float, float]]) -> ViscosityModel:
        return cls(ViscosityKind.TIME_VARYING, 0.0, TimeProfile.PIECEWISE, schedule=tuple(schedule))

    @classmethod
    def decaying(cls, nu0: float, floor: float, rate: float) -> ViscosityModel:
        """ν(t) = floor + (ν₀ − floor) e^{−rate·t}."""
        return cls(ViscosityKind.TIME_VARYING, float(nu0), TimeProfile.DECAYING, floor=float(floor), rate=float(rate))

    @classmethod
    def space_varying(cls, nu0: float, epsilon: float, wavevector: Sequence[int] = (1, 0)) -> ViscosityModel:
        """ν(x) = ν₀ + ε sin(k·x)."""
        return cls(ViscosityKind.SPACE_VARYING, float(nu0), epsilon=float(epsilon), wavevector=tuple(wavevector))

    @classmethod
    def from_dict(cls, data: dict) -> ViscosityModel:
        allowed = {'kind', 'nu0', 'profile', 'epsilon', 'omega', 'schedule', 'floor', 'rate', 'wavevector',
                   'lower', 'upper'}
        if unknown := set(data) - allowed:
            raise ConfigError(f"viscosity: unknown keys {sorted(unknown)}")
        data = dict(data)
        data.setdefault('nu0', 0.0)
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"viscosity: {exc}") from None

    def to_dict(self) -> dict:
        return dict(kind=self.kind.value, nu0=self.nu0, profile=self.profile.value, epsilon=self.epsilon,
                    omega=self.omega, schedule=[list(item) for item in self.schedule], floor=self.floor,
                    rate=self.rate, wavevector=list(self.wavevector), lower=self.lower, upper=self.upper)

    @property
    def is_time_varying(self) -> bool:
        return self.kind is ViscosityKind.TIME_VARYING

    @property
    def is_space_varying(self) -> bool:
        return self.kind is ViscosityKind.SPACE_VARYING

    @property
    def has_constant_profile(self) -> bool:
        """Модель совпадает с постоянной вязкостью (в том числе профили с ε = 0)."""
        low, high = self._extrema()
        return low == high

    def _extrema(self, start: float = 0.0, end: float = np.inf) -> Tuple[float, float]:
        if self.kind is ViscosityKind.CONSTANT:
            return self.nu0, self.nu0
        if self.kind is ViscosityKind.SPACE_VARYING:
            return self.nu0 - abs(self.epsilon), self.nu0 + abs(self.epsilon)
        if self.profile is TimeProfile.CONSTANT:
            return self.nu0, self.nu0
        if self.profile is TimeProfile.SINUSOIDAL:
            if self.epsilon == 0.0 or self.omega == 0.0:
                return self.nu0, self.nu0
            if not np.isfinite(end) or self.omega * (end - start) >= 2 * np.pi:
                values = self.nu0 * (1.0 + np.array([-1.0, 1.0]) * abs(self.epsilon))
            else:
                first = np.ceil((self.omega * start - np.pi / 2) / np.pi)
                last = np.floor((self.omega * end - np.pi / 2) / np.pi)
                critical = (np.pi / 2 + np.pi * np.arange(first, last + 1)) / self.omega
                values = self.at(np.concatenate([[start, end], critical]))
            return float(values.min()), float(values.max())
        if self.profile is TimeProfile.PIECEWISE:
            values = [value for (t0, value), t1 in zip(self.schedule, [t for t, _ in self.schedule[1:]] + [np.inf])
                      if t1 > start and t0 < end or t0 <= start < t1]
            values = values or [self.schedule[0][1]]
            return float(min(values)), float(max(values))
        ends = [self.at(start), self.floor if not np.isfinite(end) else self.at(end)]
        return float(min(ends)), float(max(ends))

    def at(self, t):
        """
        Значение ν(t).

        Parameters
        ----------
        t : float | np.ndarray
            Момент(ы) времени.

        Returns
        -------
        return : float | np.ndarray
            ν(t).

        Raises
        ------
        PreconditionError
            Для моделей, зависящих от координат.
        """
        t = np.asarray(t, dtype=float)
        if self.kind is ViscosityKind.SPACE_VARYING:
            raise PreconditionError("Space-varying viscosity has no time profile")
        if self.kind is ViscosityKind.CONSTANT or self.profile is TimeProfile.CONSTANT:
            value = np.full_like(t, self.nu0)
        elif self.profile is TimeProfile.SINUSOIDAL:
            value = self.nu0 * (1.0 + self.epsilon * np.sin(self.omega * t))
        elif self.profile is TimeProfile.PIECEWISE:
            starts = np.array([start for start, _ in self.schedule])
            values = np.array([value for _, value in self.schedule])
            value = values[np.clip(np.searchsorted(starts, t, side='right') - 1, 0, None)]
        else:
            value = self.floor + (self.nu0 - self.floor) * np.exp(-self.rate * t)
        return value[()] if value.ndim == 0 else value

    def field(self, n: int) -> ScalarField:
        """
        Вязкость на сетке разрешения `n`.

        Returns
        -------
        return : ScalarField
            Для постоянной модели поле постоянно; для пространственной
            ν(x) = ν₀ + ε sin(k·x) с объявленными аналитическими границами.
        """
        if self.kind is ViscosityKind.TIME_VARYING:
            raise PreconditionError("Time-varying viscosity is not a spatial field")
        low, high = self._extrema()
        kx, ky = self.wavevector
        return ScalarField.from_function(n, lambda x, y: self.nu0 + self.epsilon * np.sin(kx * x + ky * y),
                                         lower=low, upper=high)

    def breakpoints(self, s: float, t: float) -> list:
        if self.profile is not TimeProfile.PIECEWISE:
            return []
        return [start for start, _ in self.schedule if s < start < t]

    def with_nu0(self, nu0: float) -> ViscosityModel:
        return replace(self, nu0=float(nu0), lower=None, upper=None)


def bounds(model: ViscosityModel, window: Tuple[float, float] = (0.0, np.inf)) -> Tuple[float, float]:
    """
    Гарантированные границы (ν̲, ν̄) на окне времени.

    Для синусоидального профиля к концам окна добавляются аналитические
    критические точки, результат дополнительно сверяется с плотной выборкой.

    Parameters
    ----------
    model : ViscosityModel
        Модель вязкости.
    window : tuple[float, float]
        Окно (t₀, t₁), t₀ < t₁.

    Returns
    -------
    return : tuple[float, float]
        (ν̲, ν̄).

    Raises
    ------
    PreconditionError
        Если окно пустое.
    ViscosityModelError
        Если ν̲ ≤ 0 или объявленные границы не охватывают модель.
    """
    start, end = float(window[0]), float(window[1])
    if not end > start:
        raise PreconditionError(f"Empty window ({start}, {end})")
    low, high = model._extrema(start, end)
    if model.is_time_varying and np.isfinite(end):
        sampled = model.at(np.linspace(start, end, _DENSE_SAMPLES))
        low, high = min(low, float(sampled.min())), max(high, float(sampled.max()))
    if low <= 0.0:
        raise ViscosityModelError(f"Viscosity dips to {low:.6g} <= 0 on ({start}, {end})")
    slack = 1e-12 * high
    if model.lower is not None and model.lower > low + slack:
        raise ViscosityModelError(f"Declared lower bound {model.lower} exceeds the model minimum {low}")
    if model.upper is not None and model.upper < high - slack:
        raise ViscosityModelError(f"Declared upper bound {model.upper} is below the model maximum {high}")
    return low, high


def phi(model: ViscosityModel, s: float, t: float, method: str = 'closed') -> float:
    """
    Накопленная вязкость φ_s(t) = ∫_s^t ν(z) dz.

    Parameters
    ----------
    model : ViscosityModel
        Постоянная или зависящая от времени модель.
    s, t : float
        Пределы интегрирования, s ≤ t.
    method : str
        'closed' - замкнутая формула, 'quad' - адаптивная квадратура
        (относительная точность 1e-10).

    Returns
    -------
    return : float
        φ_s(t).

    Raises
    ------
    PreconditionError
        Если s > t.
    ViscosityModelError
        Для моделей, зависящих от координат.
    """
    if model.is_space_varying:
        raise ViscosityModelError("phi is defined only for time-dependent viscosity models")
    if s > t:
        raise PreconditionError(f"phi requires s <= t, got s={s}, t={t}")
    if method == 'quad':
        points = model.breakpoints(s, t) or None
        value, _ = integrate.quad(model.at, s, t, epsabs=0.0, epsrel=1e-12, limit=500, points=points)
        return float(value)
    if model.kind is ViscosityKind.CONSTANT or model.profile is TimeProfile.CONSTANT:
        return model.nu0 * (t - s)
    if model.profile is TimeProfile.SINUSOIDAL:
        drift = 0.0 if model.omega == 0.0 else model.epsilon / model.omega * (np.cos(model.omega * t) -
                                                                              np.cos(model.omega * s))
        return float(model.nu0 * ((t - s) - drift))
    if model.profile is TimeProfile.PIECEWISE:
        total = 0.0
        ends = [start for start, _ in model.schedule[1:]] + [np.inf]
        for (start, value), end in zip(model.schedule, ends):
            start = -np.inf if start == model.schedule[0][0] else start
            total += value * max(0.0, min(t, end) - max(s, start))
        return float(total)
    if model.rate == 0.0:
        return model.nu0 * (t - s)
    excess = (model.nu0 - model.floor) * (np.exp(-model.rate * s) - np.exp(-model.rate * t)) / model.rate
    return float(model.floor * (t - s) + excess)


def _k_integral(model: ViscosityModel, c2: float, t: float, chunk: float) -> float:
    total, upper = 0.0, t
    while upper > 0.0:
        lower = max(0.0, upper - chunk)
        if np.exp(-phi(model, upper, t) / c2) < 1e-18:
            break
        value, _ = integrate.quad(lambda s: np.exp(-phi(model, s, t) / c2), lower, upper, epsabs=0.0,
                                  epsrel=1e-12, limit=200, points=model.breakpoints(lower, upper) or None)
        total += value
        upper = lower
    return total


def kbar(model: ViscosityModel,
         c_rho: float = None,
         horizon: float = None,
         tail_fraction: float = 0.5) -> float:
    """
    Оценка K̄ = lim sup_t ∫₀ᵗ e^{−φ_s(t)/c_ρ²} ds максимумом по хвосту горизонта.

    Parameters
    ----------
    model : ViscosityModel
        Постоянная или зависящая от времени модель.
    c_rho : float, optional
        Константа Пуанкаре, по умолчанию `poincare_constant()`.
    horizon : float, optional
        Горизонт, по умолчанию 40 времен диссипации c_ρ²/ν̲.
    tail_fraction : float
        Доля горизонта (хвост), по которой берется максимум.

    Returns
    -------
    return : float
        K̄.

    Raises
    ------
    InsufficientHorizonError
        Если e^{−φ_0(horizon)/c_ρ²} ≥ 1e-12.
    ViscosityModelError
        Для моделей, зависящих от координат.

    Notes
    -----
    Для постоянного профиля используется замкнутая формула
    (c_ρ²/ν)(1 − e^{−ν·horizon/c_ρ²}).
    """
    if model.is_space_varying:
        raise ViscosityModelError("kbar is defined only for time-dependent viscosity models")
    if not 0.0 < tail_fraction < 1.0:
        raise PreconditionError(f"tail_fraction must lie in (0, 1), got {tail_fraction}")
    c2 = (poincare_constant() if c_rho is None else float(c_rho)) ** 2
    low, _ = model._extrema()
    horizon = 40.0 * c2 / low if horizon is None else float(horizon)
    decay = np.exp(-phi(model, 0.0, horizon) / c2)
    if decay >= DECAY_CRITERION:
        raise InsufficientHorizonError(f"Horizon {horizon:.6g} too short: e^(-phi/c^2) = {decay:.3g}")
    if model.has_constant_profile:
        return float(c2 / model.nu0 * (1.0 - np.exp(-model.nu0 * horizon / c2)))

    chunk = c2 / low
    times = np.linspace((1.0 - tail_fraction) * horizon, horizon, _KBAR_GRID)
    values = np.array([_k_integral(model, c2, t, chunk) for t in times])
    best = int(np.argmax(values))
    bracket = (times[max(best - 1, 0)], times[min(best + 1, len(times) - 1)])
    refined = optimize.minimize_scalar(lambda t: -_k_integral(model, c2, t, chunk), bounds=bracket,
                                       method='bounded', options=dict(xatol=1e-10))
    result = max(float(values[best]), float(-refined.fun))
    logger.debug("K-bar = %.12g over window [%.6g, %.6g]", result, times[0], times[-1])
    return result

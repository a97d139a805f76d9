"""
Интегрирование двумерных уравнений Навье–Стокса схемой CNAB2.

Вязкий член берется неявно по Крэнку–Николсону, нелинейный член и сила
явно по Адамсу–Башфорту второго порядка (первый шаг явным Эйлером).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields, replace
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from nsdetermine.fields import (PERIOD, SpectralField, compute_norms, project_coeffs, to_grid, to_spectral,
                                vdual_norm, wavenumbers)
from nsdetermine.models import TrajectoryRecord
from nsdetermine.operators import a_nu, advection_coeffs, gradient_grid, gradnu_gradu
from nsdetermine.utils import (BlowUpError, ConfigError, ForcingKind, InitialKind, PreconditionError,
                               enum_value)
from nsdetermine.viscosity import ViscosityModel, bounds

logger = logging.getLogger(__name__)

CFL_SAFETY = 0.4


def _check_keys(section: str, data: dict, allowed: Sequence[str]) -> None:
    if unknown := set(data) - set(allowed):
        raise ConfigError(f"{section}: unknown keys {sorted(unknown)}")


@dataclass(frozen=True)
class ForcingSpec:
    """
    Внешняя сила f(t) = a·m(t)·(sin(k_f y), 0) + e^{−σt}·d.

    Attributes
    ----------
    kind : ForcingKind
        Тип силы.
    amplitude : float
        Амплитуда a.
    wavenumber : int
        Волновое число k_f.
    epsilon, omega : float
        Модуляция m(t) = 1 + ε sin ωt (для `MODULATED`).
    perturbation_amplitude : float
        Амплитуда возмущения d (мода `perturbation_wavevector`), ноль отключает возмущение.
    perturbation_wavevector : tuple[int, int]
        Волновой вектор возмущения.
    sigma : float
        Скорость затухания возмущения.
    """
    kind: ForcingKind = ForcingKind.ZERO
    amplitude: float = 0.0
    wavenumber: int = 1
    epsilon: float = 0.0
    omega: float = 1.0
    perturbation_amplitude: float = 0.0
    perturbation_wavevector: Tuple[int, int] = (4, 1)
    sigma: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, 'kind', enum_value(ForcingKind, self.kind, 'forcing.kind'))
        object.__setattr__(self, 'perturbation_wavevector', tuple(int(k) for k in self.perturbation_wavevector))

    @classmethod
    def kolmogorov(cls, amplitude: float, wavenumber: int) -> ForcingSpec:
        return cls(ForcingKind.KOLMOGOROV, float(amplitude), int(wavenumber))

    @classmethod
    def from_dict(cls, data: dict) -> ForcingSpec:
        _check_keys('forcing', data, [item.name for item in fields(cls)])
        return cls(**data)

    def to_dict(self) -> dict:
        return dict(kind=self.kind.value, amplitude=self.amplitude, wavenumber=self.wavenumber,
                    epsilon=self.epsilon, omega=self.omega, perturbation_amplitude=self.perturbation_amplitude,
                    perturbation_wavevector=list(self.perturbation_wavevector), sigma=self.sigma)

    def perturbed(self, amplitude: float, wavevector: Sequence[int], sigma: float) -> ForcingSpec:
        """Сила g = f + e^{−σt}·d той же формы."""
        return replace(self, perturbation_amplitude=float(amplitude), perturbation_wavevector=tuple(wavevector),
                       sigma=float(sigma))

    def modulation(self, t: float) -> float:
        if self.kind is ForcingKind.ZERO:
            return 0.0
        if self.kind is ForcingKind.MODULATED:
            return 1.0 + self.epsilon * np.sin(self.omega * t)
        return 1.0

    def peak_amplitude(self) -> float:
        if self.kind is ForcingKind.ZERO:
            return 0.0
        return abs(self.amplitude) * (1.0 + abs(self.epsilon) if self.kind is ForcingKind.MODULATED else 1.0)

    def base_coeffs(self, n: int) -> np.ndarray:
        """Коэффициенты (sin(k_f y), 0)."""
        coeffs = np.zeros((2, n, n), dtype=complex)
        if self.kind is not ForcingKind.ZERO:
            coeffs[0, 0, self.wavenumber % n] = -0.5j
            coeffs[0, 0, -self.wavenumber % n] = 0.5j
        return coeffs

    def perturbation_coeffs(self, n: int) -> np.ndarray:
        if self.perturbation_amplitude == 0.0:
            return np.zeros((2, n, n), dtype=complex)
        return SpectralField.mode(n, self.perturbation_wavevector, self.perturbation_amplitude).coeffs

    def at(self, n: int, t: float) -> SpectralField:
        """
        Сила в момент `t` на разрешении `n`.

        Returns
        -------
        return : SpectralField
            Бездивергентное поле f(t).
        """
        coeffs = self.amplitude * self.modulation(t) * self.base_coeffs(n)
        coeffs = coeffs + np.exp(-self.sigma * t) * self.perturbation_coeffs(n)
        return SpectralField.trusted(coeffs, solenoidal=True)


@dataclass(frozen=True)
class InitialSpec:
    """
    Начальные данные.

    Attributes
    ----------
    kind : InitialKind
        Тип начального поля.
    amplitude : float
        Для `RANDOM` целевая норма ‖u₀‖_H, иначе амплитуда именованного решения.
    k_max : float, optional
        Верхняя граница |k| случайного поля.
    wavevector : tuple[int, int]
        Волновой вектор для `MODE` и `SHEAR` (для сдвига берется k_y, либо k_x при k_y = 0).
    """
    kind: InitialKind = InitialKind.RANDOM
    amplitude: float = 1.0
    k_max: Optional[float] = None
    wavevector: Tuple[int, int] = (1, 0)

    def __post_init__(self):
        object.__setattr__(self, 'kind', enum_value(InitialKind, self.kind, 'initial.kind'))
        object.__setattr__(self, 'wavevector', tuple(int(k) for k in self.wavevector))

    @classmethod
    def from_dict(cls, data: dict) -> InitialSpec:
        _check_keys('initial', data, [item.name for item in fields(cls)])
        return cls(**data)

    def to_dict(self) -> dict:
        return dict(kind=self.kind.value, amplitude=self.amplitude, k_max=self.k_max,
                    wavevector=list(self.wavevector))

    def build(self, n: int, seed: int = None) -> SpectralField:
        if self.kind is InitialKind.ZERO:
            return SpectralField.zeros(n)
        if self.kind is InitialKind.TAYLOR_GREEN:
            return SpectralField.taylor_green(n, self.amplitude)
        if self.kind is InitialKind.SHEAR:
            return SpectralField.shear(n, self.wavevector[1] or self.wavevector[0], self.amplitude)
        if self.kind is InitialKind.MODE:
            return SpectralField.mode(n, self.wavevector, self.amplitude)
        return SpectralField.random(n, seed, k_max=self.k_max, amplitude=self.amplitude)


@dataclass(frozen=True)
class SolverConfig:
    """
    Конфигурация расчета.

    Attributes
    ----------
    resolution : int
        Разрешение n (четное, не меньше 8).
    dt : float
        Шаг по времени.
    t_end : float
        Конечное время (кратно `dt`).
    viscosity : ViscosityModel
        Модель вязкости.
    forcing : ForcingSpec
        Внешняя сила.
    initial : InitialSpec
        Начальные данные.
    sample_stride : int
        Число шагов между отсчетами записи.
    snapshot_stride : int
        Число отсчетов между сохраняемыми полями, 0 сохраняет только конечное поле.
    cfl_safety : float
        Коэффициент запаса CFL.
    seed : int
        Зерно генератора начальных данных.
    """
    resolution: int
    dt: float
    t_end: float
    viscosity: ViscosityModel
    forcing: ForcingSpec = field(default_factory=ForcingSpec)
    initial: InitialSpec = field(default_factory=InitialSpec)
    sample_stride: int = 10
    snapshot_stride: int = 0
    cfl_safety: float = CFL_SAFETY
    seed: int = 0

    SECTION_KEYS = ('resolution', 'dt', 't_end', 'sample_stride', 'snapshot_stride', 'cfl_safety')

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @classmethod
    def from_dict(cls, data: dict) -> SolverConfig:
        """
        Конфигурация из словаря с секциями `solver`, `viscosity`, `forcing`, `initial` и ключом `seed`.

        Raises
        ------
        ConfigError
            При неизвестных или недостающих ключах.
        """
        _check_keys('config', data, ['solver', 'viscosity', 'forcing', 'initial', 'seed'])
        solver = dict(data.get('solver', {}))
        _check_keys('solver', solver, cls.SECTION_KEYS)
        if missing := {'resolution', 'dt', 't_end'} - set(solver):
            raise ConfigError(f"solver: missing keys {sorted(missing)}")
        if 'viscosity' not in data:
            raise ConfigError("config: missing section [viscosity]")
        return cls(viscosity=ViscosityModel.from_dict(data['viscosity']),
                   forcing=ForcingSpec.from_dict(data.get('forcing', {})),
                   initial=InitialSpec.from_dict(data.get('initial', {})),
                   seed=int(data.get('seed', 0)), **solver)

    def to_dict(self) -> dict:
        return dict(seed=self.seed,
                    solver={name: getattr(self, name) for name in self.SECTION_KEYS},
                    viscosity=self.viscosity.to_dict(),
                    forcing=self.forcing.to_dict(),
                    initial=self.initial.to_dict())

    def dt_max(self, initial: SpectralField = None) -> float:
        """
        Наибольший допустимый шаг (2π/n)·safety / u_ref.

        u_ref = max(max|u₀|, a/(ν̲ k_f²)) - максимум начальной скорости и
        скорости ламинарного режима, отвечающего силе.
        """
        initial = self.initial.build(self.resolution, self.seed) if initial is None else initial
        nu_lower, _ = bounds(self.viscosity, (0.0, self.t_end))
        u_ref = float(np.abs(initial.to_physical()).max(initial=0.0))
        if self.forcing.kind is not ForcingKind.ZERO:
            u_ref = max(u_ref, self.forcing.peak_amplitude() / (nu_lower * self.forcing.wavenumber ** 2))
        if self.forcing.perturbation_amplitude:
            k2 = sum(k * k for k in self.forcing.perturbation_wavevector)
            u_ref = max(u_ref, np.sqrt(2.0) * abs(self.forcing.perturbation_amplitude) / (nu_lower * k2))
        return np.inf if u_ref == 0.0 else self.cfl_safety * PERIOD / self.resolution / u_ref

    def validate(self, initial: SpectralField = None) -> SolverConfig:
        """
        Проверка конфигурации.

        Returns
        -------
        return : SolverConfig
            Та же конфигурация.

        Raises
        ------
        ConfigError
            Если параметры некорректны или шаг превышает границу устойчивости.
        """
        n = self.resolution
        if n % 2 or n < 8:
            raise ConfigError(f"solver.resolution must be even and >= 8, got {n}")
        if not self.dt > 0.0 or not self.t_end > 0.0:
            raise ConfigError(f"solver.dt and solver.t_end must be positive, got {self.dt}, {self.t_end}")
        if abs(self.n_steps * self.dt - self.t_end) > 1e-9 * max(self.t_end, 1.0) or self.n_steps < 1:
            raise ConfigError(f"solver.t_end = {self.t_end} is not a multiple of dt = {self.dt}")
        if self.sample_stride < 1 or self.snapshot_stride < 0:
            raise ConfigError("solver.sample_stride must be >= 1 and solver.snapshot_stride >= 0")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ConfigError(f"solver.cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.forcing.kind is not ForcingKind.ZERO and not 0 < 3 * self.forcing.wavenumber < n:
            raise ConfigError(f"forcing.wavenumber {self.forcing.wavenumber} is outside the dealiased band")
        if self.viscosity.is_space_varying:
            spread = self.viscosity.field(n)
            remainder = np.abs(spread.values - spread.mean).max()
            k_max = np.sqrt(wavenumbers(n).k2[wavenumbers(n).dealias].max())
            if self.dt * remainder * k_max ** 2 > 1.0:
                raise ConfigError(f"dt = {self.dt} too large for the explicit viscous remainder")
        limit = self.dt_max(initial)
        if self.dt > limit:
            raise ConfigError(f"dt = {self.dt} exceeds the stability bound {limit:.6g}")
        return self


class Stepper:
    """
    Интегратор CNAB2 для одной траектории.

    Attributes
    ----------
    config : SolverConfig
        Конфигурация.
    state : SpectralField
        Текущее поле.
    t : float
        Текущее время.
    steps : int
        Число выполненных шагов.
    """

    def __init__(self, config: SolverConfig, state: SpectralField = None, t0: float = 0.0) -> None:
        """
        Parameters
        ----------
        config : SolverConfig
            Конфигурация.
        state : SpectralField, optional
            Начальное поле, по умолчанию строится по `config.initial`.
        t0 : float
            Начальный момент времени.

        Returns
        -------
        return : None
        """
        n = config.resolution
        state = config.initial.build(n, config.seed) if state is None else state
        if state.n != n:
            raise ConfigError(f"Initial field resolution {state.n} differs from solver.resolution {n}")
        self.config = config.validate(state)
        self.wn = wavenumbers(n)
        self.model = config.viscosity
        self.nu_lower, self.nu_upper = bounds(self.model, (0.0, config.t_end))
        self.nu_field = self.model.field(n) if self.model.is_space_varying else None
        self.nu_mean = self.nu_field.mean if self.nu_field is not None else None
        self._base = config.forcing.base_coeffs(n)
        self._perturbation = config.forcing.perturbation_coeffs(n)
        self.state = SpectralField.trusted(project_coeffs(state.coeffs), solenoidal=True)
        self.t0 = float(t0)
        self.t = self.t0
        self.steps = 0
        self._previous = None
        self._cfl_warned = False

    @property
    def n(self) -> int:
        return self.config.resolution

    def forcing(self, t: float) -> np.ndarray:
        forcing = self.config.forcing
        return forcing.amplitude * forcing.modulation(t) * self._base + np.exp(-forcing.sigma * t) * self._perturbation

    def nu_at(self, t: float) -> float:
        """ν(t) для записи; для вязкости, зависящей от координат, ν̲."""
        return self.nu_lower if self.nu_field is not None else float(self.model.at(t))

    def _implicit_nu(self, t: float) -> float:
        if self.nu_field is not None:
            return self.nu_mean
        return float(self.model.at(t + 0.5 * self.config.dt))

    def _variable_viscous(self, coeffs: np.ndarray) -> np.ndarray:
        mask = self.wn.dealias
        excess = self.nu_field.band_limited() - self.nu_mean
        flux = to_spectral(excess * gradient_grid(coeffs * mask)) * mask
        return 1j * (self.wn.kx * flux[:, 0] + self.wn.ky * flux[:, 1])

    def explicit(self, coeffs: np.ndarray, t: float) -> np.ndarray:
        """Явная часть P[−(u·∇)u + f + ∇·((ν − ν_m)∇u)]."""
        rhs = self.forcing(t) - advection_coeffs(coeffs, coeffs)
        if self.nu_field is not None:
            rhs = rhs + self._variable_viscous(coeffs)
        return project_coeffs(rhs)

    def dissipation(self, state: SpectralField, t: float) -> float:
        """D = (ν∇u, ∇u)_H."""
        if self.nu_field is None:
            power = np.sum(np.abs(state.coeffs) ** 2, axis=0)
            return float(self.model.at(t) * np.sum(self.wn.k2 * power))
        grad = gradient_grid(state.coeffs)
        return float(np.mean(self.nu_field.values * np.sum(grad ** 2, axis=(0, 1))))

    def power(self, state: SpectralField, t: float) -> float:
        """⟨f, u⟩."""
        return float(np.real(np.vdot(state.coeffs, self.forcing(t))))

    def check_cfl(self) -> float:
        cfl = float(np.abs(self.state.to_physical()).max()) * self.config.dt * self.n / PERIOD
        if cfl > 1.0:
            raise BlowUpError(self.t, f"CFL number {cfl:.3g} > 1 at t = {self.t:.6g}")
        if cfl > self.config.cfl_safety and not self._cfl_warned:
            logger.warning("CFL number %.3g exceeds the safety factor %.2g at t = %.6g",
                           cfl, self.config.cfl_safety, self.t)
            self._cfl_warned = True
        return cfl

    def advance(self, extra: np.ndarray = None) -> SpectralField:
        """
        Один шаг CNAB2.

        Parameters
        ----------
        extra : np.ndarray, optional
            Дополнительный явный член (уже спроецированный), например релаксация.

        Returns
        -------
        return : SpectralField
            Новое состояние.

        Raises
        ------
        BlowUpError
            Если коэффициенты стали NaN или бесконечными.
        """
        dt, t = self.config.dt, self.t
        coeffs = self.state.coeffs
        explicit = self.explicit(coeffs, t)
        if extra is not None:
            explicit = explicit + extra
        combined = explicit if self._previous is None else 1.5 * explicit - 0.5 * self._previous
        half = 0.5 * dt * self._implicit_nu(t) * self.wn.k2
        new = ((1.0 - half) * coeffs + dt * combined) / (1.0 + half)
        if not np.all(np.isfinite(new)):
            raise BlowUpError(t + dt)
        self._previous = explicit
        self.steps += 1
        self.t = self.t0 + self.steps * dt
        self.state = SpectralField.trusted(new, solenoidal=True)
        return self.state

    def overwrite(self, state: SpectralField) -> None:
        """Замена текущего поля (история явной части сохраняется)."""
        self.state = SpectralField.trusted(np.array(state.coeffs), solenoidal=True)


def step(state: SpectralField, t: float, dt: float, config: SolverConfig) -> SpectralField:
    """
    Один шаг из состояния `state` в момент `t` без истории явной части.

    Без истории явная часть берется по Эйлеру (стартовый шаг CNAB2).

    Parameters
    ----------
    state : SpectralField
        Бездивергентное поле с нулевым средним.
    t : float
        Время.
    dt : float
        Шаг.
    config : SolverConfig
        Конфигурация (используются вязкость и сила).

    Returns
    -------
    return : SpectralField
        Поле в момент t + dt.

    Raises
    ------
    PreconditionError
        Если поле не бездивергентно или имеет ненулевое среднее.
    ConfigError
        Если `dt` превышает границу устойчивости для `state` и силы из `config`.
    BlowUpError
        Если коэффициенты стали NaN или бесконечными.
    """
    if not state.is_solenoidal() or np.any(state.mean != 0.0):
        raise PreconditionError("step requires a solenoidal zero-mean state")
    config = replace(config, dt=float(dt), t_end=float(dt), initial=InitialSpec(InitialKind.ZERO))
    return Stepper(config, state, t0=t).advance()


def trajectory_gen(config: SolverConfig, state: SpectralField = None) -> Iterator[Tuple[float, SpectralField]]:
    """
    Генератор пар (время, поле) с шагом записи `sample_stride`.

    Конечное время всегда входит в выборку.
    """
    stepper = Stepper(config, state)
    yield stepper.t, stepper.state
    while stepper.steps < config.n_steps:
        stepper.advance()
        if stepper.steps % config.sample_stride == 0 or stepper.steps == config.n_steps:
            stepper.check_cfl()
            yield stepper.t, stepper.state


def integrate(config: SolverConfig, state: SpectralField = None) -> TrajectoryRecord:
    """
    Расчет траектории на [0, t_end].

    Parameters
    ----------
    config : SolverConfig
        Конфигурация.
    state : SpectralField, optional
        Начальное поле (по умолчанию по `config.initial`).

    Returns
    -------
    return : TrajectoryRecord
        Запись траектории с диагностикой энергетического баланса.

    Raises
    ------
    ConfigError
        Если шаг превышает границу устойчивости.
    BlowUpError
        При потере устойчивости.
    """
    stepper = Stepper(config, state)
    n = config.resolution
    space = stepper.nu_field is not None
    logger.info("Integrating n=%d, dt=%g, t_end=%g, viscosity=%s", n, config.dt, config.t_end,
                config.viscosity.kind.value)
    series = {name: [] for name in ('time', 'h_norm', 'v_norm', 'f_vdual', 'nu', 'dissipation', 'power',
                                    'gradnu_vdual', 'coercivity_margin', 'inv_nu_dissipation')}
    intervals = {'dissipation_integral': [], 'power_integral': []}
    snapshots = []

    def _sample(t: float, state: SpectralField, d: float, p: float) -> None:
        norms = compute_norms(state)
        nu = stepper.nu_at(t)
        series['time'].append(t)
        series['h_norm'].append(norms.h_norm)
        series['v_norm'].append(norms.v_norm)
        series['f_vdual'].append(vdual_norm(SpectralField.trusted(stepper.forcing(t), True)))
        series['nu'].append(nu)
        series['dissipation'].append(d)
        series['power'].append(p)
        if space:
            series['gradnu_vdual'].append(compute_norms(gradnu_gradu(stepper.nu_field, state)).vdual_norm)
            margin = a_nu(stepper.nu_field, state, state).value - stepper.nu_lower * norms.v_norm ** 2
            series['coercivity_margin'].append(margin)
        else:
            series['gradnu_vdual'].append(0.0)
            series['coercivity_margin'].append(0.0)
        series['inv_nu_dissipation'].append(norms.v_norm ** 2 / nu)
        logger.debug("t=%.6g |u|_H=%.6g |u|_V=%.6g", t, norms.h_norm, norms.v_norm)

    d_prev = stepper.dissipation(stepper.state, 0.0)
    p_prev = stepper.power(stepper.state, 0.0)
    _sample(0.0, stepper.state, d_prev, p_prev)
    acc_d = acc_p = 0.0
    samples = 0
    while stepper.steps < config.n_steps:
        state = stepper.advance()
        d_new, p_new = stepper.dissipation(state, stepper.t), stepper.power(state, stepper.t)
        acc_d += 0.5 * config.dt * (d_prev + d_new)
        acc_p += 0.5 * config.dt * (p_prev + p_new)
        d_prev, p_prev = d_new, p_new
        if stepper.steps % config.sample_stride == 0 or stepper.steps == config.n_steps:
            stepper.check_cfl()
            _sample(stepper.t, state, d_new, p_new)
            intervals['dissipation_integral'].append(acc_d)
            intervals['power_integral'].append(acc_p)
            acc_d = acc_p = 0.0
            samples += 1
            if config.snapshot_stride and samples % config.snapshot_stride == 0:
                snapshots.append((stepper.t, state))
    if not snapshots or snapshots[-1][0] != stepper.t:
        snapshots.append((stepper.t, stepper.state))

    h_norm = np.asarray(series['h_norm'])
    residual = _residual(h_norm, np.asarray(intervals['dissipation_integral']),
                         np.asarray(intervals['power_integral']))
    record = TrajectoryRecord(residual=np.concatenate([[0.0], residual]),
                              nu_lower=stepper.nu_lower, nu_upper=stepper.nu_upper, seed=config.seed,
                              config=config.to_dict(), snapshots=tuple(snapshots), **series, **intervals)
    logger.info("Finished at t=%g: |u|_H=%.6g, max residual %.3g", stepper.t, h_norm[-1],
                float(np.abs(residual).max(initial=0.0)))
    return record


def _residual(h_norm: np.ndarray, dissipation: np.ndarray, power: np.ndarray) -> np.ndarray:
    energy = 0.5 * h_norm ** 2
    defect = np.diff(energy) + dissipation - power
    out = np.zeros_like(defect)
    np.divide(defect, dissipation, out=out, where=dissipation > 0.0)
    return np.where(dissipation > 0.0, out, defect)


def energy_balance_residual(record: TrajectoryRecord) -> np.ndarray:
    """
    Невязка дискретного энергетического тождества ½ d/dt‖u‖²_H + (ν∇u, ∇u) = ⟨f, u⟩.

    Для каждого интервала между отсчетами вычисляется
    (ΔE + ∫D dt − ∫⟨f,u⟩ dt) / ∫D dt, E = ½‖u‖²_H; при ∫D dt = 0
    возвращается абсолютная невязка.

    Parameters
    ----------
    record : TrajectoryRecord
        Запись не менее чем из трех отсчетов.

    Returns
    -------
    return : np.ndarray
        Ряд длины m − 1.

    Raises
    ------
    PreconditionError
        Если отсчетов меньше трех.
    """
    if len(record) < 3:
        raise PreconditionError(f"Energy balance needs at least 3 samples, got {len(record)}")
    return _residual(record.h_norm, record.dissipation_integral, record.power_integral)

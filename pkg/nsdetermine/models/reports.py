from __future__ import annotations

from dataclasses import dataclass, asdict, field, fields
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from nsdetermine.utils import (EstimateId, GronwallOutcome, ProjectionKind, TwinMode, TwinVerdict,
                               ConfigError, PreconditionError, enum_value, pd)


@dataclass(frozen=True)
class EstimateReport:
    """Модель объекта `Проверка априорной оценки`

    Attributes
    ----------
    estimate : EstimateId
        Идентификатор оценки
    measured : float
        Измеренная левая часть (lim sup или среднее по окну)
    bound : float
        Правая часть со всеми подставленными константами
    margin : float
        bound − measured
    tolerance : float
        Допуск на дискретизацию
    window : tuple[float, float]
        Окно, по которому взят lim sup или начала окон усреднения
    satisfied : bool
        margin ≥ −tolerance
    averaging_time : float, optional
        Длина окна усреднения T для оценок, усредненных по времени
    coercivity_satisfied : bool, optional
        Статус условия коэрцитивности (для вязкости, зависящей от координат)
    coercivity_margin : float, optional
        Наименьший измеренный запас коэрцитивности
    note : str
        Комментарий
    """
    estimate: EstimateId
    measured: float
    bound: float
    margin: float
    tolerance: float
    window: Tuple[float, float]
    satisfied: bool
    averaging_time: Optional[float] = None
    coercivity_satisfied: Optional[bool] = None
    coercivity_margin: Optional[float] = None
    note: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'estimate', enum_value(EstimateId, self.estimate, 'estimate'))
        object.__setattr__(self, 'window', tuple(float(t) for t in self.window))
        if self.satisfied != (self.margin >= -self.tolerance):
            raise PreconditionError(f"Verdict {self.satisfied} contradicts margin {self.margin} "
                                    f"and tolerance {self.tolerance}")

    def to_dict(self) -> dict:
        data = asdict(self)
        data['estimate'] = self.estimate.value
        data['window'] = list(self.window)
        return data


@dataclass(frozen=True)
class GronwallVerdict:
    """Модель объекта `Классификация обобщенным неравенством Гронуолла`

    Attributes
    ----------
    m : float
        lim inf средних по окну значений α
    M : float
        lim sup средних по окну значений α⁻ = max(−α, 0)
    beta_plus_limit : float
        Среднее β⁺ по последнему окну
    y_limit : float
        Наибольшее значение y на последнем окне
    averaging_time : float
        Длина окна T
    threshold : float
        Порог, ниже которого y считается стремящимся к нулю
    hypotheses_met : bool
        m > 0, M < ∞ и β⁺ → 0 на данных
    verdict : GronwallOutcome
        Результат классификации
    """
    m: float
    M: float
    beta_plus_limit: float
    y_limit: float
    averaging_time: float
    threshold: float
    hypotheses_met: bool
    verdict: GronwallOutcome

    def to_dict(self) -> dict:
        data = asdict(self)
        data['verdict'] = self.verdict.value
        return data


@dataclass(frozen=True)
class CertificationArtifact:
    """Модель объекта `Сертификат констант аппроксимации`

    Attributes
    ----------
    kind : ProjectionKind
        Семейство проекторов
    family : tuple[int, ...]
        Параметры семейства (K_cut или M)
    n_values : tuple[int, ...]
        Число функционалов N для каждого параметра
    ratios : tuple[float, ...]
        r(N) = max ‖u − R_N u‖ / ‖u‖_V по выборке
    c1_fitted : float
        C1 из подгонки log r = log C1 − γ log N
    gamma : float
        Показатель γ
    fit_residual : float
        Среднеквадратичная невязка подгонки в логарифмах
    c1_analytic : float
        C1 из аналитической оценки хвоста при найденном γ
    c1 : float
        Сертифицированное значение max(c1_fitted, c1_analytic)
    sample_count : int
        Число случайных полей на каждый параметр
    resolution : int
        Разрешение
    seed : int
        Зерно генератора
    """
    kind: ProjectionKind
    family: Tuple[int, ...]
    n_values: Tuple[int, ...]
    ratios: Tuple[float, ...]
    c1_fitted: float
    gamma: float
    fit_residual: float
    c1_analytic: float
    c1: float
    sample_count: int
    resolution: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, 'kind', enum_value(ProjectionKind, self.kind, 'certificate.kind'))
        for name in ('family', 'n_values'):
            object.__setattr__(self, name, tuple(int(item) for item in getattr(self, name)))
        object.__setattr__(self, 'ratios', tuple(float(item) for item in self.ratios))

    @classmethod
    def from_dict(cls, data: dict) -> CertificationArtifact:
        names = {item.name for item in fields(cls)}
        if missing := names - set(data):
            raise ConfigError(f"certificate: missing keys {sorted(missing)}")
        return cls(**{name: data[name] for name in names})

    def to_dict(self) -> dict:
        data = asdict(self)
        data.update(kind=self.kind.value, family=list(self.family), n_values=list(self.n_values),
                    ratios=list(self.ratios))
        return data


@dataclass(frozen=True)
class TwinSample:
    """Модель объекта `Отсчет эксперимента с двумя решениями`

    Attributes
    ----------
    time : float
        Модельное время
    h_diff : float
        ‖u − v‖_H
    projected_diff : float
        ‖R_N(u − v)‖_{L²}
    alpha : float
        α(t) в неравенстве d/dt‖w‖² + α‖w‖² ≤ β
    beta : float
        β(t)
    y : float
        ‖w‖²_H
    """
    time: float
    h_diff: float
    projected_diff: float
    alpha: float
    beta: float
    y: float


@dataclass(frozen=True, eq=False)
class TwinReport:
    """Модель объекта `Результат эксперимента с двумя решениями`

    Attributes
    ----------
    time, h_diff, projected_diff, alpha, beta, y : np.ndarray
        Ряды (см. `TwinSample`)
    mode : TwinMode
        Способ навязывания условия на проекции
    n_functionals : int
        Число функционалов N
    n_bound : int, optional
        Достаточное N из оценки (None, если оценка неприменима)
    mu : float
        Коэффициент релаксации (для режима nudging)
    c1, gamma : float
        Константы аппроксимации, использованные в α и β
    epsilon_h : float
        Порог сходимости ε_H
    trailing_diff : float
        Наибольшее ‖u − v‖_H на последних 10% записи
    projection_held : bool
        Условие на проекции выполнено на хвосте записи
    verdict : TwinVerdict
        Вердикт
    config : dict
        Каноническая копия конфигурации
    """
    time: np.ndarray
    h_diff: np.ndarray
    projected_diff: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    y: np.ndarray
    mode: TwinMode
    n_functionals: int
    n_bound: Optional[int]
    mu: float
    c1: float
    gamma: float
    epsilon_h: float
    trailing_diff: float
    projection_held: bool
    verdict: TwinVerdict
    config: dict = field(default_factory=dict)

    _SERIES = ('time', 'h_diff', 'projected_diff', 'alpha', 'beta', 'y')

    def __post_init__(self):
        for name in self._SERIES:
            array = np.array(getattr(self, name), dtype=float)
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        object.__setattr__(self, 'mode', enum_value(TwinMode, self.mode, 'twin.mode'))
        object.__setattr__(self, 'verdict', enum_value(TwinVerdict, self.verdict, 'verdict'))

    @property
    def determined(self) -> bool:
        return self.verdict is TwinVerdict.DETERMINED

    def frame(self, use_dataframe: bool = True) -> Union[pd.DataFrame, Iterator[TwinSample]]:
        """
        Ряды эксперимента.

        Parameters
        ----------
        use_dataframe : bool
            Если `True`, возвращается `pd.DataFrame`, иначе итератор `TwinSample`.

        Returns
        -------
        return : pd.DataFrame | Iterator[TwinSample]
            Ряды эксперимента.
        """
        if use_dataframe:
            return pd.DataFrame({name: getattr(self, name) for name in self._SERIES}, columns=list(self._SERIES))
        return (TwinSample(*map(float, row)) for row in zip(*(getattr(self, name) for name in self._SERIES)))

    def to_dict(self) -> dict:
        data = {item.name: getattr(self, item.name) for item in fields(self)}
        data.update(mode=self.mode.value, verdict=self.verdict.value)
        return {key: value.tolist() if isinstance(value, np.ndarray) else value for key, value in data.items()}

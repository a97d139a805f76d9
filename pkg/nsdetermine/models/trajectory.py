from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Iterator, Tuple, Union

import numpy as np

from nsdetermine.utils import PreconditionError, pd

TRAJECTORY_COLUMNS = ('time', 'h_norm', 'v_norm', 'f_vdual', 'nu', 'residual')
DIAGNOSTIC_COLUMNS = ('dissipation', 'power', 'gradnu_vdual', 'coercivity_margin', 'inv_nu_dissipation')


@dataclass(frozen=True)
class TrajectorySample:
    """Модель объекта `Отсчет траектории`

    Attributes
    ----------
    time : float
        Модельное время
    h_norm : float
        ‖u‖_H
    v_norm : float
        ‖u‖_V
    f_vdual : float
        ‖f‖_{V′}
    nu : float
        ν(t), для вязкости, зависящей от координат, ν̲
    residual : float
        Относительная невязка энергетического баланса на интервале, заканчивающемся в отсчете
    dissipation : float
        Диссипация D = (ν∇u, ∇u)
    power : float
        Мощность силы ⟨f, u⟩
    gradnu_vdual : float
        ‖P(∇ν·∇u)‖_{V′}
    coercivity_margin : float
        a(νu, u) − ν̲‖u‖²_V
    inv_nu_dissipation : float
        ‖u‖²_V / ν (подынтегральное выражение диагностики ∫(1/ν)‖u‖²_V)
    """
    time: float
    h_norm: float
    v_norm: float
    f_vdual: float
    nu: float
    residual: float
    dissipation: float
    power: float
    gradnu_vdual: float
    coercivity_margin: float
    inv_nu_dissipation: float


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Модель объекта `Запись траектории`

    Массивы отсчетов имеют длину m, интегралы по интервалам между
    отсчетами имеют длину m − 1.

    Attributes
    ----------
    time, h_norm, v_norm, f_vdual, nu, residual : np.ndarray
        Основные ряды (см. `TrajectorySample`)
    dissipation, power, gradnu_vdual, coercivity_margin, inv_nu_dissipation : np.ndarray
        Диагностические ряды
    dissipation_integral : np.ndarray
        ∫D dt по каждому интервалу (формула трапеций по шагам)
    power_integral : np.ndarray
        ∫⟨f, u⟩ dt по каждому интервалу
    nu_lower, nu_upper : float
        Границы вязкости на горизонте
    seed : int
        Зерно генератора
    config : dict
        Каноническая копия конфигурации
    snapshots : tuple
        Пары (время, SpectralField)
    """
    time: np.ndarray
    h_norm: np.ndarray
    v_norm: np.ndarray
    f_vdual: np.ndarray
    nu: np.ndarray
    residual: np.ndarray
    dissipation: np.ndarray
    power: np.ndarray
    gradnu_vdual: np.ndarray
    coercivity_margin: np.ndarray
    inv_nu_dissipation: np.ndarray
    dissipation_integral: np.ndarray
    power_integral: np.ndarray
    nu_lower: float
    nu_upper: float
    seed: int
    config: dict
    snapshots: Tuple = field(default=())

    def __post_init__(self):
        for item in fields(self):
            value = getattr(self, item.name)
            if isinstance(value, (list, np.ndarray)):
                array = np.array(value, dtype=float)
                array.setflags(write=False)
                object.__setattr__(self, item.name, array)
        if not np.all(np.diff(self.time) > 0.0):
            raise PreconditionError("Record times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.time)

    @property
    def span(self) -> float:
        return float(self.time[-1] - self.time[0])

    def samples(self) -> Iterator[TrajectorySample]:
        columns = TRAJECTORY_COLUMNS + DIAGNOSTIC_COLUMNS
        for row in zip(*(getattr(self, name) for name in columns)):
            yield TrajectorySample(*map(float, row))

    def frame(self, use_dataframe: bool = True) -> Union[pd.DataFrame, Iterator[TrajectorySample]]:
        """
        Ряды траектории.

        Parameters
        ----------
        use_dataframe : bool
            Если `True`, возвращается `pd.DataFrame`, иначе итератор `TrajectorySample`.

        Returns
        -------
        return : pd.DataFrame | Iterator[TrajectorySample]
            Ряды траектории.
        """
        if use_dataframe:
            columns = TRAJECTORY_COLUMNS + DIAGNOSTIC_COLUMNS
            return pd.DataFrame({name: getattr(self, name) for name in columns}, columns=list(columns))
        return self.samples()

    def to_dict(self) -> dict:
        data = {item.name: getattr(self, item.name) for item in fields(self) if item.name != 'snapshots'}
        data['snapshot_times'] = [t for t, _ in self.snapshots]
        return {key: value.tolist() if isinstance(value, np.ndarray) else value for key, value in data.items()}

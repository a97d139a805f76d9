from __future__ import annotations

import dataclasses
import json as _json
from enum import Enum

import numpy as np


class ResolutionMismatchError(ValueError):
    """
    Исключение, возникающее при несовместимых разрешениях (размерах сеток) полей.

    Attributes
    ----------
    message : str
        Сообщение об ошибке
    """

    def __init__(self, message: str = "Fields have incompatible resolutions") -> None:
        self.message = message
        super().__init__(self.message)


class PreconditionError(ValueError):
    """
    Исключение, возникающее при нарушении предусловия операции.

    Attributes
    ----------
    message : str
        Сообщение об ошибке
    """

    def __init__(self, message: str = "Operation precondition is violated") -> None:
        self.message = message
        super().__init__(self.message)


class ViscosityModelError(ValueError):
    """
    Исключение, возникающее при некорректной модели вязкости.

    Attributes
    ----------
    message : str
        Сообщение об ошибке
    """

    def __init__(self, message: str = "Viscosity must stay strictly positive") -> None:
        self.message = message
        super().__init__(self.message)


class InsufficientHorizonError(ValueError):
    """
    Исключение, возникающее если горизонт интегрирования (или длина записи)
    слишком короткий для оценки `lim sup`.

    Attributes
    ----------
    message : str
        Сообщение об ошибке
    """

    def __init__(self, message: str = "Horizon is too short") -> None:
        self.message = message
        super().__init__(self.message)


class DegenerateDataError(ValueError):
    """
    Исключение, возникающее при вырожденных данных для подгонки констант.

    Attributes
    ----------
    message : str
        Сообщение об ошибке
    """

    def __init__(self, message: str = "Data are degenerate, fit rejected") -> None:
        self.message = message
        super().__init__(self.message)


class ConfigError(ValueError):
    """
    Исключение, возникающее при некорректной конфигурации эксперимента.

    Attributes
    ----------
    message : str
        Сообщение об ошибке
    """

    def __init__(self, message: str = "Invalid configuration") -> None:
        self.message = message
        super().__init__(self.message)


class BlowUpError(ArithmeticError):
    """
    Исключение, возникающее при потере устойчивости расчета (NaN, переполнение).

    Attributes
    ----------
    message : str
        Сообщение об ошибке
    time : float
        Модельное время, на котором обнаружена неустойчивость.
    """

    def __init__(self, time: float, message: str = None) -> None:
        """
        Parameters
        ----------
        time : float
            Модельное время.
        message : str
            Сообщение об ошибке

        Returns
        -------
        return : None
        """
        self.time = float(time)
        self.message = message or f"Solution blew up at t = {self.time:.6g}"
        super().__init__(self.message)


class ViscosityKind(Enum):
    """
    Тип модели вязкости.

    Attributes
    ----------
    CONSTANT : str
        Постоянная вязкость.
    TIME_VARYING : str
        Вязкость, зависящая от времени.
    SPACE_VARYING : str
        Вязкость, зависящая от координат.
    """
    CONSTANT = 'constant'
    TIME_VARYING = 'time_varying'
    SPACE_VARYING = 'space_varying'


class TimeProfile(Enum):
    """
    Профиль зависимости вязкости от времени.

    Attributes
    ----------
    CONSTANT : str
        ν(t) = ν₀
    SINUSOIDAL : str
        ν(t) = ν₀(1 + ε sin ωt)
    PIECEWISE : str
        Кусочно-постоянное расписание.
    DECAYING : str
        ν(t) = floor + (ν₀ − floor) e^{−rate·t}
    """
    CONSTANT = 'constant'
    SINUSOIDAL = 'sinusoidal'
    PIECEWISE = 'piecewise'
    DECAYING = 'decaying'


class ForcingKind(Enum):
    """
    Тип внешней силы.

    Attributes
    ----------
    ZERO : str
        Без силы.
    KOLMOGOROV : str
        (a sin(k_f y), 0)
    MODULATED : str
        (a(1 + ε sin ωt) sin(k_f y), 0)
    """
    ZERO = 'zero'
    KOLMOGOROV = 'kolmogorov'
    MODULATED = 'modulated'


class InitialKind(Enum):
    """
    Тип начальных данных.
    """
    ZERO = 'zero'
    RANDOM = 'random'
    TAYLOR_GREEN = 'taylor_green'
    SHEAR = 'shear'
    MODE = 'mode'


class ProjectionKind(Enum):
    """
    Семейство определяющих проекторов.

    Attributes
    ----------
    MODAL : str
        Спектральное усечение (определяющие моды).
    VOLUME : str
        Средние по ячейкам (определяющие объемы).
    """
    MODAL = 'modal'
    VOLUME = 'volume'


class TwinMode(Enum):
    """
    Способ навязывания условия на проекции разности двух решений.
    """
    SLAVING = 'slaving'
    NUDGING = 'nudging'


class EstimateId(Enum):
    """
    Идентификаторы априорных оценок.
    """
    ENERGY1 = 'energy1'
    ENERGY2 = 'energy2'
    TIME_ENERGY1 = 'time-energy1'
    TIME_ENERGY3 = 'time-energy3'
    ENERGY2_TIME = 'energy2-time'
    ENERGY1_SPACE = 'energy1-space'
    ENERGY2_SPACE = 'energy2-space'


class GronwallOutcome(Enum):
    """
    Классификация ряда обобщенным неравенством Гронуолла.

    Attributes
    ----------
    CONSISTENT : str
        Гипотезы выполнены и `y` стремится к нулю.
    HYPOTHESES_NOT_MET : str
        Гипотезы леммы не выполнены на данных.
    INCONCLUSIVE : str
        Гипотезы выполнены, но горизонт недостаточен, чтобы увидеть `y → 0`.
    """
    CONSISTENT = 'consistent'
    HYPOTHESES_NOT_MET = 'hypotheses-not-met'
    INCONCLUSIVE = 'inconclusive'


class TwinVerdict(Enum):
    """
    Вердикт эксперимента с двумя решениями.
    """
    DETERMINED = 'determined'
    NOT_DETERMINED = 'not-determined-within-horizon'


class RequiredImport:
    """
    Класс для импорта библиотеки, если она не была установлена.

    Attributes
    ----------
    __name : str
        Название библиотеки (модуля).
    """

    def __init__(self, name: str) -> None:
        self.__name = name

    def __getattr__(self, item: str) -> None:
        raise ImportError(f'Required `{self.__name}`')


try:
    import pandas as pd
except ImportError:
    pd = RequiredImport('pandas')

try:
    import tomllib
except ImportError:
    try:
        import tomli as tomllib
    except ImportError:
        tomllib = RequiredImport('tomli')


class json:
    """
    Класс для работы с JSON.

    Сериализация детерминирована: ключи сортируются, отступ фиксирован,
    numpy-скаляры и массивы, перечисления и dataclass-объекты
    преобразуются в стандартные типы.

    Attributes
    ----------
    loads : Callable
        Загрузка JSON.
    JSONDecodeError : Exception
        Исключение при ошибке декодирования JSON.
    dumps : Callable
        Сохранение JSON.
    """
    loads = _json.loads
    JSONDecodeError = _json.JSONDecodeError

    @staticmethod
    def dumps(obj: object, **kwargs) -> str:
        """
        Parameters
        ----------
        obj : object
            Объект данных.
        kwargs : Any
            Ключевые аргументы `json.dumps`.

        Returns
        -------
        return : str
            Строка JSON.
        """

        def default(obj: object) -> object:
            if isinstance(obj, np.integer):
                return int(obj)
            elif isinstance(obj, np.floating):
                return float(obj)
            elif isinstance(obj, np.bool_):
                return bool(obj)
            elif isinstance(obj, np.ndarray):
                return obj.tolist()
            elif isinstance(obj, Enum):
                return obj.value
            elif dataclasses.is_dataclass(obj):
                return obj.to_dict() if hasattr(obj, 'to_dict') else dataclasses.asdict(obj)
            raise TypeError(f'Object of type {type(obj).__name__} is not JSON serializable')

        kwargs.setdefault('sort_keys', True)
        kwargs.setdefault('indent', 2)
        return _json.dumps(obj, default=default, **kwargs)


def enum_value(enum_cls: type, value: object, section: str = '') -> Enum:
    """
    Преобразование значения конфигурации в элемент перечисления.

    Parameters
    ----------
    enum_cls : type
        Класс перечисления.
    value : object
        Значение или элемент перечисления.
    section : str
        Секция конфигурации (для сообщения об ошибке).

    Returns
    -------
    return : Enum
        Элемент перечисления.

    Raises
    ------
    ConfigError
        Если значение не поддерживается.
    """
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ', '.join(item.value for item in enum_cls)
        raise ConfigError(f"{section}: unsupported value `{value}`, expected one of: {allowed}") from None

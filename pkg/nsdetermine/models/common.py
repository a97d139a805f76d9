from dataclasses import dataclass, asdict

from nsdetermine.utils import PreconditionError


@dataclass(frozen=True)
class NormReport:
    """Модель объекта `Нормы поля`

    Attributes
    ----------
    h_norm : float
        Норма в H (L²), ‖u‖_H
    v_norm : float
        Норма в V (полунорма H¹), ‖u‖_V
    vdual_norm : float
        Двойственная норма V′, ‖A^{-1/2}u‖_H
    """
    h_norm: float
    v_norm: float
    vdual_norm: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FormValue:
    """Модель объекта `Значение формы`

    Attributes
    ----------
    value : float
        Значение билинейной или трилинейной формы
    residual_estimate : float
        Индикатор погрешности (доля энергии аргументов вне полосы без алиасинга)
    """
    value: float
    residual_estimate: float = 0.0

    def __post_init__(self):
        if not self.residual_estimate >= 0.0:
            raise PreconditionError(f"Residual estimate must be non-negative, got {self.residual_estimate}")

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class CoercivityReport:
    """Модель объекта `Проверка коэрцитивности`

    Attributes
    ----------
    a_nu : float
        Измеренное значение a(νu, u)
    lower_bound : float
        ν̲‖u‖²_V
    margin : float
        a(νu, u) − ν̲‖u‖²_V
    satisfied : bool
        Выполнено ли неравенство a(νu, u) ≥ ν̲‖u‖²_V
    """
    a_nu: float
    lower_bound: float
    margin: float
    satisfied: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ApproxInequalityReport:
    """Модель объекта `Проверка аппроксимационных неравенств`

    Неравенства проверяются в квадратичной форме:
    ‖u‖² ≤ 2C1²N^{−2γ}‖u‖²_V + 2‖R_N u‖² и
    ‖u‖²_V ≥ [N^{2γ}/(2C1²)]‖u‖² − [N^{2γ}/C1²]‖R_N u‖².

    Attributes
    ----------
    first_lhs, first_rhs, first_margin : float
        Стороны и запас первого неравенства
    second_lhs, second_rhs, second_margin : float
        Стороны и запас второго неравенства
    satisfied : bool
        Оба неравенства выполнены
    """
    first_lhs: float
    first_rhs: float
    first_margin: float
    second_lhs: float
    second_rhs: float
    second_margin: float
    satisfied: bool

    def to_dict(self) -> dict:
        return asdict(self)

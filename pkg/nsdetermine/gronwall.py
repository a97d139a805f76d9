"""
Неравенство Юнга и проверки неравенств Гронуолла на дискретных рядах.
"""
from __future__ import annotations

import logging
from typing import Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from nsdetermine.estimates import window_averages
from nsdetermine.models import GronwallVerdict
from nsdetermine.utils import GronwallOutcome, PreconditionError

logger = logging.getLogger(__name__)

Y_THRESHOLD = 1e-6
BETA_TOLERANCE = 1e-6


def young(a: float, b: float, p: float, q: float = None) -> Tuple[float, float, bool]:
    """
    Неравенство Юнга ab ≤ a^p/p + b^q/q для a, b ≥ 0 и 1/p + 1/q = 1.

    Returns
    -------
    return : tuple[float, float, bool]
        Левая часть, правая часть и признак выполнения.

    Raises
    ------
    PreconditionError
        Если a или b отрицательны, p ≤ 1 или показатели не сопряжены.
    """
    if a < 0.0 or b < 0.0:
        raise PreconditionError(f"Young's inequality needs a, b >= 0, got {a}, {b}")
    if not p > 1.0:
        raise PreconditionError(f"Exponent p must exceed 1, got {p}")
    q = p / (p - 1.0) if q is None else float(q)
    if abs(1.0 / p + 1.0 / q - 1.0) > 1e-12:
        raise PreconditionError(f"Exponents {p}, {q} are not conjugate")
    lhs, rhs = a * b, a ** p / p + b ** q / q
    return lhs, rhs, bool(lhs <= rhs * (1.0 + 1e-12))


def _as_series(grid, *series) -> Tuple[np.ndarray, ...]:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0.0):
        raise PreconditionError("Grid must be a strictly increasing 1-D array with at least two points")
    arrays = tuple(np.broadcast_to(np.asarray(item, dtype=float), grid.shape) for item in series)
    return (grid,) + arrays


def gronwall_classical(y0: float, alpha, beta, grid) -> np.ndarray:
    """
    Граница y₀e^{−∫₀ᵗα} + ∫₀ᵗ β(s)e^{−∫ₛᵗα} ds для y′ + αy ≤ β.

    Интеграл вычисляется рекуррентно по формуле трапеций:
    I_{j+1} = I_j e^{−ΔA_j} + (Δt_j/2)(β_j e^{−ΔA_j} + β_{j+1}),
    ΔA_j - интеграл α по [t_j, t_{j+1}] по формуле трапеций.

    Parameters
    ----------
    y0 : float
        Начальное значение.
    alpha, beta : array_like
        Неотрицательные ряды на сетке (или скаляры).
    grid : array_like
        Возрастающая сетка времени.

    Returns
    -------
    return : np.ndarray
        Граница в узлах сетки.

    Raises
    ------
    PreconditionError
        Если α или β принимают отрицательные значения.
    """
    grid, alpha, beta = _as_series(grid, alpha, beta)
    if np.any(alpha < 0.0) or np.any(beta < 0.0):
        raise PreconditionError("Classical Gronwall bound needs alpha >= 0 and beta >= 0")
    steps = np.diff(grid)
    decay = np.exp(-0.5 * steps * (alpha[1:] + alpha[:-1]))
    integral = np.zeros_like(grid)
    for j, (dt, factor) in enumerate(zip(steps, decay)):
        integral[j + 1] = integral[j] * factor + 0.5 * dt * (beta[j] * factor + beta[j + 1])
    total_decay = np.exp(-cumulative_trapezoid(alpha, grid, initial=0.0))
    return y0 * total_decay + integral


def check_dominated(y, bound, tol: float = 1e-8) -> bool:
    """Проверка y ≤ bound + tol во всех узлах."""
    return bool(np.all(np.asarray(y) <= np.asarray(bound) + tol))


def gronwall_generalized_check(alpha,
                               beta,
                               y,
                               averaging_time: float,
                               grid,
                               threshold: float = Y_THRESHOLD,
                               beta_tol: float = BETA_TOLERANCE) -> GronwallVerdict:
    """
    Классификация рядов по гипотезам обобщенной леммы Гронуолла.

    Средние по окнам длины T берутся с началами во второй половине
    допустимого диапазона: m - наименьшее среднее α, M - наибольшее
    среднее α⁻, β⁺ - среднее по последнему окну, y - максимум на последнем окне.

    Parameters
    ----------
    alpha, beta, y : array_like
        Ряды на сетке.
    averaging_time : float
        Длина окна T.
    grid : array_like
        Сетка времени.
    threshold : float
        Порог для y на последнем окне.
    beta_tol : float
        Порог для β⁺.

    Returns
    -------
    return : GronwallVerdict
        Классификация; контрпример к лемме никогда не утверждается.

    Raises
    ------
    PreconditionError
        Если T больше длины ряда.
    """
    grid, alpha, beta, y = _as_series(grid, alpha, beta, y)
    span = grid[-1] - grid[0]
    if not 0.0 < averaging_time <= span:
        raise PreconditionError(f"T = {averaging_time} must lie in (0, {span}]")
    first_start = grid[0] + 0.5 * (span - averaging_time)
    m = float(window_averages(grid, alpha, averaging_time, first_start).min())
    big_m = float(window_averages(grid, np.maximum(-alpha, 0.0), averaging_time, first_start).max())
    last = grid[-1] - averaging_time
    beta_plus = float(window_averages(grid, np.maximum(beta, 0.0), averaging_time,
                                      grid[np.searchsorted(grid, last, side='right') - 1])[-1])
    y_limit = float(y[grid >= last].max())
    hypotheses = bool(m > 0.0 and np.isfinite(big_m) and beta_plus <= beta_tol)
    if not hypotheses:
        verdict = GronwallOutcome.HYPOTHESES_NOT_MET
    elif y_limit <= threshold:
        verdict = GronwallOutcome.CONSISTENT
    else:
        verdict = GronwallOutcome.INCONCLUSIVE
    logger.info("Generalized Gronwall: m=%.4g M=%.4g beta+=%.3g y=%.3g -> %s", m, big_m, beta_plus, y_limit,
                verdict.value)
    return GronwallVerdict(m=m, M=big_m, beta_plus_limit=beta_plus, y_limit=y_limit, averaging_time=averaging_time,
                           threshold=threshold, hypotheses_met=hypotheses, verdict=verdict)

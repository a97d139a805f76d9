"""
Формы a(·,·), b(·,·,·), нелинейный член B(u,u) и члены переменной вязкости.

Все произведения вычисляются псевдоспектрально с усечением по правилу 2/3:
аргументы усекаются до полосы |k_j| < n/3, результат тоже.
"""
from __future__ import annotations

import numpy as np

from nsdetermine.fields import (SpectralField, ScalarField, compute_norms, project_coeffs,
                                to_grid, to_spectral, wavenumbers)
from nsdetermine.models.common import FormValue
from nsdetermine.utils import PreconditionError, ResolutionMismatchError


def _check_resolution(*items) -> int:
    sizes = {item.n for item in items}
    if len(sizes) != 1:
        raise ResolutionMismatchError(f"Arguments have different resolutions: {sorted(sizes)}")
    return sizes.pop()


def _require_solenoidal(*fields: SpectralField) -> None:
    for field in fields:
        if not field.is_solenoidal():
            raise PreconditionError("Trilinear form requires divergence-free arguments")


def _require_zero_mean(*fields: SpectralField) -> None:
    for field in fields:
        if np.any(field.mean != 0.0):
            raise PreconditionError("Arguments must have zero mean")


def _require_positive(nu: ScalarField) -> None:
    if nu.lower <= 0.0 or nu.values.min() <= 0.0:
        raise PreconditionError(f"Viscosity must be positive, lower bound is {min(nu.lower, nu.values.min())}")


def aliasing_indicator(*fields: SpectralField) -> float:
    """Максимальная по аргументам доля нормы H вне полосы без алиасинга."""
    worst = 0.0
    for field in fields:
        power = np.abs(field.coeffs) ** 2
        total = power.sum()
        if total > 0.0:
            outside = power[:, ~wavenumbers(field.n).dealias].sum()
            worst = max(worst, float(np.sqrt(outside / total)))
    return worst


def gradient_grid(coeffs: np.ndarray) -> np.ndarray:
    """∂_j u_i в узлах сетки, форма (2, 2, n, n) с индексами [i, j]."""
    wn = wavenumbers(coeffs.shape[-1])
    return to_grid(np.stack([1j * wn.kx * coeffs, 1j * wn.ky * coeffs], axis=1))


def advection_coeffs(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Коэффициенты (u·∇)v после усечения по правилу 2/3 (без проекции Лерэ)."""
    mask = wavenumbers(u.shape[-1]).dealias
    velocity = to_grid(u * mask)
    grad = gradient_grid(v * mask)
    return to_spectral(velocity[0] * grad[:, 0] + velocity[1] * grad[:, 1]) * mask


def bilinear_a(u: SpectralField, v: SpectralField) -> FormValue:
    """
    Форма Дирихле a(u, v) = (∇u, ∇v)_H.

    Parameters
    ----------
    u, v : SpectralField
        Поля с нулевым средним.

    Returns
    -------
    return : FormValue
        Σ_k |k|² Re(û(k)·conj(v̂(k))).
    """
    n = _check_resolution(u, v)
    _require_zero_mean(u, v)
    value = np.real(np.sum(wavenumbers(n).k2 * u.coeffs * np.conj(v.coeffs)))
    return FormValue(float(value), 0.0)


def trilinear_b(u: SpectralField, v: SpectralField, w: SpectralField) -> FormValue:
    """
    Трилинейная форма b(u, v, w) = ((u·∇)v, w)_H.

    Parameters
    ----------
    u, v, w : SpectralField
        Бездивергентные поля одного разрешения.

    Returns
    -------
    return : FormValue
        Значение формы и индикатор алиасинга аргументов.

    Raises
    ------
    PreconditionError
        Если хотя бы одно поле не бездивергентно.
    """
    n = _check_resolution(u, v, w)
    _require_solenoidal(u, v, w)
    adv = advection_coeffs(u.coeffs, v.coeffs)
    value = np.real(np.vdot(w.coeffs * wavenumbers(n).dealias, adv))
    return FormValue(float(value), aliasing_indicator(u, v, w))


def nonlinear_B(u: SpectralField) -> SpectralField:
    """
    Нелинейный член B(u, u) = P[(u·∇)u].

    Example
    -------
    .. code-block:: python

        >>> tg = SpectralField.taylor_green(32)
        >>> compute_norms(nonlinear_B(tg)).h_norm < 1e-14
        True
    """
    _require_solenoidal(u)
    return SpectralField.trusted(project_coeffs(advection_coeffs(u.coeffs, u.coeffs)), solenoidal=True)


def gradnu_coeffs(nu: ScalarField, u: np.ndarray) -> np.ndarray:
    """Коэффициенты ∇ν·∇u_i (после усечения, без проекции)."""
    wn = wavenumbers(u.shape[-1])
    grad_nu = nu.gradient()
    grad_u = gradient_grid(u * wn.dealias)
    return to_spectral(grad_nu[0] * grad_u[:, 0] + grad_nu[1] * grad_u[:, 1]) * wn.dealias


def gradnu_gradu(nu: ScalarField, u: SpectralField) -> SpectralField:
    """
    Член [ν, u]_i = ∇ν·∇u_i, спроецированный по Лерэ.

    Parameters
    ----------
    nu : ScalarField
        Положительная вязкость на той же сетке.
    u : SpectralField
        Бездивергентное поле.

    Returns
    -------
    return : SpectralField
        P(∇ν·∇u) с нулевым средним.

    Raises
    ------
    PreconditionError
        Если вязкость не положительна или поле не бездивергентно.
    """
    _check_resolution(nu, u)
    _require_positive(nu)
    _require_solenoidal(u)
    return SpectralField.trusted(project_coeffs(gradnu_coeffs(nu, u.coeffs)), solenoidal=True)


def nu_times_coeffs(nu: ScalarField, u: np.ndarray) -> np.ndarray:
    """Коэффициенты произведения ν·u после усечения по правилу 2/3."""
    mask = wavenumbers(u.shape[-1]).dealias
    return to_spectral(nu.band_limited() * to_grid(u * mask)) * mask


def a_nu(nu: ScalarField, u: SpectralField, v: SpectralField) -> FormValue:
    """
    Форма a(νu, v) = (∇[νu], ∇v)_H.

    Неравенство a(νu, u) ≥ ν̲‖u‖²_V здесь не предполагается, оно проверяется
    отдельно в `estimates.coercivity_check`.
    """
    n = _check_resolution(nu, u, v)
    _require_positive(nu)
    wn = wavenumbers(n)
    product = nu_times_coeffs(nu, u.coeffs)
    value = np.real(np.sum(wn.k2 * product * np.conj(v.coeffs * wn.dealias)))
    return FormValue(float(value), aliasing_indicator(u, v))


def viscous_pairing(nu: ScalarField, u: SpectralField, eta: SpectralField) -> FormValue:
    """
    Диагностика: a(νu, η) − (∇ν·∇u, η)_H, вязкая часть слабой формы
    с переменной по пространству вязкостью, записанная буквально.
    """
    first = a_nu(nu, u, eta)
    second = gradnu_gradu(nu, u).inner(eta)
    return FormValue(first.value - second, first.residual_estimate)


def ladyzhenskaya_bound(u: SpectralField, v: SpectralField, w: SpectralField) -> float:
    """
    Правая часть оценки |b(u,v,w)| ≤ √2 ‖u‖^{1/2}‖u‖_V^{1/2}‖v‖_V‖w‖^{1/2}‖w‖_V^{1/2}.

    Returns
    -------
    return : float
        Значение правой части.
    """
    nu_, nv, nw = compute_norms(u), compute_norms(v), compute_norms(w)
    return float(np.sqrt(2.0) * np.sqrt(nu_.h_norm * nu_.v_norm) * nv.v_norm * np.sqrt(nw.h_norm * nw.v_norm))

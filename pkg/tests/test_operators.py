import numpy as np
import pytest
from hypothesis import given, settings, strategies as hyp_st

from nsdetermine.fields import SpectralField, ScalarField, compute_norms, grid, project_coeffs, to_spectral
from nsdetermine.models import FormValue
from nsdetermine.operators import (a_nu, bilinear_a, gradnu_gradu, ladyzhenskaya_bound, nonlinear_B, trilinear_b,
                                   viscous_pairing)
from nsdetermine.utils import PreconditionError, ResolutionMismatchError


def fine_grid(n: int, factor: int = 4):
    """Узлы сетки в `factor` раз подробнее рабочей."""
    return grid(factor * n)


def restrict(values: np.ndarray, n: int) -> np.ndarray:
    """Коэффициенты Фурье значений на подробной сетке, усеченные до разрешения `n`."""
    coeffs = to_spectral(values)
    fine = coeffs.shape[-1]
    k = np.fft.fftfreq(n, 1.0 / n).astype(int)
    return coeffs[..., k[:, None] % fine, k[None, :] % fine]


def test_bilinear_form():
    u = SpectralField.mode(16, (1, 0))
    assert bilinear_a(u, u).value == pytest.approx(1.0, rel=1e-14)
    assert bilinear_a(u, SpectralField.mode(16, (2, 1))).value == 0.0
    p, q = SpectralField.random(16, seed=1), SpectralField.random(16, seed=2)
    assert bilinear_a(p, q).value == pytest.approx(bilinear_a(q, p).value, rel=1e-13)
    assert bilinear_a(p, p).value == pytest.approx(compute_norms(p).v_norm ** 2, rel=1e-13)
    with pytest.raises(ResolutionMismatchError):
        bilinear_a(p, SpectralField.random(32, seed=1))


def test_form_value_rejects_negative_residual():
    assert float(FormValue(2.5, 0.0)) == 2.5
    with pytest.raises(PreconditionError):
        FormValue(1.0, -1e-3)


@settings(max_examples=30, deadline=None)
@given(hyp_st.integers(min_value=0, max_value=2 ** 31))
def test_trilinear_symmetries(seed):
    rng = np.random.default_rng(seed)
    u, v, w = (SpectralField.random(16, rng, k_max=5) for _ in range(3))
    scale = compute_norms(u).v_norm * compute_norms(v).v_norm * compute_norms(w).v_norm
    assert abs(trilinear_b(u, v, v).value) <= 1e-10 * scale
    assert trilinear_b(u, v, w).value == pytest.approx(-trilinear_b(u, w, v).value, abs=1e-10 * scale)
    diff = u - v
    lhs = trilinear_b(diff, u, diff).value
    rhs = trilinear_b(u, u, diff).value - trilinear_b(v, v, diff).value
    assert lhs == pytest.approx(rhs, abs=1e-10 * scale)


def test_ladyzhenskaya_bound_holds():
    rng = np.random.default_rng(11)
    for _ in range(200):
        u, v, w = (SpectralField.random(16, rng, k_max=rng.uniform(2.5, 5.0)) for _ in range(3))
        assert abs(trilinear_b(u, v, w).value) <= ladyzhenskaya_bound(u, v, w)


def test_trilinear_against_quadrature():
    n = 32
    u, v, w = SpectralField.taylor_green(n), SpectralField.mode(n, (1, 1)), SpectralField.mode(n, (2, 0))
    x, y = fine_grid(n)
    u1, u2 = np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)
    dv = np.sin(x + y)
    convect = (u1 + u2) * np.stack([dv, -dv])
    w_values = np.stack([np.zeros_like(x), np.sqrt(2.0) * np.cos(2 * x)])
    oracle = np.mean(np.sum(convect * w_values, axis=0))
    value = trilinear_b(u, v, w)
    assert oracle == pytest.approx(np.sqrt(2.0) / 4.0, rel=1e-12)
    assert value.value == pytest.approx(oracle, abs=1e-10)
    assert value.residual_estimate < 1e-12


def test_trilinear_requires_solenoidal():
    x, y = grid(16)
    grad = SpectralField.from_physical(np.stack([np.cos(x), np.zeros_like(x)]))
    u = SpectralField.random(16, seed=0)
    with pytest.raises(PreconditionError):
        trilinear_b(grad, u, u)


def test_nonlinear_term_vanishes():
    assert compute_norms(nonlinear_B(SpectralField.taylor_green(32))).h_norm < 1e-14
    assert compute_norms(nonlinear_B(SpectralField.shear(32, 1))).h_norm < 1e-14


def test_nonlinear_term_against_quadrature():
    n = 32
    u = SpectralField.mode(n, (1, 2)) + SpectralField.mode(n, (2, 1), 0.5)
    x, y = fine_grid(n)
    # u = sum of √2·A·e⊥·cos(k·x)
    values = np.zeros((2,) + x.shape)
    grads = np.zeros((2, 2) + x.shape)
    for (kx, ky), amplitude in (((1, 2), 1.0), ((2, 1), 0.5)):
        e = np.sqrt(2.0) * amplitude * np.array([-ky, kx]) / np.hypot(kx, ky)
        phase = kx * x + ky * y
        values += e[:, None, None] * np.cos(phase)
        grads[:, 0] += -kx * e[:, None, None] * np.sin(phase)
        grads[:, 1] += -ky * e[:, None, None] * np.sin(phase)
    convect = values[0] * grads[:, 0] + values[1] * grads[:, 1]
    oracle = project_coeffs(restrict(convect, n))
    result = nonlinear_B(u)
    assert compute_norms(result).h_norm > 1e-3
    assert np.abs(result.coeffs - oracle).max() < 1e-10
    assert result.is_solenoidal()
    assert np.all(result.mean == 0.0)


def test_gradnu_gradu_cases():
    n = 32
    u = SpectralField.random(n, seed=4, k_max=6)
    assert np.abs(gradnu_gradu(ScalarField.constant(n, 0.7), u).coeffs).max() < 1e-14

    nu = ScalarField.from_function(n, lambda x, y: 1.0 + 0.1 * np.sin(x))
    assert np.abs(gradnu_gradu(nu, SpectralField.shear(n, 1)).coeffs).max() < 1e-14

    x, y = fine_grid(n)
    oracle = project_coeffs(restrict(0.1 * np.cos(x) * np.stack([np.cos(x) * np.cos(y),
                                                                 np.sin(x) * np.sin(y)]), n))
    result = gradnu_gradu(nu, SpectralField.taylor_green(n))
    assert compute_norms(result).h_norm > 0.01
    assert np.abs(result.coeffs - oracle).max() < 1e-10


def test_gradnu_gradu_requires_positive_viscosity():
    nu = ScalarField.from_function(16, lambda x, y: 0.05 + 0.1 * np.sin(x))
    with pytest.raises(PreconditionError):
        gradnu_gradu(nu, SpectralField.taylor_green(16))


def test_a_nu():
    n = 32
    u, v = SpectralField.random(n, seed=1, k_max=6), SpectralField.random(n, seed=2, k_max=6)
    value = a_nu(ScalarField.constant(n, 0.3), u, v).value
    assert value == pytest.approx(0.3 * bilinear_a(u, v).value, rel=1e-12)

    nu = ScalarField.from_function(n, lambda x, y: 1.0 + 0.5 * np.sin(x))
    tg = SpectralField.taylor_green(n)
    x, y = fine_grid(n)
    nu_fine = 1.0 + 0.5 * np.sin(x)
    u1, u2 = np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)
    grad_u = np.stack([[np.cos(x) * np.cos(y), -np.sin(x) * np.sin(y)],
                       [np.sin(x) * np.sin(y), -np.cos(x) * np.cos(y)]])
    grad_nu = np.stack([0.5 * np.cos(x), np.zeros_like(x)])
    grad_nu_u = grad_nu[None] * np.stack([u1, u2])[:, None] + nu_fine * grad_u
    oracle = np.mean(np.sum(grad_nu_u * grad_u, axis=(0, 1)))
    result = a_nu(nu, tg, tg).value
    assert result == pytest.approx(oracle, abs=1e-10)
    assert result >= nu.lower * compute_norms(tg).v_norm ** 2


def test_viscous_pairing_constant_viscosity():
    u, eta = SpectralField.random(16, seed=3), SpectralField.random(16, seed=4)
    pairing = viscous_pairing(ScalarField.constant(16, 2.0), u, eta)
    assert pairing.value == pytest.approx(2.0 * bilinear_a(u, eta).value, rel=1e-12)


if __name__ == '__main__':
    pytest.main()

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hyp_st

from conftest import gradient_field
from nsdetermine.fields import (SpectralField, ScalarField, compute_norms, grid, leray_project, load_snapshot,
                                poincare_constant, save_snapshot, stokes_lambda1, wavenumbers)
from nsdetermine.utils import PreconditionError, ResolutionMismatchError, ViscosityModelError


def test_leray_removes_gradients():
    for seed in range(3):
        field = gradient_field(32, seed)
        assert compute_norms(field).h_norm > 1.0
        projected = leray_project(field)
        assert np.abs(projected.coeffs).max() < 1e-12


def test_leray_keeps_solenoidal_fields():
    u = SpectralField.random(32, seed=1)
    projected = leray_project(u)
    assert np.allclose(projected.coeffs, u.coeffs, rtol=0.0, atol=1e-15)
    tg = SpectralField.taylor_green(16)
    assert np.allclose(leray_project(tg).coeffs, tg.coeffs, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(hyp_st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_leray_idempotent_and_self_adjoint(seed):
    rng = np.random.default_rng(seed)
    f = SpectralField.from_physical(rng.standard_normal((2, 16, 16)))
    g = SpectralField.from_physical(rng.standard_normal((2, 16, 16)))
    pf, pg = leray_project(f), leray_project(g)
    assert np.abs(leray_project(pf).coeffs - pf.coeffs).max() <= 1e-14 * max(np.abs(pf.coeffs).max(), 1.0)
    lhs, rhs = pf.inner(g), f.inner(pg)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), compute_norms(pf).h_norm * compute_norms(pg).h_norm)
    assert pf.divergence_norm() <= 1e-12 * compute_norms(pf).h_norm


def test_leray_requires_real_field():
    coeffs = np.zeros((2, 16, 16), dtype=complex)
    coeffs[0, 1, 0] = 1.0
    with pytest.raises(PreconditionError):
        leray_project(SpectralField(coeffs))


def test_norms_of_modes():
    norms = compute_norms(SpectralField.mode(16, (1, 0)))
    assert norms.h_norm == pytest.approx(1.0, rel=1e-14)
    assert norms.v_norm == pytest.approx(1.0, rel=1e-14)
    assert norms.vdual_norm == pytest.approx(1.0, rel=1e-14)

    norms = compute_norms(SpectralField.mode(16, (3, 4)))
    assert norms.h_norm == pytest.approx(1.0, rel=1e-14)
    assert norms.v_norm == pytest.approx(5.0, rel=1e-14)
    assert norms.vdual_norm == pytest.approx(0.2, rel=1e-14)


def test_norms_taylor_green():
    norms = compute_norms(SpectralField.taylor_green(32))
    assert norms.h_norm == pytest.approx(1.0 / np.sqrt(2.0), rel=1e-14)
    assert norms.v_norm == pytest.approx(1.0, rel=1e-14)


@settings(max_examples=20, deadline=None)
@given(hyp_st.integers(min_value=0, max_value=10_000))
def test_parseval_and_poincare(seed):
    u = SpectralField.random(32, seed=seed, amplitude=2.0)
    norms = compute_norms(u)
    quadrature = np.sqrt(np.mean(np.sum(u.to_physical() ** 2, axis=0)))
    assert norms.h_norm == pytest.approx(quadrature, rel=1e-10)
    assert norms.h_norm == pytest.approx(2.0, rel=1e-12)
    c = poincare_constant()
    assert norms.vdual_norm <= c * norms.h_norm * (1.0 + 1e-12)
    assert norms.h_norm <= c * norms.v_norm * (1.0 + 1e-12)


def test_norms_reject_mean():
    x, _ = grid(16)
    values = np.stack([np.ones_like(x) + np.sin(x), np.zeros_like(x)])
    field = SpectralField.from_physical(values, pin_mean=False)
    with pytest.raises(PreconditionError):
        compute_norms(field)


def test_zero_field_norms():
    norms = compute_norms(SpectralField.zeros(8))
    assert norms.h_norm == norms.v_norm == norms.vdual_norm == 0.0


def test_stokes_constants():
    assert stokes_lambda1() == 1.0
    assert poincare_constant() == 1.0


def test_structural_errors():
    with pytest.raises(ResolutionMismatchError):
        SpectralField(np.zeros((2, 15, 15)))
    with pytest.raises(ResolutionMismatchError):
        SpectralField(np.zeros((2, 16, 8)))
    with pytest.raises(ResolutionMismatchError):
        SpectralField.zeros(16) + SpectralField.zeros(32)
    with pytest.raises(PreconditionError):
        SpectralField.mode(16, (0, 0))


def test_random_field_invariants():
    u = SpectralField.random(32, seed=3, k_max=5)
    assert u.is_real()
    assert u.is_solenoidal()
    assert np.all(u.mean == 0.0)
    wn = wavenumbers(32)
    assert np.abs(u.coeffs[:, wn.k2 > 25]).max(initial=0.0) == 0.0
    assert np.array_equal(SpectralField.random(32, seed=3, k_max=5).coeffs, u.coeffs)


def test_fields_are_immutable():
    u = SpectralField.random(16, seed=0)
    with pytest.raises(ValueError):
        u.coeffs[0, 1, 1] = 1.0


def test_scalar_field_bounds():
    nu = ScalarField.from_function(16, lambda x, y: 1.0 + 0.1 * np.sin(x), lower=0.9, upper=1.1)
    assert nu.mean == pytest.approx(1.0, abs=1e-14)
    assert not nu.is_constant
    with pytest.raises(ViscosityModelError):
        ScalarField.from_function(16, lambda x, y: 1.0 + 0.1 * np.sin(x), lower=0.95)
    grad = nu.gradient()
    x, _ = grid(16)
    assert np.allclose(grad[0], 0.1 * np.cos(x), atol=1e-13)
    assert np.allclose(grad[1], 0.0, atol=1e-13)


@pytest.mark.parametrize('suffix', ['.csv', '.bin'])
def test_snapshot_files(tmp_path, suffix):
    u = SpectralField.random(16, seed=5)
    path = save_snapshot(u, tmp_path / f'u{suffix}')
    loaded = load_snapshot(path)
    assert np.array_equal(loaded.coeffs, u.coeffs)
    assert loaded.is_solenoidal()
    if suffix == '.bin':
        assert path.stat().st_size == 16 * 16 * 6 * 8


def test_snapshot_rejects_bad_rows(tmp_path):
    path = tmp_path / 'bad.bin'
    np.zeros(6 * 50, dtype='<f8').tofile(path)
    with pytest.raises(ResolutionMismatchError):
        load_snapshot(path)


if __name__ == '__main__':
    pytest.main()

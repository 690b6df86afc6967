import numpy as np
import pytest
from scipy.integrate import quad

from hardytime.grid import GridFunction, make_grid, sample
from hardytime.hardy import (fourier, frequency_bins, hardy_basis, inverse_fourier, parse_sign,
                             positive_mask, riesz_project, riesz_project_array, toeplitz,
                             translate_u)
from hardytime.timeobs import xmu_samples

from conftest import random_full


def test_parse_sign():
    assert parse_sign("+") == 1 and parse_sign(-1) == -1
    with pytest.raises(ValueError):
        parse_sign("x")


def test_fourier_zero_and_roundtrip(rng):
    spec = make_grid(128, 5.0)
    assert np.all(fourier(GridFunction(spec, np.zeros(128))).coeffs == 0)
    f = random_full(spec, rng)
    back = inverse_fourier(fourier(f))
    assert np.max(np.abs(back.samples - f.samples)) < 1e-12
    assert abs(fourier(f).norm() - f.norm()) < 1e-12 * f.norm()


def test_fourier_plane_wave_lands_in_its_bin():
    spec = make_grid(64, 4.0)
    m = 5
    f = sample(spec, lambda s: np.exp(1j * s * m * spec.bin_step))
    c = fourier(f).coeffs
    k = np.argmax(np.abs(c))
    assert fourier(f).taus[k] == pytest.approx(m * spec.bin_step)
    assert np.sum(np.abs(c) > 1e-9) == 1


def test_fourier_xmu_concentrates_positive(grid_4096_200):
    x = sample(grid_4096_200, lambda s: 1 / (s + 1j))
    s = fourier(x)
    neg = np.sum(np.abs(s.coeffs[s.taus < 0]) ** 2) / np.sum(np.abs(s.coeffs) ** 2)
    assert neg <= 1e-3


def test_riesz_xmu(grid_4096_200):
    # the 2L-periodic version of 1/(sigma - mu) is the grid analogue of x_mu
    xm = GridFunction(grid_4096_200, xmu_samples(grid_4096_200, -1j))
    xp = GridFunction(grid_4096_200, xmu_samples(grid_4096_200, 1j))
    assert (riesz_project(xm, "+") - xm).norm() / xm.norm() <= 1e-3
    # x_{+i} keeps only its mean in P+, because the tau = 0 bin belongs to H+
    plus = riesz_project(xp, "+").samples
    assert np.max(np.abs(plus - plus.mean())) < 1e-12
    assert abs(plus.mean()) <= 2 * np.pi / (2 * grid_4096_200.halfwidth)


def test_riesz_xmu_plain_samples_truncation(grid_4096_200):
    # raw samples jump at +-L; the leak into H- is a few percent and shrinks with L
    leaks = []
    for L in (100.0, 400.0):
        spec = make_grid(4096, L)
        xm = sample(spec, lambda s: 1 / (s + 1j))
        leaks.append((riesz_project(xm, "+") - xm).norm() / xm.norm())
    assert leaks[1] < leaks[0] < 0.1


def test_projector_identities(rng):
    spec = make_grid(256, 10.0)
    f = random_full(spec, rng)
    p, m = riesz_project(f, "+"), riesz_project(f, "-")
    assert np.max(np.abs((p + m).samples - f.samples)) < 1e-12
    assert (riesz_project(p, "+") - p).norm() < 1e-12
    assert riesz_project(p, "-").norm() < 1e-12
    assert abs(np.vdot(p.samples, m.samples)) < 1e-10
    assert abs(p.norm() ** 2 + m.norm() ** 2 - f.norm() ** 2) < 1e-10


def test_projector_matrix_form(rng):
    spec = make_grid(32, 2.0)
    P = riesz_project_array(np.eye(32, dtype=complex), spec, 1)
    assert np.linalg.norm(P @ P - P) < 1e-13
    assert np.linalg.norm(P - P.conj().T) < 1e-13
    assert round(np.trace(P).real) == 16
    B = hardy_basis(spec, 1)
    assert np.linalg.norm(B @ B.conj().T - P) < 1e-13
    assert np.linalg.norm(B.conj().T @ B - np.eye(16)) < 1e-13


def test_zero_bin_in_plus_nyquist_in_minus():
    spec = make_grid(16, 1.0)
    bins = frequency_bins(spec)
    mask = positive_mask(spec)
    assert mask[bins == 0][0] and not mask[bins == -8][0]


def test_translate(rng):
    spec = make_grid(128, 6.0)
    f = random_full(spec, rng)
    np.testing.assert_allclose(translate_u(f, 0).samples, f.samples)
    assert abs(translate_u(f, 2.7).norm() - f.norm()) < 1e-12
    lhs = translate_u(translate_u(f, 1.3), -0.4)
    assert np.max(np.abs(lhs.samples - translate_u(f, 0.9).samples)) < 1e-12


def test_toeplitz_zero_time(rng):
    spec = make_grid(128, 6.0)
    f = random_full(spec, rng)
    np.testing.assert_allclose(toeplitz(f, 0, "+").samples, riesz_project(f, "+").samples)


def test_toeplitz_xmu_norm(grid_4096_200):
    # Fourier profile of 1/(sigma+i) is proportional to e^{-tau} on tau >= 0; shifting by 1
    # leaves the tail beyond 1.
    x = sample(grid_4096_200, lambda s: 1 / (s + 1j))
    tail = quad(lambda tau: np.exp(-2 * tau), 1, np.inf)[0]
    full = quad(lambda tau: np.exp(-2 * tau), 0, np.inf)[0]
    oracle = np.pi * tail / full
    assert oracle == pytest.approx(np.pi * np.exp(-2))
    assert abs(toeplitz(x, 1.0, "+").norm() ** 2 / oracle - 1) < 0.02


def _band_limited(spec, rng, fraction=0.25):
    c = rng.normal(size=spec.n_points) + 1j * rng.normal(size=spec.n_points)
    c[np.abs(frequency_bins(spec)) > fraction * spec.n_points / 2] = 0
    return GridFunction(spec, np.fft.ifft(c))


def test_toeplitz_contractive_in_time(rng):
    # shifts stay below the empty part of the band, so nothing wraps around
    spec = make_grid(256, 10.0)
    f = _band_limited(spec, rng)
    norms = [toeplitz(f, k * spec.bin_step, "+").norm() for k in range(0, 33, 2)]
    assert np.all(np.diff(norms) <= 1e-12)


def test_semigroup_bin_aligned():
    spec = make_grid(1024, 50.0)
    g = sample(spec, lambda s: np.exp(-(s - 3) ** 2))
    f = riesz_project(g, "+")
    t1, t2 = 7 * spec.bin_step, 11 * spec.bin_step
    lhs = toeplitz(f, t1 + t2, "+")
    rhs = toeplitz(toeplitz(f, t2, "+"), t1, "+")
    assert (lhs - rhs).norm() <= 1e-10 * f.norm()


def test_semigroup_generic_time_refines():
    res = []
    for n in (512, 2048):
        spec = make_grid(n, 40.0)
        f = riesz_project(sample(spec, lambda s: np.exp(-(s - 3) ** 2)), "+")
        t1, t2 = 0.71, 1.37
        lhs = toeplitz(f, t1 + t2, "+")
        rhs = toeplitz(toeplitz(f, t2, "+"), t1, "+")
        res.append((lhs - rhs).norm() / f.norm())
    assert res[1] < res[0]


def test_strong_stability():
    spec = make_grid(2048, 50.0)
    g = sample(spec, lambda s: np.exp(-s ** 2 / 2) * np.exp(2j * s))
    f = riesz_project(g, "+")
    assert toeplitz(f, spec.halfwidth / 2, "+").norm() <= 0.05 * f.norm()

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lmgdfm.fracsim import ModelSpec, TimeSeriesPanel, WhiteNoise, analytic_spectrum, simulate_panel
from lmgdfm.spectral import (BARTLETT_PRIESTLEY, EPANECHNIKOV, FrequencyGrid, default_grid_size, get_kernel,
                             kernel_weight, periodogram, smoothed_spectrum, smoothed_spectrum_folded)


def test_fourier_grid():
    g = FrequencyGrid.fourier(10)
    j = np.array([-4, -3, -2, -1, 1, 2, 3, 4])
    np.testing.assert_allclose(g.points, 2 * np.pi * j / 10)
    assert 0.0 in FrequencyGrid.fourier(10, exclude_zero=False).points


def test_uniform_grid_symmetric_without_zero():
    g = FrequencyGrid.uniform(64)
    assert g.is_symmetric
    assert not np.any(g.points == 0)
    assert np.all(np.abs(g.points) < np.pi)


def test_grid_validation():
    with pytest.raises(ValueError):
        FrequencyGrid.custom([0.1, 0.1])
    with pytest.raises(ValueError):
        FrequencyGrid.custom([-4.0, 0.0])


def test_default_grid_size():
    assert default_grid_size(200) == 2048
    assert default_grid_size(256) == 2048


@pytest.mark.parametrize("kernel", [EPANECHNIKOV, BARTLETT_PRIESTLEY])
def test_kernel_normalization_and_support(kernel):
    x = np.linspace(-kernel.rho, kernel.rho, 10_001)
    assert np.trapezoid(kernel_weight(kernel, x), x) == pytest.approx(1.0, abs=1e-6)
    assert kernel_weight(kernel, 2 * kernel.rho) == 0.0
    np.testing.assert_array_equal(kernel(x), kernel(-x))
    assert np.all(kernel(x) >= 0)


def test_kernel_values():
    assert kernel_weight(EPANECHNIKOV, 0.0) == 0.75
    assert get_kernel("bartlett-priestley") is BARTLETT_PRIESTLEY
    with pytest.raises(ValueError):
        get_kernel("gaussian")


def test_periodogram_zero_and_cosine():
    T = 64
    assert np.all(periodogram(np.zeros((3, T)), 0.5) == 0)
    k = 5
    lam = 2 * np.pi * k / T
    x = np.cos(lam * np.arange(T))[None, :]
    assert periodogram(x, lam)[0, 0].real == pytest.approx(T / (8 * np.pi), rel=1e-12)


def test_periodogram_rank_one_psd():
    X = np.random.default_rng(0).normal(size=(4, 50))
    I = periodogram(X, 0.7)
    w = np.linalg.eigvalsh(I)
    assert w.min() >= -1e-12 * w.max()
    assert np.sum(w > 1e-10 * w.max()) == 1


def test_smoothed_zero_and_constant_panels():
    g = FrequencyGrid.uniform(128)
    assert np.all(smoothed_spectrum(np.zeros((2, 100)), g, 0.3).mats == 0)
    const = np.full((2, 100), 3.5)
    np.testing.assert_allclose(smoothed_spectrum(const, g, 0.3).mats, 0, atol=1e-20)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), T=st.integers(40, 160), c=st.floats(0.1, 10))
def test_smoothed_psd_conjugate_and_scaling(seed, T, c):
    X = np.random.default_rng(seed).normal(size=(3, T)).cumsum(axis=1)
    g = FrequencyGrid.uniform(64)
    S = smoothed_spectrum(X, g, T ** -0.5).mats
    scale = np.linalg.norm(S, axis=(1, 2))
    w = np.linalg.eigvalsh(S)
    assert np.all(w.min(axis=1) >= -1e-10 * scale)
    diff = np.linalg.norm(S[::-1] - S.conj(), axis=(1, 2))
    assert np.all(diff <= 1e-10 * scale + 1e-300)
    np.testing.assert_allclose(smoothed_spectrum(c * X, g, T ** -0.5).mats, c**2 * S, rtol=1e-12,
                               atol=1e-12 * c**2 * scale.max())


def test_folded_form_agrees_in_real_part():
    X = np.random.default_rng(1).normal(size=(3, 80))
    g = FrequencyGrid.uniform(32)
    a = smoothed_spectrum(X, g, 0.3).mats
    b = smoothed_spectrum_folded(X, g, 0.3)
    np.testing.assert_allclose(a.real, b.real, atol=1e-12)


def test_empty_window_flagged():
    X = np.random.default_rng(2).normal(size=(2, 20))
    g = FrequencyGrid.custom([0.01, 2 * np.pi * 3 / 20])
    with pytest.warns(RuntimeWarning):
        field = smoothed_spectrum(X, g, 0.05)
    assert field.empty.tolist() == [True, False]
    assert np.all(field.mats[0] == 0)


def test_bandwidth_precondition():
    with pytest.raises(ValueError):
        smoothed_spectrum(np.zeros((1, 10)), FrequencyGrid.uniform(8), 0.05)


def test_white_noise_level():
    s = ModelSpec.one_pole([0.0], 0.0, 0.0, idio=WhiteNoise(1.5))
    g = FrequencyGrid.custom([np.pi / 4, np.pi / 2, 3 * np.pi / 4])
    vals = np.array([smoothed_spectrum(simulate_panel(s, 256, seed=r), g, 256 ** -0.5).mats[:, 0, 0].real.mean()
                     for r in range(100)])
    se = vals.std(ddof=1) / np.sqrt(vals.size)
    assert abs(vals.mean() - 1.5**2 / (2 * np.pi)) <= 3 * se


def test_short_memory_consistency():
    s = ModelSpec.one_pole([0.0], 1.0, 0.5, idio=WhiteNoise(0.5))
    g = FrequencyGrid.uniform(256)
    truth = analytic_spectrum(s, g.points)[:, 0, 0].real
    err = {}
    for T in (256, 1024):
        e = [np.mean(np.abs(smoothed_spectrum(simulate_panel(s, T, seed=r), g, T ** -0.5).mats[:, 0, 0].real - truth))
             for r in range(20)]
        err[T] = np.mean(e)
    assert err[1024] < err[256]


def test_panel_object_accepted():
    X = np.random.default_rng(3).normal(size=(2, 60))
    g = FrequencyGrid.uniform(16)
    np.testing.assert_array_equal(smoothed_spectrum(TimeSeriesPanel(X), g, 0.4).mats,
                                  smoothed_spectrum(X, g, 0.4).mats)

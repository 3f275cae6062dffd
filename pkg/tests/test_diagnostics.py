import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lmgdfm.diagnostics import (decay_slope, eigengap_curve, eigengap_slope, l1_spectral_error, loglog_fit,
                                main_term_moment, r_criterion, write_xy_csv)
from lmgdfm.filterbank import FilterBank, feasible_bank, oracle_bank
from lmgdfm.fracsim import ModelSpec, TimeSeriesPanel, WhiteNoise, simulate_panel
from lmgdfm.harness.config import preset_model
from lmgdfm.spectral import FrequencyGrid, SpectralField


def test_r_criterion_identities():
    chi = np.random.default_rng(0).normal(size=(4, 20))
    assert r_criterion(chi, chi) == 0.0
    assert r_criterion(np.zeros_like(chi), chi) == pytest.approx(1.0)
    assert r_criterion(2 * chi, chi) == pytest.approx(1.0)
    with pytest.raises(ZeroDivisionError):
        r_criterion(chi, np.zeros_like(chi))
    with pytest.raises(ValueError):
        r_criterion(chi[:, :5], chi)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3), seed=st.integers(0, 2**31))
def test_r_criterion_quadratic_in_error(a, seed):
    rng = np.random.default_rng(seed)
    chi, err = rng.normal(size=(2, 3, 15))
    assert r_criterion(chi + a * err, chi) == pytest.approx(a**2 * r_criterion(chi + err, chi), rel=1e-9)


@pytest.mark.parametrize("slope", [-1.0, -1.095, -0.754])
def test_exact_power_law(slope):
    h = np.arange(1, 401)
    fit = decay_slope(np.column_stack([h, 3.0 * h**slope]), 80)
    assert fit.slope == pytest.approx(slope, abs=1e-9)
    assert fit.r2 == pytest.approx(1.0)
    assert fit.n_points == 321 and fit.n_dropped == 0


def test_slope_scale_invariant_and_drops():
    x = np.arange(1.0, 50)
    y = x**-0.5
    y[10] = 0.0
    f1, f2 = loglog_fit(x, y), loglog_fit(x, 7 * y)
    assert f1.slope == pytest.approx(f2.slope, abs=1e-12)
    assert f1.n_dropped == 1
    with pytest.raises(ValueError):
        loglog_fit(x, y, 1, 4)


def test_eigengap_flat_without_memory():
    n = 20
    spec = ModelSpec.one_pole(np.zeros(n), 1.0, np.zeros(n), idio=WhiteNoise(1.0))
    curve = eigengap_curve(spec, 1, np.linspace(0.01, np.pi / 2, 40))
    assert curve[:, 1].max() / curve[:, 1].min() <= 1.5
    with pytest.raises(ValueError):
        eigengap_curve(spec, 1, [0.0, 0.1])


def test_eigengap_power_law_and_scaling():
    spec = preset_model("companion-rank2", 80)
    g = eigengap_curve(spec, 2, [1e-3, 1e-2])[:, 1]
    # gap ~ theta^{-2 d_min} with d_min = 0.25: a decade gives about 10^0.5
    assert g[0] / g[1] == pytest.approx(10**0.5, rel=0.2)
    fit = eigengap_slope(eigengap_curve(spec, 2, np.logspace(-3, -1, 30)))
    assert fit.slope == pytest.approx(-0.5, abs=0.06)
    g2 = eigengap_curve(preset_model("companion-rank2", 160), 2, [0.01])[0, 1]
    assert g2 / eigengap_curve(spec, 2, [0.01])[0, 1] == pytest.approx(2.0, rel=0.1)


@pytest.mark.parametrize("d_tilde", [0.0, 0.1, 0.35])
def test_l1_closed_form(d_tilde):
    grid = FrequencyGrid.uniform(4096)
    c = 0.7
    truth = SpectralField(grid, np.zeros((grid.size, 3, 3), dtype=complex))
    est = SpectralField(grid, np.broadcast_to(c * np.eye(3), (grid.size, 3, 3)).astype(complex))
    expected = 2 * c * np.pi ** (2 * d_tilde + 1) / (2 * d_tilde + 1)
    assert l1_spectral_error(est, truth, d_tilde) == pytest.approx(expected, rel=1e-4)


def _random_field(grid, rng, n=3):
    A = rng.normal(size=(grid.size, n, n)) + 1j * rng.normal(size=(grid.size, n, n))
    return SpectralField(grid, A @ np.conj(np.swapaxes(A, -1, -2)))


def test_l1_is_a_metric():
    rng = np.random.default_rng(3)
    grid = FrequencyGrid.uniform(64)
    a, b, c = (_random_field(grid, rng) for _ in range(3))
    ab, ba = l1_spectral_error(a, b, 0.2), l1_spectral_error(b, a, 0.2)
    assert ab == pytest.approx(ba, rel=1e-9)
    assert l1_spectral_error(a, c, 0.2) <= ab + l1_spectral_error(b, c, 0.2) + 1e-9
    assert l1_spectral_error(a, a, 0.2) == 0.0
    with pytest.raises(ValueError):
        l1_spectral_error(a, _random_field(FrequencyGrid.uniform(32), rng), 0.2)


def _panels(spec, T, reps):
    return [simulate_panel(spec, T, seed=r) for r in range(reps)]


def test_main_term_zero_for_exact_filter():
    spec = preset_model("table12", 10)
    oracle = oracle_bank(spec, 5, rows=[0])
    res = main_term_moment(_panels(spec, 40, 10), oracle, [oracle] * 10, 0, 20, delta=0.1)
    assert res.rms == 0.0
    assert res.bench_m_delta == pytest.approx(5 * 0.1 * math.sqrt(10))
    with pytest.raises(ValueError):
        main_term_moment(_panels(spec, 40, 3), oracle, [oracle] * 3, 0, 20)


def test_main_term_homogeneous_in_panel():
    spec = preset_model("table12", 10)
    oracle = oracle_bank(spec, 5, rows=[0])
    panels = _panels(spec, 40, 10)
    other = oracle_bank(preset_model("table12", 10), 5, rows=[0])
    other = FilterBank(other.M, other.coeffs * 1.3, other.grid_size, other.rows)
    base = main_term_moment(panels, oracle, [other] * 10, 0, 20).rms
    scaled = main_term_moment([TimeSeriesPanel(3 * p.X) for p in panels], oracle, [other] * 10, 0, 20).rms
    assert base > 0
    assert scaled == pytest.approx(3 * base, rel=1e-12)


def test_main_term_tracks_benchmark():
    from lmgdfm.harness.figures import run_figure

    res = run_figure("mainterm", Ts=(160, 384, 1024), reps=10)
    ratio = res.data[:, 2] / res.data[:, 3]
    assert ratio.max() / ratio.min() < 10


def test_write_xy_csv(tmp_path):
    x = np.arange(1.0, 8)
    fit = loglog_fit(x, x**-2)
    write_xy_csv(tmp_path / "o.csv", x, x**-2, fit, ("h", "norm"))
    rows = (tmp_path / "o.csv").read_text().splitlines()
    assert rows[0] == "h,norm,fit_slope,fit_intercept"
    assert len(rows) == 8

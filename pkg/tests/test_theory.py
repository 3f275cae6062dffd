import itertools
import math

import pytest
from hypothesis import given, strategies as st

from lmgdfm.theory import (MemoryDomainError, MemoryProfile, b_star, delta_rate, gamma_star,
                           gap_dominance_check, r_rates, rho_recursion, truncation_M, tune_common,
                           tune_factor_hetero, tune_row_hetero)

import golden_tables as gt


def _brute_rho(d):
    """Direct transcription of the recursion with explicit index bookkeeping."""
    q = len(d)
    dd = list(d) + [0.0]
    alpha = lambda j1, j2: 1.0 if j1 == 0 else 2 * abs(dd[j1 - 1] - dd[j2 - 1])
    rho = {0: 1.0}
    for m in range(1, q + 1):
        rho[m] = min([rho[m - 1], alpha(m, m + 1)] + [2 * rho[l] - alpha(l, m) for l in range(m)])
    return tuple(rho[m] for m in range(1, q + 1))


@pytest.mark.parametrize("rho, block", [(0.25, gt.KAPPA_RHO_025), (0.10, gt.KAPPA_RHO_010),
                                        (0.01, gt.KAPPA_RHO_001)])
def test_factor_kappa_table(rho, block):
    for spread, d, text in gt.parse(block):
        res = tune_factor_hetero(d, spread, rho)
        if text.strip("-") == "":
            assert not res.valid, (d, spread)
        else:
            assert res.cell("kappa", 3) == text, (d, spread, res.kappa_star)


def test_row_tables():
    for spread, d, text in gt.parse(gt.MH):
        res = tune_row_hetero(d, spread)
        assert res.cell("m", 4) == (text if text.strip("-") else "-"), (d, spread)
    for spread, d, text in gt.parse(gt.KAPPAH):
        res = tune_row_hetero(d, spread)
        assert res.cell("kappa", 4) == (text if text.strip("-") else "-"), (d, spread)
    for spread, text in gt.parse_bh(gt.BH):
        assert f"{b_star(spread):.4f}" == text


def test_spot_values():
    assert f"{tune_factor_hetero(0.15, 0.15, 0.25).kappa_star:.3f}" == "3.238"
    assert f"{tune_factor_hetero(0.45, 0.45, 0.01).kappa_star:.3f}" == "97.167"
    assert f"{b_star(0.45):.4f}" == "0.9091"
    assert f"{tune_row_hetero(0.05, 0.0).m_star:.4f}" == "0.3448"
    assert f"{tune_row_hetero(0.25, 0.10).kappa_star:.4f}" == "23.6250"
    assert f"{tune_row_hetero(0.45, 0.0).kappa_star:.4f}" == "21.0000"


def test_common_tuning():
    res = tune_common(0.3)
    assert (res.b_star, res.m_star, res.kappa_star) == (0.5, 0.25, 2.0)
    with pytest.raises(MemoryDomainError):
        tune_common(0.5)


def test_gamma_star_consistent_with_b_star():
    for spread in [0.0, 0.1, 0.3]:
        b = b_star(spread)
        assert gamma_star(spread) == pytest.approx(min(b * (1 - 2 * spread), 1 - b))


def test_rho_recursion_examples():
    assert rho_recursion([0.35]) == pytest.approx((0.7,))
    assert rho_recursion([0.35, 0.10]) == pytest.approx((0.5, 0.2))
    assert rho_recursion([0.45, 0.44])[1] == pytest.approx(0.02)
    with pytest.raises(MemoryDomainError):
        rho_recursion([0.3, 0.3])
    with pytest.raises(MemoryDomainError):
        rho_recursion([0.6])


def test_gap_dominance_three_factor_failure():
    res = gap_dominance_check([0.45, 0.35, 0.20])
    assert not res.holds
    assert res.violation is not None


@given(st.lists(st.floats(0.0, 0.49), min_size=1, max_size=2, unique=True))
def test_gap_dominance_holds_for_two_factors(ds):
    d = sorted(ds, reverse=True)
    if len(d) == 2 and d[0] - d[1] < 1e-9:
        return
    assert gap_dominance_check(d).holds


@given(st.lists(st.floats(0.0, 0.49), min_size=1, max_size=4, unique=True))
def test_recursion_matches_brute_force(ds):
    d = sorted(ds, reverse=True)
    if any(a - b < 1e-9 for a, b in zip(d, d[1:])):
        return
    brute = _brute_rho(d)
    try:
        fast = rho_recursion(d)
    except MemoryDomainError:
        return
    assert fast == pytest.approx(brute, abs=1e-12)


def test_memory_profile_regimes():
    assert MemoryProfile.from_matrix([[0.3, 0.3], [0.3, 0.3]]).regime == "factor-homogeneous"
    assert MemoryProfile.from_matrix([[0.3, 0.1], [0.3, 0.1]]).regime == "factor-heterogeneous"
    p = MemoryProfile.from_matrix([[0.3], [0.1]])
    assert p.regime == "row-heterogeneous"
    assert (p.d, p.d_tilde, p.spread) == pytest.approx((0.3, 0.1, 0.2))
    assert MemoryProfile.from_matrix([[0.3, 0.1], [0.2, 0.1]]).regime == "entry-wise"


def test_delta_rate_and_truncation():
    assert delta_rate(100, 0.25, 0.0) == pytest.approx(0.25 + math.log(100) / 25)
    assert truncation_M(0.25, 16, 0.5, 4.0) == 2
    assert truncation_M(10.0, 100, 0.5, 1.0) == 1
    with pytest.raises(ValueError):
        truncation_M(0.25, 16, 1.0, 4.0)


def test_rates():
    r = r_rates(100, 400, 8, 0.05, "common", d=0.3)
    assert r.r0 == 10.0
    assert r.r == min(r.r0, r.r1, r.r2)
    assert r.r2_simplified == pytest.approx(8 / (math.log(8) * 10))
    assert r_rates(100, 400, 8, 0.05, "row", d=0.4, spread=0.1).r2_available is False
    assert r_rates(100, 400, 8, 0.05, "factor", d=0.35, spread=0.25, rho=0.2).r2 == pytest.approx(
        0.1 * 8 ** 0.35)

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stablesde.drift import (
    DriftSpec,
    GCache,
    bridge_depth,
    check_g_remainder_bound,
    check_theorem_hypotheses,
    eval_f,
    eval_g,
    g_cache,
    g_second,
)
from stablesde.errors import DomainError

# g for smooth_power(a=1, β=0.2, x0=1), from tests/oracles.py (mpmath quadrature)
ORACLE_G_SMOOTH = {
    2.0: 0.88996751437616856,
    10.0: 6.5712253855598164,
    1e3: 312.66483627089089,
    1e6: 78868.347071429214,
}


def test_spec_validation():
    with pytest.raises(DomainError):
        DriftSpec("cubic", 1.0, 0.2)
    with pytest.raises(DomainError):
        DriftSpec("pure_power", 0.0, 0.2)
    with pytest.raises(DomainError):
        DriftSpec("pure_power", 1.0, 1.0)
    with pytest.raises(DomainError):
        DriftSpec("smooth_power", 1.0, 0.2, x0=0.0)


def test_smooth_power_values():
    spec = DriftSpec("smooth_power", 2.0, 0.5)
    f, fp = eval_f(spec, np.array([0.0, 1.0, 3.0]))
    assert f == pytest.approx([2.0, 2.0 * 2**0.25, 2.0 * 10**0.25])
    assert fp[0] == 0.0


def test_pure_power_values():
    spec = DriftSpec("pure_power", 1.0, 0.5)
    f, _ = eval_f(spec, np.array([4.0, 0.25, -3.0]))
    assert f == pytest.approx([2.0, 0.5, 0.5])  # a x0^β / 2 below x0/2


@given(a=st.floats(0.1, 5.0), beta=st.floats(-0.9, 0.9), x0=st.floats(0.2, 5.0))
def test_pure_power_blend_is_c1(a, beta, x0):
    spec = DriftSpec("pure_power", a, beta, x0)
    h = 1e-7 * x0
    for knot in (x0 / 2, x0):
        (fl, fr), (dl, dr) = eval_f(spec, np.array([knot - h, knot + h]))
        assert fl == pytest.approx(fr, rel=1e-5)
        # one-sided values differ by about f'' h
        assert dl == pytest.approx(dr, rel=1e-4, abs=1e-4 * a * x0**beta / x0)
    x = np.linspace(-2 * x0, 3 * x0, 200)
    assert np.all(eval_f(spec, x)[0] > 0)


@pytest.mark.parametrize("x", sorted(ORACLE_G_SMOOTH))
def test_g_smooth_against_oracle(x):
    spec = DriftSpec("smooth_power", 1.0, 0.2)
    assert eval_g(spec, x)[0] == pytest.approx(ORACLE_G_SMOOTH[x], rel=1e-10)


def test_g_pure_closed_form():
    spec = DriftSpec("pure_power", 2.0, 0.5, x0=1.0)
    g, gp = eval_g(spec, 9.0)
    assert g == pytest.approx((3.0 - 1.0) / (2.0 * 0.5))
    assert gp == pytest.approx(1 / (2.0 * 3.0))


@pytest.mark.parametrize("family", ["pure_power", "smooth_power"])
@pytest.mark.parametrize("beta", [-0.3, 0.2, 0.5])
def test_bridge_is_c2_and_monotone(family, beta):
    spec = DriftSpec(family, 1.5, beta, x0=1.0)
    h = 1e-6
    g, gp = eval_g(spec, np.array([1 - h, 1 + h]))
    assert g[0] == pytest.approx(g[1], abs=1e-5)
    assert gp[0] == pytest.approx(gp[1], rel=1e-5)
    g2 = g_second(spec, np.array([1 - h, 1 + h]))
    assert g2[0] == pytest.approx(g2[1], rel=1e-4, abs=1e-8)
    x = np.linspace(1e-6, 1.0, 500)
    assert np.all(np.diff(eval_g(spec, x)[0]) > 0)
    # flat at -depth on the non-positive half-line, joined C2 at 0
    g_neg, gp_neg = eval_g(spec, np.array([-5.0, 0.0]))
    assert g_neg == pytest.approx([-bridge_depth(spec)] * 2)
    assert np.all(gp_neg == 0)
    assert eval_g(spec, 1e-9)[1] == pytest.approx(0.0, abs=1e-12)
    assert g_second(spec, 1e-12) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("family", ["pure_power", "smooth_power"])
def test_g_second_matches_difference_of_g_prime(family):
    spec = DriftSpec(family, 1.0, 0.2)
    x = np.array([0.3, 0.8, 2.0, 50.0, 1e4])
    h = 1e-6 * x
    fd = (eval_g(spec, x + h)[1] - eval_g(spec, x - h)[1]) / (2 * h)
    assert g_second(spec, x) == pytest.approx(fd, rel=1e-5, abs=1e-12)


def test_g_prime_is_reciprocal_drift():
    spec = DriftSpec("smooth_power", 1.0, 0.2)
    x = np.geomspace(1.0, 1e8, 50)
    assert eval_g(spec, x)[1] == pytest.approx(1 / eval_f(spec, x)[0], rel=1e-14)


def test_cache_interpolation_between_nodes():
    spec = DriftSpec("smooth_power", 1.0, -0.3)
    cache = GCache(spec, per_decade=50, decades=4)
    fine = g_cache(spec)
    x = np.geomspace(1.0, 9e3, 997)
    # a coarse table still agrees with the fine one closely
    assert cache(x) == pytest.approx(fine(x), rel=1e-6)


def test_zero_family_has_no_g():
    with pytest.raises(DomainError):
        eval_g(DriftSpec("zero", 1.0, 0.0), 1.0)


def test_hypothesis_windows():
    spec = DriftSpec("smooth_power", 1.0, 0.2)
    rep = check_theorem_hypotheses(spec, 1.5)
    assert rep.strong_law_valid and rep.clt_valid and not rep.counterexample_regime
    assert rep.assumption2_sufficient
    rep = check_theorem_hypotheses(DriftSpec("smooth_power", 1.0, 0.5), 1.5)
    assert rep.counterexample_regime and not rep.clt_valid
    assert any("β∈(1−α, 1/(1+α))" in n for n in rep.notes)
    rep = check_theorem_hypotheses(DriftSpec("smooth_power", 1.0, -0.6), 1.5)
    assert not rep.strong_law_valid
    # α < 1 needs upward jumps
    assert not check_theorem_hypotheses(DriftSpec("smooth_power", 1.0, 0.6), 0.5).assumption2_sufficient
    assert check_theorem_hypotheses(DriftSpec("smooth_power", 1.0, 0.6), 0.5, c_plus=1.0).assumption2_sufficient
    with pytest.raises(DomainError):
        check_theorem_hypotheses(spec, 1.0)


@pytest.mark.parametrize("family", ["pure_power", "smooth_power"])
@pytest.mark.parametrize("beta", [0.2, -0.3, 0.5, 0.0, 0.9])
def test_remainder_bound_grid(family, beta):
    rep = check_g_remainder_bound(DriftSpec(family, 1.0, beta))
    assert rep.passed
    assert rep.n_points == 2500
    assert rep.max_ratio <= 1.0


def test_remainder_bound_constant_closed_form():
    # pure power: |g''| z^(1+β) = β/a exactly above x0
    rep = check_g_remainder_bound(DriftSpec("pure_power", 2.0, 0.5))
    assert rep.constant == pytest.approx(2**1.5 * 0.5 / 2.0, rel=1e-12)

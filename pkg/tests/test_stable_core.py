from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from stablesde.errors import DomainError
from stablesde.rng import substream
from stablesde.stable_core import (
    cf_exponent_numeric,
    large_jump_rate,
    levy_measure_scale,
    make_stable_params,
    sample_large_jumps,
    sample_stable_increment,
    sample_stable_path,
    small_jump_moments,
)
from stablesde.stats import compare_cf, ks_two_sample

# ψ(θ) from tests/oracles.py (mpmath oscillatory quadrature of the Levy-Khintchine integral)
ORACLE_PSI = {
    (1.0, 1.5, 1.0, 1.0): -3.34217103179087 + 0.0j,
    (1.0, 1.5, 1.0, 0.0): -1.67108551589543 - 1.67108551642067j,
    (1.0, 0.5, 1.0, 1.0): -5.013256549262 + 0.0j,
    (1.0, 0.5, 1.0, 0.0): -2.506628274631 + 2.506628274631j,
    (-2.0, 1.5, 0.3, 1.2): -7.08981540127286 - 4.25388924217324j,
    (0.5, 0.5, 2.0, 0.5): -4.43113462726379 + 2.65868077635827j,
}


@pytest.mark.parametrize("key", sorted(ORACLE_PSI))
def test_closed_form_and_quadrature_match_oracle(key):
    theta, alpha, cp, cm = key
    p = make_stable_params(alpha, cp, cm)
    want = ORACLE_PSI[key]
    assert abs(complex(p.cf_exponent(theta)) - want) < 1e-8 * abs(want)
    assert abs(cf_exponent_numeric(theta, p) - want) < 1e-8 * abs(want)


def test_symmetric_scale_value():
    # σ^1.5 = -2 Γ(-1.5) cos(3π/4) for c± = 1
    p = make_stable_params(1.5, 1.0, 1.0)
    assert p.skew == 0.0
    assert p.unit_scale == pytest.approx(2.2354, abs=1e-4)
    assert levy_measure_scale(1.5, 1.0, 1.0) == p.unit_scale


def test_one_sided_skew():
    assert make_stable_params(0.5, 1.0, 0.0).skew == 1.0
    assert make_stable_params(1.5, 0.0, 2.0).skew == -1.0


@pytest.mark.parametrize(
    "alpha,cp,cm",
    [(1.0, 1, 1), (0.0, 1, 1), (2.0, 1, 1), (-0.5, 1, 1), (math.nan, 1, 1), (1.5, -1, 1), (1.5, 0, 0)],
)
def test_invalid_parameters(alpha, cp, cm):
    with pytest.raises(DomainError):
        make_stable_params(alpha, cp, cm)


@given(
    alpha=st.sampled_from([0.3, 0.5, 0.8, 1.2, 1.5, 1.8]),
    cp=st.floats(0.0, 3.0),
    cm=st.floats(0.0, 3.0),
    theta=st.floats(-5.0, 5.0).filter(lambda t: abs(t) > 0.05),
)
def test_closed_form_matches_quadrature(alpha, cp, cm, theta):
    if cp + cm < 1e-3:
        return
    p = make_stable_params(alpha, cp, cm)
    closed = complex(p.cf_exponent(theta))
    assert abs(cf_exponent_numeric(theta, p) - closed) <= 1e-7 * abs(closed)


@given(alpha=st.sampled_from([0.5, 1.5]), theta=st.floats(-10, 10))
def test_exponent_symmetries(alpha, theta):
    p = make_stable_params(alpha, 1.3, 0.4)
    psi = complex(p.cf_exponent(theta))
    assert complex(p.cf_exponent(-theta)) == pytest.approx(psi.conjugate())
    assert psi.real <= 0.0
    assert cf_exponent_numeric(0.0, p) == 0


@pytest.mark.parametrize("alpha", [0.5, 1.5])
@pytest.mark.parametrize("cp,cm", [(1.0, 1.0), (1.0, 0.0)])
def test_sampler_empirical_cf(alpha, cp, cm):
    p = make_stable_params(alpha, cp, cm)
    n = 40_000
    x = sample_stable_increment(p, 1.0, substream(3, "cf", 0), size=n)
    assert compare_cf(x, p, 1.0, np.linspace(-2, 2, 9)) < 4 / math.sqrt(n)


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_self_similarity(alpha):
    p = make_stable_params(alpha, 1.0, 0.5)
    a = sample_stable_increment(p, 4.0, substream(5, "a", 0), size=5000)
    b = 4.0 ** (1 / alpha) * sample_stable_increment(p, 1.0, substream(5, "b", 0), size=5000)
    assert ks_two_sample(a, b, 0.01).passed


def test_increment_rejects_nonpositive_dt():
    p = make_stable_params(1.5, 1, 1)
    with pytest.raises(DomainError):
        sample_stable_increment(p, 0.0, substream(0, "x"))
    with pytest.raises(DomainError):
        sample_stable_increment(p, np.array([0.1, -1.0]), substream(0, "x"))


def test_array_dt_gives_one_draw_each():
    p = make_stable_params(1.5, 1, 1)
    out = sample_stable_increment(p, np.array([0.1, 0.2, 0.3]), substream(0, "x"))
    assert out.shape == (3,)


def test_stable_path_grid_checks():
    p = make_stable_params(1.5, 1, 1)
    rec = sample_stable_path(p, [0.0, 0.5, 1.0], substream(0, "p"))
    assert rec.values[0] == 0.0 and len(rec) == 3
    with pytest.raises(DomainError):
        sample_stable_path(p, [0.1, 0.5], substream(0, "p"))
    with pytest.raises(DomainError):
        sample_stable_path(p, [0.0, 0.5, 0.5], substream(0, "p"))


def test_large_jumps_construction():
    p = make_stable_params(1.5, 1.0, 3.0)
    eps, T = 0.1, 50.0
    led = sample_large_jumps(p, eps, T, substream(1, "jumps"))
    assert np.all(np.abs(led.sizes) > eps)
    assert np.all(np.diff(led.times) >= 0) and led.times.min() >= 0 and led.times.max() < T
    mean = large_jump_rate(p, eps) * T
    assert abs(len(led) - mean) < 5 * math.sqrt(mean)
    up = np.mean(led.sizes > 0)
    assert abs(up - 0.25) < 5 * math.sqrt(0.25 * 0.75 / len(led))
    # Pareto tail: P(|u| > 2ε | |u| > ε) = 2^-α
    frac = np.mean(np.abs(led.sizes) > 2 * eps)
    assert abs(frac - 2**-1.5) < 5 * math.sqrt(frac * (1 - frac) / len(led))


def test_one_sided_jumps_are_positive():
    p = make_stable_params(0.5, 1.0, 0.0)
    led = sample_large_jumps(p, 0.5, 100.0, substream(2, "jumps"))
    assert len(led) > 0 and np.all(led.sizes > 0)


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_small_jump_moments_by_quadrature(alpha):
    cp, cm, eps = 1.3, 0.6, 0.05
    p = make_stable_params(alpha, cp, cm)
    var, comp = small_jump_moments(p, eps)
    nu = lambda u, c: c * u ** (-1 - alpha)  # noqa: E731
    want_var = integrate.quad(lambda u: u * u * nu(u, cp), 0, eps)[0] + integrate.quad(lambda u: u * u * nu(u, cm), 0, eps)[0]
    assert var == pytest.approx(want_var, rel=1e-8)
    if alpha < 1:
        # mean of the small jumps
        want = integrate.quad(lambda u: u * nu(u, cp), 0, eps)[0] - integrate.quad(lambda u: u * nu(u, cm), 0, eps)[0]
    else:
        # minus the mean of the large jumps per unit time
        want = -(integrate.quad(lambda u: u * nu(u, cp), eps, np.inf)[0] - integrate.quad(lambda u: u * nu(u, cm), eps, np.inf)[0])
    assert comp == pytest.approx(want, rel=1e-7)


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_truncated_representation_matches_law(alpha):
    # large jumps + drift + Gaussian surrogate over unit time against B(1)
    p = make_stable_params(alpha, 1.0, 0.4)
    eps = 0.01 if alpha > 1 else 0.05
    var, comp = small_jump_moments(p, eps)
    rng = substream(8, "trunc", 0)
    n = 3000
    sums = np.array([sample_large_jumps(p, eps, 1.0, rng).sizes.sum() for _ in range(n)])
    sums += comp + math.sqrt(var) * rng.standard_normal(n)
    ref = sample_stable_increment(p, 1.0, substream(8, "ref", 0), size=n)
    assert ks_two_sample(sums, ref, 0.01).passed


def test_validation_runs_once_per_parameter_set():
    a = make_stable_params(1.5, 2.0, 1.0)
    b = make_stable_params(1.5, 2.0, 1.0)
    assert a is b

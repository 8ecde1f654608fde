"""The compiled loops duplicate drift formulas; pin them to the numpy versions."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stablesde import _kernels as K
from stablesde.drift import DriftSpec, eval_f, eval_g, g_second
from stablesde.sde_engine import _g_tables, euler_step

FAMILIES = ["pure_power", "smooth_power"]


def _xs():
    return np.concatenate([np.linspace(-3, 3, 61), np.geomspace(1.0, 1e12, 60)])


@pytest.mark.parametrize("family", FAMILIES + ["zero"])
@pytest.mark.parametrize("beta", [-0.3, 0.2, 0.5])
def test_f_kernel(family, beta):
    spec = DriftSpec(family, 1.7, beta, 0.8)
    x = _xs()
    want = eval_f(spec, x)[0]
    got = np.array([K.f_val(spec.code, spec.a, spec.beta, spec.x0, v) for v in x])
    assert got == pytest.approx(want, rel=1e-13)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("beta", [-0.3, 0.2, 0.5])
def test_g_kernels(family, beta):
    spec = DriftSpec(family, 1.7, beta, 0.8)
    slope, m, depth, nodes, vals, dvals, _ = _g_tables(spec)
    x = _xs()
    g, gp = eval_g(spec, x)
    g2 = g_second(spec, x)
    for i, v in enumerate(x):
        fx = K.f_val(spec.code, spec.a, spec.beta, spec.x0, v)
        kg, kgp = K.g_val(spec.code, spec.a, spec.beta, spec.x0, slope, m, depth, nodes, vals, dvals, v, fx)
        assert kg == pytest.approx(g[i], rel=1e-12, abs=1e-12)
        assert kgp == pytest.approx(gp[i], rel=1e-12, abs=1e-14)
        kg2 = K.g2_val(spec.code, spec.a, spec.beta, spec.x0, slope, m, v, fx)
        assert kg2 == pytest.approx(g2[i], rel=1e-10, abs=1e-14)


def test_g_kernel_nan_beyond_table():
    spec = DriftSpec("smooth_power", 1.0, 0.2)
    slope, m, depth, nodes, vals, dvals, _ = _g_tables(spec)
    x = nodes[-1] * 2
    g, _ = K.g_val(spec.code, 1.0, 0.2, 1.0, slope, m, depth, nodes, vals, dvals, x, 1.0)
    assert np.isnan(g)


@given(
    family=st.sampled_from(FAMILIES),
    beta=st.floats(-0.5, 0.8),
    x_init=st.floats(-5, 5),
    seed=st.integers(0, 2**32),
)
def test_euler_path_matches_python_loop(family, beta, x_init, seed):
    spec = DriftSpec(family, 1.0, beta)
    rng = np.random.default_rng(seed)
    dts = rng.uniform(1e-3, 1e-1, 40)
    incs = rng.standard_normal(40)
    rec_idx = np.array([0, 10, 40])
    out, div = K.euler_path(spec.code, spec.a, spec.beta, spec.x0, x_init, dts, incs, rec_idx)
    x = x_init
    want = [x]
    for k in range(40):
        x = euler_step(x, spec, dts[k], incs[k])
        if k + 1 in (10, 40):
            want.append(x)
    assert not div
    assert out == pytest.approx(want, rel=1e-13, abs=1e-13)


def test_euler_path_flags_overflow():
    spec = DriftSpec("pure_power", 1.0, 0.5)
    out, div = K.euler_path(spec.code, 1.0, 0.5, 1.0, 1.7e308, np.array([1e300, 1.0]), np.zeros(2), np.array([0, 1, 2]))
    assert div and out[0] == 1.7e308 and np.isnan(out[1:]).all()

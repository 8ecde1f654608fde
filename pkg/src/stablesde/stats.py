"""Distribution comparison and regression helpers."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .stable_core import StableParams, cf_exponent_numeric


@dataclass(frozen=True)
class ECDF:
    """Right-continuous empirical CDF of a sample."""

    points: np.ndarray  # sorted sample

    def __call__(self, x):
        return np.searchsorted(self.points, x, side="right") / self.points.size


def ecdf(sample) -> ECDF:
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    if x.size == 0:
        raise DomainError("ecdf of an empty sample")
    return ECDF(x)


@dataclass(frozen=True)
class KSReport:
    statistic: float
    n_a: int
    n_b: int
    p_value: float
    level: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def kolmogorov_sf(z: float, tol: float = 1e-10) -> float:
    """P(K > z) = 2 Σ_{k>=1} (-1)^(k-1) exp(-2 k² z²), clipped to [0, 1]."""
    if z <= 0:
        return 1.0
    total = 0.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * z * z)
        total += term if k % 2 else -term
        if term < tol:
            break
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


def ks_two_sample(a, b, level: float = 0.01) -> KSReport:
    """Two-sample KS test with the asymptotic Kolmogorov p-value.

    The statistic is the largest ECDF gap over the merged order statistics;
    both ECDFs are evaluated right-continuously at every merged point, which
    also covers the left limits because the gap only changes at sample points.
    """
    xa = np.sort(np.asarray(a, dtype=float).ravel())
    xb = np.sort(np.asarray(b, dtype=float).ravel())
    if xa.size == 0 or xb.size == 0:
        raise DomainError("KS test needs two non-empty samples")
    if np.isnan(xa).any() or np.isnan(xb).any():
        raise DomainError("KS test samples contain NaN")
    merged = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, merged, side="right") / xa.size
    fb = np.searchsorted(xb, merged, side="right") / xb.size
    d = float(np.max(np.abs(fa - fb)))
    n_eff = xa.size * xb.size / (xa.size + xb.size)
    p = kolmogorov_sf(d * math.sqrt(n_eff))
    return KSReport(d, int(xa.size), int(xb.size), p, level, p > level)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual_rms: float
    window: tuple[float, float]
    n_used: int
    n_excluded: int


def loglog_slope(t, x, window: tuple[float, float] | None = None) -> SlopeFit:
    """Least squares of log x on log t within ``window``.

    Points with x <= 0 (or t <= 0) inside the window are dropped and counted.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if window is None:
        window = (float(t[t > 0].min()), float(t.max()))
    lo, hi = window
    inside = (t >= lo) & (t <= hi)
    ok = inside & (x > 0) & (t > 0) & np.isfinite(x)
    if ok.sum() < 3:
        raise DomainError(f"only {int(ok.sum())} usable points in window {window}; need 3")
    lt, lx = np.log(t[ok]), np.log(x[ok])
    A = np.column_stack([lt, np.ones_like(lt)])
    (slope, icpt), *_ = np.linalg.lstsq(A, lx, rcond=None)
    resid = lx - (slope * lt + icpt)
    return SlopeFit(
        float(slope), float(icpt), float(np.sqrt(np.mean(resid**2))), (float(lo), float(hi)),
        int(ok.sum()), int(inside.sum() - ok.sum()),
    )


def empirical_cf(sample, theta_grid) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("empirical CF of an empty sample")
    th = np.asarray(theta_grid, dtype=float)
    out = np.empty(th.shape, dtype=complex)
    for i, v in enumerate(th.ravel()):
        # cos/sin means separately keep memory at one sample-sized temporary
        out.flat[i] = complex(np.mean(np.cos(v * x)), np.mean(np.sin(v * x)))
    return out


def compare_cf(sample, params: StableParams, t: float, theta_grid, numeric: bool = True) -> float:
    """max over θ of |empirical CF - exp(t ψ(θ))|.

    ψ comes from the quadrature oracle when ``numeric`` is set, otherwise
    from the closed form.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    th = np.asarray(theta_grid, dtype=float).ravel()
    emp = empirical_cf(sample, th)
    if numeric:
        psi = np.array([cf_exponent_numeric(v, params) for v in th])
    else:
        psi = params.cf_exponent(th)
    return float(np.max(np.abs(emp - np.exp(t * psi))))

"""Strictly alpha-stable noise parameterized by its Levy measure.

The Levy measure is ``(c_plus 1{u>0} + c_minus 1{u<0}) |u|^(-1-alpha) du``.
Samples come from the Chambers-Mallows-Stuck transform in the strictly
stable parameterization; the Levy-measure-to-(scale, skew) map is checked
against direct numerical integration of the Levy-Khintchine exponent every
time a parameter set is built.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureError
from .records import JumpLedger, PathRecord

#: θ values at which the closed-form exponent is checked against quadrature.
VALIDATION_THETAS = (0.5, 1.0, 2.0)
VALIDATION_RTOL = 1e-6


@dataclass(frozen=True)
class StableParams:
    """Noise law ``B_alpha`` with ``E exp(iθB(t)) = exp(t ψ(θ))``.

    ``unit_scale`` is σ in ``ψ(θ) = -σ^α |θ|^α (1 - i skew sgn(θ) tan(πα/2))``.
    Build instances with :func:`make_stable_params`.
    """

    alpha: float
    c_plus: float
    c_minus: float
    skew: float
    unit_scale: float

    @property
    def total_intensity(self) -> float:
        return self.c_plus + self.c_minus

    def cf_exponent(self, theta):
        """Closed-form Levy-Khintchine exponent ψ(θ)."""
        theta = np.asarray(theta, dtype=float)
        a = self.alpha
        return -(self.unit_scale**a) * np.abs(theta) ** a * (
            1.0 - 1j * self.skew * np.sign(theta) * math.tan(math.pi * a / 2)
        )


def _check_inputs(alpha: float, c_plus: float, c_minus: float) -> None:
    if not (math.isfinite(alpha) and 0.0 < alpha < 2.0):
        raise DomainError(f"alpha must lie in (0, 2), got {alpha}")
    if alpha == 1.0:
        raise DomainError("alpha = 1 is excluded: only the strictly stable case alpha != 1")
    if c_plus < 0 or c_minus < 0:
        raise DomainError(f"jump intensities must be non-negative, got c_plus={c_plus}, c_minus={c_minus}")
    if c_plus + c_minus <= 0:
        raise DomainError("both jump intensities are zero; need c_plus + c_minus > 0")


def levy_measure_scale(alpha: float, c_plus: float, c_minus: float) -> float:
    """σ of B(1) for the given Levy measure (closed form, strictly stable case)."""
    sigma_alpha = -(c_plus + c_minus) * special.gamma(-alpha) * math.cos(math.pi * alpha / 2)
    return float(sigma_alpha ** (1.0 / alpha))


@functools.lru_cache(maxsize=256)
def _validated(alpha: float, c_plus: float, c_minus: float) -> StableParams:
    total = c_plus + c_minus
    params = StableParams(
        alpha=alpha,
        c_plus=c_plus,
        c_minus=c_minus,
        skew=(c_plus - c_minus) / total,
        unit_scale=levy_measure_scale(alpha, c_plus, c_minus),
    )
    for theta in VALIDATION_THETAS:
        numeric = cf_exponent_numeric(theta, params)
        closed = complex(params.cf_exponent(theta))
        if abs(closed - numeric) > VALIDATION_RTOL * abs(numeric):
            raise RuntimeError(
                f"closed-form exponent {closed} disagrees with quadrature {numeric} "
                f"at theta={theta} for alpha={alpha}, c+={c_plus}, c-={c_minus}"
            )
    return params


def make_stable_params(alpha: float, c_plus: float, c_minus: float) -> StableParams:
    _check_inputs(alpha, c_plus, c_minus)
    return _validated(float(alpha), float(c_plus), float(c_minus))


# --------------------------------------------------------------------------
# Levy-Khintchine exponent by quadrature (validation oracle)
# --------------------------------------------------------------------------

def _cos_kernel(x: float) -> float:
    # (cos x - 1) / x^2 without cancellation
    if x == 0.0:
        return -0.5
    return -2.0 * math.sin(0.5 * x) ** 2 / (x * x)


def _sin_kernel(x: float) -> float:
    # (sin x - x) / x^3, series below |x| = 0.1
    if abs(x) < 0.1:
        xs = x * x
        return -1 / 6 + xs / 120 - xs * xs / 5040 + xs**3 / 362880
    return (math.sin(x) - x) / x**3


def _sinc(x: float) -> float:
    return 1.0 if x == 0.0 else math.sin(x) / x


def _quad(func, lo, hi, what: str, **kw) -> float:
    out = integrate.quad(func, lo, hi, full_output=1, limit=400, **kw)
    if len(out) > 3:
        raise QuadratureError(f"quadrature for {what} did not converge: {out[3].splitlines()[0]}", out[1])
    return out[0]


def _half_line_exponent(theta: float, alpha: float, rtol: float) -> complex:
    """∫_0^∞ (e^{iθu} - 1 - iθu 1{α>1}) u^{-1-α} du for θ > 0."""
    # (0, 1]: algebraic weights absorb the endpoint behaviour
    re_in = _quad(
        lambda u: theta**2 * _cos_kernel(theta * u),
        0.0, 1.0, "real part on (0,1]",
        weight="alg", wvar=(1.0 - alpha, 0.0), epsrel=rtol, epsabs=1e-15,
    )
    if alpha < 1:
        im_in = _quad(
            lambda u: theta * _sinc(theta * u),
            0.0, 1.0, "imaginary part on (0,1]",
            weight="alg", wvar=(-alpha, 0.0), epsrel=rtol, epsabs=1e-15,
        )
    else:
        im_in = _quad(
            lambda u: theta**3 * _sin_kernel(theta * u),
            0.0, 1.0, "imaginary part on (0,1]",
            weight="alg", wvar=(2.0 - alpha, 0.0), epsrel=rtol, epsabs=1e-15,
        )
    # [1, ∞): Fourier-weighted quadrature, polynomial parts in closed form
    tail = lambda u: u ** (-1.0 - alpha)  # noqa: E731
    re_out = _quad(tail, 1.0, np.inf, "real tail", weight="cos", wvar=theta, epsabs=rtol * 1e-2) - 1.0 / alpha
    im_out = _quad(tail, 1.0, np.inf, "imaginary tail", weight="sin", wvar=theta, epsabs=rtol * 1e-2)
    if alpha > 1:
        im_out -= theta / (alpha - 1.0)
    return complex(re_in + re_out, im_in + im_out)


def cf_exponent_numeric(theta: float, params: StableParams, rtol: float = 1e-8) -> complex:
    """ψ(θ) by adaptive quadrature of the Levy-Khintchine integral.

    The u < 0 half is the complex conjugate of the u > 0 half evaluated at
    the same θ, so only (0, 1] and [1, ∞) are integrated. No compensation
    is used for α < 1 and full compensation for α > 1, matching the strictly
    stable law.
    """
    theta = float(theta)
    if theta == 0.0:
        return 0j
    half = _half_line_exponent(abs(theta), params.alpha, rtol)
    psi = params.c_plus * half + params.c_minus * half.conjugate()
    return psi if theta > 0 else psi.conjugate()


# --------------------------------------------------------------------------
# Sampling
# --------------------------------------------------------------------------

def standard_stable(alpha: float, skew: float, size, rng: np.random.Generator) -> np.ndarray:
    """Chambers-Mallows-Stuck draws with ψ(θ) = -|θ|^α (1 - i skew sgn θ tan(πα/2))."""
    v = rng.uniform(-math.pi / 2, math.pi / 2, size)
    w = rng.standard_exponential(size)
    t = skew * math.tan(math.pi * alpha / 2)
    shift = math.atan(t) / alpha
    scale = (1.0 + t * t) ** (1.0 / (2.0 * alpha))
    av = alpha * (v + shift)
    return scale * np.sin(av) / np.cos(v) ** (1.0 / alpha) * (np.cos(v - av) / w) ** ((1.0 - alpha) / alpha)


def sample_stable_increment(params: StableParams, dt, rng: np.random.Generator, size=None):
    """Draw(s) distributed as B_α(dt).

    ``dt`` may be an array, in which case one increment per entry is drawn.
    """
    dt_arr = np.asarray(dt, dtype=float)
    if np.any(dt_arr <= 0):
        raise DomainError("increment length dt must be positive")
    if size is None:
        size = dt_arr.shape if dt_arr.ndim else None
    z = standard_stable(params.alpha, params.skew, size, rng)
    return params.unit_scale * dt_arr ** (1.0 / params.alpha) * z


def sample_stable_path(params: StableParams, grid, rng: np.random.Generator) -> PathRecord:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or grid[0] != 0.0:
        raise DomainError("grid must be a non-empty 1-d array starting at 0")
    steps = np.diff(grid)
    if np.any(steps <= 0):
        raise DomainError("grid must be strictly increasing")
    values = np.zeros_like(grid)
    if steps.size:
        values[1:] = np.cumsum(sample_stable_increment(params, steps, rng))
    return PathRecord(grid, values)


def large_jump_rate(params: StableParams, epsilon: float) -> float:
    """Expected number of jumps with |u| > ε per unit time."""
    return params.total_intensity * epsilon ** (-params.alpha) / params.alpha


def sample_large_jumps(params: StableParams, epsilon: float, T: float, rng: np.random.Generator) -> JumpLedger:
    """Poisson jumps of B_α on [0, T) with |u| > ε."""
    if epsilon <= 0 or T <= 0:
        raise DomainError("epsilon and T must be positive")
    count = rng.poisson(large_jump_rate(params, epsilon) * T)
    times = np.sort(rng.uniform(0.0, T, count))
    # one uniform decides the sign and, rescaled, the Pareto magnitude
    u = rng.uniform(size=count)
    p_up = params.c_plus / params.total_intensity
    up = u < p_up
    v = np.where(up, u / p_up if p_up > 0 else 0.0, (u - p_up) / (1.0 - p_up) if p_up < 1 else 0.0)
    magnitude = epsilon * (1.0 - v) ** (-1.0 / params.alpha)
    sizes = np.where(up, magnitude, -magnitude)
    return JumpLedger(float(epsilon), times, sizes)


def small_jump_moments(params: StableParams, epsilon: float) -> tuple[float, float]:
    """(variance_rate, compensator_rate) of the jumps with |u| <= ε.

    ``variance_rate`` is ∫_{|u|<=ε} u² ν(du). ``compensator_rate`` is the drift
    that, added to the Gaussian small-jump surrogate and the raw large jumps,
    reproduces the strictly stable law: the small-jump mean for α < 1 and
    minus the large-jump compensator for α > 1. Both cases reduce to
    ``(c+ - c-) ε^(1-α) / (1-α)``.
    """
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    a = params.alpha
    variance_rate = params.total_intensity * epsilon ** (2.0 - a) / (2.0 - a)
    compensator_rate = (params.c_plus - params.c_minus) * epsilon ** (1.0 - a) / (1.0 - a)
    return variance_rate, compensator_rate

"""Drift families with power asymptotics and the space transform g.

Two families are provided:

``pure_power``
    ``f(x) = a x^β`` for ``x >= x0``, joined by a cubic Hermite blend on
    ``[x0/2, x0]`` to the constant ``a x0^β / 2`` below ``x0/2``. The result
    is C¹, positive and bounded below.
``smooth_power``
    ``f(x) = a (1 + x²)^(β/2)``, smooth and positive on the whole line.

``zero`` (f ≡ 0) exists only as a test hook for drift-free runs.

``g(x) = ∫_{x0}^x dz / f(z)`` for ``x >= x0``. Below ``x0`` it is continued by
a C², strictly increasing polynomial bridge on ``(0, x0)`` that is constant
(equal to ``-bridge_depth``) on ``(-∞, 0]``.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError

FAMILIES = ("pure_power", "smooth_power", "zero")
FAMILY_CODES = {"pure_power": 0, "smooth_power": 1, "zero": 2}


@dataclass(frozen=True)
class DriftSpec:
    family: str
    a: float
    beta: float
    x0: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown drift family {self.family!r}; choose from {FAMILIES}")
        if self.family == "zero":
            return
        if not self.a > 0:
            raise DomainError(f"drift coefficient a must be positive, got {self.a}")
        if not self.beta < 1:
            raise DomainError(f"power exponent beta must be < 1, got {self.beta}")
        if not self.x0 > 0:
            raise DomainError(f"anchor x0 must be positive, got {self.x0}")

    @property
    def code(self) -> int:
        return FAMILY_CODES[self.family]


# --------------------------------------------------------------------------
# f and f'
# --------------------------------------------------------------------------

def eval_f(spec: DriftSpec, x):
    """Return ``(f(x), f'(x))``; accepts scalars or arrays."""
    x = np.asarray(x, dtype=float)
    a, b, x0 = spec.a, spec.beta, spec.x0
    if spec.family == "zero":
        z = np.zeros_like(x)
        return z, z.copy()
    if spec.family == "smooth_power":
        q = 1.0 + x * x
        f = a * q ** (b / 2)
        return f, a * b * x * q ** (b / 2 - 1)

    lvl = a * x0**b
    f = np.empty_like(x)
    fp = np.empty_like(x)
    hi = x >= x0
    lo = x <= x0 / 2
    mid = ~(hi | lo)
    xh = x[hi]
    f[hi] = a * xh**b
    fp[hi] = a * b * xh ** (b - 1)
    f[lo] = lvl / 2
    fp[lo] = 0.0
    y = (x[mid] - x0 / 2) / (x0 / 2)
    f[mid] = lvl / 2 + (lvl / 2) * (3 * y**2 - 2 * y**3) + (lvl * b / 2) * (y**3 - y**2)
    fp[mid] = ((lvl / 2) * (6 * y - 6 * y**2) + (lvl * b / 2) * (3 * y**2 - 2 * y)) / (x0 / 2)
    return f, fp


def g_second(spec: DriftSpec, x):
    """g''(x): ``-f'/f²`` on [x0, ∞), the bridge's curvature below x0."""
    x = np.asarray(x, dtype=float)
    f, fp = eval_f(spec, x)
    out = -fp / f**2
    if spec.family == "zero":
        return out
    below = x < spec.x0
    if np.any(below):
        br = _bridge(spec)
        y = x / spec.x0
        curv = br.slope * (2 * (3 - br.m) * y + 3 * (br.m - 2) * y * y) / spec.x0
        out = np.where(below, np.where(x > 0, curv, 0.0), out)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# Bridge below x0
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Bridge:
    slope: float  # g'(x0) = 1/f(x0)
    m: float  # x0 g''(x0) / g'(x0)
    depth: float  # g on (-∞, 0] equals -depth
    x0: float

    def __call__(self, x):
        y = x / self.x0
        m = self.m
        phi = y**2 * ((3 - m) + (m - 2) * y)
        big_phi = (3 - m) * y**3 / 3 + (m - 2) * y**4 / 4
        return -self.depth + self.slope * self.x0 * big_phi, self.slope * phi


def _bridge(spec: DriftSpec) -> _Bridge:
    f0, fp0 = eval_f(spec, spec.x0)
    slope = 1.0 / float(f0)
    m = -spec.x0 * float(fp0) / float(f0)
    if m > 3:
        raise DomainError(f"no monotone C2 bridge below x0: x0 (ln f)'(x0) = {-m} < -3")
    return _Bridge(slope, m, slope * spec.x0 * (6 - m) / 12, spec.x0)


def bridge_depth(spec: DriftSpec) -> float:
    """Constant value -g takes on (-∞, 0]."""
    return _bridge(spec).depth


# --------------------------------------------------------------------------
# g for smooth_power: cumulative quadrature on a log grid
# --------------------------------------------------------------------------

class GCache:
    """Tabulated ``g`` on ``x0 · 10^(k/per_decade)`` with cubic Hermite interpolation.

    Node values come from adaptive quadrature of ``1/f`` between consecutive
    nodes; derivatives at the nodes are the exact ``1/f``. The table grows on
    demand; extension is serialized by a lock and deterministic, so readers
    see identical values whatever the interleaving.
    """

    def __init__(self, spec: DriftSpec, per_decade: int = 200, decades: float = 16.0, rtol: float = 1e-12):
        self.spec = spec
        self.per_decade = per_decade
        self.rtol = rtol
        self._lock = threading.Lock()
        self.nodes = np.array([spec.x0])
        self.values = np.array([0.0])
        self._extend(spec.x0 * 10.0**decades)

    def _recip_f(self, z: float) -> float:
        return 1.0 / (self.spec.a * (1.0 + z * z) ** (self.spec.beta / 2))

    def _extend(self, x_needed: float) -> None:
        with self._lock:
            n_have = self.nodes.size
            n_need = int(math.ceil(self.per_decade * math.log10(x_needed / self.spec.x0))) + 2
            if n_need <= n_have:
                return
            k = np.arange(n_have, n_need)
            new_nodes = self.spec.x0 * 10.0 ** (k / self.per_decade)
            left = np.concatenate([[self.nodes[-1]], new_nodes[:-1]])
            pieces = np.empty(new_nodes.size)
            for i, (lo, hi) in enumerate(zip(left, new_nodes)):
                val, err = integrate.quad(self._recip_f, lo, hi, epsrel=self.rtol, epsabs=0.0, limit=200)
                if err > 1e3 * self.rtol * abs(val):
                    raise QuadratureError(f"g quadrature on [{lo:.6g}, {hi:.6g}] failed", err)
                pieces[i] = val
            self.values = np.concatenate([self.values, self.values[-1] + np.cumsum(pieces)])
            self.nodes = np.concatenate([self.nodes, new_nodes])

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.size and np.max(x) > self.nodes[-1]:
            self._extend(float(np.max(x)))
        nodes, values = self.nodes, self.values
        k = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, nodes.size - 2)
        x_lo, x_hi = nodes[k], nodes[k + 1]
        h = x_hi - x_lo
        s = (x - x_lo) / h
        d_lo = 1.0 / eval_f(self.spec, x_lo)[0]
        d_hi = 1.0 / eval_f(self.spec, x_hi)[0]
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * values[k] + h10 * h * d_lo + h01 * values[k + 1] + h11 * h * d_hi


_CACHES: dict[DriftSpec, GCache] = {}
_CACHES_LOCK = threading.Lock()


def g_cache(spec: DriftSpec) -> GCache:
    with _CACHES_LOCK:
        cache = _CACHES.get(spec)
        if cache is None:
            cache = _CACHES[spec] = GCache(spec)
        return cache


# --------------------------------------------------------------------------
# g and g'
# --------------------------------------------------------------------------

def eval_g(spec: DriftSpec, x):
    """Return ``(g(x), g'(x))``; accepts scalars or arrays."""
    if spec.family == "zero":
        raise DomainError("g is undefined for the zero drift")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    g = np.empty_like(x)
    gp = np.empty_like(x)
    hi = x >= spec.x0
    neg = x <= 0
    mid = ~(hi | neg)
    xh = x[hi]
    gp[hi] = 1.0 / eval_f(spec, xh)[0]
    if spec.family == "pure_power":
        e = 1.0 - spec.beta
        g[hi] = (xh**e - spec.x0**e) / (spec.a * e)
    else:
        g[hi] = g_cache(spec)(xh)
    br = _bridge(spec)
    g[neg] = -br.depth
    gp[neg] = 0.0
    g[mid], gp[mid] = br(x[mid])
    if scalar:
        return float(g[0]), float(gp[0])
    return g, gp


# --------------------------------------------------------------------------
# Hypothesis checks
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisReport:
    alpha: float
    beta: float
    strong_law_valid: bool
    clt_valid: bool
    counterexample_regime: bool
    assumption2_sufficient: bool
    notes: tuple[str, ...] = ()


def check_theorem_hypotheses(spec: DriftSpec, alpha: float, c_plus: float | None = None) -> HypothesisReport:
    """Parameter-window flags for the strong law, the CLT and its failure.

    ``assumption2_sufficient`` reports the escape-to-+∞ sufficient condition:
    both families have ``inf f >= 0`` (which suffices when α > 1), and for
    α < 1 upward jumps are also required, so ``c_plus`` must be given and
    positive.
    """
    if not (0 < alpha < 2) or alpha == 1:
        raise DomainError(f"alpha must lie in (0,2) without 1, got {alpha}")
    b = spec.beta
    notes = []
    strong = 1 - alpha < b < 1
    clt = 1 - alpha < b < 1 / (1 + alpha)
    counter = b > 1 / (1 + alpha)
    if spec.family == "zero":
        suff = False
        notes.append("zero drift: no escape guarantee")
    elif alpha > 1:
        suff = True
    else:
        suff = c_plus is not None and c_plus > 0
        if c_plus is None:
            notes.append("alpha < 1 needs c_plus > 0; intensity not supplied")
    if not strong:
        notes.append(f"beta={b} outside the strong-law window (1-alpha, 1) = ({1 - alpha:g}, 1)")
    if not clt:
        notes.append(
            f"beta={b} outside the CLT window β∈(1−α, 1/(1+α)) = ({1 - alpha:g}, {1 / (1 + alpha):g})"
        )
    return HypothesisReport(alpha, b, strong, clt, counter, suff, tuple(notes))


# --------------------------------------------------------------------------
# Second-order remainder bound
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RemainderBoundReport:
    constant: float
    max_ratio: float
    n_points: int
    passed: bool


def check_g_remainder_bound(
    spec: DriftSpec, n_x: int = 50, n_u: int = 50, x_span: float = 1e6, sup_grid: int = 4000
) -> RemainderBoundReport:
    """Check |g(x+u) - g(x) - u g'(x)| <= C u² x^(-1-β) on an (x, u) grid.

    x runs log-uniformly over [2 x0, 2 x0 x_span] and u uniformly over
    [-x/2, x/2]; ``C = 2^(1+β) sup_{z>=x0} |g''(z)| z^(1+β)`` with the
    supremum taken on a log grid reaching 10^8 x0.
    """
    b, x0 = spec.beta, spec.x0
    z = x0 * np.logspace(0, 8, sup_grid)
    sup = float(np.max(np.abs(g_second(spec, z)) * z ** (1 + b)))
    const = 2.0 ** (1 + b) * sup
    xs = 2 * x0 * np.logspace(0, math.log10(x_span), n_x)
    fr = np.linspace(-0.5, 0.5, n_u)
    X, U = np.meshgrid(xs, fr, indexing="ij")
    U = U * X
    gx, gpx = eval_g(spec, X.ravel())
    gxu, _ = eval_g(spec, (X + U).ravel())
    lhs = np.abs(gxu - gx - U.ravel() * gpx)
    # a few ulps of the operands: the difference is computed in floating point
    rounding = 8 * np.finfo(float).eps * (np.abs(gxu) + np.abs(gx) + np.abs(U.ravel() * gpx))
    rhs = const * U.ravel() ** 2 * X.ravel() ** (-1 - b) + rounding
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, 0.0)
    max_ratio = float(np.max(ratio))
    return RemainderBoundReport(const, max_ratio, int(lhs.size), bool(np.all(lhs <= rhs)))

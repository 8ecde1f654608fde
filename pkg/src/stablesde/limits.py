"""Scaling exponents, rescaled fluctuations and their limits.

For ``f(x) ~ a x^β`` the solution grows like ``c1 t^(1/(1-β))`` and the
fluctuation around that curve, divided by ``(λ/ρ)^(1/α)``, converges to
``t^γ B(t^ρ)`` where

    γ = β/(1-β),   ρ = 1 - αγ,   c1 = (a(1-β))^(1/(1-β)).

The space transform ``g`` turns the same statement into
``g(X(λ)) - λ ≈ a^{-1} c1^{-β} ∫_0^λ s^{-γ} dB(s)``, and that integral has
the law of ``B(λ^ρ/ρ)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .drift import DriftSpec, check_theorem_hypotheses, eval_f, eval_g, g_second
from .errors import DomainError
from .records import JumpLedger, PathRecord
from .sde_engine import EnsembleResult, event_path
from .stable_core import StableParams, sample_stable_increment

RESCALE_MODES = ("clt", "beta_negative", "raw")


@dataclass(frozen=True)
class ScalingExponents:
    alpha: float
    beta: float
    a: float
    gamma: float
    rho: float
    c1: float
    r: float
    clt_valid: bool
    strong_law_valid: bool
    counterexample_regime: bool

    @property
    def growth(self) -> float:
        """Power 1/(1-β) of the first-order growth."""
        return 1.0 / (1.0 - self.beta)

    @property
    def g_scale(self) -> float:
        """a^{-1} c1^{-β}, the limit of g'(X(s)) s^γ."""
        return 1.0 / (self.a * self.c1**self.beta)


def derive_exponents(alpha: float, beta: float, a: float) -> ScalingExponents:
    if not (0 < alpha < 2) or alpha == 1:
        raise DomainError(f"alpha must lie in (0,2) without 1, got {alpha}")
    if not beta < 1:
        raise DomainError(f"beta must be < 1, got {beta}")
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    gamma = beta / (1 - beta)
    rep = check_theorem_hypotheses(DriftSpec("pure_power", a, beta), alpha)
    return ScalingExponents(
        alpha=alpha,
        beta=beta,
        a=a,
        gamma=gamma,
        rho=1 - alpha * gamma,
        c1=(a * (1 - beta)) ** (1 / (1 - beta)),
        r=(alpha + beta - 1) / alpha,
        clt_valid=rep.clt_valid,
        strong_law_valid=rep.strong_law_valid,
        counterexample_regime=rep.counterexample_regime,
    )


# --------------------------------------------------------------------------
# Rescaled process and its limit
# --------------------------------------------------------------------------

def rescale_path(
    path: PathRecord,
    lam: float,
    exps: ScalingExponents,
    mode: str = "clt",
    t_max: float | None = None,
) -> PathRecord:
    """``X^(λ)(t) = (X(λt) - c1 (λt)^(1/(1-β))) / (λ/ρ)^(1/α)`` on ``path.times / λ``.

    ``mode="beta_negative"`` multiplies by ``t^(-γ)`` (defined for t > 0, and
    0 at t = 0 when γ < 0); ``mode="raw"`` divides by ``λ^(1/α)`` instead and
    needs no hypothesis, which is what the counterexample regime uses.
    """
    if mode not in RESCALE_MODES:
        raise DomainError(f"unknown rescale mode {mode!r}; choose from {RESCALE_MODES}")
    if mode != "raw" and not exps.clt_valid:
        raise DomainError("CLT normalization requires beta in (1-alpha, 1/(1+alpha))")
    if not lam > 0:
        raise DomainError("lambda must be positive")
    if t_max is None:
        t_max = path.times[-1] / lam
    if path.times[-1] < lam * t_max * (1 - 1e-12):
        raise DomainError(f"path ends at {path.times[-1]}, shorter than lambda*t_max = {lam * t_max}")
    keep = path.times <= lam * t_max * (1 + 1e-12)
    s = path.times[keep]
    return PathRecord(s / lam, _rescale_values(s, path.values[keep], lam, exps, mode))


def _rescale_values(s, x, lam, exps: ScalingExponents, mode: str):
    t = s / lam
    norm = lam ** (1 / exps.alpha) if mode == "raw" else (lam / exps.rho) ** (1 / exps.alpha)
    out = (x - exps.c1 * s**exps.growth) / norm
    if mode == "beta_negative":
        with np.errstate(divide="ignore", invalid="ignore"):
            weight = np.where(t > 0, t ** (-exps.gamma), 0.0 if exps.gamma < 0 else np.inf)
        out = out * weight
    return out


def rescaled_at(path: PathRecord, lam: float, ts, exps: ScalingExponents, mode: str = "clt") -> np.ndarray:
    """Values of :func:`rescale_path` at times ``ts``, read from X at ``lam * t``.

    Reading X at the physical times avoids the rounding in ``s / lam``; the
    record grid should contain each ``lam * t`` exactly.
    """
    if mode not in RESCALE_MODES:
        raise DomainError(f"unknown rescale mode {mode!r}; choose from {RESCALE_MODES}")
    if mode != "raw" and not exps.clt_valid:
        raise DomainError("CLT normalization requires beta in (1-alpha, 1/(1+alpha))")
    s = lam * np.asarray(ts, dtype=float)
    if s.max() > path.times[-1] * (1 + 1e-12):
        raise DomainError(f"path ends at {path.times[-1]}, before lambda*t = {s.max()}")
    x = np.array([path.value_at(v) for v in s])
    return _rescale_values(s, x, lam, exps, mode)


def sample_limit_process(
    params: StableParams, exps: ScalingExponents, grid, rng: np.random.Generator, normalized: bool = False
) -> PathRecord:
    """``t^γ B(t^ρ)`` on ``grid``; ``normalized=True`` returns ``B(t^ρ)``,
    the limit of the ``beta_negative`` rescaling."""
    if not exps.clt_valid:
        raise DomainError("the limit process is defined for beta in (1-alpha, 1/(1+alpha))")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be non-negative and strictly increasing")
    u = grid**exps.rho
    steps = np.diff(np.concatenate([[0.0], u]))
    b = np.zeros_like(u)
    pos = steps > 0
    b[pos] = sample_stable_increment(params, steps[pos], rng)
    b = np.cumsum(b)
    if normalized:
        return PathRecord(grid, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(grid > 0, grid**exps.gamma, 0.0 if exps.gamma > 0 else 1.0)
    return PathRecord(grid, weight * b)


# --------------------------------------------------------------------------
# The time-changed stochastic integral
# --------------------------------------------------------------------------

def y_grid_power(rho: float, n_steps: int, omitted: float = 1e-4, margin: float = 1.05) -> float:
    """Exponent q of the grid ``s_k = t_max (k/n)^q``.

    The first cell [0, s_1) is left out of the sum; its share of
    ``∫_0^{t_max} s^(-αγ) ds`` is ``n^(-qρ)``, and q makes that smaller than
    ``omitted``.
    """
    return max(1.0, margin * math.log(1 / omitted) / (rho * math.log(n_steps)))


def y_nodes(gamma: float, rho: float, t_max: float, n_steps: int, at=()) -> np.ndarray:
    q = y_grid_power(rho, n_steps) if gamma > 0 else 1.0
    k = np.arange(1 if gamma > 0 else 0, n_steps + 1)
    nodes = t_max * (k / n_steps) ** q
    return np.union1d(nodes, np.asarray(at, dtype=float))


def sample_Y_integral(
    params: StableParams,
    gamma: float,
    t_max: float,
    n_steps: int,
    rng: np.random.Generator,
    at=None,
    integrator: str = "stable",
) -> PathRecord:
    """Left-point sum of ``s^(-γ) dB(s)`` on a grid refined towards 0.

    For γ > 0 the integrand blows up at 0, so the grid is ``t_max (k/n)^q``
    from k = 1 (see :func:`y_grid_power`); for γ <= 0 it is uniform from 0.
    Times in ``at`` are inserted into the grid and, when given, only those
    are returned. ``integrator="time"`` replaces dB by ds (Riemann sum
    check).
    """
    rho = 1 - params.alpha * gamma
    if not rho > 0:
        raise DomainError(f"alpha*gamma must be < 1, got {params.alpha * gamma}")
    if not (t_max > 0 and n_steps >= 1):
        raise DomainError("t_max and n_steps must be positive")
    nodes = y_nodes(gamma, rho, t_max, n_steps, () if at is None else at)
    dt = np.diff(nodes)
    if integrator == "stable":
        d_int = sample_stable_increment(params, dt, rng)
    elif integrator == "time":
        d_int = dt
    else:
        raise DomainError(f"unknown integrator {integrator!r}")
    left = nodes[:-1]
    with np.errstate(divide="ignore"):
        w = np.where(left > 0, left ** (-gamma), 0.0 if gamma < 0 else 1.0)
    values = np.concatenate([[0.0], np.cumsum(w * d_int)])
    if at is None:
        return PathRecord(nodes, values)
    idx = np.searchsorted(nodes, np.asarray(at, dtype=float))
    return PathRecord(nodes[idx], values[idx])


def time_changed_reference(params: StableParams, rho: float, t: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """n draws of ``B(t^ρ / ρ)``."""
    return sample_stable_increment(params, np.full(n, t**rho / rho), rng)


# --------------------------------------------------------------------------
# Ito decomposition of g(X)
# --------------------------------------------------------------------------

GFunc = Callable[[np.ndarray], tuple]


def _g_triplet(spec: DriftSpec, g: GFunc | None):
    if g is not None:
        return g

    def trip(x):
        gv, gp = eval_g(spec, x)
        return np.asarray(gv), np.asarray(gp), np.asarray(g_second(spec, x))

    return trip


def ito_terms(path: PathRecord, spec: DriftSpec, g: GFunc | None = None, with_qv: bool = False) -> tuple:
    """Drift, stochastic and remainder terms of ``g(X(t)) - g(X(0))``.

    ``path`` is a full-output jump-adapted record (or its :func:`event_path`).
    Over each continuous move from ``x`` to ``x'`` in time h the Gaussian
    small-jump increment is ``ΔB = x' - x - f(x) h``; the drift term adds the
    trapezoid ``(g'f(x) + g'f(x')) h / 2`` and the stochastic term
    ``g'(x) ΔB``. Each ledger jump ``u`` from ``x-`` adds ``g'(x-) u`` to the
    stochastic term and ``g(x- + u) - g(x-) - g'(x-) u`` to the remainder.
    The small jumps are not in the ledger; their share of the remainder is
    represented by ``g''(x) ΔB² / 2`` per Gaussian increment, which is also
    added to the remainder. ``with_qv`` additionally returns that share on
    its own as a fourth term.

    ``g`` overrides the transform with a callable returning
    ``(g, g', g'')`` arrays (test hook).
    """
    if path.ledger is None:
        raise DomainError("ito_terms needs a path with a jump ledger (full-output jump-adapted run)")
    if "pre" not in path.channels:
        path = event_path(path)
    trip = _g_triplet(spec, g)
    t = path.times
    post = path.values
    pre = path.channels["pre"]
    x_start = post[:-1]
    x_end = pre[1:]
    h = np.diff(t)
    f_start = eval_f(spec, x_start)[0] if spec.family != "zero" else np.zeros_like(x_start)
    f_end = eval_f(spec, x_end)[0] if spec.family != "zero" else np.zeros_like(x_end)
    _, gp_s, gpp_s = trip(x_start)
    _, gp_e, _ = trip(x_end)
    db = x_end - x_start - f_start * h
    d_drift = 0.5 * (gp_s * f_start + gp_e * f_end) * h
    d_stoch = gp_s * db
    d_qv = 0.5 * gpp_s * db * db
    d_rem = d_qv.copy()

    jump = post[1:] != pre[1:]
    u = post[1:] - pre[1:]
    # exact sizes from the ledger where the event is a jump
    idx = np.searchsorted(path.ledger.times, t[1:][jump])
    u[jump] = path.ledger.sizes[idx]
    g_pre, gp_pre, _ = trip(x_end[jump])
    g_post, _, _ = trip(post[1:][jump])
    d_stoch[jump] += gp_pre * u[jump]
    d_rem[jump] += g_post - g_pre - gp_pre * u[jump]

    def cum(d):
        return PathRecord(t, np.concatenate([[0.0], np.cumsum(d)]))

    if with_qv:
        return cum(d_drift), cum(d_stoch), cum(d_rem), cum(d_qv)
    return cum(d_drift), cum(d_stoch), cum(d_rem)


def remainder_statistic(ensemble: EnsembleResult, exps: ScalingExponents, lam: float, T: float = 1.0) -> float:
    """Median over paths of ``λ^(-ρ/α) sup_{t<=T} |remainder(λt)|``.

    Uses the running sup channel ``rem_sup`` recorded by the jump-adapted
    engine; diverged paths are skipped.
    """
    horizon = lam * T
    if ensemble.config.T < horizon * (1 - 1e-12):
        raise DomainError(f"ensemble horizon {ensemble.config.T} is shorter than lambda*T = {horizon}")
    vals = remainder_sups(ensemble, exps, lam, T)
    return float(np.median(vals))


def remainder_sups(ensemble: EnsembleResult, exps: ScalingExponents, lam: float, T: float = 1.0) -> np.ndarray:
    horizon = lam * T
    out = []
    for i, p in enumerate(ensemble.paths):
        if p.diverged or "rem_sup" not in p.channels:
            continue
        out.append(p.value_at(horizon, "rem_sup"))
    if not out:
        raise DomainError("no usable paths with a recorded remainder")
    return lam ** (-exps.rho / exps.alpha) * np.asarray(out)


def corollary_statistic(values_at_lam: np.ndarray, spec: DriftSpec, exps: ScalingExponents, lam: float) -> np.ndarray:
    """``λ^(-ρ/α) (g(X(λ)) - λ)`` from values of X(λ)."""
    g = np.asarray(eval_g(spec, np.asarray(values_at_lam, dtype=float))[0])
    return lam ** (-exps.rho / exps.alpha) * (g - lam)


def corollary_reference(params: StableParams, exps: ScalingExponents, n: int, rng: np.random.Generator) -> np.ndarray:
    """n draws of ``a^{-1} c1^{-β} ρ^{-1/α} B(1)``."""
    scale = exps.g_scale * exps.rho ** (-1 / exps.alpha)
    return scale * sample_stable_increment(params, np.ones(n), rng)


# --------------------------------------------------------------------------
# Counterexample and diagnostics
# --------------------------------------------------------------------------

def counterexample_gap(exps: ScalingExponents, lam, require_regime: bool = True):
    """``c1 ((λ+1)^(1/(1-β)) - λ^(1/(1-β))) / λ^(1/α)``.

    This is the change of the centering over one unit of time measured in the
    noise scale; it diverges when β > 1/(1+α). ``require_regime=False``
    evaluates it anywhere (it then tends to 0 inside the CLT window).
    """
    if require_regime and not exps.counterexample_regime:
        raise DomainError("counterexample gap requires beta > 1/(1+alpha)")
    lam = np.asarray(lam, dtype=float)
    e = exps.growth
    # λ^e ((1 + 1/λ)^e - 1) without cancellation
    inc = lam**e * np.expm1(e * np.log1p(1.0 / lam))
    out = exps.c1 * inc / lam ** (1 / exps.alpha)
    return float(out) if out.ndim == 0 else out


def z_trace(path: PathRecord, spec: DriftSpec, exps: ScalingExponents) -> PathRecord:
    """``g'(X(s)) s^γ - a^{-1} c1^{-β}`` on the recorded grid (s > 0).

    Diagnostic only: it should drift towards 0 along a path, at no stated rate.
    """
    s = path.times
    keep = s > 0
    gp = np.asarray(eval_g(spec, path.values[keep])[1])
    return PathRecord(s[keep], gp * s[keep] ** exps.gamma - exps.g_scale)


def jump_growth_diagnostic(ledger: JumpLedger, alpha: float, window: tuple[float, float], delta: float = 0.1) -> float:
    """``max |u| / s^(1/α + δ)`` over ledger jumps at times s in ``window``.

    Tends to 0 as the window moves right; 0 for an empty window.
    """
    lo, hi = window
    if not 0 < lo < hi:
        raise DomainError("window must satisfy 0 < lo < hi")
    sel = (ledger.times >= lo) & (ledger.times <= hi)
    if not np.any(sel):
        return 0.0
    return float(np.max(np.abs(ledger.sizes[sel]) / ledger.times[sel] ** (1 / alpha + delta)))


__all__ = [
    "ScalingExponents",
    "derive_exponents",
    "rescale_path",
    "rescaled_at",
    "sample_limit_process",
    "sample_Y_integral",
    "time_changed_reference",
    "ito_terms",
    "remainder_statistic",
    "remainder_sups",
    "corollary_statistic",
    "corollary_reference",
    "counterexample_gap",
    "z_trace",
    "jump_growth_diagnostic",
]

"""Euler integration of dX = f(X) dt + dB_alpha with exact stable increments.

Two schemes:

* ``ExactIncrement`` draws each step's noise exactly from the stable law, so
  the only error comes from freezing the drift over a step.
* ``JumpAdapted(epsilon)`` places every jump with ``|u| > epsilon`` at its
  exact Poisson time and replaces the smaller jumps by a Gaussian with the
  same variance plus the compensating drift. It can keep the full jump
  ledger and accumulates the Ito decomposition of ``g(X)`` on the fly.

Paths are simulated one at a time from the substream
``(master_seed, "path", index)``; ensembles only batch paths into blocks.
"""
from __future__ import annotations

import csv
import functools
import math
import multiprocessing as mp
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from . import _kernels
from .drift import DriftSpec, _bridge, eval_f, g_cache
from .errors import DomainError
from .records import JumpLedger, PathRecord
from .rng import substream
from .stable_core import (
    StableParams,
    large_jump_rate,
    sample_large_jumps,
    sample_stable_increment,
    small_jump_moments,
)

# paths per work unit; fixed so results never depend on the worker count
BLOCK_SIZE = 16
# target number of Poisson jumps generated per chunk in the jump-adapted scheme
CHUNK_EVENTS = 1 << 17


@dataclass(frozen=True)
class FixedStep:
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("dt must be positive")


@dataclass(frozen=True)
class GeometricStep:
    """Step ``clip(growth * t, dt0, dt_max)``: fixed early, proportional to t later.

    With f varying on the scale x ~ t^(1/(1-β)), the relative change of f over
    one step is about ``|β| growth / (1 - β)``; :meth:`check` caps it at 1%.
    """

    dt0: float
    growth: float
    dt_max: float = math.inf

    def __post_init__(self):
        if not (self.dt0 > 0 and self.growth > 0 and self.dt_max >= self.dt0):
            raise DomainError("geometric step needs dt0 > 0, growth > 0, dt_max >= dt0")

    def check(self, beta: float, cap: float = 0.01) -> None:
        if abs(beta) * self.growth / (1 - beta) >= cap:
            raise DomainError(
                f"growth {self.growth} lets the drift change by more than {cap:.0%} per step for beta={beta}"
            )


@dataclass(frozen=True)
class ExactIncrement:
    pass


@dataclass(frozen=True)
class JumpAdapted:
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("jump threshold epsilon must be positive")


DtPolicy = Union[FixedStep, GeometricStep]
Scheme = Union[ExactIncrement, JumpAdapted]


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``full_output`` (jump-adapted only) keeps every event time, value and the
    jump ledger in the returned records; otherwise only ``record_grid`` is kept.
    """

    x_init: float
    T: float
    dt_policy: DtPolicy
    scheme: Scheme
    record_grid: tuple[float, ...]
    n_paths: int = 1
    master_seed: int = 0
    full_output: bool = False

    def __post_init__(self):
        grid = np.asarray(self.record_grid, dtype=float)
        if not self.T > 0:
            raise DomainError("horizon T must be positive")
        if grid.size == 0 or np.any(np.diff(grid) <= 0):
            raise DomainError("record_grid must be non-empty and strictly increasing")
        if grid[0] < 0 or grid[-1] > self.T:
            raise DomainError("record_grid must lie within [0, T]")
        if self.n_paths < 1:
            raise DomainError("n_paths must be positive")
        object.__setattr__(self, "record_grid", tuple(float(t) for t in grid))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dt_policy"] = {"kind": type(self.dt_policy).__name__, **asdict(self.dt_policy)}
        d["scheme"] = {"kind": type(self.scheme).__name__, **asdict(self.scheme)}
        d["record_grid"] = list(self.record_grid)
        return d


@dataclass
class EnsembleResult:
    config: SimConfig
    paths: list[PathRecord]
    diverged: list[int]
    steps: int
    jumps: int
    wall_time: float = field(default=0.0, compare=False)

    def values_at(self, t: float, channel: str | None = None) -> np.ndarray:
        """Recorded value at time t across paths, NaN for diverged paths."""
        out = np.array([p.value_at(t, channel) for p in self.paths])
        out[self.diverged] = np.nan
        return out

    def matrix(self, channel: str | None = None) -> np.ndarray:
        rows = [p.values if channel is None else p.channels[channel] for p in self.paths]
        return np.vstack(rows)


# --------------------------------------------------------------------------
# Time grids
# --------------------------------------------------------------------------

def step_times(config: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    """Step boundaries (record times included) and the index of each record time."""
    return _step_times(config.T, config.dt_policy, config.record_grid)


@functools.lru_cache(maxsize=8)
def _step_times(T, pol, record_grid):
    if isinstance(pol, FixedStep):
        n = int(math.floor(T / pol.dt + 1e-9))
        base = np.arange(n + 1) * pol.dt
        base = base[base < T]
        scale = pol.dt
    else:
        pts = [0.0]
        t = 0.0
        while t < T:
            t = t + min(max(pol.growth * t, pol.dt0), pol.dt_max)
            pts.append(t)
        base = np.array(pts[:-1])
        scale = pol.dt0
    rec = np.asarray(record_grid)
    keep = np.ones(base.size, dtype=bool)
    # drop base points that nearly coincide with a record time
    near = np.searchsorted(rec, base)
    for off in (-1, 0):
        idx = np.clip(near + off, 0, rec.size - 1)
        keep &= np.abs(base - rec[idx]) > 1e-6 * scale
    keep[0] = True
    times = np.union1d(np.concatenate([base[keep], [T]]), rec)
    rec_idx = np.searchsorted(times, rec)
    times.flags.writeable = False
    rec_idx.flags.writeable = False
    return times, rec_idx


# --------------------------------------------------------------------------
# Single paths
# --------------------------------------------------------------------------

def euler_step(x, spec: DriftSpec, dt: float, increment):
    """``x + f(x) dt + increment``.

    A non-finite result raises, since it means dt is too large for the drift.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    out = np.asarray(x, dtype=float) + eval_f(spec, x)[0] * dt + increment
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("Euler step produced a non-finite state")
    return float(out) if np.ndim(out) == 0 else out


def _drift_args(spec: DriftSpec):
    return spec.code, float(spec.a), float(spec.beta), float(spec.x0)


def simulate_path(
    spec: DriftSpec, params: StableParams, config: SimConfig, path_index: int, *, noise: bool = True
) -> PathRecord:
    """One ExactIncrement path, recorded on ``config.record_grid``.

    ``noise=False`` is a test hook that zeroes every increment (the path then
    solves the ODE x' = f(x) by Euler's method).
    """
    if not isinstance(config.scheme, ExactIncrement):
        raise DomainError("simulate_path requires the ExactIncrement scheme")
    if isinstance(config.dt_policy, GeometricStep):
        config.dt_policy.check(spec.beta)
    times, rec_idx = step_times(config)
    dts = np.diff(times)
    rng = substream(config.master_seed, "path", path_index)
    if noise:
        incs = sample_stable_increment(params, dts, rng)
    else:
        incs = np.zeros_like(dts)
    values, diverged = _kernels.euler_path(*_drift_args(spec), float(config.x_init), dts, incs, rec_idx)
    return PathRecord(np.asarray(config.record_grid), values, diverged=bool(diverged))


def _g_tables(spec: DriftSpec):
    """Bridge constants and the tabulated g (with g' = 1/f at the nodes)."""
    if spec.family == "zero":
        z = np.zeros(2)
        return 0.0, 0.0, 0.0, z, z, z, False
    br = _bridge(spec)
    if spec.family == "smooth_power":
        cache = g_cache(spec)
        nodes, vals = cache.nodes, cache.values
        dvals = 1.0 / eval_f(spec, nodes)[0]
    else:
        nodes = vals = dvals = np.zeros(2)
    return br.slope, br.m, br.depth, nodes, vals, dvals, True


def simulate_path_jump_adapted(
    spec: DriftSpec, params: StableParams, config: SimConfig, path_index: int
) -> PathRecord:
    """One JumpAdapted path.

    The returned record carries channels ``drift``, ``stoch``, ``rem`` (the
    running Ito terms of g(X)), ``rem_sup`` (running sup of |rem|) and ``qv``
    (the part of ``rem`` contributed by the Gaussian small-jump surrogate) on
    the record grid. With ``config.full_output`` it also carries the jump ledger
    and every event (step end or jump) in the channels ``event_times``,
    ``event_pre`` (value just before a jump at that time) and ``event_values``;
    :func:`event_path` turns these into a full-resolution record.
    """
    if not isinstance(config.scheme, JumpAdapted):
        raise DomainError("simulate_path_jump_adapted requires the JumpAdapted scheme")
    if isinstance(config.dt_policy, GeometricStep):
        config.dt_policy.check(spec.beta)
    eps = config.scheme.epsilon
    times, rec_idx = step_times(config)
    var_rate, comp = small_jump_moments(params, eps)
    sd = math.sqrt(var_rate)
    rate = large_jump_rate(params, eps)
    slope, m, depth, nodes, vals, dvals, ito = _g_tables(spec)
    rng = substream(config.master_seed, "path", path_index)

    n_rec = rec_idx.size
    rec = {name: np.full(n_rec, np.nan) for name in ("x", "drift", "stoch", "rem", "rem_sup", "qv")}
    rec_slot = np.full(times.size, -1, dtype=np.int64)
    rec_slot[rec_idx] = np.arange(n_rec)
    state = np.zeros(_kernels.N_STATE)
    state[_kernels.S_X] = config.x_init
    for name in rec:
        rec[name][rec_idx == 0] = config.x_init if name == "x" else 0.0

    # chunk boundaries: cumulative expected jump count plus step count
    load = np.concatenate([[0.0], np.cumsum(rate * np.diff(times) + 1.0)])
    cuts = np.unique(np.searchsorted(load, np.arange(0, load[-1], CHUNK_EVENTS)))
    cuts = np.unique(np.concatenate([[0], cuts[cuts > 0], [times.size - 1]]))

    ledgers: list[JumpLedger] = []
    ev_parts = [(np.array([0.0]), np.array([config.x_init]), np.array([config.x_init]))]
    for c0, c1 in zip(cuts[:-1], cuts[1:]):
        t_lo, t_hi = times[c0], times[c1]
        led = sample_large_jumps(params, eps, t_hi - t_lo, rng).shifted(t_lo)
        normals = rng.standard_normal(c1 - c0 + len(led))
        n_ev = (c1 - c0 + len(led)) if config.full_output else 1
        ev_t, ev_pre, ev_x = np.empty(n_ev), np.empty(n_ev), np.empty(n_ev)
        n_written = _kernels.jump_adapted_chunk(
            *_drift_args(spec), slope, m, depth, nodes, vals, dvals, ito,
            comp, sd, times[c0:c1 + 1], rec_slot[c0:c1 + 1], led.times, led.sizes, normals, state,
            rec["x"], rec["drift"], rec["stoch"], rec["rem"], rec["rem_sup"], rec["qv"],
            config.full_output, ev_t, ev_pre, ev_x, 0,
        )
        if config.full_output:
            ledgers.append(led)
            ev_parts.append((ev_t[:n_written], ev_pre[:n_written], ev_x[:n_written]))
        if state[_kernels.S_DIV]:
            break

    channels = {k: rec[k] for k in ("drift", "stoch", "rem", "rem_sup", "qv")} if ito else {}
    channels["n_jumps"] = np.array([state[_kernels.S_NJ]])
    out = PathRecord(np.asarray(config.record_grid), rec["x"], channels=channels, diverged=bool(state[_kernels.S_DIV]))
    if config.full_output:
        out.ledger = JumpLedger.concat(ledgers, eps)
        for k, name in enumerate(("event_times", "event_pre", "event_values")):
            out.channels[name] = np.concatenate([part[k] for part in ev_parts])
    return out


def event_path(record: PathRecord) -> PathRecord:
    """Full-resolution path (every step end and jump) of a full-output record."""
    if "event_times" not in record.channels:
        raise DomainError("record was simulated without full_output")
    ch = record.channels
    return PathRecord(
        ch["event_times"], ch["event_values"], ledger=record.ledger, channels={"pre": ch["event_pre"]}
    )


# --------------------------------------------------------------------------
# Ensembles
# --------------------------------------------------------------------------

def _simulate_one(spec, params, config, i):
    if isinstance(config.scheme, JumpAdapted):
        return simulate_path_jump_adapted(spec, params, config, i)
    return simulate_path(spec, params, config, i)


def _run_block(args):
    spec, params, config, lo, hi = args
    return [_simulate_one(spec, params, config, i) for i in range(lo, hi)]


def run_ensemble(spec: DriftSpec, params: StableParams, config: SimConfig, workers: int = 1) -> EnsembleResult:
    """``config.n_paths`` independent paths, identical for any ``workers``.

    Diverged paths stay in the result (values NaN) and are listed in
    ``diverged``; they never abort the run.
    """
    start = time.perf_counter()
    blocks = [(spec, params, config, lo, min(lo + BLOCK_SIZE, config.n_paths)) for lo in range(0, config.n_paths, BLOCK_SIZE)]
    if spec.family == "smooth_power":
        g_cache(spec)  # build before forking so workers inherit it
    if workers <= 1 or len(blocks) == 1:
        results = [_run_block(b) for b in blocks]
    else:
        with ProcessPoolExecutor(max_workers=workers, mp_context=mp.get_context("fork")) as pool:
            results = list(pool.map(_run_block, blocks))
    paths = [p for block in results for p in block]
    diverged = [i for i, p in enumerate(paths) if p.diverged]
    times, _ = step_times(config)
    n_jumps = int(sum(p.channels["n_jumps"][0] for p in paths if "n_jumps" in p.channels))
    return EnsembleResult(
        config=config,
        paths=paths,
        diverged=diverged,
        steps=(times.size - 1) * config.n_paths,
        jumps=n_jumps,
        wall_time=time.perf_counter() - start,
    )


def write_paths_csv(result: EnsembleResult, path: str | Path) -> Path:
    """Raw recorded paths as CSV with columns ``path_index, t, x``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path_index", "t", "x"])
        for i, rec in enumerate(result.paths):
            for t, x in zip(rec.times, rec.values):
                w.writerow([i, repr(float(t)), repr(float(x))])
    return path

"""Monte Carlo engine for regime-switching SDEs with optional reflection.

The integrator is Euler-Maruyama with per-step switching: regime i jumps to j
with probability q_ij(x) dt, rates taken at the pre-step position, under the
precondition q_i(x) dt <= 0.1.  Recurrence evidence is horizon-censored by
construction; a path counts as returned only if it reaches the target ball
before the horizon, so reports corroborate the analytic verdicts rather than
prove them.

Reproducibility contract: path k draws from its own generator seeded with
``SeedSequence(seed, spawn_key=(k,))``, consuming one block of normals and one
block of uniforms per BLOCK steps.  Results are therefore bitwise identical
for a given (seed, config) no matter how paths are chunked or how many worker
threads run them; aggregation is ordered by path index.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import StepTooLarge
from .markov import QMatrix, StateDependentRates, TailHomogeneousChain, validate_qmatrix

BLOCK = 8192


@dataclass(frozen=True, eq=False)
class SdeModel:
    """Dynamics specification for the pair (X_t, regime_t).

    ``drift(x, i)`` and ``sigma(x, i)`` receive an (k, d) array of positions
    in regime i; drift returns (k, d), sigma anything broadcastable to (k, d)
    (per-axis noise scales) or, with ``sigma_mode="matrix"``, a constant
    (d, d) matrix.  ``rates`` is either a constant generator or 1-d
    state-dependent rates.  ``boundary="reflect"`` keeps d = 1 paths on the
    half-line by reflecting at zero.
    """

    dim: int
    n_regimes: int
    drift: Callable[[np.ndarray, int], np.ndarray]
    sigma: Callable[[np.ndarray, int], np.ndarray]
    rates: Union[QMatrix, StateDependentRates]
    boundary: str = "none"
    sigma_mode: str = "diag"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.boundary not in ("none", "reflect"):
            raise ValueError("boundary must be 'none' or 'reflect'")
        if self.boundary == "reflect" and self.dim != 1:
            raise ValueError("reflection at zero is a half-line (d = 1) feature")
        if self.sigma_mode not in ("diag", "matrix"):
            raise ValueError("sigma_mode must be 'diag' or 'matrix'")
        n = self.rates.n if isinstance(self.rates, (QMatrix, StateDependentRates)) else None
        if n != self.n_regimes:
            raise ValueError("rate specification does not match n_regimes")
        if isinstance(self.rates, StateDependentRates) and self.dim != 1:
            raise ValueError("state-dependent rates are supported on 1-d state spaces")


@dataclass(frozen=True)
class SimulationReport:
    """Ensemble summary: hitting statistics, escape fraction, growth estimate.

    ``return_fraction`` counts paths with hitting time <= T (95% normal CI
    half-width attached); ``escape_fraction`` counts non-returned paths whose
    final radius exceeds ``escape_radius``; ``censored`` paths did neither.
    """

    trials: int
    t_horizon: float
    dt: float
    seed: int
    x0: tuple
    i0: int
    r0: float
    escape_radius: float
    returned: int
    return_fraction: float
    return_ci95: float
    mean_hitting_time: Optional[float]
    escape_count: int
    escape_fraction: float
    censored: int
    growth_exponent: Optional[float]

    def to_dict(self) -> dict:
        from ._util import jsonify

        return jsonify(self.__dict__)


def _rate_rows(model: SdeModel, x: np.ndarray, regime: int) -> np.ndarray:
    """Off-diagonal switching rates out of ``regime`` at positions x: (k, n)."""
    k = x.shape[0]
    n = model.n_regimes
    rows = np.zeros((k, n))
    if isinstance(model.rates, QMatrix):
        row = model.rates.entries[regime].copy()
        row[regime] = 0.0
        rows[:] = row
    else:
        xs = x[:, 0]
        for j in range(n):
            if j != regime:
                rows[:, j] = model.rates.rate_fn(xs, regime, j)
    return rows


def _advance(model: SdeModel, x: np.ndarray, lam: np.ndarray, dt: float,
             z: np.ndarray, u: np.ndarray) -> tuple:
    """One Euler-Maruyama step plus thinned switching for a batch of paths."""
    k = x.shape[0]
    sqrt_dt = np.sqrt(dt)
    x_new = np.empty_like(x)
    lam_new = lam.copy()
    for reg in range(model.n_regimes):
        sel = np.flatnonzero(lam == reg)
        if sel.size == 0:
            continue
        xs = x[sel]
        drift = np.asarray(model.drift(xs, reg), dtype=float)
        if model.sigma_mode == "diag":
            sig = np.broadcast_to(np.asarray(model.sigma(xs, reg), dtype=float), xs.shape)
            noise = sig * z[sel]
        else:
            smat = np.asarray(model.sigma(xs, reg), dtype=float)
            noise = z[sel] @ smat.T
        x_new[sel] = xs + drift * dt + noise * sqrt_dt

        rows = _rate_rows(model, xs, reg)
        total = rows.sum(axis=1)
        if total.size and float(total.max()) * dt > 0.1 + 1e-12:
            raise StepTooLarge(
                f"dt * q = {float(total.max()) * dt:.3g} > 0.1 in regime {reg}; shrink dt")
        cum = np.cumsum(rows * dt, axis=1)
        us = u[sel]
        switch = us < cum[:, -1]
        if switch.any():
            target = (us[:, None] < cum).argmax(axis=1)
            lam_new[sel[switch]] = target[switch]
    if model.boundary == "reflect":
        x_new = np.abs(x_new)
    return x_new, lam_new


def step(model: SdeModel, x, regime: int, dt: float, rng: np.random.Generator) -> tuple:
    """Single-path step: returns (x', regime').  Draws one normal vector and
    one uniform from ``rng`` in that order."""
    xv = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, model.dim)
    z = rng.standard_normal((1, model.dim))
    u = rng.random(1)
    x_new, lam_new = _advance(model, xv, np.array([regime]), dt, z, u)
    out_x = x_new[0, 0] if model.dim == 1 and np.isscalar(x) else x_new[0]
    return out_x, int(lam_new[0])


def _simulate_paths(model: SdeModel, path_ids: np.ndarray, x0: np.ndarray, i0: int,
                    r0: float, n_steps: int, dt: float, seed: int) -> tuple:
    """Run a contiguous block of paths to min(hitting time, horizon)."""
    k = path_ids.size
    d = model.dim
    rngs = [np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(int(pid),)))
            for pid in path_ids]
    x = np.tile(x0, (k, 1))
    lam = np.full(k, i0, dtype=int)
    active = np.ones(k, dtype=bool)
    hit_time = np.full(k, np.nan)

    z_buf = np.empty((k, BLOCK, d))
    u_buf = np.empty((k, BLOCK))
    done_steps = 0
    while done_steps < n_steps and active.any():
        span = min(BLOCK, n_steps - done_steps)
        for j in np.flatnonzero(active):
            z_buf[j, :span] = rngs[j].standard_normal((span, d))
            u_buf[j, :span] = rngs[j].random(span)
        for s in range(span):
            ia = np.flatnonzero(active)
            if ia.size == 0:
                break
            x_new, lam_new = _advance(model, x[ia], lam[ia], dt,
                                      z_buf[ia, s], u_buf[ia, s])
            x[ia] = x_new
            lam[ia] = lam_new
            hit = _norm(x_new) <= r0
            if hit.any():
                ids = ia[hit]
                hit_time[ids] = (done_steps + s + 1) * dt
                active[ids] = False
        done_steps += span
    return hit_time, _norm(x), active


def _norm(x: np.ndarray) -> np.ndarray:
    # plain |x| on the half-line models; the squared form would overflow on
    # exponentially escaping paths
    if x.shape[1] == 1:
        return np.abs(x[:, 0])
    return np.sqrt((x * x).sum(axis=1))


def run_ensemble(model: SdeModel, x0, i0: int, r0: float, T: float, dt: float,
                 trials: int, seed: int, escape_radius: float = 50.0) -> SimulationReport:
    """Simulate ``trials`` independent paths and aggregate hitting statistics.

    Paths run until they enter the ball of radius r0 or the horizon T ends.
    ``REGIME_THREADS`` caps worker threads; results do not depend on it.
    """
    x0v = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0v.shape != (model.dim,):
        raise ValueError("x0 must match the model dimension")
    if trials < 100:
        raise ValueError("trials must be at least 100 for the CI normal approximation")
    start_radius = float(np.sqrt((x0v * x0v).sum()))
    if start_radius <= r0:
        raise ValueError("|x0| must exceed the return radius r0")
    if not 0 <= i0 < model.n_regimes:
        raise ValueError("i0 out of range")
    if dt <= 0 or T <= 0:
        raise ValueError("T and dt must be positive")
    n_steps = int(round(T / dt))
    if n_steps < 1:
        raise ValueError("horizon shorter than one step")

    threads = max(1, int(os.environ.get("REGIME_THREADS", "1")))
    all_ids = np.arange(trials)
    if threads == 1:
        hit_time, final_radius, survived = _simulate_paths(
            model, all_ids, x0v, i0, r0, n_steps, dt, seed)
    else:
        chunks = np.array_split(all_ids, threads)
        hit_time = np.full(trials, np.nan)
        final_radius = np.empty(trials)
        survived = np.zeros(trials, dtype=bool)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [(chunk, pool.submit(_simulate_paths, model, chunk, x0v, i0,
                                           r0, n_steps, dt, seed))
                       for chunk in chunks if chunk.size]
        for chunk, fut in futures:
            ht, fr, sv = fut.result()
            hit_time[chunk] = ht
            final_radius[chunk] = fr
            survived[chunk] = sv

    returned = int(np.isfinite(hit_time).sum())
    p_ret = returned / trials
    ci = 1.96 * np.sqrt(p_ret * (1.0 - p_ret) / trials)
    escaped = survived & (final_radius > escape_radius)
    n_esc = int(escaped.sum())
    p_esc = n_esc / trials
    mean_hit = float(np.nanmean(hit_time)) if returned else None
    if survived.any():
        growth = float(np.mean(np.log(final_radius[survived] / start_radius)) / (n_steps * dt))
    else:
        growth = None
    return SimulationReport(
        trials=trials, t_horizon=n_steps * dt, dt=dt, seed=seed,
        x0=tuple(float(v) for v in x0v), i0=i0, r0=float(r0),
        escape_radius=float(escape_radius),
        returned=returned, return_fraction=p_ret, return_ci95=float(ci),
        mean_hitting_time=mean_hit, escape_count=n_esc, escape_fraction=p_esc,
        censored=int((survived & ~escaped).sum()), growth_exponent=growth)


def truncate_chain(chain: TailHomogeneousChain, K: int) -> QMatrix:
    """Finite generator on {1..K} with a reflecting top (no upward rate at K).

    The usual finite-window stand-in for simulating the infinite chain; mass
    that would sit above the window is the caller's censoring caveat.
    """
    if K < 2:
        raise ValueError("truncation needs K >= 2")
    a = np.zeros((K, K))
    for s in range(1, K + 1):
        if s < K:
            a[s - 1, s] = chain.up(s)
        if s > 1:
            a[s - 1, s - 2] = chain.down(s)
    np.fill_diagonal(a, -a.sum(axis=1))
    return validate_qmatrix(a)


def exact_regime_path(q: QMatrix, i0: int, T: float, rng: np.random.Generator) -> np.ndarray:
    """Occupation fractions of the chain over [0, T] using exact exponential
    clocks (constant rates only); the cross-check for per-step thinning."""
    occ = np.zeros(q.n)
    state = i0
    t = 0.0
    exit_rates = q.exit_rates
    while t < T:
        rate = exit_rates[state]
        if rate <= 0:
            occ[state] += T - t
            break
        hold = rng.exponential(1.0 / rate)
        if t + hold >= T:
            occ[state] += T - t
            break
        occ[state] += hold
        t += hold
        row = q.entries[state].copy()
        row[state] = 0.0
        state = int(rng.choice(q.n, p=row / row.sum()))
    return occ / occ.sum()

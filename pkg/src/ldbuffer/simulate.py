"""Exact stochastic simulation of the scaled process and its buffer.

The process ``z_n = X / n`` jumps by ``e_i / n`` at rate ``n lambda_i(z_n)``.
Between jumps ``<z_n, a>`` is constant, so the buffer
``b' = <z_n, a> - C`` (floored at zero) is advanced in closed form and
overflow times are exact.

Randomness: event ``k`` of trial ``j`` uses the Philox block with counter
``(k, j)`` and key ``seed``.  Trials are independent of scheduling, so
results are bit-identical for any thread count.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numba
import numpy as np
from numba import njit, prange

from .errors import QuadrantEscape, RateExplosion, TooFewHits
from .rng import uniform_pair

__all__ = ["SimRun", "OverflowEstimate", "ConditionalPaths", "MeanPath",
           "ssa_simulate", "overflow_probability", "conditional_paths",
           "mean_path", "wilson_interval", "default_state_cap", "set_threads"]

if "NUMBA_THREADING_LAYER" not in os.environ:
    # prefer OpenMP; avoids probing an outdated TBB first
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]

OK, OVERFLOW, DEAD, EXPLOSION, ESCAPE = 0, 1, 2, 3, 4
RATE_CAP = 1e9
BURN_OFFSET = np.uint64(1) << np.uint64(40)  # event counter offset after burn-in


@njit(cache=True)
def _total_rates(X, n, dirs, coefs, expo, lam):
    R = 0.0
    J, K = expo.shape
    for i in range(J):
        r = n * coefs[i]
        for k in range(K):
            if expo[i, k]:
                r *= X[k] / n
        lam[i] = r
        R += r
    return R


@njit(cache=True)
def _trial(trial, seed, X0, n, dirs, coefs, expo, a, C, horizon, B_stop,
           capX, rate_cap, burn_in, mode, ev_t, ev_X, ev_b, ev_j,
           mesh_t, mesh_X):
    """Simulate one trial.

    mode 0: statistics only.  mode 1: per-event trace into ``ev_*`` (the
    caller sized them from a counting pass).  mode 2: state at the sorted
    times ``mesh_t`` (negative times read the initial state).
    Returns (status, stop_time, events, cap_hits, b_end, t_dead).
    """
    J, K = expo.shape
    X = X0.copy()
    lam = np.empty(J)
    event = np.uint64(0)
    cap_hits = 0
    # burn-in: no buffer, no recording
    t = 0.0
    if burn_in > 0.0:
        while True:
            R = _total_rates(X, n, dirs, coefs, expo, lam)
            if R > rate_cap:
                return EXPLOSION, t, 0, cap_hits, 0.0, -1.0
            if R <= 0.0:
                break
            u1, u2 = uniform_pair(seed, trial, event)
            event += np.uint64(1)
            t += -math.log(1.0 - u1) / R
            if t >= burn_in:
                break
            target = u2 * R
            acc = 0.0
            i = 0
            for i in range(J):
                acc += lam[i]
                if target < acc:
                    break
            blocked = False
            for k in range(K):
                nx = X[k] + dirs[i, k]
                if nx < 0:
                    return ESCAPE, t, 0, cap_hits, 0.0, -1.0
                if nx > capX[k]:
                    blocked = True
            if blocked:
                cap_hits += 1
            else:
                for k in range(K):
                    X[k] += dirs[i, k]
        event = BURN_OFFSET
    t = 0.0
    b = 0.0
    n_ev = 0
    im = 0
    n_mesh = mesh_t.shape[0]
    if mode == 2:
        while im < n_mesh and mesh_t[im] <= 0.0:
            for k in range(K):
                mesh_X[im, k] = X[k] / n
            im += 1
    if mode == 1:
        ev_t[0] = 0.0
        ev_b[0] = 0.0
        ev_j[0] = -1
        for k in range(K):
            ev_X[0, k] = X[k]
    if B_stop <= 0.0:
        return OVERFLOW, 0.0, 0, cap_hits, 0.0, -1.0
    status = OK
    t_dead = -1.0
    u2 = 0.0
    while True:
        g = 0.0
        for k in range(K):
            g += a[k] * X[k]
        g = g / n - C
        R = _total_rates(X, n, dirs, coefs, expo, lam)
        if R > rate_cap:
            return EXPLOSION, t, n_ev, cap_hits, b, t_dead
        if R <= 0.0:
            dt = horizon - t
            status = DEAD
            t_dead = t
        else:
            u1, u2 = uniform_pair(seed, trial, event)
            event += np.uint64(1)
            dt = -math.log(1.0 - u1) / R
        t_next = t + dt
        t_end = min(t_next, horizon)
        # buffer over [t, t_end] with constant net inflow g
        stop = -1.0
        if g > 0.0 and b + g * (t_end - t) >= B_stop:
            stop = t + (B_stop - b) / g
            t_end = stop
        if mode == 2:
            while im < n_mesh and mesh_t[im] <= t_end:
                for k in range(K):
                    mesh_X[im, k] = X[k] / n
                im += 1
        if stop >= 0.0:
            b = B_stop
            t = stop
            status = OVERFLOW
            break
        b = b + g * (t_end - t)
        if b < 0.0:
            b = 0.0
        if status == DEAD or t_next >= horizon:
            t = horizon
            break
        t = t_next
        target = u2 * R
        acc = 0.0
        i = 0
        for i in range(J):
            acc += lam[i]
            if target < acc:
                break
        blocked = False
        for k in range(K):
            nx = X[k] + dirs[i, k]
            if nx < 0:
                return ESCAPE, t, n_ev, cap_hits, b, t_dead
            if nx > capX[k]:
                blocked = True
        if blocked:
            cap_hits += 1
            continue
        for k in range(K):
            X[k] += dirs[i, k]
        n_ev += 1
        if mode == 1:
            ev_t[n_ev] = t
            ev_b[n_ev] = b
            ev_j[n_ev] = i
            for k in range(K):
                ev_X[n_ev, k] = X[k]
    if mode == 2:
        while im < n_mesh:
            for k in range(K):
                mesh_X[im, k] = X[k] / n
            im += 1
    if mode == 1:
        # closing sample at the stop time (no jump)
        ev_t[n_ev + 1] = t
        ev_b[n_ev + 1] = b
        ev_j[n_ev + 1] = -1
        for k in range(K):
            ev_X[n_ev + 1, k] = X[k]
    return status, t, n_ev, cap_hits, b, t_dead


@njit(cache=True, parallel=True)
def _batch(trials, seed, X0, n, dirs, coefs, expo, a, C, horizon, B_stop,
           capX, rate_cap, burn_in, mesh_t, mesh_rel, want_mesh):
    m = trials.shape[0]
    K = X0.shape[0]
    status = np.empty(m, np.int64)
    stop_t = np.empty(m)
    n_ev = np.empty(m, np.int64)
    caps = np.empty(m, np.int64)
    b_end = np.empty(m)
    t_dead = np.empty(m)
    nm = mesh_t.shape[0] if want_mesh else 0
    mesh = np.zeros((m, nm, K))
    dummy_t = np.empty(0)
    dummy_X = np.empty((0, K))
    dummy_j = np.empty(0, np.int64)
    for j in prange(m):
        mt = mesh_t + mesh_rel[j] if want_mesh else dummy_t
        mX = mesh[j] if want_mesh else dummy_X
        r = _trial(trials[j], seed, X0, n, dirs, coefs, expo, a, C, horizon,
                   B_stop, capX, rate_cap, burn_in, 2 if want_mesh else 0,
                   dummy_t, dummy_X, dummy_t, dummy_j, mt, mX)
        status[j], stop_t[j], n_ev[j], caps[j], b_end[j], t_dead[j] = r
    return status, stop_t, n_ev, caps, b_end, t_dead, mesh


def set_threads():
    """Apply ``LDBUFFER_THREADS`` (0 or unset = numba default)."""
    want = int(os.environ.get("LDBUFFER_THREADS", "0") or 0)
    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(limit if want <= 0 else min(want, limit))
    return numba.get_num_threads()


def _arrays(model):
    dirs = np.asarray(model.directions, dtype=np.int64)
    coefs = np.asarray(model.coefs, dtype=float)
    expo = np.asarray(model.exponents, dtype=np.bool_)
    return dirs, coefs, expo, np.asarray(model.a, float), float(model.C)


def _lattice(x0, n):
    x0 = np.asarray(x0, dtype=float)
    X0 = np.rint(x0 * n)
    if np.any(np.abs(X0 - x0 * n) > 1e-9 * max(1.0, n)):
        raise ValueError(f"x0 = {x0.tolist()} is not on the lattice (1/{n}) Z^K")
    if np.any(X0 < 0):
        raise QuadrantEscape("x0 outside the positive quadrant")
    return X0.astype(np.int64)


_CAP_CACHE = {}


def default_state_cap(model, x0):
    """Ten times the larger of the fluid equilibrium and the start, per coordinate."""
    from .equilibrium import attracting_point
    x0 = np.asarray(x0, float)
    key = (model.directions.tobytes(), np.asarray(model.coefs, float).tobytes(),
           np.asarray(model.exponents).tobytes(), x0.tobytes())
    if key not in _CAP_CACHE:
        try:
            q = attracting_point(model, x0=np.maximum(x0, 1e-3), check_buffer=False).q
            cap = 10.0 * np.maximum(q, x0)
        except Exception:
            cap = np.full(model.K, np.inf)
        if len(_CAP_CACHE) > 256:
            _CAP_CACHE.clear()
        _CAP_CACHE[key] = cap
    return _CAP_CACHE[key].copy()


def _cap_counts(model, x0, n, state_cap):
    cap = default_state_cap(model, x0) if state_cap is None else np.broadcast_to(
        np.asarray(state_cap, float), (model.K,))
    capX = np.where(np.isfinite(cap), np.floor(cap * n), 2.0 ** 62)
    return np.minimum(capX, 2.0 ** 62).astype(np.int64)


def _raise_status(status):
    if np.any(status == EXPLOSION):
        raise RateExplosion(f"total jump rate exceeded {RATE_CAP:.3g}")
    if np.any(status == ESCAPE):
        raise QuadrantEscape("a jump left the positive quadrant; rates are "
                             "inconsistent with the jump directions")


@dataclass
class SimRun:
    seed: int
    trial: int
    n: int
    times: np.ndarray       # event times, with t=0 first and the stop time last
    jumps: np.ndarray       # transition index per row (-1: no jump)
    z: np.ndarray           # state after each event, scaled by 1/n
    b: np.ndarray           # buffer at each event time
    overflow_time: float | None
    dead_time: float | None
    cap_hits: int
    horizon: float

    @property
    def events(self):
        return int(np.sum(self.jumps >= 0))

    def write_csv(self, fh):
        import csv
        w = csv.writer(fh, lineterminator="\n")
        K = self.z.shape[1]
        w.writerow(["t", "jump"] + [f"z{k + 1}" for k in range(K)] + ["b"])
        for t, j, z, b in zip(self.times, self.jumps, self.z, self.b):
            w.writerow([repr(float(t)), int(j)] + [repr(float(v)) for v in z]
                       + [repr(float(b))])

    def summary(self):
        return {"seed": self.seed, "trial": self.trial, "n": self.n,
                "events": self.events, "overflow_time": self.overflow_time,
                "dead_time": self.dead_time, "cap_hits": self.cap_hits,
                "final_z": self.z[-1].tolist(), "final_b": float(self.b[-1])}


def ssa_simulate(model, n, x0, horizon, B_stop=math.inf, seed=0, trial=0,
                 state_cap=None, burn_in=0.0, rate_cap=RATE_CAP):
    """One exact trajectory of ``(z_n, b_n)`` until ``horizon`` or overflow."""
    if n < 1:
        raise ValueError("n must be >= 1")
    X0 = _lattice(x0, n)
    dirs, coefs, expo, a, C = _arrays(model)
    capX = _cap_counts(model, x0, n, state_cap)
    args = (np.uint64(trial), np.uint64(seed), X0, float(n), dirs, coefs, expo,
            a, C, float(horizon), float(B_stop), capX, float(rate_cap),
            float(burn_in))
    e1, eX, ej, mt, mX = (np.empty(0), np.empty((0, model.K), np.int64),
                          np.empty(0, np.int64), np.empty(0), np.empty((0, model.K)))
    status, _, n_ev, _, _, _ = _trial(*args, 0, e1, eX, e1, ej, mt, mX)
    _raise_status(np.array([status]))
    size = n_ev + 2
    ev_t, ev_b = np.empty(size), np.empty(size)
    ev_X, ev_j = np.empty((size, model.K), np.int64), np.empty(size, np.int64)
    status, t_stop, n_ev, caps, _, t_dead = _trial(*args, 1, ev_t, ev_X, ev_b,
                                                   ev_j, mt, mX)
    return SimRun(seed=int(seed), trial=int(trial), n=int(n), times=ev_t,
                  jumps=ev_j, z=ev_X / n, b=ev_b,
                  overflow_time=float(t_stop) if status == OVERFLOW else None,
                  dead_time=float(t_dead) if t_dead >= 0 else None,
                  cap_hits=int(caps), horizon=float(horizon))


def wilson_interval(hits, trials, z=1.959963984540054):
    p = hits / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    lo = 0.0 if hits == 0 else max(0.0, centre - half)
    hi = 1.0 if hits == trials else min(1.0, centre + half)
    return lo, hi


@dataclass
class OverflowEstimate:
    n: int
    B: float
    trials: int
    hits: int
    p_hat: float
    log_rate: float
    ci95: tuple
    log_rate_ci95: tuple
    cap_hits: int
    dead_runs: int
    seed: int
    horizon: float

    @property
    def impossible(self):
        """True when no trial overflowed (``log_rate`` is infinite)."""
        return self.hits == 0

    def to_dict(self):
        d = dict(self.__dict__)
        d["ci95"] = list(self.ci95)
        d["log_rate_ci95"] = list(self.log_rate_ci95)
        for k in ("log_rate",):
            if math.isinf(d[k]):
                d[k] = "inf"
        d["log_rate_ci95"] = ["inf" if math.isinf(v) else v for v in d["log_rate_ci95"]]
        return d


def _run_batch(model, n, x0, horizon, B_stop, trials, seed, state_cap,
               burn_in, mesh_t=None, mesh_rel=None, trial_ids=None):
    set_threads()
    X0 = _lattice(x0, n)
    dirs, coefs, expo, a, C = _arrays(model)
    capX = _cap_counts(model, x0, n, state_cap)
    ids = (np.arange(trials, dtype=np.uint64) if trial_ids is None
           else np.asarray(trial_ids, dtype=np.uint64))
    want = mesh_t is not None
    mt = np.asarray(mesh_t, float) if want else np.empty(0)
    rel = (np.zeros(ids.size) if mesh_rel is None else np.asarray(mesh_rel, float))
    out = _batch(ids, np.uint64(seed), X0, float(n), dirs, coefs, expo, a, C,
                 float(horizon), float(B_stop), capX, RATE_CAP, float(burn_in),
                 mt, rel, want)
    _raise_status(out[0])
    return out


def overflow_probability(model, n, x0, B, horizon, trials, seed=0,
                         state_cap=None, burn_in=0.0):
    """Fraction of ``trials`` whose buffer reaches ``B`` before ``horizon``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    status, _, _, caps, _, _, _ = _run_batch(model, n, x0, horizon, B, trials,
                                             seed, state_cap, burn_in)
    hits = int(np.sum(status == OVERFLOW))
    p = hits / trials
    lo, hi = wilson_interval(hits, trials)
    rate = -math.log(p) / n if hits else math.inf
    rate_ci = (-math.log(hi) / n if hi > 0 else math.inf,
               -math.log(lo) / n if lo > 0 else math.inf)
    return OverflowEstimate(n=int(n), B=float(B), trials=int(trials), hits=hits,
                            p_hat=p, log_rate=rate, ci95=(lo, hi),
                            log_rate_ci95=rate_ci, cap_hits=int(caps.sum()),
                            dead_runs=int(np.sum(status == DEAD)),
                            seed=int(seed), horizon=float(horizon))


@dataclass
class ConditionalPaths:
    times: np.ndarray        # offsets from the start of the window
    mean: np.ndarray         # (M, K)
    envelope: np.ndarray     # (M, K) max |z - mean| over the hits used
    hits: int
    used: int
    trials: int
    overflow_times: np.ndarray

    @property
    def width(self):
        """Time-averaged envelope norm over the window."""
        return float(np.mean(np.linalg.norm(self.envelope, axis=1)))

    @property
    def peak_width(self):
        return float(np.max(np.linalg.norm(self.envelope, axis=1)))

    def write_csv(self, fh):
        import csv
        K = self.mean.shape[1]
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"mean_z{k + 1}" for k in range(K)]
                   + [f"env_z{k + 1}" for k in range(K)])
        for t, m, e in zip(self.times, self.mean, self.envelope):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in m]
                       + [repr(float(v)) for v in e])


def conditional_paths(model, n, x0, B, trials, seed=0, window=None,
                      horizon=None, mesh=200, max_hits=None, min_hits=10,
                      state_cap=None, burn_in=0.0):
    """Mean and envelope of ``z_n`` over runs that overflow.

    Runs are aligned so the overflow instant is the right edge of a window
    of length ``window``; times before the run started read ``x0``.  A
    second deterministic pass re-simulates the overflowing trials and samples
    them on the aligned mesh.  ``max_hits`` caps how many hits enter the
    mean and envelope (the first ones by trial index), which keeps envelope
    widths comparable across ``n``.
    """
    horizon = window if horizon is None else horizon
    window = horizon if window is None else window
    if horizon is None:
        raise ValueError("need a window or a horizon")
    status, stop_t, _, _, _, _, _ = _run_batch(model, n, x0, horizon, B, trials,
                                               seed, state_cap, burn_in)
    hit_ids = np.flatnonzero(status == OVERFLOW)
    if hit_ids.size < min_hits:
        raise TooFewHits(f"{hit_ids.size} overflows in {trials} trials; "
                         f"need at least {min_hits}")
    used = hit_ids if max_hits is None else hit_ids[:max_hits]
    rel = np.linspace(-window, 0.0, mesh + 1)
    out = _run_batch(model, n, x0, horizon, B, used.size, seed, state_cap,
                     burn_in, mesh_t=rel, mesh_rel=stop_t[used], trial_ids=used)
    paths = out[6]
    mean = paths.mean(axis=0)
    env = np.abs(paths - mean).max(axis=0)
    return ConditionalPaths(times=rel + window, mean=mean, envelope=env,
                            hits=int(hit_ids.size), used=int(used.size),
                            trials=int(trials), overflow_times=stop_t[used])


@dataclass
class MeanPath:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    trials: int


def mean_path(model, n, x0, horizon, trials, seed=0, mesh=100, state_cap=None):
    """Trial average of ``z_n`` on a uniform mesh (law-of-large-numbers check)."""
    times = np.linspace(0.0, horizon, mesh + 1)
    out = _run_batch(model, n, x0, horizon, math.inf, trials, seed, state_cap,
                     0.0, mesh_t=times)
    paths = out[6]
    sd = paths.std(axis=0, ddof=1) if trials > 1 else np.zeros_like(paths[0])
    return MeanPath(times, paths.mean(axis=0), sd / math.sqrt(trials), trials)

"""Piecewise-linear paths and the functionals evaluated on them.

The buffer functional is computed exactly for piecewise-linear paths: the net
inflow ``g(t) = <r(t), a> - C`` is linear on each segment, so its integral
``F`` is piecewise quadratic and ``B(t) = F(t) - min_{s <= t} F(s)`` only
needs the segment endpoints plus one interior critical point per segment.
Exactness is what makes the quadratic scaling law hold to round-off.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InfiniteCost
from .ratefn import local_cost_batch

__all__ = [
    "PiecewiseLinearPath", "BufferTrace", "PositivizeReport", "path_cost",
    "segment_costs", "buffer_value", "buffer_value_ode", "buffer_at",
    "scale_path", "shift_anchor", "positivize", "concavity_gap",
    "sup_distance", "write_path_csv", "read_path_csv", "write_buffer_csv",
]


@dataclass(frozen=True)
class PiecewiseLinearPath:
    times: np.ndarray
    nodes: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        if times.ndim != 1 or times.size < 2:
            raise ValueError("a path needs at least two grid times")
        if nodes.shape[0] != times.size:
            raise ValueError("nodes and times disagree in length")
        if times[0] != 0.0:
            raise ValueError("paths start at t = 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("grid times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(nodes))):
            raise ValueError("path coordinates must be finite")
        times.setflags(write=False)
        nodes.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, T, nodes):
        nodes = np.asarray(nodes, dtype=float)
        return cls(np.linspace(0.0, T, nodes.shape[0]), nodes)

    @property
    def T(self):
        return float(self.times[-1])

    @property
    def N(self):
        return self.times.size - 1

    @property
    def K(self):
        return self.nodes.shape[1]

    @property
    def start(self):
        return self.nodes[0]

    @property
    def dt(self):
        return np.diff(self.times)

    @property
    def slopes(self):
        return np.diff(self.nodes, axis=0) / self.dt[:, None]

    @property
    def midpoints(self):
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.stack([np.interp(t, self.times, self.nodes[:, k])
                        for k in range(self.K)], axis=-1)
        return out

    def refined(self, extra_times):
        """Same path with additional breakpoints inserted."""
        extra = np.asarray(extra_times, dtype=float).ravel()
        extra = extra[(extra > 0) & (extra < self.T)]
        times = np.union1d(self.times, extra)
        return PiecewiseLinearPath(times, self(times))

    def restricted(self, t_end):
        """Prefix of the path on ``[0, t_end]``."""
        t_end = min(float(t_end), self.T)
        times = np.append(self.times[self.times < t_end], t_end)
        return PiecewiseLinearPath(times, self(times))


@dataclass
class BufferTrace:
    times: np.ndarray
    values: np.ndarray

    @property
    def terminal(self):
        return float(self.values[-1])


def segment_costs(model, path, basis=None):
    """Per-segment local costs ``l(midpoint, slope)``; ``inf`` if unbounded."""
    vals, _, _ = local_cost_batch(model, path.midpoints, path.slopes, basis=basis)
    return vals


def path_cost(model, path, basis=None):
    """Midpoint-rule action ``sum_k l(x_mid_k, slope_k) dt_k``."""
    vals = segment_costs(model, path, basis)
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise InfiniteCost(f"segment {bad} has unbounded local cost")
    return float(np.sum(vals * path.dt))


def _net_inflow(path, a, C):
    return path.nodes @ np.asarray(a, dtype=float) - C


def buffer_value(path, a, C=0.0):
    """Exact ``B(r, t_k) = sup_{s <= t_k} int_s^{t_k} (<r, a> - C)`` at every node."""
    g = _net_inflow(path, a, C)
    dt = path.dt
    F = np.concatenate([[0.0], np.cumsum(0.5 * dt * (g[:-1] + g[1:]))])
    # interior minimum of F inside segment k when g crosses upward through 0
    cross = (g[:-1] < 0) & (g[1:] > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(cross, -g[:-1] / (g[1:] - g[:-1]), 0.0)
    interior = np.where(cross, F[:-1] + 0.5 * dt * g[:-1] * tau, np.inf)
    cand = F.copy()
    cand[1:] = np.minimum(cand[1:], interior)
    running_min = np.minimum.accumulate(cand)
    values = np.maximum(F - running_min, 0.0)
    return BufferTrace(path.times.copy(), values)


def buffer_at(path, a, C, t):
    """Buffer content at arbitrary times (inserted as breakpoints)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    ref = path.refined(t)
    trace = buffer_value(ref, a, C)
    return np.interp(t, ref.times, trace.values)


def buffer_value_ode(path, a, C=0.0):
    """Buffer from the reflected ODE ``B' = g`` if ``g > 0`` or ``B > 0``.

    Integrated segment by segment in closed form (``g`` is linear per
    segment), tracking the times at which the buffer empties.  Independent of
    :func:`buffer_value`, which uses the running-minimum representation.
    """
    g = _net_inflow(path, a, C)
    dt = path.dt
    out = np.zeros(path.times.size)
    B = 0.0
    for k in range(path.N):
        D, g0 = dt[k], g[k]
        slope = (g[k + 1] - g0) / D

        def G(u):
            return g0 * u + 0.5 * slope * u * u

        u = 0.0
        for _ in range(8):
            if u >= D:
                break
            gu = g0 + slope * u
            if B > 0 or gu > 0 or (gu == 0 and slope > 0):
                base = B - G(u)
                roots = [r for r in _quad_roots(0.5 * slope, g0, base)
                         if u + 1e-13 * D < r <= D]
                if roots:
                    u, B = min(roots), 0.0
                else:
                    B, u = max(B + G(D) - G(u), 0.0), D
            elif slope > 0 and -g0 / slope < D:
                # empty until the inflow turns positive, then g > 0 to the end
                uz = max(-g0 / slope, u)
                B, u = max(G(D) - G(uz), 0.0), D
            else:
                B, u = 0.0, D
        out[k + 1] = B
    return BufferTrace(path.times.copy(), out)


def _quad_roots(A, Bc, Cc):
    if A == 0:
        return [] if Bc == 0 else [-Cc / Bc]
    disc = Bc * Bc - 4 * A * Cc
    if disc < 0:
        return []
    sq = np.sqrt(disc)
    q = -0.5 * (Bc + np.copysign(sq, Bc)) if Bc != 0 else -0.5 * sq
    roots = []
    if q != 0:
        roots.append(Cc / q)
    roots.append(q / A)
    return roots


def scale_path(path, alpha, anchor=None):
    """``y(t) = anchor + alpha (r(t / alpha) - anchor)`` on ``[0, alpha T]``.

    ``anchor=None`` scales about the origin.
    """
    if alpha <= 0:
        raise ValueError("scale factor must be positive")
    anchor = np.zeros(path.K) if anchor is None else np.asarray(anchor, float)
    return PiecewiseLinearPath(alpha * path.times,
                               anchor + alpha * (path.nodes - anchor))


def shift_anchor(path, delta, a):
    """Translate a path along the buffer-neutral hyperplane ``<delta, a> = 0``."""
    delta = np.asarray(delta, dtype=float)
    if abs(float(delta @ np.asarray(a, float))) > 1e-12:
        raise ValueError("shift must satisfy <delta, a> = 0")
    return PiecewiseLinearPath(path.times, path.nodes + delta)


@dataclass
class PositivizeReport:
    removed_measure: float
    removed_intervals: int


def positivize(path, a, C=0.0):
    """Drop the time spent with ``<r, a> < C`` and splice the rest together.

    Zero crossings inside a segment are located exactly (``g`` is linear),
    kept pieces retain their increments, and the spliced path is continuous.
    """
    a = np.asarray(a, dtype=float)
    g = _net_inflow(path, a, C)
    if g[0] < 0:
        raise ValueError("path must start on or above the hyperplane <x, a> = C")
    if np.all(g >= 0):
        return path, PositivizeReport(0.0, 0)
    pieces = []  # (duration, increment)
    removed, intervals, prev_removed = 0.0, 0, False
    for k in range(path.N):
        t0, t1 = path.times[k], path.times[k + 1]
        x0, x1 = path.nodes[k], path.nodes[k + 1]
        g0, g1 = g[k], g[k + 1]
        cuts = [0.0, 1.0]
        if (g0 < 0 < g1) or (g1 < 0 < g0):
            cuts = [0.0, g0 / (g0 - g1), 1.0]
        for u0, u1 in zip(cuts[:-1], cuts[1:]):
            if u1 <= u0:
                continue
            gm = g0 + (g1 - g0) * 0.5 * (u0 + u1)
            dur = (u1 - u0) * (t1 - t0)
            if gm < 0:
                removed += dur
                if not prev_removed:
                    intervals += 1
                prev_removed = True
            else:
                pieces.append((dur, (u1 - u0) * (x1 - x0)))
                prev_removed = False
    if not pieces:
        pieces.append((path.T * 1e-12, np.zeros(path.K)))
    durs = np.array([p[0] for p in pieces])
    incs = np.array([p[1] for p in pieces])
    times = np.concatenate([[0.0], np.cumsum(durs)])
    nodes = path.nodes[0] + np.concatenate([np.zeros((1, path.K)),
                                            np.cumsum(incs, axis=0)])
    return PiecewiseLinearPath(times, nodes), PositivizeReport(removed, intervals)


def concavity_gap(path, a):
    """Largest positive second difference of ``phi(t) = <r(t), a>``.

    On a uniform grid this is ``max(phi_{k+1} - 2 phi_k + phi_{k-1}, 0)``;
    non-uniform grids use the slope jump times the mean adjacent step.
    """
    phi = path.nodes @ np.asarray(a, dtype=float)
    if phi.size < 3:
        return 0.0
    dt = path.dt
    slopes = np.diff(phi) / dt
    second = np.diff(slopes) * 0.5 * (dt[1:] + dt[:-1])
    return float(max(second.max(), 0.0))


def sup_distance(p1, p2):
    """``sup_t |r1(t) - r2(t)|`` over the common time window."""
    t_end = min(p1.T, p2.T)
    times = np.union1d(p1.times, p2.times)
    times = np.append(times[times < t_end], t_end)
    diff = p1(times) - p2(times)
    return float(np.max(np.linalg.norm(diff, axis=1)))


def write_path_csv(path, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t"] + [f"x{k + 1}" for k in range(path.K)])
    for t, x in zip(path.times, path.nodes):
        w.writerow([repr(float(t))] + [repr(float(v)) for v in x])


def read_path_csv(fh):
    rows = list(csv.reader(fh))
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    return PiecewiseLinearPath(data[:, 0], data[:, 1:])


def write_buffer_csv(trace, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "B"])
    for t, b in zip(trace.times, trace.values):
        w.writerow([repr(float(t)), repr(float(b))])

"""Fluid limit, attracting point and the upcrossing point on the hyperplane.

The upcrossing point ``x*`` is the cheapest entry point on
``<x, a> = C`` when the stationary law has product form.  It is the
relative-entropy projection of the stationary mean onto the hyperplane,
computed from the one-dimensional dual in the multiplier ``beta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import (DriftAtQViolation, InfeasibleHyperplane, NoRoot,
                     NonConvergence, QuadrantEscape)
from .model import span_basis

__all__ = ["FluidTrajectory", "UpcrossResult", "AttractingPoint",
           "fluid_trajectory", "attracting_point", "upcrossing_point",
           "entropy", "drift_report"]


@dataclass
class FluidTrajectory:
    times: np.ndarray
    states: np.ndarray
    step: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([np.interp(t, self.times, self.states[:, k])
                         for k in range(self.states.shape[1])], axis=-1)

    def to_dict(self):
        return {"times": self.times.tolist(), "states": self.states.tolist(),
                "step": self.step}


def _rk4(model, x0, n_out, out_step, substeps):
    h = out_step / substeps
    x = np.array(x0, dtype=float)
    out = np.empty((n_out + 1, x.size))
    out[0] = x
    v = model.drift
    for i in range(n_out):
        for _ in range(substeps):
            k1 = v(x)
            k2 = v(x + 0.5 * h * k1)
            k3 = v(x + 0.5 * h * k2)
            k4 = v(x + h * k3)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = x
    return out


def fluid_trajectory(model, x0, horizon, step=None, tol=1e-8, max_halvings=12):
    """Integrate ``dz/dt = v(z)`` from ``x0`` over ``[0, horizon]``.

    Output is sampled every ``step`` (default ``horizon / 100``).  The
    internal RK4 step is halved until two successive refinements agree to
    ``tol`` (absolute, scaled by ``max(1, |z|)``) at every output time.
    """
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 < 0):
        raise QuadrantEscape("initial state outside the positive quadrant")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    step = horizon / 100.0 if step is None else float(step)
    n_out = max(1, int(round(horizon / step)))
    step = horizon / n_out
    times = np.linspace(0.0, horizon, n_out + 1)
    prev = None
    sub = 1
    for _ in range(max_halvings + 1):
        try:
            cur = _rk4(model, x0, n_out, step, sub)
        except QuadrantEscape:
            cur = None
        if cur is not None and prev is not None:
            scale = np.maximum(1.0, np.abs(cur))
            if np.max(np.abs(cur - prev) / scale) <= tol:
                if np.any(cur < -1e-9 * scale):
                    raise QuadrantEscape("fluid path leaves the positive quadrant")
                return FluidTrajectory(times, np.maximum(cur, 0.0), step)
        prev = cur
        sub *= 2
    if prev is None:
        raise QuadrantEscape("fluid path leaves the positive quadrant")
    raise NonConvergence("RK4 refinement did not reach the requested tolerance")


@dataclass
class AttractingPoint:
    q: np.ndarray
    eigenvalues: np.ndarray
    stable: bool
    residual: float
    buffer_margin: float

    def to_dict(self):
        return {"q": self.q.tolist(),
                "eigenvalues_real": np.real(self.eigenvalues).tolist(),
                "eigenvalues_imag": np.imag(self.eigenvalues).tolist(),
                "stable": self.stable, "residual": self.residual,
                "C_minus_q_dot_a": self.buffer_margin}


def attracting_point(model, x0=None, horizon=200.0, check_buffer=True):
    """Stable root of the drift, reached from ``x0`` by the fluid flow.

    Newton runs in span coordinates of the jump directions, so models with
    conserved quantities (closed populations) keep the population of ``x0``.
    Raises NoRoot when no root is found, DriftAtQViolation when
    ``<q, a> >= C``.
    """
    K = model.K
    x = np.full(K, 1.0 / K) if x0 is None else np.asarray(x0, dtype=float)
    try:
        x = _rk4(model, x, 1, horizon, 4000)[-1]
    except QuadrantEscape as exc:
        raise NoRoot(f"fluid flow leaves the quadrant: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise NoRoot("fluid flow diverges")
    P = span_basis(model.directions)
    for _ in range(100):
        v = model.drift(x)
        r = P.T @ v
        if np.linalg.norm(r) <= 1e-12 * max(1.0, np.abs(x).max()):
            break
        J = P.T @ model.drift_jacobian(x) @ P
        try:
            step = -P @ np.linalg.solve(J, r)
        except np.linalg.LinAlgError as exc:
            raise NoRoot("singular drift Jacobian") from exc
        t = 1.0
        while t > 1e-10:
            xn = x + t * step
            if np.all(xn >= 0) and np.linalg.norm(P.T @ model.drift(xn)) < np.linalg.norm(r):
                break
            t *= 0.5
        else:
            raise NoRoot("Newton iteration stalled; drift has no root here")
        x = xn
    v = model.drift(x)
    resid = float(np.linalg.norm(v))
    if resid > 1e-10 * max(1.0, np.abs(x).max()):
        raise NoRoot(f"drift residual {resid:.3g} at the best point")
    eig = np.linalg.eigvals(P.T @ model.drift_jacobian(x) @ P)
    margin = float(model.C - x @ model.a)
    if check_buffer and margin <= 0:
        raise DriftAtQViolation(
            f"<q, a> = {x @ model.a:.6g} is not below C = {model.C:.6g}")
    return AttractingPoint(x, eig, bool(np.all(np.real(eig) < 0)), resid, margin)


def entropy(x, pi, steady_form="poisson"):
    """Relative entropy of ``x`` with respect to the stationary mean ``pi``."""
    x = np.asarray(x, dtype=float)
    pi = np.asarray(pi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        xlx = np.where(x > 0, x * np.log(x / pi), 0.0)
    if steady_form == "poisson":
        return float(np.sum(xlx - x + pi))
    if steady_form == "multinomial":
        N = x.sum()
        return float(np.sum(xlx) - N * math.log(N / pi.sum()))
    raise ValueError(f"unknown steady form {steady_form!r}")


@dataclass
class UpcrossResult:
    x_star: np.ndarray
    beta: float
    entropy: float
    steady_form: str
    pi: np.ndarray
    hessian_min_eig: float | None
    stationarity: float

    def to_dict(self):
        return {"x_star": self.x_star.tolist(), "beta": self.beta,
                "entropy": self.entropy, "steady_form": self.steady_form,
                "pi": self.pi.tolist(), "hessian_min_eig": self.hessian_min_eig,
                "stationarity_residual": self.stationarity}


def _tangent_basis(constraints, K):
    A = np.atleast_2d(constraints)
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-12 * s.max()))
    return vt[rank:].T  # (K, K - rank)


def upcrossing_point(model=None, steady_form="poisson", pi=None, N=None,
                     a=None, C=None):
    """Minimum-entropy point on ``<x, a> = C``.

    ``poisson``: ``x_j = pi_j exp(beta a_j)`` with ``pi`` the stationary
    means (default: the attracting point).  ``multinomial``: a closed
    population of size ``N`` with type probabilities ``pi``,
    ``x_j = N pi_j exp(beta a_j) / sum_k pi_k exp(beta a_k)``.
    """
    a = np.asarray(model.a if a is None else a, dtype=float)
    C = float(model.C if C is None else C)
    if pi is None:
        q = attracting_point(model, check_buffer=False).q
        if steady_form == "multinomial":
            N = float(q.sum()) if N is None else N
            pi = q / q.sum()
        else:
            pi = q
    pi = np.asarray(pi, dtype=float)
    if np.any(pi <= 0):
        raise InfeasibleHyperplane("stationary means must be positive")
    if steady_form == "poisson":
        base = float(pi @ a)
        if C < base:
            raise InfeasibleHyperplane(
                f"C = {C:.6g} lies below <pi, a> = {base:.6g}")

        def x_of(beta):
            return pi * np.exp(beta * a)

        def resid(beta):
            return float(a @ x_of(beta)) - C
        constraints = [a]
    elif steady_form == "multinomial":
        N = float(pi.sum()) if N is None else float(N)
        pi = pi / pi.sum()
        base = N * float(pi @ a)
        if C < base:
            raise InfeasibleHyperplane(
                f"C = {C:.6g} lies below <pi, a> N = {base:.6g}")
        if not C < N * a.max():
            raise InfeasibleHyperplane(
                f"C = {C:.6g} is not attainable by a population of {N:.6g}")

        def x_of(beta):
            w = pi * np.exp(beta * a - beta * a.max())
            return N * w / w.sum()

        def resid(beta):
            return float(a @ x_of(beta)) - C
        constraints = [a, np.ones_like(a)]
    else:
        raise ValueError(f"unknown steady form {steady_form!r}")
    if resid(0.0) == 0.0:
        beta = 0.0
    else:
        hi = 1.0 / a.max()
        while resid(hi) < 0:
            hi *= 2.0
            if hi > 1e6:
                raise InfeasibleHyperplane("hyperplane not reached by the projection")
        beta = brentq(resid, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                      maxiter=500)
    x = x_of(beta)
    # restore <x, a> = C exactly up to round-off along a
    x = x + (C - x @ a) * a / (a @ a) if steady_form == "poisson" else x
    U = _tangent_basis(constraints, a.size)
    hmin = None
    if U.shape[1]:
        hmin = float(np.linalg.eigvalsh(U.T @ np.diag(1.0 / x) @ U).min())
    ent = entropy(x, pi * (N if steady_form == "multinomial" else 1.0), steady_form)
    return UpcrossResult(x, float(beta), max(ent, 0.0), steady_form,
                         pi, hmin, abs(float(a @ x) - C))


def drift_report(model, x_star):
    """Direction of the drift at ``x*`` relative to the hyperplane."""
    x_star = np.asarray(x_star, dtype=float)
    v = model.drift(x_star)
    return {"drift": v.tolist(), "drift_dot_a": float(v @ model.a),
            "drift_dot_x": float(v @ x_star),
            "points_below_hyperplane": bool(v @ model.a < 0)}

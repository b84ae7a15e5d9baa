"""Local cost of a jump process as a Legendre transform.

    l(x, y) = sup_theta  <theta, y> - H(x, theta),
    H(x, theta) = sum_i lambda_i(x) (exp<theta, e_i> - 1).

The dual objective is concave in ``theta`` so a damped Newton ascent from
``theta = 0`` converges globally.  Directions of ``theta`` orthogonal to the
span of the jump directions do not change ``H``; the ascent runs in span
coordinates and a velocity with a component outside the span is reported as
:class:`~ldbuffer.errors.UnboundedDual`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import NonConvergence, RangeError, UnboundedDual
from .model import span_basis

__all__ = ["DualSolve", "hamiltonian", "local_cost", "local_cost_batch",
           "local_cost_derivatives"]

EXP_GUARD = 700.0
GRAD_TOL = 1e-10
MAX_ITER = 200
VALUE_CAP = 1e12
_ROUND = 16 * np.finfo(float).eps  # Armijo slack for round-off


@dataclass
class DualSolve:
    value: float
    theta_star: np.ndarray
    grad_norm: float
    iterations: int

    def to_dict(self):
        return {"value": self.value, "theta_star": self.theta_star.tolist(),
                "grad_norm": self.grad_norm, "iterations": self.iterations}


def hamiltonian(model, x, theta):
    """Return ``H``, its theta-gradient and theta-Hessian at ``(x, theta)``."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    E = model.directions
    lam = model.rates(x)
    s = E @ theta
    if np.any(np.abs(s) > EXP_GUARD):
        raise RangeError("|<theta, e_i>| exceeds the exponent guard")
    w = np.exp(s)
    H = float(np.sum(lam * (w - 1.0)))
    grad = (lam * w) @ E
    hess = (E.T * (lam * w)) @ E
    return H, grad, hess


def _tolerance(tol, y, lw):
    # absolute tolerance, floored at the round-off level of the gradient sum
    return max(tol, 64 * np.finfo(float).eps * (np.abs(y).sum() + lw.sum()))


def local_cost(model, x, y, theta0=None, tol=GRAD_TOL, max_iter=MAX_ITER,
               value_cap=VALUE_CAP):
    """Evaluate ``l(x, y)`` by damped Newton ascent on the dual.

    Raises
    ------
    UnboundedDual
        ``y`` lies outside the cone reachable with the nonzero rates at ``x``.
    NonConvergence
        Iteration cap reached.
    """
    y = np.asarray(y, dtype=float)
    lam = model.rates(x)
    active = lam > 0
    E = model.directions[active]
    lam = lam[active]
    K = y.size
    if not np.any(active):
        if np.allclose(y, 0.0, atol=tol):
            return DualSolve(0.0, np.zeros(K), 0.0, 0)
        raise UnboundedDual("all rates vanish but the velocity is nonzero")
    P = span_basis(E)
    y_off = y - P @ (P.T @ y)
    if np.linalg.norm(y_off) > max(tol, 1e-12 * np.linalg.norm(y)):
        raise UnboundedDual("velocity has a component outside the span of "
                            "the active jump directions")
    EP = E @ P
    yr = P.T @ y

    def objective(eta):
        s = EP @ eta
        if np.any(np.abs(s) > EXP_GUARD):
            return -np.inf, None
        w = np.exp(s)
        return float(yr @ eta - np.sum(lam * (w - 1.0))), w

    eta = np.zeros(P.shape[1]) if theta0 is None else P.T @ np.asarray(theta0, float)
    f, w = objective(eta)
    if not np.isfinite(f):
        eta = np.zeros(P.shape[1])
        f, w = objective(eta)
    for it in range(max_iter + 1):
        lw = lam * w
        g = yr - lw @ EP
        gnorm = float(np.linalg.norm(g))
        if gnorm <= _tolerance(tol, y, lw):
            theta = P @ eta
            return DualSolve(max(f, 0.0), theta, gnorm, it)
        if it == max_iter:
            break
        Hs = (EP.T * lw) @ EP
        try:
            step = np.linalg.solve(Hs, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(Hs, g, rcond=None)[0]
        slope = float(g @ step)
        scale = abs(float(yr @ eta)) + float(np.sum(lam * (w + 1.0)))
        t = 1.0
        for _ in range(80):
            f_new, w_new = objective(eta + t * step)
            if f_new >= f + 1e-4 * t * slope - _ROUND * scale:
                break
            t *= 0.5
        else:
            break
        eta = eta + t * step
        f, w = f_new, w_new
        if f > value_cap or np.any(np.abs(EP @ eta) > EXP_GUARD - 50):
            raise UnboundedDual(f"dual value exceeds cap ({f:.3g}); velocity "
                                "outside the attainable cone")
    if not _in_cone(E, y):
        raise UnboundedDual("velocity lies outside the cone of the active jump directions")
    raise NonConvergence(f"dual ascent did not converge in {max_iter} iterations "
                         f"(|grad| = {gnorm:.3g})")


def _in_cone(E, y):
    res = linprog(np.zeros(len(E)), A_eq=E.T, b_eq=y, bounds=[(0, None)] * len(E),
                  method="highs")
    return res.status == 0


def local_cost_batch(model, X, Y, theta0=None, basis=None, tol=GRAD_TOL,
                     max_iter=MAX_ITER, value_cap=VALUE_CAP):
    """Vectorized ``l(x_s, y_s)`` over a batch of points.

    Unbounded points get value ``inf`` instead of raising.  Returns
    ``(values, thetas, converged)``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    S = Y.shape[0]
    E = model.directions
    P = span_basis(E) if basis is None else basis
    EP = E @ P
    lam = model.rates(X)
    if lam.ndim == 1:
        lam = np.broadcast_to(lam, (S, lam.size))
    Yr = Y @ P
    off = np.linalg.norm(Y - Yr @ P.T, axis=1)
    values = np.full(S, np.inf)
    eta = np.zeros((S, P.shape[1])) if theta0 is None else np.asarray(theta0, float) @ P
    ok = off <= np.maximum(tol, 1e-12 * np.linalg.norm(Y, axis=1))

    def obj(eta_, lam_, yr_):
        s = eta_ @ EP.T
        bad = np.any(np.abs(s) > EXP_GUARD, axis=1)
        w = np.exp(np.clip(s, -EXP_GUARD, EXP_GUARD))
        with np.errstate(over="ignore", invalid="ignore"):
            f = np.einsum("sd,sd->s", yr_, eta_) - np.sum(lam_ * (w - 1.0), axis=1)
        f[bad | np.isnan(f)] = -np.inf
        return f, w

    f, w = obj(eta, lam, Yr)
    reset = ~np.isfinite(f)
    if np.any(reset):
        eta[reset] = 0.0
        f, w = obj(eta, lam, Yr)
    converged = np.zeros(S, dtype=bool)
    live = ok.copy()
    for _ in range(max_iter + 1):
        idx = np.flatnonzero(live)
        if idx.size == 0:
            break
        lw = lam[idx] * w[idx]
        g = Yr[idx] - lw @ EP
        gn = np.linalg.norm(g, axis=1)
        floor = 64 * np.finfo(float).eps * (np.abs(Y[idx]).sum(1) + lw.sum(1))
        done = gn <= np.maximum(tol, floor)
        converged[idx[done]] = True
        live[idx[done]] = False
        idx, lw, g = idx[~done], lw[~done], g[~done]
        if idx.size == 0:
            break
        Hs = np.einsum("sj,ja,jb->sab", lw, EP, EP)
        try:
            step = np.linalg.solve(Hs, g[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.stack([np.linalg.lstsq(h, gg, rcond=None)[0]
                             for h, gg in zip(Hs, g)])
        slope = np.einsum("sd,sd->s", g, step)
        scale = (np.abs(np.einsum("sd,sd->s", Yr[idx], eta[idx]))
                 + np.sum(lam[idx] * (w[idx] + 1.0), axis=1))
        t = np.ones(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        f0 = f[idx]
        new_eta = eta[idx].copy()
        new_f = f0.copy()
        new_w = w[idx].copy()
        for _ in range(80):
            p = np.flatnonzero(pending)
            if p.size == 0:
                break
            trial = eta[idx[p]] + t[p, None] * step[p]
            ft, wt = obj(trial, lam[idx[p]], Yr[idx[p]])
            acc = ft >= f0[p] + 1e-4 * t[p] * slope[p] - _ROUND * scale[p]
            new_eta[p[acc]] = trial[acc]
            new_f[p[acc]] = ft[acc]
            new_w[p[acc]] = wt[acc]
            pending[p[acc]] = False
            t[p[~acc]] *= 0.5
        stalled = pending
        eta[idx] = new_eta
        f[idx] = new_f
        w[idx] = new_w
        blown = (new_f > value_cap) | np.any(np.abs(new_eta @ EP.T) > EXP_GUARD - 50, axis=1)
        live[idx[blown | stalled]] = False
        ok[idx[blown]] = False
    values[ok & converged] = np.maximum(f[ok & converged], 0.0)
    return values, eta @ P.T, converged & ok


def local_cost_derivatives(model, X, thetas, basis):
    """Second-order derivatives of ``l`` in span coordinates.

    With ``x = x0 + P xi`` and ``y = P zeta``, at converged dual points
    returns ``(l_xi, l_zeta, l_xixi, l_xizeta, l_zetazeta)`` with batch
    shapes (S, d) and (S, d, d).  Uses the envelope theorem and implicit
    differentiation of the stationarity condition ``grad_theta H = y``.
    """
    P = basis
    E = model.directions
    lam, d1, d2 = model.rate_derivatives(X)
    w1 = np.exp(thetas @ E.T)
    wm = w1 - 1.0
    H_tt = np.einsum("sj,ja,jb->sab", lam * w1, E, E)
    H_x = np.einsum("sj,sjk->sk", wm, d1)
    H_tx = np.einsum("sj,ja,sjk->sak", w1, E, d1)
    H_xx = np.einsum("sj,sjkl->skl", wm, d2)
    A = P.T @ H_tt @ P
    Ainv = np.linalg.inv(A)
    M = P.T @ H_tx @ P
    l_zeta = thetas @ P
    l_xi = -H_x @ P
    l_zz = Ainv
    l_zx = -Ainv @ M
    l_xx = -(P.T @ H_xx @ P) + np.swapaxes(M, 1, 2) @ Ainv @ M
    return l_xi, l_zeta, l_xx, np.swapaxes(l_zx, 1, 2), l_zz

"""Decay rate for superpositions of independent finite-state fluid sources.

For ``n`` i.i.d. sources feeding a buffer drained at ``n c``,

    -(1/n) ln P(buffer > n b)  ->  inf_{t > 0} sup_theta theta (b + c t) - L(theta, t),

with ``L(theta, t) = ln E exp(theta A(t))`` for a single stationary source.
For a Markov-modulated source with generator ``Q`` and rate vector ``r``,
``L = ln pi^T exp((Q + theta diag(r)) t) 1``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import expm, expm_frechet, null_space
from scipy.optimize import brentq

from ._search import expand_bracket, golden_section
from .errors import BracketExhausted, ModelError, NoInfimum, RangeError

__all__ = ["SourceModel", "log_mgf", "log_mgf_derivative", "bd_decay_rate",
           "inner_sup", "load_source", "source_from_closed_model"]


@dataclass(frozen=True)
class SourceModel:
    Q: np.ndarray
    rates: np.ndarray
    initial: np.ndarray

    @classmethod
    def from_generator(cls, Q, rates, initial=None):
        Q = np.array(Q, dtype=float)
        rates = np.array(rates, dtype=float).ravel()
        m = Q.shape[0]
        if Q.shape != (m, m) or rates.size != m:
            raise ModelError("Q must be square and match the rate vector")
        off = Q - np.diag(np.diag(Q))
        if np.any(off < 0):
            raise ModelError("off-diagonal generator entries must be >= 0")
        if np.any(np.abs(Q.sum(axis=1)) > 1e-10 * max(1.0, np.abs(Q).max())):
            raise ModelError("generator rows must sum to zero")
        if initial is None:
            if m == 1:
                initial = np.ones(1)
            else:
                ns = null_space(Q.T)
                if ns.shape[1] != 1:
                    raise ModelError("generator must be irreducible")
                initial = np.abs(ns[:, 0])
        initial = np.array(initial, dtype=float)
        initial = initial / initial.sum()
        if np.max(np.abs(initial @ Q)) > 1e-9 * max(1.0, np.abs(Q).max()):
            raise ModelError("initial law is not stationary for Q")
        return cls(Q, rates, initial)

    @property
    def mean_rate(self):
        return float(self.initial @ self.rates)

    def to_dict(self):
        return {"Q": self.Q.tolist(), "rates": self.rates.tolist(),
                "initial": self.initial.tolist()}


def load_source(path):
    d = json.loads(Path(path).read_text())
    try:
        return SourceModel.from_generator(d["Q"], d["rates"], d.get("initial"))
    except KeyError as exc:
        raise ModelError(f"source JSON lacks {exc}") from exc


def source_from_closed_model(model):
    """Single-source chain of a closed model whose jumps move one unit
    between types ``i -> j`` at rate ``c x_i``.  Rates are ``a``."""
    K = model.K
    Q = np.zeros((K, K))
    for tr in model.transitions:
        e = np.asarray(tr.e)
        src, dst = np.flatnonzero(e == -1), np.flatnonzero(e == 1)
        m = np.asarray(tr.rate.m)
        if (src.size != 1 or dst.size != 1 or np.abs(e).sum() != 2
                or m.sum() != 1 or m[src[0]] != 1):
            raise ModelError("model is not a closed per-source switching model")
        Q[src[0], dst[0]] += tr.rate.c
    Q -= np.diag(Q.sum(axis=1))
    return SourceModel.from_generator(Q, model.a)


def _shift(source, theta):
    r = source.rates
    return theta * (r.max() if theta >= 0 else r.min())


def log_mgf(source, theta, t):
    """``ln pi^T exp((Q + theta diag(r)) t) 1``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0 or theta == 0:
        return 0.0
    s = _shift(source, theta)
    A = (source.Q + theta * np.diag(source.rates) - s * np.eye(source.Q.shape[0])) * t
    v = source.initial @ expm(A) @ np.ones(A.shape[0])
    if not (np.isfinite(v) and v > 0):
        raise RangeError(f"log-mgf out of range at theta={theta:.4g}, t={t:.4g}")
    return float(math.log(v) + s * t)


def log_mgf_derivative(source, theta, t):
    """``(L, dL/dtheta)`` via the Frechet derivative of the exponential."""
    m = source.Q.shape[0]
    s = _shift(source, theta)
    rs = source.rates.max() if theta >= 0 else source.rates.min()
    A = (source.Q + theta * np.diag(source.rates) - s * np.eye(m)) * t
    E = (np.diag(source.rates) - rs * np.eye(m)) * t
    eA, L = expm_frechet(A, E)
    one = np.ones(m)
    v = source.initial @ eA @ one
    if not (np.isfinite(v) and v > 0):
        raise RangeError(f"log-mgf out of range at theta={theta:.4g}, t={t:.4g}")
    return float(math.log(v) + s * t), float(source.initial @ L @ one / v + rs * t)


def inner_sup(source, b, c, t):
    """``sup_theta theta (b + c t) - L(theta, t)`` and its maximizer."""
    level = b + c * t
    r_max = source.rates.max()
    if level >= r_max * t:
        return math.inf, math.inf
    if level <= source.mean_rate * t:
        return 0.0, 0.0

    def dphi(theta):
        return level - log_mgf_derivative(source, theta, t)[1]

    hi = 1.0 / max(t * (r_max - source.rates.min()), 1e-300)
    while dphi(hi) > 0:
        hi *= 2.0
        if hi * t * r_max > 1e300:
            raise RangeError("inner maximizer out of range")
    theta = brentq(dphi, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return theta * level - log_mgf(source, theta, t), theta


def bd_decay_rate(source, b, c, rtol=1e-6, t_cap=1e6):
    """``inf_t sup_theta theta (b + c t) - L(theta, t)``.

    Returns ``inf`` when the peak source rate does not exceed ``c`` (the
    buffer cannot grow).  Raises NoInfimum if the objective keeps decreasing
    up to ``t_cap``.
    """
    if b <= 0:
        raise ValueError("b must be positive")
    if c <= source.mean_rate:
        raise ValueError("unstable: c must exceed the mean source rate")
    r_max = source.rates.max()
    if r_max <= c:
        return math.inf
    t_min = b / (r_max - c)

    def f(t):
        return inner_sup(source, b, c, t)[0] if t > t_min else math.inf

    t0 = 2.0 * t_min
    try:
        bracket = expand_bracket(f, t0, lo=t_min, hi=t_cap * t0)
    except BracketExhausted as exc:
        raise NoInfimum(str(exc)) from exc
    t_best, val, _ = golden_section(f, bracket, rtol=rtol)
    return float(val)

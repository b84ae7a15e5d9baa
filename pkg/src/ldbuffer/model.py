"""Markov jump-process traffic models.

A model is a list of transitions ``(e_i, lambda_i)``: from state ``x`` the
process jumps to ``x + e_i`` at rate ``lambda_i(x)``.  A buffer is filled at
rate ``<x, a>`` and drained at rate ``C``.  Rates are monomials
``c * prod_j x_j**m_j`` with 0/1 exponents, which covers every rate of the
phone/data example (constant arrivals, per-source departures and switches).

Three rate providers share one duck-typed interface (``directions``, ``a``,
``C``, ``rates``, ``rate_derivatives``): :class:`JumpModel`,
:class:`FrozenModel` (rates pinned at an anchor point) and
:class:`ZoomedModel` (rates read through a zoom ``anchor + s (x - anchor)``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from .errors import ModelError, QuadrantEscape

__all__ = [
    "RateFn", "Transition", "JumpModel", "FrozenModel", "ZoomedModel",
    "ValidationReport", "validate", "rate", "drift", "load_model",
    "model_from_dict", "model_to_dict", "bundled_models",
]


@dataclass(frozen=True)
class RateFn:
    """``lambda(x) = c * prod_j x_j**m_j`` with ``m_j`` in {0, 1}."""

    c: float
    m: tuple

    @property
    def kind(self):
        return "constant" if not any(self.m) else "monomial"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        mask = np.asarray(self.m, dtype=bool)
        return self.c * float(np.prod(x[mask]))


@dataclass(frozen=True)
class Transition:
    e: tuple
    rate: RateFn


class JumpModel:
    """Immutable jump model with vectorized rate evaluation.

    Parameters
    ----------
    transitions : sequence of Transition
    a : array_like, shape (K,)
        Buffer fill rate per unit of each state coordinate.
    C : float
        Buffer drain rate.
    name : str, optional
    """

    def __init__(self, transitions, a, C, name=""):
        transitions = tuple(transitions)
        if not transitions:
            raise ModelError("model needs at least one transition")
        a = np.array(a, dtype=float).ravel()
        K = a.size
        for tr in transitions:
            if len(tr.e) != K or len(tr.rate.m) != K:
                raise ModelError(
                    f"transition {tr.e} does not match state dimension {K}")
            if any(mj not in (0, 1) for mj in tr.rate.m):
                raise ModelError("rate exponents must be 0 or 1")
        self.transitions = transitions
        self.name = name
        self.K = K
        self.J = len(transitions)
        self.a = a
        self.C = float(C)
        self.directions = np.array([tr.e for tr in transitions], dtype=float)
        self.coefs = np.array([tr.rate.c for tr in transitions], dtype=float)
        self.exponents = np.array([tr.rate.m for tr in transitions], dtype=bool)
        for arr in (self.a, self.directions, self.coefs, self.exponents):
            arr.setflags(write=False)

    def __repr__(self):
        return f"JumpModel(name={self.name!r}, K={self.K}, J={self.J}, C={self.C})"

    def _check_state(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.K:
            raise ModelError(f"state must have {self.K} coordinates, got {x.shape}")
        if np.any(x < 0) or not np.all(np.isfinite(x)):
            raise QuadrantEscape(f"state outside the closed positive quadrant: {x}")
        return x

    def rates(self, x):
        """Rates ``lambda_i(x)``; ``x`` may be batched with shape (..., K)."""
        x = self._check_state(x)
        factors = np.where(self.exponents, x[..., None, :], 1.0)
        return self.coefs * np.prod(factors, axis=-1)

    def rate_derivatives(self, x):
        """Rates with first and second x-derivatives.

        Returns arrays of shape (..., J), (..., J, K) and (..., J, K, K).
        """
        x = self._check_state(x)
        K = self.K
        base = np.where(self.exponents, x[..., None, :], 1.0)
        lam = self.coefs * np.prod(base, axis=-1)
        d1 = np.zeros(x.shape[:-1] + (self.J, K))
        d2 = np.zeros(x.shape[:-1] + (self.J, K, K))
        for j in range(K):
            fj = base.copy()
            fj[..., j] = 1.0
            d1[..., j] = np.where(self.exponents[:, j],
                                  self.coefs * np.prod(fj, axis=-1), 0.0)
            for l in range(j + 1, K):
                fjl = fj.copy()
                fjl[..., l] = 1.0
                both = self.exponents[:, j] & self.exponents[:, l]
                val = np.where(both, self.coefs * np.prod(fjl, axis=-1), 0.0)
                d2[..., j, l] = val
                d2[..., l, j] = val
        return lam, d1, d2

    def drift(self, x):
        return self.rates(x) @ self.directions

    def drift_jacobian(self, x):
        _, d1, _ = self.rate_derivatives(x)
        return np.einsum("ji,...jk->...ik", self.directions, d1)

    def span_basis(self):
        return span_basis(self.directions)

    def scaled(self, factor):
        """Copy with every rate coefficient multiplied by ``factor``."""
        trs = [Transition(tr.e, RateFn(tr.rate.c * factor, tr.rate.m))
               for tr in self.transitions]
        return JumpModel(trs, self.a, self.C, self.name)

    def with_drain(self, C):
        return JumpModel(self.transitions, self.a, C, self.name)


class FrozenModel:
    """Constant-coefficient model: rates evaluated once at ``anchor``."""

    def __init__(self, base, anchor):
        self.base = base
        self.anchor = np.array(anchor, dtype=float)
        lam = base.rates(self.anchor)
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise ModelError("frozen rates must be finite and nonnegative")
        self.frozen_rates = lam
        self.K, self.J = base.K, base.J
        self.a, self.C = base.a, base.C
        self.directions = base.directions

    def __repr__(self):
        return f"FrozenModel({self.base!r}, anchor={self.anchor.tolist()})"

    def rates(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.frozen_rates, x.shape[:-1] + (self.J,)).copy()

    def rate_derivatives(self, x):
        x = np.asarray(x, dtype=float)
        shp = x.shape[:-1]
        return (self.rates(x), np.zeros(shp + (self.J, self.K)),
                np.zeros(shp + (self.J, self.K, self.K)))

    def drift(self, x):
        return self.rates(x) @ self.directions

    def span_basis(self):
        return span_basis(self.directions)


class ZoomedModel:
    """Rates read through ``x -> anchor + scale * (x - anchor)``.

    With ``scale = sqrt(B)`` this is the local cost used to compare a
    small-buffer solution, zoomed by ``1/sqrt(B)``, with the B = 1 problem.
    """

    def __init__(self, base, anchor, scale):
        self.base = base
        self.anchor = np.array(anchor, dtype=float)
        self.scale = float(scale)
        self.K, self.J = base.K, base.J
        self.a, self.C = base.a, base.C
        self.directions = base.directions

    def _map(self, x):
        return self.anchor + self.scale * (np.asarray(x, dtype=float) - self.anchor)

    def rates(self, x):
        return self.base.rates(self._map(x))

    def rate_derivatives(self, x):
        lam, d1, d2 = self.base.rate_derivatives(self._map(x))
        return lam, self.scale * d1, self.scale ** 2 * d2

    def drift(self, x):
        return self.rates(x) @ self.directions

    def span_basis(self):
        return span_basis(self.directions)


def span_basis(directions):
    """Orthonormal basis (K, d) of the linear span of the jump directions."""
    u, s, _ = np.linalg.svd(np.asarray(directions, dtype=float).T,
                            full_matrices=False)
    tol = s.max() * max(directions.shape) * np.finfo(float).eps if s.size else 0.0
    basis = u[:, s > tol]
    # deterministic orientation
    for k in range(basis.shape[1]):
        col = basis[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            basis[:, k] = -col
    if basis.shape[1] == directions.shape[1]:
        return np.eye(directions.shape[1])
    return basis


@dataclass
class ValidationReport:
    valid: bool
    failures: list = field(default_factory=list)

    def to_dict(self):
        return {"valid": self.valid, "failures": list(self.failures)}


def _positively_spans(directions):
    K = directions.shape[1]
    for k in range(K):
        for sign in (1.0, -1.0):
            target = np.zeros(K)
            target[k] = sign
            res = linprog(np.zeros(len(directions)), A_eq=directions.T,
                          b_eq=target, bounds=[(0, None)] * len(directions),
                          method="highs")
            if res.status != 0:
                return False
    return True


def validate(model):
    """Check the model invariants; never raises."""
    failures = []
    E = model.directions
    for i, e in enumerate(E):
        if not np.any(e != 0):
            failures.append(f"transition {i}: direction is the zero vector")
    for i, c in enumerate(model.coefs):
        if not (np.isfinite(c) and c >= 0):
            failures.append(f"transition {i}: rate coefficient must be >= 0")
    if not _positively_spans(E):
        failures.append("positive cone of the jump directions does not span R^K")
    if np.any(model.a <= 0):
        failures.append("buffer weights a must be strictly positive")
    if not model.C >= 0:
        failures.append("drain rate C must be nonnegative")
    return ValidationReport(not failures, failures)


def rate(model, i, x):
    """``lambda_i(x)`` for transition index ``i``."""
    if not 0 <= i < model.J:
        raise IndexError(f"transition index {i} out of range 0..{model.J - 1}")
    return float(model.rates(x)[i])


def drift(model, x):
    """Fluid drift ``v(x) = sum_i lambda_i(x) e_i``."""
    return model.drift(x)


def model_from_dict(d, name=""):
    try:
        K = int(d["K"])
        trs = []
        for t in d["transitions"]:
            e = tuple(int(v) for v in t["e"])
            m = tuple(int(v) for v in t["rate"].get("m", [0] * K))
            trs.append(Transition(e, RateFn(float(t["rate"]["c"]), m)))
        model = JumpModel(trs, d["a"], d["C"], name=d.get("name", name))
    except (KeyError, TypeError) as exc:
        raise ModelError(f"malformed model description: {exc!r}") from exc
    if model.K != K:
        raise ModelError(f"K={K} but a has {model.K} entries")
    return model


def model_to_dict(model):
    return {
        "K": model.K,
        "transitions": [
            {"e": list(tr.e), "rate": {"c": tr.rate.c, "m": list(tr.rate.m)}}
            for tr in model.transitions
        ],
        "a": model.a.tolist(),
        "C": model.C,
    }


def bundled_models():
    files = resources.files("ldbuffer") / "data"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_model(source):
    """Load a model from a JSON file, or a bundled model by name.

    A missing file whose stem names a bundled model (``x/phone_data.json``)
    resolves to that bundled model.
    """
    path = Path(source)
    if path.is_file():
        text = path.read_text()
        name = path.stem
    else:
        # bundled name, with or without a directory and .json suffix
        name = path.stem if path.suffix == ".json" else str(source)
        res = resources.files("ldbuffer") / "data" / f"{name}.json"
        if not res.is_file():
            raise ModelError(f"no model file or bundled model named {source!r}")
        text = res.read_text()
    return model_from_dict(json.loads(text), name=name)

"""Jump-diffusion model: parameters, the exponent G and its roots against the discount rate.

The uncontrolled value process is

    dX_t = mu dt + sigma dW_t + dJ_t,

with ``J`` a compound Poisson process of rate ``lam`` whose jumps are
exponential with rate ``eta`` (mean size ``1/eta``). ``G`` satisfies
``E[exp(gamma X_t)] = exp(x gamma + G(gamma) t)`` for ``gamma < eta``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Mapping

import numpy as np

from ._rootfind import bracketed_root
from .exceptions import BracketFailure, ParameterError, PoleAtEta, TrendNotPositive

# JSON keys, in the order used for serialization
PARAM_KEYS = ("mu", "sigma", "lambda", "eta", "alpha")

_EPS = np.finfo(float).eps


def _finite(name: str, value: Any) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ModelParams:
    """Drift, volatility, jump intensity, jump-size rate and discount rate."""

    mu: float
    sigma: float
    lam: float
    eta: float
    alpha: float

    def __post_init__(self):
        for name in ("mu", "sigma", "lam", "eta", "alpha"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        for name in ("sigma", "lam", "eta", "alpha"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be > 0, got {getattr(self, name)!r}")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ModelParams":
        """Build from a mapping with keys ``mu, sigma, lambda, eta, alpha`` (``lam`` accepted)."""
        missing = [k for k in PARAM_KEYS if k not in d and not (k == "lambda" and "lam" in d)]
        if missing:
            raise ParameterError(f"missing model parameter(s): {', '.join(missing)}")
        lam = d["lambda"] if "lambda" in d else d["lam"]
        return cls(mu=d["mu"], sigma=d["sigma"], lam=lam, eta=d["eta"], alpha=d["alpha"])

    def to_dict(self) -> dict:
        d = asdict(self)
        return {"mu": d["mu"], "sigma": d["sigma"], "lambda": d["lam"], "eta": d["eta"], "alpha": d["alpha"]}

    def replace(self, **changes) -> "ModelParams":
        d = asdict(self)
        if "lambda" in changes:
            changes["lam"] = changes.pop("lambda")
        d.update(changes)
        return ModelParams(**d)

    def trend(self) -> float:
        """Mean growth rate ``mu + lam/eta`` of the uncontrolled process."""
        return self.mu + self.lam / self.eta

    def b_star(self) -> float:
        """Perpetuity level ``(mu + lam/eta) / alpha``."""
        return self.trend() / self.alpha

    def require_positive_trend(self) -> None:
        if not self.trend() > 0:
            raise TrendNotPositive(
                f"mu + lambda/eta = {self.trend()!r} must be > 0 (mu={self.mu}, lambda={self.lam}, eta={self.eta})"
            )


@dataclass(frozen=True)
class CharRoots:
    """Roots of ``G(gamma) = alpha``: ``gamma1``, ``gamma2`` and ``-gamma3``.

    ``gamma3`` is stored as a positive magnitude.
    """

    gamma1: float
    gamma2: float
    gamma3: float

    @property
    def exponents(self) -> tuple[float, float, float]:
        """Exponents of the basis functions ``exp(g x)``: ``(gamma1, gamma2, -gamma3)``."""
        return (self.gamma1, self.gamma2, -self.gamma3)

    def to_dict(self) -> dict:
        return {"gamma1": self.gamma1, "gamma2": self.gamma2, "gamma3": self.gamma3}


def _pole_guard(params: ModelParams, gamma: float) -> None:
    if abs(gamma - params.eta) <= 8 * _EPS * max(1.0, abs(params.eta)):
        raise PoleAtEta(f"G has a pole at gamma = eta = {params.eta!r}")


def characteristic_value(params: ModelParams, gamma: float) -> float:
    """``G(gamma) = sigma^2 gamma^2 / 2 + mu gamma + lam eta / (eta - gamma) - lam``."""
    gamma = float(gamma)
    _pole_guard(params, gamma)
    s2 = params.sigma * params.sigma
    return 0.5 * s2 * gamma * gamma + params.mu * gamma + params.lam * params.eta / (params.eta - gamma) - params.lam


def characteristic_derivative(params: ModelParams, gamma: float) -> float:
    """``G'(gamma)``."""
    gamma = float(gamma)
    _pole_guard(params, gamma)
    d = params.eta - gamma
    return params.sigma**2 * gamma + params.mu + params.lam * params.eta / (d * d)


def root_tolerance(params: ModelParams) -> float:
    return 1e-10 * max(1.0, params.alpha)


def solve_roots(params: ModelParams) -> CharRoots:
    """Solve ``G(gamma) = alpha`` for ``0 < gamma1 < eta < gamma2`` and ``-gamma3 < 0``.

    Each root sits alone in its bracket: ``(eps, eta - eps)``,
    ``(eta + eps, Gamma)`` and ``(-Gamma, -eps)`` with ``eps = 1e-9 eta`` and
    ``Gamma`` grown by doubling from ``eta + 1`` until ``G - alpha`` turns
    positive.
    """
    eta, alpha = params.eta, params.alpha
    eps = 1e-9 * eta

    def f(g: float) -> float:
        return characteristic_value(params, g) - alpha

    def outer(sign: float) -> float:
        big = eta + 1.0
        for _ in range(200):
            if f(sign * big) > 0:
                return sign * big
            big *= 2.0
        raise BracketFailure("G - alpha never turned positive while expanding the outer bracket")

    g1 = bracketed_root(f, eps, eta - eps)
    g2 = bracketed_root(f, eta + eps, outer(1.0))
    g3 = -bracketed_root(f, outer(-1.0), -eps)
    roots = CharRoots(g1, g2, g3)
    if not (0 < g1 < eta < g2 and g3 > 0):
        raise BracketFailure(f"root ordering violated: {roots}")
    return roots

"""Optimal dividend (harvesting) barrier.

Dividends are paid whenever the value exceeds a barrier ``b``: by
reflection when the diffusion reaches it, and as a lump sum when a jump
overshoots it. The value function is

    v(x) = B1 exp(g1 x) + B2 exp(g2 x) + B3 exp(-g3 x)   on [0, b)
           x - b + v(b)                                   on [b, inf)

and the barrier is the unique zero of ``Q(b) = B1(b) + B2(b) + B3(b)``,
which exists iff ``mu + lam/eta > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._rootfind import bracketed_root, expand_right
from .exceptions import DomainError
from .model import CharRoots, ModelParams, solve_roots


@dataclass(frozen=True)
class HarvestSolution:
    b: float
    B1: float
    B2: float
    B3: float
    roots: CharRoots
    model: ModelParams = field(repr=False)
    K: tuple = field(repr=False)  # shifted coefficients: B1 = K1 e^{-g1 b}, B2 = K2 e^{-g2 b}, B3 = K3 e^{g3 b}

    @property
    def exponents(self) -> np.ndarray:
        return np.array(self.roots.exponents)

    def v0(self, x, order: int = 0):
        x = np.asarray(x, dtype=float)
        k = self.exponents
        with np.errstate(over="ignore"):
            terms = np.asarray(self.K) * k**order * np.exp(np.multiply.outer(x - self.b, k))
        return terms.sum(axis=-1)

    def to_dict(self) -> dict:
        return {
            "problem": "harvest",
            "model": self.model.to_dict(),
            "b": self.b,
            "b_star": self.model.b_star(),
            "roots": self.roots.to_dict(),
            "coefficients": {"B1": self.B1, "B2": self.B2, "B3": self.B3},
        }


def _shifted(roots: CharRoots, eta: float) -> tuple[float, float, float]:
    g1, g2, g3 = roots.gamma1, roots.gamma2, roots.gamma3
    k1 = g2 * g3 * (eta - g1) / (eta * g1 * (g2 - g1) * (g1 + g3))
    k2 = g3 * g1 * (g2 - eta) / (eta * g2 * (g2 + g3) * (g2 - g1))
    k3 = -g1 * g2 * (eta + g3) / (eta * g3 * (g1 + g3) * (g2 + g3))
    return k1, k2, k3


def coeff_B(b: float, roots: CharRoots, eta: float) -> tuple[float, float, float]:
    """``(B1, B2, B3)`` as functions of the barrier; signs are always ``(+, +, -)``."""
    k1, k2, k3 = _shifted(roots, eta)
    with np.errstate(over="ignore"):
        return (float(k1 * np.exp(-roots.gamma1 * b)), float(k2 * np.exp(-roots.gamma2 * b)),
                float(k3 * np.exp(roots.gamma3 * b)))


def boundary_residual_Q(b: float, roots: CharRoots, eta: float) -> float:
    """``Q(b) = v0(0)`` for the coefficients ``B(b)``; strictly decreasing in ``b``."""
    return float(sum(coeff_B(b, roots, eta)))


def build_harvest_solution(model: ModelParams, b: float, roots: Optional[CharRoots] = None) -> HarvestSolution:
    """Candidate for an arbitrary barrier ``b`` (no root search)."""
    roots = roots or solve_roots(model)
    B1, B2, B3 = coeff_B(b, roots, model.eta)
    return HarvestSolution(b=float(b), B1=B1, B2=B2, B3=B3, roots=roots, model=model, K=_shifted(roots, model.eta))


def solve_harvest_threshold(model: ModelParams, roots: Optional[CharRoots] = None) -> HarvestSolution:
    """Optimal dividend barrier; raises ``TrendNotPositive`` unless ``mu + lam/eta > 0``."""
    model.require_positive_trend()
    roots = roots or solve_roots(model)

    def q(b):
        return boundary_residual_Q(b, roots, model.eta)

    hi = expand_right(q, 0.0, step=1.0)
    b = bracketed_root(q, 0.0, hi)
    return build_harvest_solution(model, b, roots)


def _check_domain(x: np.ndarray) -> None:
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise DomainError("value function is defined on x >= 0 only")


def eval_harvest_value(sol: HarvestSolution, x):
    """Value ``v(x)``; vectorized over ``x``."""
    xa = np.asarray(x, dtype=float)
    _check_domain(xa)
    vb = sol.v0(sol.b)
    out = np.where(xa < sol.b, sol.v0(np.minimum(xa, sol.b)), xa - sol.b + vb)
    return float(out) if out.ndim == 0 else out


def eval_harvest_derivatives(sol: HarvestSolution, x, order: int = 2):
    """``(v', v'')`` (and ``v'''`` when ``order=3``); the exponential piece owns ``b``."""
    xa = np.asarray(x, dtype=float)
    _check_domain(xa)
    below = xa <= sol.b
    inner = np.minimum(xa, sol.b)
    out = [np.where(below, sol.v0(inner, 1), 1.0)]
    for n in range(2, order + 1):
        out.append(np.where(below, sol.v0(inner, n), 0.0))
    if xa.ndim == 0:
        return tuple(float(d) for d in out)
    return tuple(out)


def harvest_value_table(sol: HarvestSolution, x_grid: Sequence[float]) -> np.ndarray:
    x = np.asarray(x_grid, dtype=float)
    d1, d2 = eval_harvest_derivatives(sol, x)
    return np.column_stack([x, eval_harvest_value(sol, x), d1, d2])


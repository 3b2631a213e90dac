"""Numerical certification of the verification-lemma conditions.

Candidate value functions are represented as :class:`PiecewiseValueFunction`
objects whose pieces are either affine or finite sums of exponentials. For
such functions the operator

    (A - alpha) f(x) = mu f'(x) + sigma^2/2 f''(x)
                       + lam * int_0^inf (f(x + y) - f(x)) eta e^{-eta y} dy - alpha f(x)

has a closed form, see :func:`apply_generator`. :func:`generator_by_quadrature`
evaluates the same quantity with adaptive quadrature and serves as the
independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.integrate import quad

from .exceptions import DomainError, PoleGuard
from .harvest import HarvestSolution
from .ipo import IpoSolution
from .model import ModelParams

EQ_TOL = 1e-8
INEQ_SLACK = 1e-9
SMOOTH_FIT_TOL = 1e-9


@dataclass(frozen=True)
class LinearPiece:
    slope: float
    intercept: float

    def __call__(self, x, order: int = 0):
        x = np.asarray(x, dtype=float)
        if order == 0:
            return self.slope * x + self.intercept
        if order == 1:
            return np.full_like(x, self.slope)
        return np.zeros_like(x)

    def jump_integral(self, x, lo, hi, eta):
        """``int_lo^hi f(z) eta e^{-eta (z - x)} dz`` (``hi`` may be ``inf``)."""
        s, c = self.slope, self.intercept
        lo_term = np.exp(-eta * (lo - x)) * (s * lo + c + s / eta)
        if np.isinf(hi):
            return lo_term
        return lo_term - np.exp(-eta * (hi - x)) * (s * hi + c + s / eta)

    def scaled(self, c: float) -> "LinearPiece":
        return LinearPiece(c * self.slope, c * self.intercept)


@dataclass(frozen=True)
class ExpPiece:
    """``sum_j coefs[j] * exp(rates[j] * (x - ref[j]))``; a scalar ``ref`` is shared by all terms."""

    coefs: tuple
    rates: tuple
    ref: Union[float, tuple] = 0.0

    def _refs(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.ref, dtype=float), (len(self.rates),))

    def __call__(self, x, order: int = 0):
        x = np.asarray(x, dtype=float)
        c, k = np.asarray(self.coefs), np.asarray(self.rates)
        return (c * k**order * np.exp(k * (x[..., None] - self._refs()))).sum(axis=-1)

    def jump_integral(self, x, lo, hi, eta):
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for c, k, ref in zip(self.coefs, self.rates, self._refs()):
            if abs(k - eta) <= 1e-12 * max(1.0, eta):
                raise PoleGuard(f"exponential rate {k!r} coincides with the jump rate eta={eta!r}")
            if np.isinf(hi):
                if k > eta:
                    return np.full_like(x, np.inf)
                upper = 0.0
            else:
                upper = np.exp(k * (hi - ref) - eta * (hi - x))
            lower = np.exp(k * (lo - ref) - eta * (lo - x))
            total = total + c * eta / (k - eta) * (upper - lower)
        return total

    def scaled(self, c: float) -> "ExpPiece":
        return ExpPiece(tuple(c * a for a in self.coefs), self.rates, self.ref)


Piece = Union[LinearPiece, ExpPiece]


@dataclass(frozen=True)
class PiecewiseValueFunction:
    """Contiguous pieces on ``[breaks[i], breaks[i+1])``; the last one extends to infinity."""

    breaks: tuple
    pieces: tuple

    def __post_init__(self):
        if len(self.breaks) != len(self.pieces):
            raise ValueError("need one breakpoint per piece")
        if self.breaks[0] != 0.0 or any(b1 >= b2 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ValueError(f"breakpoints must start at 0 and increase: {self.breaks}")

    @property
    def upper(self) -> tuple:
        return tuple(self.breaks[1:]) + (math.inf,)

    def piece_index(self, x: float, side: str = "right") -> int:
        if x < 0:
            raise DomainError(f"x = {x!r} < 0")
        if side == "left" and x > 0:
            return int(np.searchsorted(self.breaks, x, side="left")) - 1
        return int(np.searchsorted(self.breaks, x, side="right")) - 1

    def __call__(self, x, order: int = 0, side: str = "right"):
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([float(self.pieces[self.piece_index(xi, side)](xi, order)) for xi in xa])
        return float(out[0]) if np.ndim(x) == 0 else out

    def continuity_gaps(self) -> np.ndarray:
        return np.array([abs(float(self.pieces[i](x)) - float(self.pieces[i - 1](x)))
                         for i, x in enumerate(self.breaks) if i > 0])

    def linear_combination(self, c1: float, other: "PiecewiseValueFunction", c2: float) -> "PiecewiseValueFunction":
        """``c1 * self + c2 * other`` on the union of both break sets."""
        breaks = tuple(sorted(set(self.breaks) | set(other.breaks)))
        pieces = []
        for x in breaks:
            p, q = self.pieces[self.piece_index(x)], other.pieces[other.piece_index(x)]
            pieces.append(_SumPiece((p.scaled(c1), q.scaled(c2))))
        return PiecewiseValueFunction(breaks, tuple(pieces))


@dataclass(frozen=True)
class _SumPiece:
    parts: tuple

    def __call__(self, x, order: int = 0):
        return sum(p(x, order) for p in self.parts)

    def jump_integral(self, x, lo, hi, eta):
        return sum(p.jump_integral(x, lo, hi, eta) for p in self.parts)

    def scaled(self, c):
        return _SumPiece(tuple(p.scaled(c) for p in self.parts))


def ipo_piecewise(sol: IpoSolution) -> PiecewiseValueFunction:
    v0 = ExpPiece(tuple(sol.C), tuple(sol.roots.exponents), sol.refs)
    top = LinearPiece(sol.r, 0.0)
    if sol.a > 0:
        floor = LinearPiece(1.0, float(v0(sol.a)) - sol.a)
        return PiecewiseValueFunction((0.0, sol.a, sol.b), (floor, v0, top))
    return PiecewiseValueFunction((0.0, sol.b), (v0, top))


def harvest_piecewise(sol: HarvestSolution) -> PiecewiseValueFunction:
    v0 = ExpPiece(tuple(sol.K), tuple(sol.roots.exponents), sol.b)
    return PiecewiseValueFunction((0.0, sol.b), (v0, LinearPiece(1.0, float(v0(sol.b)) - sol.b)))


def apply_generator(v: PiecewiseValueFunction, model: ModelParams, x, side: str = "right"):
    """Closed-form ``(A - alpha) v(x)``.

    Derivatives come from the piece selected by ``side`` at a breakpoint;
    the jump integral is continuous in ``x`` and needs no side.
    """
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(xa)
    eta = model.eta
    upper = v.upper
    for n, xi in enumerate(xa):
        i = v.piece_index(xi, side)
        p = v.pieces[i]
        f0, f1, f2 = float(p(xi)), float(p(xi, 1)), float(p(xi, 2))
        jump = float(p.jump_integral(xi, xi, upper[i], eta))
        for j in range(i + 1, len(v.pieces)):
            jump += float(v.pieces[j].jump_integral(xi, v.breaks[j], upper[j], eta))
        out[n] = (model.mu * f1 + 0.5 * model.sigma**2 * f2 + model.lam * (jump - f0) - model.alpha * f0)
    return float(out[0]) if np.ndim(x) == 0 else out


def jump_integral_by_quadrature(v: PiecewiseValueFunction, eta: float, x: float, tol: float = 1e-10) -> float:
    """``int_0^inf (v(x + y) - v(x)) eta e^{-eta y} dy`` by adaptive quadrature.

    The integral is cut where ``e^{-eta y} < 1e-16``; the remainder is added
    from the last piece, whose tail is integrated analytically.
    """
    fx = float(v(x))
    y_cut = math.log(1e16) / eta
    knots = [0.0] + [b - x for b in v.breaks if 0.0 < b - x < y_cut] + [y_cut]

    def integrand(y):
        return (float(v(x + y)) - fx) * eta * math.exp(-eta * y)

    total = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        total += quad(integrand, lo, hi, epsabs=tol * 1e-2, epsrel=tol, limit=200)[0]
    z = x + y_cut
    last = v.pieces[v.piece_index(z)]
    # tail: int_{z}^{inf} (v(s) - v(x)) eta e^{-eta (s - x)} ds
    total += float(last.jump_integral(x, z, math.inf, eta)) - fx * math.exp(-eta * y_cut)
    return total


def generator_by_quadrature(v: PiecewiseValueFunction, model: ModelParams, x: float, side: str = "right") -> float:
    p = v.pieces[v.piece_index(x, side)]
    f0, f1, f2 = float(p(x)), float(p(x, 1)), float(p(x, 2))
    jump = jump_integral_by_quadrature(v, model.eta, x)
    return model.mu * f1 + 0.5 * model.sigma**2 * f2 + model.lam * jump - model.alpha * f0


# ---------------------------------------------------------------------------
# condition reports


@dataclass(frozen=True)
class GridSpec:
    n_per_piece: int = 1000
    n_refine: int = 10
    refine_width: float = 1e-6
    x_max: Optional[float] = None  # right end of the last, unbounded piece


def piece_grids(v: PiecewiseValueFunction, spec: GridSpec = GridSpec()) -> list:
    """Interior points of every piece: uniform plus geometric refinement toward each end point."""
    x_max = spec.x_max if spec.x_max is not None else 3.0 * max(v.breaks[-1], 1.0)
    grids = []
    for lo, hi in zip(v.breaks, v.upper):
        hi = x_max if math.isinf(hi) else hi
        if hi <= lo:
            grids.append(np.empty(0))
            continue
        uniform = np.linspace(lo, hi, spec.n_per_piece + 2)[1:-1]
        offsets = spec.refine_width * 2.0 ** -np.arange(spec.n_refine)
        offsets = offsets[offsets < 0.5 * (hi - lo)]
        grids.append(np.unique(np.concatenate([uniform, lo + offsets, hi - offsets])))
    return grids


@dataclass(frozen=True)
class ConditionResult:
    condition: str
    worst_violation: float
    at_x: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.worst_violation <= self.tolerance)

    def to_dict(self) -> dict:
        return {"condition": self.condition, "worst_violation": self.worst_violation, "at_x": self.at_x,
                "tolerance": self.tolerance, "pass": self.passed}


@dataclass(frozen=True)
class ConditionReport:
    problem: str
    results: tuple
    grid_size: int
    grid: np.ndarray = field(repr=False, compare=False)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, name: str) -> ConditionResult:
        for r in self.results:
            if r.condition == name:
                return r
        raise KeyError(name)

    def failures(self) -> list:
        return [r.condition for r in self.results if not r.passed]

    def to_dict(self) -> dict:
        return {"problem": self.problem, "pass": self.passed, "grid_size": self.grid_size,
                "conditions": [r.to_dict() for r in self.results]}


def _worst(name: str, x: np.ndarray, violation: np.ndarray, tol: float) -> ConditionResult:
    """Largest entry of ``violation`` (positive means violated); empty sets pass trivially."""
    if len(x) == 0:
        return ConditionResult(name, 0.0, math.nan, tol)
    k = int(np.argmax(violation))
    return ConditionResult(name, float(violation[k]), float(x[k]), tol)


def _point(name: str, x: float, value: float, tol: float) -> ConditionResult:
    return ConditionResult(name, float(value), float(x), tol)


def check_ipo_conditions(sol: IpoSolution, grid: GridSpec = GridSpec()) -> ConditionReport:
    """Certify conditions (i)-(v) of the IPO verification lemma on a grid."""
    v = ipo_piecewise(sol)
    model, r, a, b = sol.model, sol.r, sol.a, sol.b
    grids = piece_grids(v, grid)
    has_floor = a > 0
    g_floor = grids[0] if has_floor else np.empty(0)
    g_cont, g_stop = grids[-2], grids[-1]
    gen_cont = apply_generator(v, model, g_cont) if len(g_cont) else np.empty(0)
    gen_stop = apply_generator(v, model, g_stop)
    above = np.concatenate([g_cont, [b], g_stop])
    v_above = np.concatenate([v(g_cont), [v(b, side="left")], v(g_stop)])
    gen_above = np.concatenate([gen_cont, [apply_generator(v, model, b, side="left")], gen_stop])
    v_a = float(v(a, side="right"))
    results = [
        _worst("i_generator_nonpositive", above, gen_above, INEQ_SLACK),
        _worst("ii_dominates_reward", above, r * above - v_above, INEQ_SLACK),
        _worst("iii_linear_below_floor", g_floor, np.abs(v(g_floor) - (g_floor - a + v_a)) if has_floor else g_floor,
               EQ_TOL),
        _point("iii_smooth_fit_at_floor", a, abs(float(v(a, 1, side="right")) - 1.0), SMOOTH_FIT_TOL),
        _worst("iv_generator_zero_continuation", g_cont, np.abs(gen_cont), EQ_TOL),
        _worst("iv_dominance_continuation", g_cont, r * g_cont - v(g_cont), INEQ_SLACK),
        _worst("v_generator_negative_stopping", g_stop, gen_stop, INEQ_SLACK),
        _worst("v_equals_reward_stopping", g_stop, np.abs(v(g_stop) - r * g_stop), EQ_TOL),
        _point("continuity_at_boundary", b, abs(float(v(b, side="left")) - r * b) / (r * b), SMOOTH_FIT_TOL),
        _point("smooth_fit_at_boundary", b, abs(float(v(b, 1, side="left")) - r), SMOOTH_FIT_TOL),
    ]
    all_x = np.concatenate([g for g in grids])
    return ConditionReport("ipo", tuple(results), len(all_x), all_x)


def check_harvest_conditions(sol: HarvestSolution, grid: GridSpec = GridSpec()) -> ConditionReport:
    """Certify conditions (i)-(v) of the dividend verification lemma on a grid."""
    v = harvest_piecewise(sol)
    return check_harvest_piecewise(v, sol.model, sol.b, grid)


def check_harvest_piecewise(v: PiecewiseValueFunction, model: ModelParams, b: float,
                            grid: GridSpec = GridSpec()) -> ConditionReport:
    g_low, g_high = piece_grids(v, grid)
    g_low = np.concatenate([[0.0], g_low])
    gen_low = apply_generator(v, model, g_low)
    gen_high = apply_generator(v, model, g_high)
    xs = np.concatenate([g_low, [b], g_high])
    gen_all = np.concatenate([gen_low, [apply_generator(v, model, b, side="left")], gen_high])
    d1 = np.concatenate([v(g_low, 1), [v(b, 1, side="left")], v(g_high, 1)])
    d2 = np.concatenate([v(g_low, 2), [v(b, 2, side="left")], v(g_high, 2)])
    v_b = float(v(b, side="left"))
    results = [
        _worst("i_generator_nonpositive", xs, gen_all, INEQ_SLACK),
        _worst("ii_slope_at_least_one", xs, 1.0 - d1, INEQ_SLACK),
        _worst("iii_concave", xs, d2, INEQ_SLACK),
        _worst("iv_generator_zero_below_barrier", g_low, np.abs(gen_low), EQ_TOL),
        _worst("iv_slope_above_one_below_barrier", g_low, 1.0 - v(g_low, 1), INEQ_SLACK),
        _worst("v_generator_negative_above_barrier", g_high, gen_high, INEQ_SLACK),
        _worst("v_linear_above_barrier", g_high, np.abs(v(g_high) - (g_high - b + v_b)), EQ_TOL),
        _point("zero_at_ruin", 0.0, abs(float(v(0.0))), SMOOTH_FIT_TOL),
        _point("smooth_fit_first_order", b, abs(float(v(b, 1, side="left")) - 1.0), SMOOTH_FIT_TOL),
        _point("smooth_fit_second_order", b, abs(float(v(b, 2, side="left"))), SMOOTH_FIT_TOL),
    ]
    return ConditionReport("harvest", tuple(results), len(g_low) + len(g_high), np.concatenate([g_low, g_high]))


def worst_interior_residual(v: PiecewiseValueFunction, model: ModelParams, lo: float, hi: float,
                            n: int = 1000) -> float:
    x = np.linspace(lo, hi, n + 2)[1:-1]
    return float(np.max(np.abs(apply_generator(v, model, x))))

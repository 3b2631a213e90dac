"""Optimal IPO timing with cash infusions that keep the company value above a floor ``a``.

The value function is

    v(x; a) = x - a + v0(a)   on [0, a]
              v0(x)            on [a, b]
              r x              on [b, inf)

with ``v0(x) = A1 exp(g1 x) + A2 exp(g2 x) + A3 exp(-g3 x)``. The
coefficients are closed-form functions of ``b`` and ``b = b(a)`` is the
unique root of ``R(b) = 1`` right of ``max(a, b*)``.

Internally ``v0`` is carried in the shifted form
``D1 exp(g1 (x - b)) + D2 exp(g2 (x - b)) + D3 exp(-g3 (x - b))`` so that
large thresholds do not overflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._rootfind import bracketed_root, expand_right
from .exceptions import DomainError, NoSignChange, ParameterError
from .model import CharRoots, ModelParams, solve_roots


@dataclass(frozen=True)
class IpoParams:
    """Model plus the IPO multiple ``r``, the floor ``a`` and the floor budget."""

    model: ModelParams
    r: float
    a: float = 0.0
    budget: float = 0.0

    def __post_init__(self):
        for name in ("r", "a", "budget"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if not self.r > 1:
            raise ParameterError(f"IPO multiple r must be > 1, got {self.r!r}")
        if self.a < 0:
            raise ParameterError(f"floor a must be >= 0, got {self.a!r}")
        if self.budget < 0:
            raise ParameterError(f"budget must be >= 0, got {self.budget!r}")


@dataclass(frozen=True)
class IpoSolution:
    a: float
    b: float
    A1: float
    A2: float
    A3: float
    roots: CharRoots
    r: float
    b_star: float
    model: ModelParams = field(repr=False)
    C: tuple = field(repr=False)  # anchored coefficients (D1, D2, E3), see ``refs``

    @property
    def exponents(self) -> np.ndarray:
        return np.array(self.roots.exponents)

    @property
    def refs(self) -> tuple:
        """Anchor of each exponential: the growing ones at ``b``, the decaying one at ``a``."""
        return (self.b, self.b, self.a)

    @property
    def D(self) -> tuple:
        """Shifted coefficients, all anchored at ``b`` (``D3`` may underflow for large ``b - a``)."""
        d1, d2, e3 = self.C
        with np.errstate(under="ignore"):
            return (d1, d2, float(e3 * np.exp(-self.roots.gamma3 * (self.b - self.a))))

    def v0(self, x, order: int = 0):
        """``order``-th derivative of the exponential piece (any real ``x``)."""
        x = np.asarray(x, dtype=float)
        k = self.exponents
        with np.errstate(over="ignore"):
            terms = np.asarray(self.C) * k**order * np.exp(k * (x[..., None] - np.asarray(self.refs)))
        return terms.sum(axis=-1)

    def to_dict(self) -> dict:
        return {
            "problem": "ipo",
            "model": self.model.to_dict(),
            "r": self.r,
            "a": self.a,
            "b": self.b,
            "b_star": self.b_star,
            "roots": self.roots.to_dict(),
            "coefficients": {"A1": self.A1, "A2": self.A2, "A3": self.A3},
        }


def coeff_D(b: float, roots: CharRoots, model: ModelParams, r: float) -> tuple[float, float, float]:
    """``(D1, D2, D3)`` with ``A1 = D1 e^{-g1 b}``, ``A2 = D2 e^{-g2 b}``, ``A3 = D3 e^{g3 b}``."""
    g1, g2, g3 = roots.gamma1, roots.gamma2, roots.gamma3
    eta = model.eta
    s = r / eta**2
    u = eta * b + 1.0
    d1 = s * (eta - g1) * (g2 * g3 * u + eta * (g2 - g3)) / ((g3 + g1) * (g2 - g1))
    d2 = s * (g2 - eta) * (g1 * g3 * u + eta * (g1 - g3)) / ((g3 + g2) * (g2 - g1))
    d3 = s * (eta + g3) * (g1 * g2 * u - eta * (g1 + g2)) / ((g3 + g1) * (g2 + g3))
    return d1, d2, d3


def coeff_A(b: float, roots: CharRoots, model: ModelParams, r: float) -> tuple[float, float, float]:
    """Coefficients ``(A1, A2, A3)`` of ``v0`` as functions of the stopping boundary ``b``.

    They enforce value matching ``v0(b) = r b``, first-order smooth fit
    ``v0'(b) = r`` and a vanishing generator residual inside the
    continuation region. ``A3`` may overflow to ``inf`` for very large ``b``;
    the solvers only use the shifted form from :func:`coeff_D`.
    """
    d1, d2, d3 = coeff_D(b, roots, model, r)
    g1, g2, g3 = roots.gamma1, roots.gamma2, roots.gamma3
    with np.errstate(over="ignore"):
        return (float(d1 * np.exp(-g1 * b)), float(d2 * np.exp(-g2 * b)), float(d3 * np.exp(g3 * b)))


def boundary_residual_R(b: float, a: float, roots: CharRoots, model: ModelParams, r: float) -> float:
    """``R(b) = v0'(a)`` for the coefficients ``A(b)``; the boundary solves ``R(b) = 1``."""
    d1, d2, d3 = coeff_D(b, roots, model, r)
    g1, g2, g3 = roots.gamma1, roots.gamma2, roots.gamma3
    with np.errstate(over="ignore"):
        tail = g3 * d3 * np.exp(g3 * (b - a)) if d3 != 0.0 else 0.0
    return float(g1 * d1 * math.exp(g1 * (a - b)) + g2 * d2 * math.exp(g2 * (a - b)) - tail)


def pasted_C(b: float, a: float, roots: CharRoots, r: float) -> tuple[float, float, float]:
    """Anchored coefficients fixed by ``v0(b) = r b``, ``v0'(a) = 1`` and ``v0'(b) = r``.

    Near the root ``D3(b)`` is a small difference of O(1) terms that gets
    multiplied by ``exp(g3 (b - a))`` in ``R``, so ``R(b) = 1`` cannot be
    met to better than ~1e-9 through the closed forms. At the solved ``b``
    the three pasting equations are linear and well conditioned in the
    anchored unknowns ``(D1, D2, E3)``.
    """
    g1, g2, g3 = roots.gamma1, roots.gamma2, roots.gamma3
    w = math.exp(-g3 * (b - a))
    m = np.array([
        [1.0, 1.0, w],
        [g1 * math.exp(g1 * (a - b)), g2 * math.exp(g2 * (a - b)), -g3],
        [g1, g2, -g3 * w],
    ])
    return tuple(float(v) for v in np.linalg.solve(m, [r * b, 1.0, r]))


def _anchor(D: tuple, roots: CharRoots, a: float, b: float) -> tuple[float, float, float]:
    if D[2] == 0.0:
        return (D[0], D[1], 0.0)
    with np.errstate(over="ignore"):
        return (D[0], D[1], float(D[2] * np.exp(roots.gamma3 * (b - a))))


def build_ipo_solution(
    model: ModelParams, r: float, a: float, b: float, roots: Optional[CharRoots] = None, polish: bool = False
) -> IpoSolution:
    """Assemble the candidate for an arbitrary boundary ``b`` (no root search).

    With ``polish`` the coefficients come from :func:`pasted_C` instead of
    the closed forms; the two agree to ~1e-9 relative at the true root.
    """
    roots = roots or solve_roots(model)
    C = pasted_C(b, a, roots, r) if polish else _anchor(coeff_D(b, roots, model, r), roots, a, b)
    g1, g2, g3 = roots.gamma1, roots.gamma2, roots.gamma3
    with np.errstate(over="ignore", under="ignore"):
        A1, A2, A3 = (float(C[0] * np.exp(-g1 * b)), float(C[1] * np.exp(-g2 * b)), float(C[2] * np.exp(g3 * a)))
    return IpoSolution(a=float(a), b=float(b), A1=A1, A2=A2, A3=A3, roots=roots, r=float(r),
                       b_star=model.b_star(), model=model, C=C)


def _solve_b(model: ModelParams, roots: CharRoots, r: float, a: float) -> float:
    lo = max(a, model.b_star())
    lo += 1e-9 * max(1.0, abs(lo))

    def f(b):
        return boundary_residual_R(b, a, roots, model, r) - 1.0

    hi = expand_right(f, lo, step=1.0)
    return bracketed_root(f, lo, hi)


def solve_ipo_threshold(params: IpoParams, roots: Optional[CharRoots] = None) -> IpoSolution:
    """Solve for the stopping boundary ``b(a)`` and the coefficients of ``v0``."""
    model = params.model
    roots = roots or solve_roots(model)
    b = _solve_b(model, roots, params.r, params.a)
    return build_ipo_solution(model, params.r, params.a, b, roots, polish=True)


def _check_domain(x: np.ndarray) -> None:
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise DomainError("value function is defined on x >= 0 only")


def eval_ipo_value(sol: IpoSolution, x):
    """Value ``v(x; a)``; vectorized over ``x``."""
    xa = np.asarray(x, dtype=float)
    _check_domain(xa)
    v0a = sol.v0(sol.a)
    out = np.where(xa < sol.a, xa - sol.a + v0a, np.where(xa > sol.b, sol.r * xa, sol.v0(np.clip(xa, sol.a, sol.b))))
    return float(out) if out.ndim == 0 else out


def eval_ipo_derivatives(sol: IpoSolution, x):
    """``(v', v'')``; the exponential piece owns both end points ``a`` and ``b``."""
    xa = np.asarray(x, dtype=float)
    _check_domain(xa)
    inner = np.clip(xa, sol.a, sol.b)
    lower, upper = xa < sol.a, xa > sol.b
    d1 = np.where(lower, 1.0, np.where(upper, sol.r, sol.v0(inner, 1)))
    d2 = np.where(lower | upper, 0.0, sol.v0(inner, 2))
    if d1.ndim == 0:
        return float(d1), float(d2)
    return d1, d2


def ipo_value_table(sol: IpoSolution, x_grid: Sequence[float]) -> np.ndarray:
    """Rows ``(x, v, v', v'')`` for every grid point."""
    x = np.asarray(x_grid, dtype=float)
    v = eval_ipo_value(sol, x)
    d1, d2 = eval_ipo_derivatives(sol, x)
    return np.column_stack([x, v, d1, d2])


def inflection_point(sol: IpoSolution) -> Optional[float]:
    """Zero ``x~ < b`` of ``v0''`` when ``A3 < 0``, else ``None`` (``v0`` is convex)."""
    if sol.C[2] >= 0:
        return None

    def f(x):
        return float(sol.v0(x, 2))

    lo = sol.b
    step = 1.0
    while f(lo) > 0:
        lo -= step
        step *= 2.0
    return bracketed_root(f, lo, sol.b)


@dataclass(frozen=True)
class BudgetOptimum:
    a_star: float
    solution: IpoSolution
    candidates: dict  # floor -> IpoSolution
    tables: dict  # floor -> (n, 4) array of (x, v, v', v'')

    @property
    def envelope(self) -> np.ndarray:
        """Pointwise ``max`` of the candidate values on the grid.

        Differs from the ``a_star`` table below the larger floor, where its
        up-front top-up can make the larger-boundary choice worse.
        """
        return np.max([t[:, 1] for t in self.tables.values()], axis=0)


def solve_budget_optimum(params: IpoParams, x_grid: Sequence[float]) -> BudgetOptimum:
    """Best floor in ``[0, budget]``, which is always one of the two end points.

    The end point with the larger boundary gives the pointwise larger value
    function; on a tie the zero floor is kept.
    """
    roots = solve_roots(params.model)
    floors = (0.0,) if params.budget == 0 else (0.0, params.budget)
    sols = {a: solve_ipo_threshold(IpoParams(params.model, params.r, a, params.budget), roots) for a in floors}
    a_star = 0.0
    if params.budget > 0:
        b0, bB = sols[0.0].b, sols[params.budget].b
        if bB > b0 and not math.isclose(bB, b0, rel_tol=1e-12, abs_tol=0.0):
            a_star = params.budget
    tables = {a: ipo_value_table(s, x_grid) for a, s in sols.items()}
    return BudgetOptimum(a_star=a_star, solution=sols[a_star], candidates=sols, tables=tables)


def second_order_residual(model: ModelParams, r: float, a: float, roots: Optional[CharRoots] = None) -> float:
    """``v0''(a; a)``, the curvature of ``v0`` at the floor once ``b(a)`` is solved."""
    roots = roots or solve_roots(model)
    sol = solve_ipo_threshold(IpoParams(model, r, a), roots)
    return float(sol.v0(a, 2))


@dataclass(frozen=True)
class MinMaxResult:
    a_tilde: float
    solution: IpoSolution
    b_prime: float  # central difference of b(.) at a_tilde
    sign_changes: tuple  # scan intervals (lo, hi) where v0''(a; a) changed sign


def solve_min_max_a(
    params: IpoParams, a_max: Optional[float] = None, n_scan: int = 256, fd_step: float = 1e-4
) -> MinMaxResult:
    """Floor ``a~`` minimizing ``b(a)``, found from ``v0''(a~; a~) = 0``.

    ``[0, a_max]`` is scanned for sign changes first. More than one sign
    change triggers a ``RuntimeWarning`` and the first one is used.
    """
    model, r = params.model, params.r
    if a_max is None:
        a_max = max(4.0 * model.b_star(), 1.0)
    roots = solve_roots(model)

    def g(a):
        return second_order_residual(model, r, a, roots)

    grid = np.linspace(0.0, a_max, n_scan)
    vals = np.array([g(a) for a in grid])
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    changes = tuple((float(grid[i]), float(grid[i + 1])) for i in idx)
    if not changes:
        raise NoSignChange(f"v0''(a; a) keeps one sign on [0, {a_max}]")
    if len(changes) > 1:
        warnings.warn(f"v0''(a; a) changes sign {len(changes)} times on [0, {a_max}]: {changes}", RuntimeWarning)
    a_tilde = bracketed_root(g, *changes[0])
    sol = solve_ipo_threshold(IpoParams(model, r, a_tilde), roots)
    h = fd_step * max(1.0, a_tilde)
    lo = max(a_tilde - h, 0.0)
    b_hi = _solve_b(model, roots, r, a_tilde + h)
    b_lo = _solve_b(model, roots, r, lo)
    b_prime = (b_hi - b_lo) / (a_tilde + h - lo)
    return MinMaxResult(a_tilde=a_tilde, solution=sol, b_prime=b_prime, sign_changes=changes)

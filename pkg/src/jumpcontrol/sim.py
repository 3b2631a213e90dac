"""Monte Carlo estimates of the controlled payoffs, used as an independent check of the closed forms.

Paths follow the exact compound Poisson jump times; between jumps the
Gaussian increments have step ``dt`` (shortened to land on a jump time).
Every path draws from its own Philox stream keyed by ``(seed, path index)``,
so results do not depend on how paths are split between workers.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numba as nb
import numpy as np

from .exceptions import ConfigError, ParameterError
from .model import ModelParams

DISCOUNTING = ("exact", "killing")


@dataclass(frozen=True)
class SimConfig:
    """Discretization and sampling settings.

    ``discounting="exact"`` weights cash flows by ``exp(-alpha t)`` and cuts
    paths at ``horizon``. ``"killing"`` instead ends each path at an
    independent exponential time of rate ``alpha`` and sums undiscounted
    cash flows, which has the same expectation but far shorter paths.
    ``ruin_bridge`` adds the Brownian-bridge probability of crossing zero
    between grid points to the harvest ruin test. ``substeps`` builds each
    Brownian increment from that many finer pieces; with the same seed, a
    run at ``(dt, 2)`` shares its noise with a run at ``(dt / 2, 1)``.
    """

    dt: float = 1e-3
    horizon: float = 300.0
    n_paths: int = 10_000
    seed: int = 0
    antithetic: bool = False
    discounting: str = "exact"
    ruin_bridge: bool = True
    substeps: int = 1

    def validate(self, model: ModelParams) -> "SimConfig":
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be > 0, got {self.dt!r}")
        if self.dt > 1e-2:
            raise ConfigError(f"dt must be <= 1e-2, got {self.dt!r}")
        if not model.lam * self.dt < 0.1:
            raise ConfigError(f"lambda*dt = {model.lam * self.dt!r} must be < 0.1")
        if not model.alpha * self.horizon >= 20:
            raise ConfigError(f"alpha*horizon = {model.alpha * self.horizon!r} must be >= 20")
        if int(self.n_paths) != self.n_paths or self.n_paths <= 0:
            raise ConfigError(f"n_paths must be a positive integer, got {self.n_paths!r}")
        if self.antithetic and self.n_paths % 2:
            raise ConfigError("antithetic sampling needs an even n_paths")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed!r}")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ConfigError(f"substeps must be a positive integer, got {self.substeps!r}")
        if self.discounting not in DISCOUNTING:
            raise ConfigError(f"discounting must be one of {DISCOUNTING}, got {self.discounting!r}")
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown sim config key(s): {sorted(unknown)}")
        if "n_paths" in known:
            known["n_paths"] = int(known["n_paths"])
        return cls(**known)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    std_error: float
    n_paths: int
    truncated_fraction: float
    dt: float
    seed: int

    def z_score(self, reference: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.mean == reference else math.copysign(math.inf, self.mean - reference)
        return (self.mean - reference) / self.std_error

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std_error": self.std_error, "n_paths": self.n_paths,
                "dt": self.dt, "seed": self.seed, "truncated_fraction": self.truncated_fraction}


# ---------------------------------------------------------------------------
# compiled path kernels; each returns (payoff, alive_at_horizon)
#
# Draw order per path: killing time (if any), the whole jump schedule up to
# the end time, then diffusion normals. Each step's Brownian increment is a
# sum over a fine grid of ``dt / sub``, so a run at ``dt`` with ``sub = 2``
# sees exactly the Brownian path and jumps of a run at ``dt / 2``.


@nb.njit(cache=True)
def _jump_schedule(gen, lam, eta, end):
    cap = int(lam * end + 10.0 * math.sqrt(lam * end + 1.0)) + 16
    times = np.empty(cap)
    sizes = np.empty(cap)
    n = 0
    t = gen.exponential(1.0 / lam)
    while t <= end:
        if n == cap:
            cap *= 2
            times2 = np.empty(cap)
            sizes2 = np.empty(cap)
            times2[:n] = times[:n]
            sizes2[:n] = sizes[:n]
            times, sizes = times2, sizes2
        times[n] = t
        sizes[n] = gen.exponential(1.0 / eta)
        n += 1
        t += gen.exponential(1.0 / lam)
    times_out = np.empty(n + 1)
    times_out[:n] = times[:n]
    times_out[n] = np.inf
    return times_out, sizes[:n]


@nb.njit(cache=True)
def _partial_brownian(gen, h, fine):
    """Brownian increment over a shortened step ``h``, built from pieces of length ``<= fine``."""
    w = 0.0
    rem = h
    while rem > 0.0:
        piece = min(fine, rem)
        w += math.sqrt(piece) * gen.standard_normal()
        rem -= piece
    return w


@nb.njit(cache=True)
def _end_time(gen, alpha, horizon, killing):
    if killing:
        return min(horizon, gen.exponential(1.0 / alpha))
    return horizon


@nb.njit(cache=True)
def _disc(alpha, t, killing):
    return 1.0 if killing else math.exp(-alpha * t)


@nb.njit(cache=True)
def _ipo_path(gen, sgn, x0, a, b, r, mu, sig, lam, eta, alpha, dt, horizon, killing, sub):
    x = x0
    if x >= b:
        return r * x, False
    cost = 0.0
    if x < a:
        cost = a - x
        x = a
    end = _end_time(gen, alpha, horizon, killing)
    times, sizes = _jump_schedule(gen, lam, eta, end)
    fine = dt / sub
    sq_fine = math.sqrt(fine)
    k = 0
    t = 0.0
    while t < end:
        jump = t + dt >= times[k]
        if jump:
            h = times[k] - t
            x += mu * h + sgn * sig * _partial_brownian(gen, h, fine)
            t = times[k]
        else:
            h = dt
            z = gen.standard_normal()
            for _ in range(sub - 1):
                z += gen.standard_normal()
            x += mu * dt + sgn * sig * sq_fine * z
            t += dt
        if t > end:
            break
        if x < a:
            cost += _disc(alpha, t, killing) * (a - x)
            x = a
        if x >= b:
            return _disc(alpha, t, killing) * r * x - cost, False
        if jump:
            x += sizes[k]
            k += 1
            if x >= b:
                return _disc(alpha, t, killing) * r * x - cost, False
    return -cost, end >= horizon


@nb.njit(cache=True)
def _harvest_path(gen, sgn, x0, b, mu, sig, lam, eta, alpha, dt, horizon, killing, bridge, sub):
    x = x0
    if x <= 0:
        return 0.0, False
    paid = 0.0
    if x > b:
        paid = x - b
        x = b
    end = _end_time(gen, alpha, horizon, killing)
    times, sizes = _jump_schedule(gen, lam, eta, end)
    fine = dt / sub
    sq_fine = math.sqrt(fine)
    s2 = sig * sig
    k = 0
    t = 0.0
    while t < end:
        x_prev = x
        jump = t + dt >= times[k]
        if jump:
            h = times[k] - t
            x += mu * h + sgn * sig * _partial_brownian(gen, h, fine)
            t = times[k]
        else:
            h = dt
            z = gen.standard_normal()
            for _ in range(sub - 1):
                z += gen.standard_normal()
            x += mu * dt + sgn * sig * sq_fine * z
            t += dt
        if t > end:
            break
        if x <= 0:
            return paid, False
        if bridge and h > 0:
            # probability that the Brownian bridge between the two grid values dipped below zero
            expo = 2.0 * x_prev * x / (s2 * h)
            if expo < 40.0 and gen.random() < math.exp(-expo):
                return paid, False
        if x > b:
            paid += _disc(alpha, t, killing) * (x - b)
            x = b
        if jump:
            x += sizes[k]
            k += 1
            if x > b:
                paid += _disc(alpha, t, killing) * (x - b)
                x = b
    return paid, end >= horizon


@nb.njit(cache=True)
def _free_path(gen, sgn, x0, t_end, mu, sig, lam, eta, dt):
    times, sizes = _jump_schedule(gen, lam, eta, t_end)
    x = x0
    k = 0
    t = 0.0
    while t < t_end:
        h = min(dt, t_end - t)
        jump = t + h >= times[k]
        if jump:
            h = times[k] - t
        x += mu * h + sig * math.sqrt(h) * sgn * gen.standard_normal()
        t = times[k] if jump else t + h
        if jump:
            x += sizes[k]
            k += 1
    return x


# ---------------------------------------------------------------------------


def path_generator(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one path: Philox keyed by ``(seed, index)``."""
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(index)))


def _rekey(bit_gen: np.random.Philox, seed: int, index: int) -> None:
    # same stream as path_generator(seed, index) without building a new object
    zero = np.zeros(4, dtype=np.uint64)
    bit_gen.state = {"bit_generator": "Philox",
                     "state": {"counter": zero, "key": np.array([index, seed], dtype=np.uint64)},
                     "buffer": zero, "buffer_pos": 4, "has_uint32": 0, "uinteger": 0}


def _streams(cfg: SimConfig, start: int, stop: int):
    """Yield ``(generator, sign)`` per path; antithetic partners share a key and flip the normals.

    The one generator yielded is rekeyed before every path, so each path is
    still exactly ``path_generator(seed, index)``.
    """
    bit_gen = np.random.Philox(key=0)
    gen = np.random.Generator(bit_gen)
    for i in range(start, stop):
        if cfg.antithetic:
            _rekey(bit_gen, int(cfg.seed), i // 2)
            yield gen, (-1.0 if i % 2 else 1.0)
        else:
            _rekey(bit_gen, int(cfg.seed), i)
            yield gen, 1.0


def _run_chunk(kernel, args_before, args_after, cfg, start, stop):
    out = np.empty(stop - start)
    alive = np.zeros(stop - start, dtype=bool)
    for j, (gen, sgn) in enumerate(_streams(cfg, start, stop)):
        out[j], alive[j] = kernel(gen, sgn, *args_before, *args_after)
    return out, alive


def _run(kernel, args, cfg: SimConfig, n_jobs: int = 1):
    from joblib import Parallel, delayed, effective_n_jobs

    n = int(cfg.n_paths)
    n_jobs = effective_n_jobs(n_jobs)
    if n_jobs == 1:
        return _run_chunk(kernel, args, (), cfg, 0, n)

    bounds = np.linspace(0, n, 4 * n_jobs + 1).astype(int)
    if cfg.antithetic:
        bounds -= bounds % 2
    parts = Parallel(n_jobs=n_jobs)(
        delayed(_run_chunk)(kernel, args, (), cfg, int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:])
    )
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _estimate(payoffs: np.ndarray, alive: np.ndarray, cfg: SimConfig) -> SimEstimate:
    samples = payoffs.reshape(-1, 2).mean(axis=1) if cfg.antithetic else payoffs
    m = len(samples)
    std_error = float(samples.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    return SimEstimate(mean=float(samples.mean()), std_error=std_error, n_paths=int(cfg.n_paths),
                       truncated_fraction=float(alive.mean()), dt=float(cfg.dt), seed=int(cfg.seed))


def simulate_ipo_payoffs(model, a, b, r, x0, cfg: SimConfig, n_jobs: int = 1):
    cfg.validate(model)
    if not (0 <= a < b):
        raise ParameterError(f"need 0 <= a < b, got a={a!r}, b={b!r}")
    if x0 < 0:
        raise ParameterError(f"x0 must be >= 0, got {x0!r}")
    args = (float(x0), float(a), float(b), float(r), model.mu, model.sigma, model.lam, model.eta, model.alpha,
            float(cfg.dt), float(cfg.horizon), cfg.discounting == "killing", int(cfg.substeps))
    return _run(_ipo_path, args, cfg, n_jobs)


def simulate_ipo(model: ModelParams, a: float, b: float, r: float, x0: float, cfg: SimConfig,
                 n_jobs: int = 1) -> SimEstimate:
    """Estimate ``E[e^{-alpha tau} r X_tau - int e^{-alpha s} dZ_s]`` under the floor-``a`` / stop-at-``b`` policy.

    The path is pushed back to ``a`` whenever it falls below (the top-up is
    the cost), and stopped at the first grid or jump time with ``X >= b``;
    the reward uses the overshot value. An initial top-up ``(a - x0)+`` is
    charged undiscounted.
    """
    payoffs, alive = simulate_ipo_payoffs(model, a, b, r, x0, cfg, n_jobs)
    return _estimate(payoffs, alive, cfg)


def simulate_harvest_payoffs(model, b, x0, cfg: SimConfig, n_jobs: int = 1):
    cfg.validate(model)
    if not b > 0:
        raise ParameterError(f"barrier must be > 0, got {b!r}")
    if x0 < 0:
        raise ParameterError(f"x0 must be >= 0, got {x0!r}")
    args = (float(x0), float(b), model.mu, model.sigma, model.lam, model.eta, model.alpha,
            float(cfg.dt), float(cfg.horizon), cfg.discounting == "killing", bool(cfg.ruin_bridge),
            int(cfg.substeps))
    return _run(_harvest_path, args, cfg, n_jobs)


def simulate_harvest(model: ModelParams, b: float, x0: float, cfg: SimConfig, n_jobs: int = 1) -> SimEstimate:
    """Estimate the discounted dividends paid until ruin under the barrier-``b`` policy.

    Any excess over ``b`` (after a diffusion step or a jump) is paid out and
    the state reset to ``b``; an initial excess ``(x0 - b)+`` is paid at
    time 0. Ruin is declared when the path is at or below zero.
    """
    payoffs, alive = simulate_harvest_payoffs(model, b, x0, cfg, n_jobs)
    return _estimate(payoffs, alive, cfg)


def simulate_uncontrolled(model: ModelParams, x0: float, t: float, cfg: SimConfig,
                          n_jobs: int = 1) -> np.ndarray:
    """Terminal values ``X_t`` of the uncontrolled process, one per path."""
    if cfg.dt <= 0:
        raise ConfigError("dt must be > 0")
    args = (float(x0), float(t), model.mu, model.sigma, model.lam, model.eta, float(cfg.dt))

    def kernel(gen, sgn, *a):
        return _free_path(gen, sgn, *a), False

    values, _ = _run(kernel, args, cfg, n_jobs)
    return values


def moment_estimate(values: np.ndarray, gamma: float, antithetic: bool = False) -> tuple[float, float]:
    """Mean and standard error of ``exp(gamma X_t)`` over simulated terminal values."""
    w = np.exp(gamma * values)
    if antithetic:
        w = w.reshape(-1, 2).mean(axis=1)
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(len(w)))


__all__ = [
    "SimConfig", "SimEstimate", "simulate_ipo", "simulate_harvest", "simulate_uncontrolled",
    "moment_estimate", "path_generator", "DISCOUNTING",
]

"""Acceptance criteria, one test each.

Every test prints a ``[PASS]``/``[FAIL]`` line (also collected in the pytest
terminal summary) before asserting, so a failing sub-check is visible with
its measured value. Runnable directly: ``python tests/test_acceptance.py``.
"""

import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from acceptance_log import record  # noqa: E402
from piecewise_factory import random_piecewise  # noqa: E402

from jumpcontrol.cli import main  # noqa: E402
from jumpcontrol.exceptions import JumpControlError  # noqa: E402
from jumpcontrol.harvest import eval_harvest_value, solve_harvest_threshold  # noqa: E402
from jumpcontrol.ipo import IpoParams, eval_ipo_value, solve_ipo_threshold, solve_min_max_a  # noqa: E402
from jumpcontrol.model import ModelParams  # noqa: E402
from jumpcontrol.sim import SimConfig, simulate_harvest, simulate_ipo  # noqa: E402
from jumpcontrol.verify import (  # noqa: E402
    apply_generator, check_harvest_conditions, check_ipo_conditions, generator_by_quadrature, harvest_piecewise,
    ipo_piecewise, worst_interior_residual,
)

PARAMS = dict(mu=-0.05, sigma=0.25, lam=0.75, eta=1.5, alpha=0.1)
R = 1.25


def base_model():
    return ModelParams(**PARAMS)


def test_criterion_1_ipo_boundary():
    t0 = time.perf_counter()
    sol = solve_ipo_threshold(IpoParams(base_model(), R, 1.0))
    elapsed = time.perf_counter() - t0
    ok = abs(sol.b - 4.7641) <= 1e-3 and elapsed < 1.0
    record(1, "IPO boundary at a=1", ok, f"b={sol.b:.10f}, target 4.7641 +- 1e-3, {elapsed:.3f}s < 1s")
    assert ok


def test_criterion_2_min_max_floor():
    model = base_model()
    t0 = time.perf_counter()
    mm = solve_min_max_a(IpoParams(model, R))
    a_t, b_t = mm.a_tilde, mm.solution.b
    grid = np.linspace(0, 2 * a_t, 100)
    bs, unsolved = [], 0
    for a in grid:
        try:
            bs.append(solve_ipo_threshold(IpoParams(model, R, a)).b)
        except JumpControlError:
            unsolved += 1
    x = np.linspace(0, 8, 401)
    gap = eval_ipo_value(solve_ipo_threshold(IpoParams(model, R, 0.0)), x) - eval_ipo_value(mm.solution, x)
    elapsed = time.perf_counter() - t0
    checks = {
        "a~": abs(a_t - 3.884) <= 1e-2,
        "b(a~)": abs(b_t - 4.741) <= 1e-2,
        "b(a~) minimal": unsolved == 0 and b_t <= min(bs) + 1e-12,
        "v(.;0) >= v(.;a~)": bool(np.all(gap >= -1e-12)),
        "runtime": elapsed < 10.0,
    }
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    record(2, "min-max floor", ok,
           f"a~={a_t:.6f} (3.884 +- 1e-2), b(a~)={b_t:.6f} (4.741 +- 1e-2), min b on grid={min(bs):.6f}, "
           f"min v gap={gap.min():.3e}, {elapsed:.2f}s < 10s" + (f"; failed: {', '.join(failed)}" if failed else ""))
    assert ok, failed


def test_criterion_3_harvest_barrier():
    t0 = time.perf_counter()
    sol = solve_harvest_threshold(base_model())
    elapsed = time.perf_counter() - t0
    ok = abs(sol.b - 1.276) <= 1e-2 and elapsed < 1.0
    record(3, "harvest barrier", ok, f"b={sol.b:.10f}, target 1.276 +- 1e-2, {elapsed:.3f}s < 1s")
    assert ok


def test_criterion_4_internal_consistency():
    model = base_model()
    b_star = model.b_star()
    floors = np.concatenate([np.linspace(0, 8, 33), [3.884]])
    worst = math.inf
    for a in floors:
        sol = solve_ipo_threshold(IpoParams(model, R, float(a)))
        worst = min(worst, sol.b - max(a, b_star))
        assert sol.b_star == b_star
    ok = b_star == 4.5 and worst > 0
    record(4, "b* and b > max(a, b*)", ok, f"b*={b_star!r}, min over {len(floors)} floors of b - max(a,b*) = {worst:.4f}")
    assert ok


def test_criterion_5_verification_suites():
    model = base_model()
    ipo = solve_ipo_threshold(IpoParams(model, R, 1.0))
    har = solve_harvest_threshold(model)
    ipo_report, har_report = check_ipo_conditions(ipo), check_harvest_conditions(har)
    interior = max(worst_interior_residual(ipo_piecewise(ipo), model, 1.0, ipo.b),
                   worst_interior_residual(harvest_piecewise(har), model, 0.0, har.b))
    smooth = max(ipo_report["iii_smooth_fit_at_floor"].worst_violation,
                 ipo_report["smooth_fit_at_boundary"].worst_violation,
                 har_report["smooth_fit_first_order"].worst_violation,
                 har_report["smooth_fit_second_order"].worst_violation)
    ok = ipo_report.passed and har_report.passed and interior <= 1e-8 and smooth <= 1e-9
    record(5, "verification suites", ok,
           f"ipo {len(ipo_report.results)} conditions pass={ipo_report.passed}, harvest pass={har_report.passed}, "
           f"interior residual {interior:.2e} <= 1e-8, smooth fit {smooth:.2e} <= 1e-9")
    assert ok, (ipo_report.failures(), har_report.failures())


def test_criterion_6_oracle_agreement():
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(20):
        model = ModelParams(rng.uniform(-1, 1), rng.uniform(0.1, 1), rng.uniform(0.1, 2), rng.uniform(0.5, 4),
                            rng.uniform(0.05, 0.5))
        v = random_piecewise(rng, model.eta)
        xs = rng.uniform(0, v.breaks[-1] + 2, 100)
        closed = apply_generator(v, model, xs)
        quad = np.array([generator_by_quadrature(v, model, x) for x in xs])
        worst = max(worst, float(np.max(np.abs(closed - quad))))
    ok = worst <= 1e-9
    record(6, "generator vs quadrature", ok, f"20 functions x 100 points, worst gap {worst:.2e} <= 1e-9")
    assert ok


def test_criterion_7_monte_carlo():
    model = base_model()
    ipo = solve_ipo_threshold(IpoParams(model, R, 1.0))
    har = solve_harvest_threshold(model)
    base = dict(n_paths=200_000, dt=1e-3, horizon=300.0, seed=0)
    t0 = time.perf_counter()
    z = {}
    for x0 in (1.5, 3.0, 4.5):
        est = simulate_ipo(model, 1.0, ipo.b, R, x0, SimConfig(**base), n_jobs=-1)
        z[f"ipo x0={x0:g}"] = est.z_score(float(eval_ipo_value(ipo, x0)))
    for x0 in (0.5, 1.0, 1.276):
        est = simulate_harvest(model, har.b, x0, SimConfig(**base, discounting="killing"), n_jobs=-1)
        z[f"harvest x0={x0:g}"] = est.z_score(float(eval_harvest_value(har, x0)))
    elapsed = time.perf_counter() - t0
    ok = all(abs(v) <= 3 for v in z.values()) and elapsed < 300
    detail = ", ".join(f"{k}: z={v:+.2f}" for k, v in z.items())
    record(7, "Monte Carlo within 3 SE", ok, f"{detail}; {elapsed:.0f}s < 300s")
    assert ok


def _sweep(tmp_path, problem, param, base):
    out = tmp_path / f"{problem}_{param}.json"
    code = main(["sweep", "--problem", problem, "--param", param, "--lo", repr(0.5 * base), "--hi", repr(1.5 * base),
                 "--n", "20", "--out", str(out)])
    points = json.loads(out.read_text())["points"]
    assert code == 0 and all(p["error"] is None for p in points)
    return np.array([p["b"] for p in points])


def test_criterion_8_sensitivity_shapes(tmp_path):
    shapes = {}
    for param, base, sign in (("eta", 1.5, -1), ("lambda", 0.75, 1), ("sigma", 0.25, 1)):
        d = np.diff(_sweep(tmp_path, "ipo", param, base))
        shapes[f"ipo {param} {'down' if sign < 0 else 'up'}"] = bool(np.all(sign * d > 0))
    b_lam = _sweep(tmp_path, "harvest", "lambda", 0.75)
    peak = int(np.argmax(b_lam))
    d = np.diff(b_lam)
    shapes["harvest lambda hump"] = 0 < peak < 19 and bool(np.all(d[:peak] > 0) and np.all(d[peak:] < 0))
    shapes["harvest sigma up"] = bool(np.all(np.diff(_sweep(tmp_path, "harvest", "sigma", 0.25)) > 0))
    ok = all(shapes.values())
    record(8, "sensitivity shapes", ok,
           ", ".join(f"{k}={'ok' if v else 'NO'}" for k, v in shapes.items()) + f"; harvest lambda peak at index {peak}")
    assert ok, shapes


def test_criterion_9_comparison_table(tmp_path):
    out = tmp_path / "compare.json"
    code = main(["compare", "--r-list", "1.25", "1.5", "2.0", "--n-grid", "100", "--out", str(out)])
    doc = json.loads(out.read_text())
    v = np.array([block["v_ipo"] for block in doc["ipo"]])
    worst = float(np.min(np.diff(v, axis=0)))
    ok = code == 0 and v.shape == (3, 100) and len(doc["x"]) == 100 and worst >= 0
    record(9, "IPO value nondecreasing in r", ok, f"r in (1.25, 1.5, 2.0) on 100 points, min increment {worst:.4f}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s", "-p", "no:cacheprovider"]))

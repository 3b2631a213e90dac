"""Command-line front end: solve, sweep, verify, simulate, compare.

Settings come from one JSON document (``--config``) and command-line flags,
flags winning. Every flag has a config key; see ``FLAG_KEYS``. JSON output
keeps a fixed field order and writes floats with 17 significant digits so
repeated runs are byte-identical.

Exit codes: 0 ok, 2 invalid input, 3 solver failure, 4 verification failed.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .exceptions import BracketFailure, ConfigError, JumpControlError, ParameterError
from .harvest import build_harvest_solution, eval_harvest_value, harvest_value_table, solve_harvest_threshold
from .ipo import (
    IpoParams, build_ipo_solution, eval_ipo_value, ipo_value_table, solve_budget_optimum, solve_ipo_threshold,
    solve_min_max_a,
)
from .model import PARAM_KEYS, ModelParams
from .sim import SimConfig, simulate_harvest, simulate_ipo
from .verify import GridSpec, check_harvest_conditions, check_ipo_conditions

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4

SWEEP_PARAMS = ("mu", "sigma", "lambda", "eta", "alpha", "r", "a")
PROBLEMS = ("ipo", "harvest")

DEFAULTS: dict = {
    "problem": "ipo",
    "model": {"mu": -0.05, "sigma": 0.25, "lambda": 0.75, "eta": 1.5, "alpha": 0.1},
    "r": 1.25,
    "a": 0.0,
    "budget": 0.0,
    "min_max": False,
    "b": None,
    "solution": None,
    "grid": {"x_min": 0.0, "x_max": 8.0, "n": 101},
    "sweep": {"param": None, "lo": None, "hi": None, "n": 20},
    "sim": {},
    "x0": None,
    "r_list": [1.25, 1.5, 2.0],
    "n_jobs": 1,
    "out": None,
    "table": None,
    "format": "json",
    "seed": 0,
}

# flag dest -> location in the config document
FLAG_KEYS = {
    "problem": ("problem",), "r": ("r",), "a": ("a",), "budget": ("budget",), "min_max": ("min_max",),
    "b": ("b",), "solution": ("solution",),
    "mu": ("model", "mu"), "sigma": ("model", "sigma"), "lambda_": ("model", "lambda"),
    "eta": ("model", "eta"), "alpha": ("model", "alpha"),
    "x_min": ("grid", "x_min"), "x_max": ("grid", "x_max"), "n_grid": ("grid", "n"),
    "param": ("sweep", "param"), "lo": ("sweep", "lo"), "hi": ("sweep", "hi"), "n": ("sweep", "n"),
    "dt": ("sim", "dt"), "horizon": ("sim", "horizon"), "n_paths": ("sim", "n_paths"),
    "antithetic": ("sim", "antithetic"), "discounting": ("sim", "discounting"), "substeps": ("sim", "substeps"),
    "x0": ("x0",), "r_list": ("r_list",), "n_jobs": ("n_jobs",),
    "out": ("out",), "table": ("table",), "format": ("format",), "seed": ("seed",),
}


# ---------------------------------------------------------------------------
# serialization


def _num(x: Any) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with insertion-ordered keys and 17-significant-digit floats."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [inner + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return json.dumps(str(obj))


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, (float, np.floating)) else ("" if v is None else v) for v in row])
    return buf.getvalue()


def _emit(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text if text.endswith("\n") else text + "\n")


def _sibling(path, suffix: str):
    return None if path is None else Path(path).with_suffix(suffix)


# ---------------------------------------------------------------------------
# configuration


def _merge(base: dict, override: dict, where: str = "") -> dict:
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where + key!r}")
        if isinstance(base[key], dict) and key != "sim":
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where + key!r} must be an object")
            _merge(base[key], value, where + key + ".")
        else:
            base[key] = value
    return base


def load_config(path=None, flags: dict | None = None) -> dict:
    """Defaults, then the JSON file at ``path``, then non-``None`` flags."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        if "model" in doc and isinstance(doc["model"], dict) and "lam" in doc["model"]:
            doc["model"]["lambda"] = doc["model"].pop("lam")
        if isinstance(doc.get("sim"), dict) and "seed" in doc["sim"]:
            doc = dict(doc, sim={k: v for k, v in doc["sim"].items() if k != "seed"}, seed=doc["sim"]["seed"])
        _merge(cfg, doc)
    for dest, value in (flags or {}).items():
        if value is None or dest not in FLAG_KEYS:
            continue
        node = cfg
        *parents, leaf = FLAG_KEYS[dest]
        for p in parents:
            node = node[p]
        node[leaf] = value
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg['format']!r}")
    if cfg["problem"] not in PROBLEMS:
        raise ConfigError(f"problem must be one of {PROBLEMS}, got {cfg['problem']!r}")
    return cfg


def _model(cfg: dict) -> ModelParams:
    return ModelParams.from_dict(cfg["model"])


def _grid(cfg: dict) -> np.ndarray:
    g = cfg["grid"]
    n = int(g["n"])
    if n < 2 or not float(g["x_max"]) > float(g["x_min"]) >= 0:
        raise ConfigError(f"grid needs 0 <= x_min < x_max and n >= 2, got {g}")
    return np.linspace(float(g["x_min"]), float(g["x_max"]), n)


def _sim_config(cfg: dict, problem: str) -> SimConfig:
    d = dict(cfg["sim"])
    d.setdefault("discounting", "exact" if problem == "ipo" else "killing")
    d["seed"] = int(cfg["seed"])
    return SimConfig.from_dict(d)


# ---------------------------------------------------------------------------
# solution building


def _solve(cfg: dict):
    """Solved (or, when ``b`` is given, rebuilt) solution plus extra artifact fields."""
    model = _model(cfg)
    extra: dict = {}
    if cfg["problem"] == "harvest":
        if cfg["b"] is not None:
            return build_harvest_solution(model, float(cfg["b"])), extra
        return solve_harvest_threshold(model), extra
    params = IpoParams(model, cfg["r"], cfg["a"], cfg["budget"])
    if cfg["b"] is not None:
        return build_ipo_solution(model, params.r, params.a, float(cfg["b"]), polish=True), extra
    if cfg["min_max"]:
        mm = solve_min_max_a(params)
        extra = {"a_tilde": mm.a_tilde, "b_prime": mm.b_prime}
        return mm.solution, extra
    if params.budget > 0:
        opt = solve_budget_optimum(params, _grid(cfg))
        extra = {"budget": params.budget, "a_star": opt.a_star,
                 "candidates": {_num(a): s.b for a, s in opt.candidates.items()}}
        return opt.solution, extra
    return solve_ipo_threshold(params), extra


def _from_artifact(cfg: dict) -> None:
    """Fold a solution artifact's model, problem and boundary into ``cfg``."""
    try:
        doc = json.loads(Path(cfg["solution"]).read_text())
        cfg["problem"] = doc["problem"]
        cfg["model"] = dict(doc["model"])
        cfg["b"] = doc["b"]
        if doc["problem"] == "ipo":
            cfg["r"], cfg["a"] = doc["r"], doc["a"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot use solution artifact {cfg['solution']}: {exc}") from None


def _table(sol, x) -> np.ndarray:
    return ipo_value_table(sol, x) if hasattr(sol, "A1") else harvest_value_table(sol, x)


# ---------------------------------------------------------------------------
# commands


def cmd_solve(cfg: dict) -> int:
    sol, extra = _solve(cfg)
    doc = sol.to_dict()
    doc.update(extra)
    table = _csv_text(("x", "v", "v1", "v2"), _table(sol, _grid(cfg)).tolist())
    if cfg["format"] == "json":
        _emit(dumps(doc), cfg["out"])
        table_path = cfg["table"] or _sibling(cfg["out"], ".csv")
        if table_path is not None:
            _emit(table, table_path)
    else:
        _emit(table, cfg["out"])
        if cfg["out"] is not None:
            _emit(dumps(doc), _sibling(cfg["out"], ".json"))
    return EXIT_OK


def _sweep_point(cfg: dict, param: str, value: float) -> float:
    local = copy.deepcopy(cfg)
    if param in PARAM_KEYS:
        local["model"][param] = value
    else:
        local[param] = value
    sol, _ = _solve(local)
    return sol.b


def cmd_sweep(cfg: dict) -> int:
    sw = cfg["sweep"]
    param = sw["param"]
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMS}, got {param!r}")
    if cfg["problem"] == "harvest" and param in ("r", "a"):
        raise ConfigError(f"the harvest problem has no parameter {param!r}")
    try:
        lo, hi, n = float(sw["lo"]), float(sw["hi"]), int(sw["n"])
    except (TypeError, ValueError):
        raise ConfigError(f"sweep needs numeric lo, hi and n, got {sw}") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi and n >= 2):
        raise ConfigError(f"sweep needs finite lo < hi and n >= 2, got lo={lo}, hi={hi}, n={n}")
    rows = []
    for value in np.linspace(lo, hi, n):
        try:
            rows.append((float(value), _sweep_point(cfg, param, float(value)), None))
        except JumpControlError as exc:
            rows.append((float(value), math.nan, f"{type(exc).__name__}: {exc}"))
    if cfg["format"] == "json":
        doc = {"problem": cfg["problem"], "param": param,
               "points": [{"value": v, "b": b, "error": e} for v, b, e in rows]}
        _emit(dumps(doc), cfg["out"])
    else:
        _emit(_csv_text((param, "b", "error"), rows), cfg["out"])
    if all(e is not None for _, _, e in rows):
        print(f"error: every sweep point failed ({rows[0][2]})", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    if cfg["solution"] is not None:
        _from_artifact(cfg)
    sol, _ = _solve(cfg)
    report = check_ipo_conditions(sol, GridSpec()) if hasattr(sol, "A1") else check_harvest_conditions(sol, GridSpec())
    doc = report.to_dict()
    doc["b"] = sol.b
    if cfg["format"] == "json":
        _emit(dumps(doc), cfg["out"])
    else:
        rows = [(c["condition"], c["worst_violation"], c["at_x"], c["tolerance"], str(c["pass"]).lower())
                for c in doc["conditions"]]
        _emit(_csv_text(("condition", "worst_violation", "at_x", "tolerance", "pass"), rows), cfg["out"])
    if not report.passed:
        print(f"verification failed: {', '.join(report.failures())}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_simulate(cfg: dict) -> int:
    if cfg["solution"] is not None:
        _from_artifact(cfg)
    sol, _ = _solve(cfg)
    model, problem = _model(cfg), cfg["problem"]
    sim_cfg = _sim_config(cfg, problem)
    x0s = cfg["x0"] if cfg["x0"] is not None else [0.5 * sol.b]
    if not isinstance(x0s, (list, tuple)):
        x0s = [x0s]
    records = []
    for x0 in map(float, x0s):
        if problem == "ipo":
            est = simulate_ipo(model, sol.a, sol.b, sol.r, x0, sim_cfg, n_jobs=int(cfg["n_jobs"]))
            exact = eval_ipo_value(sol, x0)
        else:
            est = simulate_harvest(model, sol.b, x0, sim_cfg, n_jobs=int(cfg["n_jobs"]))
            exact = eval_harvest_value(sol, x0)
        rec = {"x0": x0}
        rec.update(est.to_dict())
        rec.update({"analytic": exact, "z_score": est.z_score(exact)})
        records.append(rec)
        print(f"x0={_num(x0)} mc={est.mean:.6f} se={est.std_error:.6f} analytic={exact:.6f} "
              f"z={rec['z_score']:+.3f}", file=sys.stderr)
    if cfg["format"] == "json":
        doc = {"problem": problem, "b": sol.b, "sim": sim_cfg.to_dict(), "estimates": records}
        _emit(dumps(doc), cfg["out"])
    else:
        keys = list(records[0])
        _emit(_csv_text(keys, [[r[k] for k in keys] for r in records]), cfg["out"])
    return EXIT_OK


def cmd_compare(cfg: dict) -> int:
    model = _model(cfg)
    r_list = [float(r) for r in cfg["r_list"]]
    for r in r_list:
        if not r > 1:
            raise ParameterError(f"every r must be > 1, got {r!r}")
    x = _grid(cfg)
    harvest = eval_harvest_value(solve_harvest_threshold(model), x)
    blocks = []
    for r in r_list:
        sol = solve_ipo_threshold(IpoParams(model, r, 0.0))
        blocks.append((r, sol.b, eval_ipo_value(sol, x)))
    if cfg["format"] == "json":
        doc = {"x": x.tolist(), "v_harvest": harvest.tolist(),
               "ipo": [{"r": r, "b": b, "v_ipo": v.tolist()} for r, b, v in blocks]}
        _emit(dumps(doc), cfg["out"])
    else:
        rows = [(r, xi, vi, hi) for r, _, v in blocks for xi, vi, hi in zip(x, v, harvest)]
        _emit(_csv_text(("r", "x", "v_ipo", "v_harvest"), rows), cfg["out"])
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "verify": cmd_verify, "simulate": cmd_simulate,
            "compare": cmd_compare}


# ---------------------------------------------------------------------------
# argument parsing


def _shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON config document")
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--seed", type=int, metavar="N")
    m = p.add_argument_group("model")
    m.add_argument("--mu", type=float)
    m.add_argument("--sigma", type=float)
    m.add_argument("--lambda", dest="lambda_", type=float)
    m.add_argument("--eta", type=float)
    m.add_argument("--alpha", type=float)
    q = p.add_argument_group("problem")
    q.add_argument("--problem", choices=PROBLEMS)
    q.add_argument("--r", type=float, help="IPO multiple")
    q.add_argument("--a", type=float, help="cash-infusion floor")
    q.add_argument("--budget", type=float, help="floor budget; solve picks the better of 0 and budget")
    q.add_argument("--b", type=float, help="use this boundary instead of solving for it")
    g = p.add_argument_group("grid")
    g.add_argument("--x-min", dest="x_min", type=float)
    g.add_argument("--x-max", dest="x_max", type=float)
    g.add_argument("--n-grid", dest="n_grid", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jumpcontrol", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve for the boundary; write solution JSON and value table CSV")
    _shared(p)
    p.add_argument("--min-max", dest="min_max", action="store_const", const=True,
                   help="IPO only: use the floor that minimizes the boundary")
    p.add_argument("--table", metavar="PATH", help="value table CSV (default: --out with .csv suffix)")

    p = sub.add_parser("sweep", help="boundary over a grid of one parameter")
    _shared(p)
    p.add_argument("--param", choices=SWEEP_PARAMS)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--n", type=int)

    p = sub.add_parser("verify", help="check the verification conditions; exit 4 on failure")
    _shared(p)
    p.add_argument("--solution", metavar="PATH", help="solution artifact written by solve")

    p = sub.add_parser("simulate", help="Monte Carlo estimate against the analytic value")
    _shared(p)
    p.add_argument("--solution", metavar="PATH", help="solution artifact written by solve")
    p.add_argument("--x0", type=float, nargs="+")
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--antithetic", action="store_const", const=True)
    p.add_argument("--discounting", choices=("exact", "killing"))
    p.add_argument("--substeps", type=int, help="Brownian pieces per step (for dt-halving comparisons)")
    p.add_argument("--n-jobs", dest="n_jobs", type=int)

    p = sub.add_parser("compare", help="IPO (zero floor) against harvest values for several r")
    _shared(p)
    p.add_argument("--r-list", dest="r_list", type=float, nargs="+")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = load_config(args.config, flags)
        return COMMANDS[args.command](cfg)
    except BracketFailure as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, TypeError, KeyError) as exc:
        # ParameterError, DomainError and ConfigError are ValueErrors
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except JumpControlError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jumpcontrol.exceptions import BracketFailure, ParameterError, PoleAtEta, TrendNotPositive
from jumpcontrol.model import (
    CharRoots, ModelParams, characteristic_derivative, characteristic_value, root_tolerance, solve_roots,
)

valid_params = st.builds(
    ModelParams,
    mu=st.floats(-2.0, 2.0),
    sigma=st.floats(0.01, 3.0),
    lam=st.floats(0.01, 5.0),
    eta=st.floats(0.1, 10.0),
    alpha=st.floats(0.01, 1.0),
)


def _bisect(f, lo, hi, tol=1e-12):
    flo = f(lo)
    while hi - lo > tol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo, flo = mid, f(mid)
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestModelParams:
    @pytest.mark.parametrize("field", ["sigma", "lam", "eta", "alpha"])
    @pytest.mark.parametrize("value", [0.0, -1.0])
    def test_rejects_nonpositive(self, field, value):
        kw = dict(mu=0.0, sigma=1.0, lam=1.0, eta=1.0, alpha=0.1)
        kw[field] = value
        with pytest.raises(ParameterError):
            ModelParams(**kw)

    @pytest.mark.parametrize("bad", [math.nan, math.inf, "x"])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(ParameterError):
            ModelParams(mu=bad, sigma=1.0, lam=1.0, eta=1.0, alpha=0.1)

    def test_negative_drift_allowed(self):
        assert ModelParams(-3.0, 1.0, 1.0, 1.0, 0.1).mu == -3.0

    def test_dict_round_trip(self, model):
        d = model.to_dict()
        assert list(d) == ["mu", "sigma", "lambda", "eta", "alpha"]
        assert ModelParams.from_dict(d) == model
        assert ModelParams.from_dict({**{k: v for k, v in d.items() if k != "lambda"}, "lam": 0.75}) == model

    def test_from_dict_missing(self):
        with pytest.raises(ParameterError, match="eta"):
            ModelParams.from_dict({"mu": 0, "sigma": 1, "lambda": 1, "alpha": 0.1})

    def test_replace(self, model):
        assert model.replace(**{"lambda": 1.0}).lam == 1.0
        assert model.replace(eta=2.0).eta == 2.0

    def test_trend_and_b_star(self, model):
        assert model.trend() == -0.05 + 0.75 / 1.5
        assert model.b_star() == (-0.05 + 0.75 / 1.5) / 0.1

    def test_trend_guard(self):
        with pytest.raises(TrendNotPositive):
            ModelParams(-0.5, 0.25, 0.75, 1.5, 0.1).require_positive_trend()


class TestCharacteristic:
    def test_zero_at_origin(self, model):
        assert characteristic_value(model, 0.0) == 0.0

    def test_direct_substitution(self, model):
        expected = 0.5 * 0.0625 - 0.05 + 0.75 * 1.5 / 0.5 - 0.75
        assert characteristic_value(model, 1.0) == pytest.approx(1.48125, abs=1e-15)
        assert characteristic_value(model, 1.0) == pytest.approx(expected, abs=1e-15)

    def test_pole_guard(self, model):
        with pytest.raises(PoleAtEta):
            characteristic_value(model, 1.5)
        with pytest.raises(ZeroDivisionError):
            characteristic_derivative(model, 1.5)

    def test_derivative_matches_difference(self, model):
        h = 1e-6
        for g in (-2.0, 0.3, 1.2, 4.0):
            fd = (characteristic_value(model, g + h) - characteristic_value(model, g - h)) / (2 * h)
            assert characteristic_derivative(model, g) == pytest.approx(fd, rel=1e-7)


class TestRoots:
    def test_root_ordering(self, model, roots):
        assert 0 < roots.gamma1 < 1.5 < roots.gamma2
        assert roots.gamma3 > 0

    def test_against_plain_bisection(self, model, roots):
        f = lambda g: characteristic_value(model, g) - model.alpha  # noqa: E731
        eps = 1e-9 * model.eta
        g1 = _bisect(f, eps, model.eta - eps)
        g2 = _bisect(f, model.eta + eps, 64.0)
        g3 = -_bisect(f, -64.0, -eps)
        assert roots.gamma1 == pytest.approx(g1, rel=1e-10)
        assert roots.gamma2 == pytest.approx(g2, rel=1e-10)
        assert roots.gamma3 == pytest.approx(g3, rel=1e-10)

    def test_residuals(self, model, roots):
        tol = root_tolerance(model)
        for g in (roots.gamma1, roots.gamma2, -roots.gamma3):
            assert abs(characteristic_value(model, g) - model.alpha) <= tol

    def test_deterministic(self, model):
        assert solve_roots(model) == solve_roots(model)

    def test_exponents_and_dict(self, roots):
        assert roots.exponents == (roots.gamma1, roots.gamma2, -roots.gamma3)
        assert list(roots.to_dict()) == ["gamma1", "gamma2", "gamma3"]

    @settings(max_examples=150, deadline=None)
    @given(valid_params)
    def test_ordering_random_params(self, p):
        roots = solve_roots(p)
        assert 0 < roots.gamma1 < p.eta < roots.gamma2
        assert roots.gamma3 > 0
        tol = root_tolerance(p)
        for g in (roots.gamma1, roots.gamma2, -roots.gamma3):
            assert abs(characteristic_value(p, g) - p.alpha) <= tol

    @settings(max_examples=40, deadline=None)
    @given(valid_params, st.sampled_from(["mu", "sigma", "lam", "eta", "alpha"]))
    def test_continuity_under_perturbation(self, p, field):
        base = solve_roots(p)
        value = getattr(p, field)
        moved = solve_roots(p.replace(**{field: value * (1 + 1e-8) if value != 0 else 1e-8}))
        for g0, g1 in zip(base.exponents, moved.exponents):
            assert abs(g1 - g0) <= 1e-4 * abs(g0)

    def test_charroots_is_frozen(self, roots):
        with pytest.raises(Exception):
            roots.gamma1 = 1.0
        assert isinstance(roots, CharRoots)

    def test_bracket_failure_is_runtime_error(self):
        assert issubclass(BracketFailure, RuntimeError)

import math

import numpy as np
import pytest

import gauss2pp as g

REFERENCE = dict(a=0.2997, b=0.0407, sigma=0.0114, eta=0.0114, rho=-0.9998)


@pytest.fixture
def curve():
    return g.DiscountCurve.flat(0.01, 60.0)


@pytest.fixture
def params():
    return g.G2Params(**REFERENCE)


def test_initial_fit(curve, params):
    for t in (1.0, 5.0, 10.0, 30.0):
        assert g.bond_price(curve, params, 0.0, 0.0, 0.0, t) == pytest.approx(math.exp(-0.01 * t), abs=1e-12)


def test_swaption_parity(curve, params):
    payer = g.price_swaption(curve, params, 5.0, 5.0, strike=0.012)
    receiver = g.price_swaption(curve, params, 5.0, 5.0, strike=0.012, payer=False)
    annuity = sum(curve.discount(5.0 + k) for k in range(1, 6))
    swap = curve.discount(5.0) - curve.discount(10.0) - 0.012 * annuity
    assert payer - receiver == pytest.approx(swap, abs=1e-10)


def test_calibrate_q_from_the_optimum(curve, params):
    quotes = [(e, t, g.price_swaption(curve, params, e, t), "price") for e in (5, 10) for t in (5, 10, 20)]
    result = g.calibrate_q(curve, quotes, start=params, restarts=1)
    assert result["objective"] < 1e-10
    assert result["params"].a == pytest.approx(REFERENCE["a"], rel=1e-6)


def test_premium_calibration_reproduces_forecasts(curve, params):
    forecasts = [(2.0, 2.25, -0.003), (2.0, 12.0, 0.016), (40.0, 40.25, 0.0163), (40.0, 50.0, 0.0263)]
    for kind in ("step", "linear"):
        spec = g.calibrate_p(curve, params, kind, forecasts, tau=2.0)
        assert spec.kind == kind
        for h, m, r in forecasts:
            assert g.expected_rate_p(curve, params, spec, h, m) == pytest.approx(r, abs=1e-10)
    with pytest.raises(g.InputError):
        g.calibrate_p(curve, params, "constant", forecasts)


def test_projection_table(curve, params):
    rows = g.project(curve, params, g.PremiumSpec.constant(0.0, 0.0))
    assert rows.shape == (481 * 3, 4)
    np.testing.assert_array_equal(rows[:, 2], rows[:, 3])
    with pytest.raises(g.DomainError):
        g.project(curve, params, g.PremiumSpec.constant(0.0, 0.0), horizon=45.0)


def test_simulation_is_reproducible(params):
    t, x, y = g.simulate(params, n_paths=50, horizon=2.0, seed=3)
    assert t.shape == (25,)
    assert x.shape == (50, 25) and y.shape == (50, 25)
    assert np.all(x[:, 0] == 0.0)
    _, x2, _ = g.simulate(params, n_paths=50, horizon=2.0, seed=3)
    np.testing.assert_array_equal(x, x2)
    with pytest.raises(g.InputError):
        g.simulate(params, measure="P")


def test_bond_check(curve, params):
    r = g.mc_bond_check(curve, params, maturity=10.0, n_paths=20000)
    assert abs(r["estimate"] - r["target"]) < 4 * r["std_error"] + abs(r["richardson_bias"])


def test_invalid_parameters():
    with pytest.raises(g.InputError):
        g.G2Params(a=-0.1, b=0.05, sigma=0.01, eta=0.01, rho=0.0)

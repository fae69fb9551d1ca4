import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kds_spectra import geometry as geo
from kds_spectra.errors import NotSubextremal, OutOfDomain


def _case(oracles, a):
    return next(g for g in oracles["geometry"] if g["a"] == a)


def test_delta_values(oracles):
    assert geo.delta_eval(geo.BlackHoleParams(0, 1, 10), 0.0) == 0.0
    assert geo.delta_eval(geo.BlackHoleParams(0.1, 1, 10), 0.0) == pytest.approx(0.01, abs=1e-15)
    d = oracles["delta_exact"]
    p = geo.BlackHoleParams(d["a"], d["M"], d["l"])
    assert float(geo.delta_eval(p, d["r"])) == pytest.approx(d["num"] / d["den"], rel=1e-14)


def test_delta_derivatives_against_polyder(kds):
    c = geo.delta_coeffs(kds)
    r = np.linspace(1.0, 9.0, 17)
    for k in range(1, 4):
        assert np.allclose(geo.delta_deriv(kds, r, k), np.polyval(np.polyder(c, k), r), rtol=1e-13)
    assert np.all(geo.delta_deriv(kds, r, 5) == 0)


def test_classify_examples():
    assert geo.classify_subextremal(0.0, 1.0, 10.0) == geo.SUBEXTREMAL
    assert geo.classify_subextremal(0.0, 1.0, math.sqrt(27.0)) == geo.BORDERLINE
    assert geo.classify_subextremal(0.0, 1.0, 4.0) == geo.NOT_SUBEXTREMAL
    assert geo.classify_subextremal(0.5, 0.3, 1.0) == geo.NOT_SUBEXTREMAL


def test_sds_horizons(oracles, sds):
    g = _case(oracles, 0.0)
    hd = geo.horizon_data(sds)
    assert hd.r_minus == 0.0
    assert np.allclose(hd.roots, g["roots"], rtol=1e-13, atol=1e-14)
    assert hd.r_plus == pytest.approx(2.09, abs=0.01)
    assert hd.r_bar_plus == pytest.approx(8.79, abs=0.01)
    assert hd.r_minus_bar == pytest.approx(-10.88, abs=0.01)
    assert hd.kappa_plus == pytest.approx(g["kappa_plus"], rel=1e-12)
    assert hd.kappa_bar_plus == pytest.approx(g["kappa_bar_plus"], rel=1e-12)


@pytest.mark.parametrize("a", [0.5, 0.13])
def test_horizon_data_against_high_precision(oracles, a):
    g = _case(oracles, a)
    p = geo.BlackHoleParams(g["a"], g["M"], g["l"])
    hd = geo.horizon_data(p)
    assert np.allclose(hd.roots, g["roots"], rtol=1e-12, atol=1e-14)
    for k in ("kappa_plus", "kappa_bar_plus", "omega_plus", "omega_bar_plus"):
        assert getattr(hd, k) == pytest.approx(g[k], rel=1e-11)
    assert hd.omega_bar_plus < hd.omega_plus
    sr = geo.special_radii(p)
    assert sr["r_delta_frac"] == pytest.approx(g["r_delta_frac"], rel=1e-12)
    assert sr["r_delta_max"] == pytest.approx(g["r_delta_max"], rel=1e-12)
    assert geo.max_delta_over_a2(p) == pytest.approx(g["max_delta_over_a2"], rel=1e-11)


def test_not_subextremal_raises():
    with pytest.raises(NotSubextremal):
        geo.horizon_data(geo.BlackHoleParams(0.0, 1.0, 4.0))


def test_reconstruct_delta_from_roots():
    p = geo.BlackHoleParams(0.2, 1.0, 10.0)
    hd = geo.horizon_data(p)
    r = np.linspace(-12, 12, 100)
    rec = -np.prod([r - ri for ri in hd.roots], axis=0) / p.l ** 2
    ref = geo.delta_eval(p, r)
    scale = np.maximum(np.abs(ref), 1.0)
    assert np.max(np.abs(rec - ref) / scale) < 1e-10
    assert abs(sum(hd.roots)) < 1e-10 * hd.r_bar_plus
    assert geo.delta_deriv(p, hd.r_plus) > 0 > geo.delta_deriv(p, hd.r_bar_plus)


def test_tortoise_against_quadrature(oracles):
    for g in oracles["geometry"]:
        p = geo.BlackHoleParams(g["a"], g["M"], g["l"])
        for r, v in g["tortoise"].items():
            assert geo.tortoise(p, float(r)) == pytest.approx(v, abs=1e-11)


def test_tortoise_normalization_and_limits(kds):
    hd = geo.horizon_data(kds)
    rf = geo.special_radii(kds)["r_delta_frac"]
    assert abs(geo.tortoise(kds, rf)) < 1e-12
    d = np.logspace(-2, -12, 11)
    near = geo.tortoise(kds, hd.r_plus + d)
    assert np.all(np.diff(near) < 0)
    assert near[-1] < -30
    r = np.linspace(hd.r_plus, hd.r_bar_plus, 5002)[1:-1]
    assert np.all(np.diff(geo.tortoise(kds, r)) > 0)
    with pytest.raises(OutOfDomain):
        geo.tortoise(kds, hd.r_plus)
    with pytest.raises(OutOfDomain):
        geo.tortoise(kds, hd.r_bar_plus + 1)


def test_tortoise_round_trip(kds):
    rng = np.random.default_rng(1)
    hd = geo.horizon_data(kds)
    r = hd.r_plus + (hd.r_bar_plus - hd.r_plus) * rng.uniform(1e-6, 1 - 1e-6, 1000)
    back = geo.tortoise_inverse(kds, geo.tortoise(kds, r))
    assert np.max(np.abs(back - r)) < 1e-9
    x = np.linspace(-30, 60, 91)
    rr = geo.tortoise_inverse(kds, x)
    assert np.max(np.abs(geo.tortoise(kds, rr) - x)) < 1e-10
    scalar = np.array([geo.tortoise_inverse(kds, float(v)) for v in x[::10]])
    assert np.allclose(scalar, rr[::10], rtol=1e-13)


def test_tortoise_inverse_deep_near_horizon(kds):
    # past r* ~ -35 the gap r - r_+ drops below what a double next to r_+ can
    # hold, so the best possible residual is one ulp of r times dr*/dr
    hd = geo.horizon_data(kds)
    for x in (-40.0, -60.0):
        r = geo.tortoise_inverse(kds, x)
        assert r > hd.r_plus
        cond = (r * r + kds.a ** 2) / geo.delta_eval(kds, r)
        floor = cond * np.spacing(r)
        assert abs(geo.tortoise(kds, r) - x) <= max(1e-10, 2 * floor)
    # below r*(next double after r_+) the answer saturates there
    first = np.nextafter(hd.r_plus, np.inf)
    assert geo.tortoise_inverse(kds, geo.tortoise(kds, first) - 5.0) == first


def test_special_radii_sds(sds):
    sr = geo.special_radii(sds)
    assert sr["r_delta_frac"] == pytest.approx(3.0, abs=1e-12)
    # 2r - 4r^3/l^2 - 2M = 0
    r = sr["r_delta_max"]
    assert abs(2 * r - 4 * r ** 3 / 100 - 2) < 1e-12


def test_causal_predicates(sds, kds):
    hd = geo.horizon_data(sds)
    for r in np.linspace(hd.r_plus, hd.r_bar_plus, 12)[1:-1]:
        assert not geo.causal_predicates(sds, r, math.pi / 2)["in_ergoregion"]
    hk = geo.horizon_data(kds)
    assert not geo.causal_predicates(kds, hk.r_plus, 1.0)["W_timelike"]
    assert geo.causal_predicates(kds, 3.0, 1.0)["W_timelike"]
    for r in np.linspace(hk.r_plus, hk.r_bar_plus, 12)[1:-1]:
        assert not geo.causal_predicates(kds, r, 0.0)["in_ergoregion"]
    # just outside r_+ on the equator the rotating black hole has an ergoregion
    assert geo.causal_predicates(kds, hk.r_plus + 1e-3, math.pi / 2)["in_ergoregion"]
    assert geo.g_W_W(kds, 3.0, 1.0) < 0


def test_scaled_to_unit_l(kds):
    q = kds.scaled_to_unit_l()
    assert q.l == 1.0
    assert geo.horizon_data(q).r_plus * kds.l == pytest.approx(geo.horizon_data(kds).r_plus)


def test_params_validation():
    with pytest.raises(OutOfDomain):
        geo.BlackHoleParams(0.1, -1.0, 10.0)
    with pytest.raises(OutOfDomain):
        geo.BlackHoleParams(0.1, 1.0, 10.0, mu2_kg=-1)
    with pytest.raises(KeyError):
        geo.BlackHoleParams.from_dict({"a": 0.1, "M": 1.0})


@settings(max_examples=200, deadline=None)
@given(x=st.floats(0.0, 0.249), y=st.floats(1e-4, 1 / 27.0))
def test_accepted_parameters_satisfy_inequalities(x, y):
    a, M = math.sqrt(x), math.sqrt(y)
    if geo.classify_subextremal(a, M, 1.0) != geo.SUBEXTREMAL:
        return
    p = geo.BlackHoleParams(a, M, 1.0)
    rep = geo.parameter_inequality_report(p)
    assert all(ok for _, ok in rep.values()), rep
    hd = geo.horizon_data(p)
    r = np.linspace(hd.r_plus, hd.r_bar_plus, 1002)[1:-1]
    assert np.all(geo.delta_eval(p, r) > 0)
    assert np.all(np.abs(geo.delta_eval(p, np.array(hd.roots))) < 1e-10)

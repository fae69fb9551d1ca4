import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kds_spectra import geometry as geo
from kds_spectra import radial as rad
from kds_spectra.errors import OutOfDomain, ResonantFrequency, SeriesDiverged


def _f(p, omega, m, ell, lam=None):
    if lam is None:
        return rad.FrequencyTriple.from_angular(p, omega, m, ell)
    return rad.FrequencyTriple.make(p, omega, m, ell, lam)


def test_frequency_triple_lambda_tilde(kds):
    f = _f(kds, 0.7, 1, 2, 6.3)
    assert f.lambda_tilde == 6.3 + 0.25 * 0.49


def test_horizon_values(kds):
    hd = geo.horizon_data(kds)
    f = _f(kds, 0.4, 2, 3)
    for r, om in ((hd.r_plus, hd.omega_plus), (hd.r_bar_plus, hd.omega_bar_plus)):
        pe = rad.potential_eval(kds, f, r)
        assert f.omega ** 2 - pe["V"] == pytest.approx((f.omega - om * f.m) ** 2, abs=1e-12)
        assert pe["V0"] == pytest.approx(f.omega ** 2 - (f.omega - om * f.m) ** 2, abs=1e-12)
        assert abs(pe["V_SL"]) < 1e-12


def test_schwarzschild_de_sitter_reduction(sds):
    f = _f(sds, 0.9, 2, 4, 20.0)
    r = np.linspace(2.2, 8.7, 50)
    D = geo.delta_eval(sds, r)
    assert np.allclose(rad.potential_eval(sds, f, r)["V0"], D * 20.0 / r ** 4, rtol=1e-13)


def test_two_forms_agree(kds):
    hd = geo.horizon_data(kds)
    r = np.linspace(hd.r_plus, hd.r_bar_plus, 300)
    for f in (_f(kds, 0.3, 1, 1), _f(kds, -1.1, -2, 3), _f(kds, 0.05, 3, 5)):
        a = rad.potential_eval(kds, f, r)["V0"]
        b = rad.v0_first_form(kds, f, r)
        assert np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))) < 1e-12


def test_derivatives_against_finite_differences(kds):
    rng = np.random.default_rng(3)
    hd = geo.horizon_data(kds)
    f = _f(kds, 0.6, 2, 2)
    r = rng.uniform(hd.r_plus + 0.01, hd.r_bar_plus - 0.01, 500)
    h = 1e-5
    up = rad.potential_eval(kds, f, r + h)
    dn = rad.potential_eval(kds, f, r - h)
    at = rad.potential_eval(kds, f, r)
    for k, dk in (("V0", "dV0_dr"), ("V", "dV_dr")):
        fd = (up[k] - dn[k]) / (2 * h)
        scale = np.maximum(np.abs(at[dk]), np.max(np.abs(at[dk])) * 1e-3)
        assert np.max(np.abs(fd - at[dk]) / scale) < 1e-6


def test_potential_domain(kds):
    f = _f(kds, 0.3, 0, 0, 0.0)
    with pytest.raises(OutOfDomain):
        rad.potential_eval(kds, f, 1.0)


def test_resonant_seed(kds):
    hd = geo.horizon_data(kds)
    f = _f(kds, hd.omega_plus * 2, 2, 2, 6.0)
    with pytest.raises(ResonantFrequency):
        rad.frobenius_solution(kds, f, rad.EVENT)
    g = _f(kds, hd.omega_bar_plus * 1, 1, 1, 2.0)
    with pytest.raises(ResonantFrequency):
        rad.frobenius_solution(kds, g, rad.COSMO)


def test_seed_modulus_near_horizon(kds):
    f = _f(kds, 0.5, 1, 1)
    mods = [abs(rad.frobenius_solution(kds, f, rad.EVENT, match_radius=x).u)
            for x in (1e-4, 1e-6, 1e-8)]
    assert mods[-1] == pytest.approx(1.0, abs=1e-7)
    assert all(abs(a - 1) >= abs(b - 1) for a, b in zip(mods, mods[1:]))


def test_order_doubling(kds):
    f = _f(kds, 0.5, 1, 1)
    for at in (rad.EVENT, rad.COSMO):
        s12 = rad.frobenius_solution(kds, f, at, order=12, match_radius=1e-3)
        s24 = rad.frobenius_solution(kds, f, at, order=24, match_radius=1e-3)
        assert abs(s12.u - s24.u) < 1e-10
        assert abs(s12.up - s24.up) < 1e-10 * max(1.0, abs(s24.up))


def test_match_radius_outside_disc(kds):
    f = _f(kds, 0.5, 1, 1)
    with pytest.raises(SeriesDiverged):
        rad.frobenius_solution(kds, f, rad.EVENT, match_radius=100.0)


def test_homogeneous_flux_conservation(sds):
    f = _f(sds, 0.4, 0, 2)
    seed = rad.frobenius_solution(sds, f, rad.EVENT)
    sol = rad.integrate_radial(sds, f, seed, rad.TO_PLUS, (seed.rstar, 20.0), n_eval=801)
    flux = np.imag(sol.u_prime * np.conj(sol.u))
    assert np.max(np.abs(flux - flux[0])) / abs(flux[0]) < 1e-8
    # outgoing at r_+ with unit leading coefficient: flux = -omega
    assert flux[0] == pytest.approx(-0.4, rel=1e-8)
    assert sol.residual() < 1e-6


def test_rotating_flux_conservation(kds):
    f = _f(kds, 0.8, 1, 2)
    seed = rad.frobenius_solution(kds, f, rad.COSMO)
    sol = rad.integrate_radial(kds, f, seed, rad.TO_MINUS, (seed.rstar, -25.0), n_eval=1001)
    assert sol.grid[0] < sol.grid[-1]
    flux = np.imag(sol.u_prime * np.conj(sol.u))
    assert np.max(np.abs(flux - flux[-1])) / abs(flux[-1]) < 1e-8
    assert sol.residual() < 1e-6


def test_zero_seed_gives_zero(kds):
    f = _f(kds, 0.8, 1, 2)
    s = rad.frobenius_solution(kds, f, rad.EVENT)
    z = rad.Seed(rad.EVENT, s.r, s.rstar, 0j, 0j)
    sol = rad.integrate_radial(kds, f, z, rad.TO_PLUS, (s.rstar, 10.0))
    assert np.all(sol.u == 0) and np.all(sol.u_prime == 0)


def test_reseeding_collinear(kds):
    f = _f(kds, 0.7, -1, 1)
    a = rad.frobenius_solution(kds, f, rad.EVENT, match_radius=1e-4)
    b = rad.frobenius_solution(kds, f, rad.EVENT, match_radius=1e-2)
    t = np.linspace(-5, 5, 41)
    ua = rad.integrate_radial(kds, f, a, rad.TO_PLUS, (a.rstar, 5.0), t_eval=None, n_eval=2)
    sa = rad.integrate_radial(kds, f, a, rad.TO_PLUS, (-5.0, 5.0), t_eval=t)
    sb = rad.integrate_radial(kds, f, b, rad.TO_PLUS, (-5.0, 5.0), t_eval=t)
    c = sb.u[0] / sa.u[0]
    assert np.max(np.abs(sb.u - c * sa.u)) / np.max(np.abs(sb.u)) < 1e-8
    assert ua.u.size == 2


def test_direction_checks(kds):
    f = _f(kds, 0.7, 1, 1)
    s = rad.frobenius_solution(kds, f, rad.EVENT)
    with pytest.raises(ValueError):
        rad.integrate_radial(kds, f, s, rad.TO_MINUS, (s.rstar, -10.0))
    with pytest.raises(ValueError):
        rad.integrate_radial(kds, f, s, rad.TO_PLUS, (s.rstar, s.rstar - 1))


def test_manufactured_solution(kds):
    f = _f(kds, 0.3, 1, 2)
    grid = np.linspace(-10.0, 10.0, 2001)
    exact, H, parts = rad.manufactured_solution(kds, f, grid)
    r0 = geo.tortoise_inverse(kds, grid[0])
    seed = rad.Seed(None, float(r0), float(grid[0]), complex(exact.u[0]), complex(exact.u_prime[0]))
    sol = rad.integrate_radial(kds, f, seed, rad.TO_PLUS, (grid[0], grid[-1]), H=H, t_eval=grid)
    assert np.max(np.abs(sol.u - exact.u)) < 1e-7
    assert exact.residual() < 1e-6


def test_critical_points_sds(sds):
    f = _f(sds, 0.0, 0, 3, 12.0)
    cp = rad.v0_critical_points(sds, f)
    assert cp["structure"] == 1
    assert cp["r_max"] == pytest.approx(3.0, abs=1e-10)


def test_critical_count_random(kds):
    rng = np.random.default_rng(11)
    hd = geo.horizon_data(kds)
    for _ in range(2000):
        m = int(rng.integers(-6, 7))
        ell = abs(m) + int(rng.integers(0, 6))
        lam = ell * (ell + 1) * rng.uniform(0.8, 1.2) + kds.Xi ** 2 * m * m
        f = _f(kds, rng.uniform(-3, 3), m, ell, lam)
        cp = rad.v0_critical_points(kds, f)
        assert cp["n_critical"] <= 2
        assert rad.cubic_critical_count(kds, f) <= 1
        if cp["r_min"] is not None and cp["r_max"] is not None:
            assert hd.r_plus <= cp["r_min"] < cp["r_max"] <= hd.r_bar_plus


@settings(max_examples=200, deadline=None)
@given(omega=st.floats(-4, 4), m=st.integers(-5, 5), extra=st.floats(0, 60))
def test_reported_extrema_are_critical(omega, m, extra):
    p = geo.BlackHoleParams(0.5, 1.0, 10.0)
    hd = geo.horizon_data(p)
    f = _f(p, omega, m, abs(m), p.Xi ** 2 * m * m + extra + abs(m))
    cp = rad.v0_critical_points(p, f)
    interior = {1: ["r_max"], 2: ["r_min", "r_max"], 3: ["r_min"], 4: []}[cp["structure"]]
    grid = np.linspace(hd.r_plus, hd.r_bar_plus, 50)
    scale = np.max(np.abs(rad.potential_eval(p, f, grid)["dV0_dr"]))
    for key in interior:
        d = rad.potential_eval(p, f, cp[key])["dV0_dr"]
        assert abs(d) <= 1e-8 * max(scale, 1e-300)


def test_csv(kds, tmp_path):
    f = _f(kds, 0.7, 1, 1)
    s = rad.frobenius_solution(kds, f, rad.EVENT)
    sol = rad.integrate_radial(kds, f, s, rad.TO_PLUS, (s.rstar, 0.0), n_eval=11)
    path = tmp_path / "u.csv"
    sol.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["rstar", "re_u", "im_u", "re_up", "im_up"]
    assert len(rows) == 12
    assert float(rows[-1][1]) == sol.u[-1].real

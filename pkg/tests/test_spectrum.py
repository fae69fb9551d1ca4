import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kds_spectra import geometry as geo
from kds_spectra import radial as rad
from kds_spectra import spectrum as sp
from kds_spectra.errors import EmptySet, Resonant

RP = sp.RegimeParams()


def _f(p, omega, m, ell, lam=None):
    if lam is None:
        return rad.FrequencyTriple.from_angular(p, omega, m, ell)
    return rad.FrequencyTriple.make(p, omega, m, ell, lam)


def test_sds_wronskian_against_oracle(oracles, sds):
    for case in oracles["sds_wronskian"]:
        ell = case["ell"]
        f = _f(sds, case["omega"], 0, ell, ell * (ell + 1.0))
        res = sp.wronskian(sds, f)
        assert abs(res.W) == pytest.approx(case["abs_W"], rel=1e-7)
        assert res.rstar_variation < 1e-6
        assert not res.resonant


def test_wronskian_nonzero_example(sds):
    res = sp.wronskian(sds, _f(sds, 0.5, 0, 1))
    assert abs(res.W) > 0
    assert res.samples.size == 10


def test_rotation_reversal_symmetry():
    p, q = geo.BlackHoleParams(0.5, 1, 10), geo.BlackHoleParams(-0.5, 1, 10)
    for (w, m, ell) in ((0.7, 1, 2), (0.3, -2, 2), (1.4, 0, 1)):
        a = sp.wronskian(p, _f(p, w, m, ell)).W
        b = sp.wronskian(q, _f(q, -w, m, ell)).W
        # the seeds of the reversed problem are the complex conjugates
        assert abs(b - np.conj(a)) < 1e-8 * abs(a)
        assert abs(abs(b) - abs(a)) < 1e-8 * abs(a)


def test_self_wronskian_vanishes(kds):
    f = _f(kds, 0.7, 1, 1)
    s = rad.frobenius_solution(kds, f, rad.EVENT)
    sol = rad.integrate_radial(kds, f, s, rad.TO_PLUS, (s.rstar, 5.0), n_eval=11)
    W = sol.u_prime * sol.u - sol.u * sol.u_prime
    assert np.max(np.abs(W)) <= 1e-15 * np.max(np.abs(sol.u) * np.abs(sol.u_prime))


def test_resonant_wronskian(kds):
    hd = geo.horizon_data(kds)
    f = _f(kds, hd.omega_plus + 1e-10, 1, 1, 2.0)
    with pytest.raises(Resonant):
        sp.wronskian(kds, f)


def test_superradiance_forms_agree(kds):
    rng = np.random.default_rng(5)
    for _ in range(2000):
        w = rng.uniform(-1, 1)
        m = int(rng.integers(-6, 7))
        assert sp.is_superradiant(kds, w, m) == sp.superradiant_band(kds, w, m)


def test_no_superradiance_without_rotation_or_m(sds, kds):
    for w in np.linspace(-3, 3, 61):
        for m in range(-4, 5):
            assert not sp.is_superradiant(sds, w, m)
            lab = sp.classify_values(sds, RP, w, m, 6.0)
            assert not lab.superradiant
            assert lab.de_sitter == (w == 0)
        assert not sp.is_superradiant(kds, w, 0)


def test_example_labels(kds):
    lab = sp.classify_values(kds, RP, 0.5, 1, 2.0)
    assert lab.flags == (sp.F_FLAT,)
    lab = sp.classify_values(kds, RP, 20.0, 3, 500.0)
    assert sp.F_NATURAL in lab.flags
    lab = sp.classify_values(kds, RP, 30.0, 0, 1.0)
    assert lab.flags == (sp.F_OMEGA_DOMINATED,)
    lab = sp.classify_values(kds, RP, 0.5, 1, 1e5)
    assert lab.flags == (sp.F_SHARP_ENLARGED,)
    assert lab.primary == sp.F_SHARP_ENLARGED


def test_de_sitter_needs_rotation(sds, kds):
    assert sp.F_DS not in sp.classify_values(sds, RP, 0.0, 2, 1e4).flags
    assert sp.F_DS in sp.classify_values(kds, RP, 0.0, 2, 1e4).flags


def _random_triples(rng, n):
    w = rng.choice([-1, 1], n) * 10.0 ** rng.uniform(-3, 3, n)
    w[rng.uniform(size=n) < 0.02] = 0.0
    m = rng.integers(-60, 61, n)
    lt = 10.0 ** rng.uniform(-3, 7, n)
    return w, m, lt


def test_labels_only_allowed_pairs(kds):
    rng = np.random.default_rng(9)
    w, m, lt = _random_triples(rng, 10_000)
    for i in range(w.size):
        flags = sp.classify_values(kds, RP, w[i], int(m[i]), lt[i]).flags
        assert len(flags) <= 2
        if len(flags) == 2:
            assert frozenset(flags) in sp.ALLOWED_PAIRS


def test_labels_cover_without_rotation():
    p = geo.BlackHoleParams(0.0, 1.0, 10.0)
    rng = np.random.default_rng(10)
    w, m, lt = _random_triples(rng, 10_000)
    for i in range(w.size):
        # lambda_tilde is at least Xi^2 m^2 for actual eigenvalues
        li = max(lt[i], p.Xi ** 2 * m[i] ** 2)
        assert sp.classify_values(p, RP, w[i], int(m[i]), li).flags


def test_uncovered_pocket_with_rotation(kds):
    # |omega| < omega_high, lambda_tilde > omega_high^2/lambda_low, yet
    # lambda_tilde <= (omega^2 + a^2 m^2)/lambda_low: no regime claims it.
    # At slow rotation the pocket hugs |omega| = omega_high.
    assert sp.classify_values(kds, RP, -1.0, 50, 2600.0).flags == ()
    p = geo.BlackHoleParams(0.1, 1.0, 10.0)
    assert sp.classify_values(p, RP, 9.25, -46, p.Xi ** 2 * 46 ** 2).flags == ()


@settings(max_examples=300, deadline=None)
@given(w=st.floats(-50, 50), m=st.integers(-30, 30), lt=st.floats(0, 1e6))
def test_label_pairs_property(w, m, lt):
    p = geo.BlackHoleParams(0.5, 1.0, 10.0)
    flags = sp.classify_values(p, RP, w, m, lt).flags
    if len(flags) == 2:
        assert frozenset(flags) in sp.ALLOWED_PAIRS
    assert len(flags) <= 2


def test_regime_params_constraints():
    assert RP.C == pytest.approx(100.0 / 0.05)
    with pytest.raises(ValueError):
        sp.RegimeParams(omega_low=20.0)
    with pytest.raises(ValueError):
        sp.RegimeParams(C=1.0)
    with pytest.raises(ValueError):
        sp.RegimeParams(lambda_low=1.5)
    assert sp.RegimeParams.from_dict(RP.to_dict()) == RP


def test_flux_identity_homogeneous(sds):
    f = _f(sds, 0.4, 0, 1)
    s = rad.frobenius_solution(sds, f, rad.EVENT)
    sol = rad.integrate_radial(sds, f, s, rad.TO_PLUS, (s.rstar, 30.0), n_eval=401)
    flux = np.imag(sol.u_prime * np.conj(sol.u))
    assert np.ptp(flux) < 1e-8 * abs(flux[0])


def test_flux_identity_manufactured(kds):
    f = _f(kds, 0.6, 1, 2)
    grid = np.linspace(-30.0, 30.0, 60001)
    sol, _, _ = rad.manufactured_solution(kds, f, grid, width=1.0)
    assert sp.flux_identity_check(kds, f, sol) < 1e-6


def test_mode_scan_empty_range(sds):
    res = sp.mode_scan(sds, RP, (1.0, 0.5), 0.01, [0], 1)
    assert res.rows == [] and res.candidates == []


def test_mode_scan_small_block(sds):
    res = sp.mode_scan(sds, RP, (0.05, 0.6), 0.05, [-1, 0, 1], 2)
    assert res.candidates == []
    assert len(res.rows) == 12 * (3 + 2 + 2)
    keys = [(d["m"], d["ell"], d["omega"]) for d in res.rows]
    assert keys == sorted(keys)
    assert all(d["spread"] < 1e-6 for d in res.rows)


def test_detector_fires_on_synthetic_zero():
    w = np.linspace(0.1, 2.0, 200)
    # a crossing between grid points stays far above threshold * median
    assert sp.detect_candidates(w, (w - 1.0) * (1 + 0.5j)) == []
    # inject a zero crossing of both components at a grid point
    z = w[95] + 1e-9
    Wz = (w - z) + 1j * (w - z) * 2.0
    Wz[:80] = 1 + 1j
    Wz[120:] = 1 + 1j
    hits = sp.detect_candidates(w, Wz)
    assert hits == [95]


def test_detector_ignores_shallow_minimum():
    w = np.linspace(0.1, 2.0, 200)
    W = 1.0 + 0.5 * (w - 1) ** 2 + 0j
    assert sp.detect_candidates(w, W) == []


def test_quantitative_scan_empty_at_zero_rotation(sds):
    with pytest.raises(EmptySet):
        sp.quantitative_ms_scan(sds, RP)


def test_quantitative_scan_slow_rotation():
    rp = sp.RegimeParams(omega_high=1.0, lambda_low=0.05)
    p = geo.BlackHoleParams(0.5, 1.0, 10.0)
    coarse = sp.quantitative_ms_scan(p, rp, n_omega=6)
    fine = sp.quantitative_ms_scan(p, rp, n_omega=12)
    assert coarse["min_abs_W"] > 0
    assert abs(fine["min_abs_W"] - coarse["min_abs_W"]) / coarse["min_abs_W"] < 0.1
    assert fine["grid_points"] > coarse["grid_points"]


def _trapped_triple(p, omega):
    # choose lambda so that omega^2 sits at the top of the barrier
    hd = geo.horizon_data(p)
    r = np.linspace(hd.r_plus, hd.r_bar_plus, 20001)
    peak = np.max(geo.delta_eval(p, r) / r ** 4)
    return _f(p, omega, 0, 0, omega ** 2 / peak)


def test_r_trap_tends_to_photon_sphere(sds):
    # a barrier-top triple has lambda_tilde ~ 37 omega^2, inside the natural
    # regime only when lambda_low < 1/37
    rp = sp.RegimeParams(lambda_low=0.02)
    errs = []
    for w in (10.0, 30.0, 100.0):
        f = _trapped_triple(sds, w)
        lab = sp.classify_frequency(sds, rp, f)
        assert lab.primary == sp.F_NATURAL
        errs.append(abs(rad.r_trap(sds, f, lab, rp) - 3.0))
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] < 1e-3


def test_r_trap_zero_when_not_trapped(sds):
    f = _f(sds, 20.0, 0, 0, 20.0)
    lab = sp.classify_frequency(sds, RP, f)
    assert rad.r_trap(sds, f, lab) == 0.0

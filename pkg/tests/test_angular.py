import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kds_spectra import angular as ang
from kds_spectra.errors import InvalidMode
from kds_spectra.geometry import BlackHoleParams


def _solve(a, l, m, xi, ell_max, M=1.0, mu2=0.0, **kw):
    p = BlackHoleParams(a, M, l, mu2_kg=mu2)
    return ang.solve_eigenvalues(ang.AngularProblem(p, m, xi, **kw), ell_max)


def test_round_sphere_limit():
    ev = _solve(0.0, 10.0, 2, 0.0, 5)
    assert [e.ell for e in ev] == [2, 3, 4, 5]
    assert ev[-1].lambda_ == pytest.approx(30.0, abs=1e-10)
    ev0 = _solve(0.0, 10.0, 0, 0.0, 0)
    assert abs(ev0[0].lambda_) < 1e-12
    for e in _solve(0.0, 10.0, -3, 0.0, 9):
        assert e.lambda_ == pytest.approx(e.ell * (e.ell + 1), abs=1e-9)


def test_against_collocation_oracle(oracles):
    # the oracle discretizes the same operator by Chebyshev collocation
    for case in oracles["angular"]:
        ev = _solve(case["a"], case["l"], case["m"], case["xi"], abs(case["m"]) + 3,
                    mu2=case["mu2_kg"])
        got = np.array([e.lambda_ for e in ev])
        want = np.array(case["lambda"])
        assert np.max(np.abs(got - want) / np.maximum(1, np.abs(want))) < 1e-8, case


def test_refinement_oracle():
    p = BlackHoleParams(0.3, 1.0, 10.0)
    lo = ang.solve_eigenvalues(ang.AngularProblem(p, 1, 0.2, 32), 1)[0].lambda_
    hi = ang.solve_eigenvalues(ang.AngularProblem(p, 1, 0.2, 128), 1)[0].lambda_
    assert abs(lo - hi) / abs(hi) < 1e-8


def test_symmetric_matrix_and_real_spectrum():
    p = BlackHoleParams(2.0, 1.0, 5.0)
    A = ang.assemble(p, 1, 1.3, 40)
    assert np.max(np.abs(A - A.T)) == 0.0
    vals = np.linalg.eigvals(A)
    assert np.max(np.abs(vals.imag)) < 1e-10


def test_count_and_ordering():
    ev = _solve(0.5, 10.0, -2, 1.5, 12)
    assert len(ev) == 12 - 2 + 1
    lam = [e.lambda_ for e in ev]
    assert all(b > a for a, b in zip(lam, lam[1:]))
    for e in ev:
        assert e.lambda_tilde == e.lambda_ + 1.5 ** 2


def test_invalid_mode():
    with pytest.raises(InvalidMode):
        _solve(0.1, 10.0, 3, 0.0, 2)


def test_small_a_continuity():
    errs = [abs(_solve(10.0 ** -k, 10.0, 1, 0.0, 3)[-1].lambda_ - 12.0) for k in range(1, 6)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-9


def test_m_zero_inequality_slack():
    e = _solve(0.4, 10.0, 0, 0.7, 0)[0]
    rep = ang.check_lambda_inequalities(e, 0.7, 1 + 0.16 / 100, 0.4, 10.0)
    slack, ok = rep["lt_ge_Xi2m2"]
    assert ok and slack == pytest.approx(e.lambda_tilde)


def test_positive_branch_inequalities():
    p = BlackHoleParams(0.5, 1.0, 10.0)
    for e in _solve(0.5, 10.0, 2, 0.8, 6):
        rep = ang.check_lambda_inequalities(e, 0.8, p.Xi, 0.5, 10.0)
        assert set(rep) == {"lt_ge_Xi2m2", "lt_minus_2mxiXi_pos", "lt_minus_2mxi_al_pos",
                            "lambda_plus_Xixi2_ge_Xim2"}
        assert all(ok for _, ok in rep.values())


def test_failing_inequality_is_reported():
    fake = ang.AngularEigenvalue(lambda_=-5.0, lambda_tilde=-4.0, m=2, ell=2)
    rep = ang.check_lambda_inequalities(fake, 1.0, 1.0, 0.1, 10.0)
    assert not rep["lt_ge_Xi2m2"][1]


def test_random_pairs_zero_failures():
    rng = np.random.default_rng(7)
    p = BlackHoleParams(0.5, 1.0, 10.0)
    fails = 0
    for _ in range(100):
        m = int(rng.integers(-5, 6))
        xi = float(rng.uniform(-1, 1))
        for e in ang.solve_eigenvalues(ang.AngularProblem(p, m, xi), abs(m) + 2, check=False):
            rep = ang.check_lambda_inequalities(e, xi, p.Xi, p.a, p.l)
            fails += sum(not ok for _, ok in rep.values())
    assert fails == 0


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.0, 4.0), m=st.integers(-4, 4), xi=st.floats(-3.0, 3.0))
def test_inequalities_property(a, m, xi):
    p = BlackHoleParams(a, 0.01, 10.0)
    for e in ang.solve_eigenvalues(ang.AngularProblem(p, m, xi), abs(m) + 2, check=False):
        rep = ang.check_lambda_inequalities(e, xi, p.Xi, a, 10.0)
        assert all(ok for _, ok in rep.values()), (e, rep)


def test_csv_columns(tmp_path):
    ev = _solve(0.3, 10.0, 1, 0.2, 3)
    path = tmp_path / "ev.csv"
    ang.write_eigenvalue_csv(path, ev, 0.2)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["m", "ell", "xi", "lambda", "lambda_tilde"]
    assert float(rows[1][3]) == ev[0].lambda_
    assert len(rows) == 4

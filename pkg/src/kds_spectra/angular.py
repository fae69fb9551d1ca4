"""Spheroidal eigenvalues of the Kerr-de Sitter angular operator.

In x = cos(theta) and on the e^{i m phi} sector the operator reads

    -d/dx(Delta_theta (1 - x^2) d/dx)
        + Xi^2 m^2 / (Delta_theta (1 - x^2))
        - Xi xi^2 x^2 / Delta_theta
        + 2 xi m Xi (a^2/l^2) x^2 / Delta_theta
        + mu^2 a^2 (1 - x^2)

with Delta_theta = 1 + (a^2/l^2) x^2.  We discretize it by Galerkin projection
onto L2-normalized associated Legendre functions of order |m|, which is exact
at a = 0 and converges exponentially otherwise.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh
from scipy.special import roots_legendre

from .errors import InvalidMode, NotConverged

CONVERGENCE_RTOL = 1e-8
# slack allowed on the eigenvalue inequalities, relative to max(1, |lambda_tilde|)
INEQ_TOL = 1e-9


@dataclass(frozen=True)
class AngularProblem:
    params: object
    m: int
    xi: float
    resolution: int = 64

    def __post_init__(self):
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "xi", float(self.xi))
        object.__setattr__(self, "resolution", int(self.resolution))


@dataclass(frozen=True)
class AngularEigenvalue:
    lambda_: float
    lambda_tilde: float
    m: int
    ell: int

    def as_dict(self):
        return {"m": self.m, "ell": self.ell, "lambda": self.lambda_,
                "lambda_tilde": self.lambda_tilde}


@lru_cache(maxsize=64)
def legendre_basis(m, N):
    """Quadrature nodes/weights and normalized P_n^m, (1-x^2) dP_n^m/dx at them.

    Returns ``(x, w, B, Q)`` with ``B[:, k] = Pbar_{|m|+k}(x)``.
    """
    m = abs(int(m))
    nq = 2 * N + 64
    x, w = roots_legendre(nq)
    s2 = 1.0 - x * x
    B = np.empty((nq, N))
    Q = np.empty((nq, N))
    # Pbar_m^m = c_m (1-x^2)^{m/2}
    c = math.sqrt(0.5)
    for k in range(1, m + 1):
        c *= math.sqrt((2 * k + 1) / (2 * k))
    p_prev = np.zeros_like(x)
    p_cur = c * s2 ** (0.5 * m)
    for k in range(N):
        n = m + k
        if k == 0:
            pn = p_cur
        elif k == 1:
            pn = x * math.sqrt(2 * m + 3) * p_cur
        else:
            an = math.sqrt((4.0 * n * n - 1.0) / (n * n - m * m))
            an1 = math.sqrt((4.0 * (n - 1) ** 2 - 1.0) / ((n - 1) ** 2 - m * m))
            pn = an * (x * p_cur - p_prev / an1)
        if k >= 1:
            p_prev, p_cur = p_cur, pn
        B[:, k] = pn
        # (1-x^2) P_n' = -n x P_n + sqrt((2n+1)/(2n-1) (n^2-m^2)) P_{n-1}
        if n == m:
            Q[:, k] = -n * x * pn
        else:
            Q[:, k] = -n * x * pn + math.sqrt((2 * n + 1) / (2 * n - 1) * (n * n - m * m)) * p_prev
    for arr in (x, w, B, Q):
        arr.setflags(write=False)
    return x, w, B, Q


def assemble(params, m, xi, N):
    """Symmetric Galerkin matrix of the angular operator (N x N)."""
    a2 = params.a ** 2
    al = params.alpha
    Xi = params.Xi
    x, w, B, Q = legendre_basis(abs(m), N)
    x2 = x * x
    s2 = 1.0 - x2
    dth = 1.0 + al * x2
    stiff = w * dth / s2
    pot = (Xi * Xi * m * m / (dth * s2)
           - Xi * xi * xi * x2 / dth
           + 2.0 * xi * m * Xi * al * x2 / dth
           + params.mu2_kg * a2 * s2)
    A = (Q.T * stiff) @ Q + (B.T * (w * pot)) @ B
    return 0.5 * (A + A.T)


def _eigs(params, m, xi, N, count):
    A = assemble(params, m, xi, N)
    vals = eigh(A, eigvals_only=True, subset_by_index=[0, count - 1])
    return vals


def _size(prob, ell_max):
    return max(prob.resolution, 4 * (ell_max + abs(prob.m)), 8)


def solve_eigenvalues(prob, ell_max, check=True):
    """Eigenvalues for ell = |m| .. ell_max, ascending (ell by ordering).

    The N -> 2N refinement must move each value by less than 1e-8 relative,
    otherwise :class:`NotConverged` is raised.
    """
    m = prob.m
    ell_max = int(ell_max)
    if ell_max < abs(m):
        raise InvalidMode(f"ell_max={ell_max} < |m|={abs(m)}")
    vals = _cached_eigs(prob.params, m, prob.xi, ell_max, _size(prob, ell_max))
    a = prob.params.a
    out = []
    for k, lam in enumerate(vals):
        ev = AngularEigenvalue(float(lam), float(lam + prob.xi ** 2), m, abs(m) + k)
        out.append(ev)
    if check:
        Xi = prob.params.Xi
        for ev in out:
            rep = check_lambda_inequalities(ev, prob.xi, Xi, a, prob.params.l)
            bad = [k for k, (_, ok) in rep.items() if not ok]
            assert not bad, f"eigenvalue inequality failure {bad} for {ev}"
    return out


@lru_cache(maxsize=4096)
def _cached_eigs(params, m, xi, ell_max, N):
    count = ell_max - abs(m) + 1
    v1 = _eigs(params, m, xi, N, count)
    v2 = _eigs(params, m, xi, 2 * N, count)
    err = np.abs(v2 - v1) / np.maximum(1.0, np.abs(v2))
    if np.any(err >= CONVERGENCE_RTOL):
        raise NotConverged(
            f"angular eigenvalues not converged at N={N}: max rel change {err.max():.3e}")
    v2.setflags(write=False)
    return v2


def eigenvalue(params, m, ell, xi, resolution=64):
    """Convenience: the single eigenvalue lambda_{m ell}(xi)."""
    return solve_eigenvalues(AngularProblem(params, m, xi, resolution), ell)[-1]


def check_lambda_inequalities(ev, xi, Xi, a, l):
    """Slack of each lower bound satisfied by lambda_tilde.

    Returns ``{name: (slack, passed)}``; a bound passes when its slack is at
    least ``-1e-9 * max(1, |lambda_tilde|)``.
    """
    m = ev.m
    lt = ev.lambda_tilde
    al = a * a / (l * l)
    mx = m * xi
    checks = {}
    if mx >= 0:
        checks["lt_ge_Xi2m2"] = lt - Xi * Xi * m * m
        checks["lt_minus_2mxiXi_pos"] = lt - 2.0 * mx * Xi
        checks["lt_minus_2mxi_al_pos"] = lt - 2.0 * mx * al
    else:
        checks["lt_minus_2mxiXi_ge_Xi2m2"] = lt - 2.0 * mx * Xi - Xi * Xi * m * m
        checks["lt_minus_2mxi_al_ge_Xi2m2"] = lt - 2.0 * mx * al - Xi * Xi * m * m
    checks["lambda_plus_Xixi2_ge_Xim2"] = ev.lambda_ + Xi * xi * xi - Xi * m * m
    tol = INEQ_TOL * max(1.0, abs(lt))
    return {k: (float(s), bool(s >= -tol)) for k, s in checks.items()}


def write_eigenvalue_csv(path, rows, xi):
    """Write ``m,ell,xi,lambda,lambda_tilde`` rows (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["m", "ell", "xi", "lambda", "lambda_tilde"])
        for ev in rows:
            wr.writerow([ev.m, ev.ell, f"{xi:.17g}", f"{ev.lambda_:.17g}", f"{ev.lambda_tilde:.17g}"])

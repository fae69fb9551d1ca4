"""Carter's radial equation at fixed frequency.

The radial function u(r*) solves

    u'' + (omega^2 - V) u = H,      V = V0 + V_SL + V_mu,

with ' = d/dr*.  All potentials are rational in r with powers of
(r^2 + a^2) in the denominator; :class:`Rational` keeps them in that form, so
that every r-derivative is exact.

Outgoing solutions are seeded by a Frobenius series at a horizon and
continued numerically in r*.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from . import geometry as geo
from .errors import (OutOfDomain, ResonantFrequency, SeriesDiverged,
                     StepSizeUnderflow, StructureViolation)

EVENT = "event_horizon"
COSMO = "cosmological_horizon"
TO_PLUS = "to_plus_infinity"
TO_MINUS = "to_minus_infinity"

RESONANCE_TOL = 1e-10
DEFAULT_ORDER = 16
MATCH_RATIO = 1e-14
SERIES_TOL = 1e-12


# ---------------------------------------------------------------------------
# frequencies

@dataclass(frozen=True)
class FrequencyTriple:
    """(omega, m, ell) together with lambda and lambda_tilde = lambda + a^2 omega^2."""

    omega: float
    m: int
    ell: int
    lambda_: float
    lambda_tilde: float

    @classmethod
    def make(cls, p, omega, m, ell, lambda_):
        omega = float(omega)
        return cls(omega, int(m), int(ell), float(lambda_), float(lambda_) + p.a ** 2 * omega ** 2)

    @classmethod
    def from_angular(cls, p, omega, m, ell, resolution=64):
        from .angular import eigenvalue
        ev = eigenvalue(p, m, ell, p.a * omega, resolution)
        return cls.make(p, omega, m, ell, ev.lambda_)


# ---------------------------------------------------------------------------
# rational functions  sum_n P_n(r) / (r^2 + a^2)^n

class Rational:
    """Finite sum of polynomial / (r^2+a^2)^n terms with exact differentiation."""

    def __init__(self, a2, terms=None):
        self.a2 = float(a2)
        self.terms = {}
        for n, P in (terms or {}).items():
            P = P if isinstance(P, Polynomial) else Polynomial(P)
            self.terms[n] = self.terms.get(n, Polynomial([0.0])) + P

    def _new(self, terms):
        return Rational(self.a2, terms)

    def __add__(self, other):
        if not isinstance(other, Rational):
            other = self._new({0: [float(other)]})
        t = dict(self.terms)
        for n, P in other.terms.items():
            t[n] = t.get(n, Polynomial([0.0])) + P
        return self._new(t)

    __radd__ = __add__

    def __neg__(self):
        return self._new({n: -P for n, P in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Rational):
            return self._new({n: P * float(other) for n, P in self.terms.items()})
        t = {}
        for n, P in self.terms.items():
            for k, Q in other.terms.items():
                t[n + k] = t.get(n + k, Polynomial([0.0])) + P * Q
        return self._new(t)

    __rmul__ = __mul__

    def deriv(self, k=1):
        out = self
        r = Polynomial([0.0, 1.0])
        for _ in range(k):
            t = {}
            for n, P in out.terms.items():
                t[n] = t.get(n, Polynomial([0.0])) + P.deriv()
                if n:
                    t[n + 1] = t.get(n + 1, Polynomial([0.0])) - 2.0 * n * r * P
            out = self._new(t)
        return out

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        R2 = r * r + self.a2
        out = np.zeros_like(r)
        for n, P in self.terms.items():
            out = out + P(r) / R2 ** n
        return out


def _delta_poly(p):
    return Polynomial(geo.delta_coeffs(p)[::-1])


def _potential_pieces(p):
    """Frequency-independent building blocks as Rationals."""
    a2 = p.a ** 2
    D = _delta_poly(p)
    one = Rational(a2, {0: [1.0]})
    Dr = Rational(a2, {0: D})
    S = Polynomial([a2, -4.0 * p.M, 3.0 * (1.0 - p.alpha), 0.0, -5.0 / p.l ** 2])
    r = Polynomial([0.0, 1.0])
    VSL = Rational(a2, {4: -3.0 * r * r * D * D, 3: D * S})
    Vmu = Rational(a2, {1: p.mu2_kg * D})
    return one, Dr, VSL, Vmu


def v0_rational(p, omega, m, lambda_tilde):
    """V0 = 2 omega k/R2 + (c Delta - k^2)/R2^2 with k = a m Xi, c = lt - 2 a m omega Xi."""
    a2 = p.a ** 2
    k = p.a * m * p.Xi
    c = lambda_tilde - 2.0 * p.a * m * omega * p.Xi
    D = _delta_poly(p)
    return Rational(a2, {1: [2.0 * omega * k], 2: c * D - k * k})


def v_sl_rational(p):
    return _potential_pieces(p)[2]


def v_mu_rational(p):
    return _potential_pieces(p)[3]


def tortoise_factor(p):
    """T = dr/dr* = Delta / (r^2 + a^2)."""
    return Rational(p.a ** 2, {1: _delta_poly(p)})


def _domain(p, r):
    hd = geo.horizon_data(p)
    slack = 1e-12 * hd.r_bar_plus
    r = np.asarray(r, dtype=float)
    if np.any(r < hd.r_plus - slack) or np.any(r > hd.r_bar_plus + slack):
        raise OutOfDomain(f"r outside [r_+, rbar_+] = [{hd.r_plus}, {hd.r_bar_plus}]")


def potential_eval(p, f, r):
    """Potentials and their closed-form r-derivatives at r (array or scalar)."""
    _domain(p, r)
    V0 = v0_rational(p, f.omega, f.m, f.lambda_tilde)
    _, _, VSL, Vmu = _potential_pieces(p)
    V = V0 + VSL + Vmu
    dV0 = V0.deriv()
    dV = V.deriv()
    return {
        "V0": V0(r), "V_SL": VSL(r), "V_mu": Vmu(r), "V": V(r),
        "dV0_dr": dV0(r), "dV_dr": dV(r),
        "d2V0_dr2": dV0.deriv()(r), "d2V_dr2": dV.deriv()(r),
    }


def v0_first_form(p, f, r):
    """[Delta (lambda + omega^2 a^2) - Xi^2 a^2 m^2 - 2 m omega a Xi (Delta - R2)] / R2^2."""
    r = np.asarray(r, dtype=float)
    a2 = p.a ** 2
    R2 = r * r + a2
    D = geo.delta_eval(p, r)
    Xi = p.Xi
    num = (D * (f.lambda_ + f.omega ** 2 * a2) - Xi ** 2 * a2 * f.m ** 2
           - 2.0 * f.m * f.omega * p.a * Xi * (D - R2))
    return num / R2 ** 2


def v0_scalar(p, omega, m, lambda_tilde, r):
    """V0 for real (not necessarily integer) m; used by the geodesic correspondence."""
    return v0_rational(p, omega, m, lambda_tilde)(r)


# ---------------------------------------------------------------------------
# critical points of V0

def v0_cubic_coeffs(p, f):
    """Coefficients (highest first) of the cubic (r^2+a^2)^3 dV0/dr."""
    a, M, l = p.a, p.M, p.l
    Xi = p.Xi
    lt = f.lambda_tilde
    w, m = f.omega, f.m
    l2 = l * l
    c3 = 4 * a ** 3 * m * Xi * w - 2 * a * a * lt - 2 * lt * l2
    c2 = 6 * lt * l2 * M - 12 * a * l2 * m * M * Xi * w
    c1 = 4 * a ** 5 * m * Xi * w - 2 * a ** 4 * lt - 2 * a * a * lt * l2 + 4 * a * a * l2 * m * m * Xi * Xi
    c0 = 4 * a ** 3 * l2 * m * M * Xi * w - 2 * a * a * lt * l2 * M
    return np.array([c3, c2, c1, c0]) / l2


def _interior_roots(coeffs, lo, hi):
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    if c.size <= 1:
        return []
    z = np.roots(c)
    scale = max(1.0, hi)
    out = []
    for zz in z:
        if abs(zz.imag) <= 1e-9 * scale and lo < zz.real < hi:
            out.append(float(zz.real))
    return sorted(out)


def v0_critical_points(p, f):
    """Locate the critical points of V0 on [r_+, rbar_+] and classify the shape.

    Structures: 1 unique interior maximum; 2 interior minimum then maximum;
    3 interior minimum with the maximum at rbar_+; 4 monotone.
    """
    hd = geo.horizon_data(p)
    rp, rbp = hd.r_plus, hd.r_bar_plus
    c = v0_cubic_coeffs(p, f)
    cand = _interior_roots(c, rp, rbp)
    # keep sign changes only (double roots are not extrema)
    pts = [rp] + cand + [rbp]
    signs = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        signs.append(np.sign(np.polyval(c, 0.5 * (lo + hi))))
    crit = []
    kinds = []
    for i, r0 in enumerate(cand):
        if signs[i] != signs[i + 1] and signs[i] != 0 and signs[i + 1] != 0:
            crit.append(r0)
            kinds.append("max" if signs[i] > 0 else "min")
    if len(crit) > 2:
        raise StructureViolation(f"{len(crit)} critical points of V0 for {f}")
    V0 = v0_rational(p, f.omega, f.m, f.lambda_tilde)
    if kinds == ["max"]:
        return {"r_min": None, "r_max": crit[0], "structure": 1, "n_critical": 1}
    if kinds == ["min", "max"]:
        return {"r_min": crit[0], "r_max": crit[1], "structure": 2, "n_critical": 2}
    if kinds == ["min"]:
        return {"r_min": crit[0], "r_max": rbp, "structure": 3, "n_critical": 1}
    if not kinds:
        r_max = rbp if float(V0(rbp)) >= float(V0(rp)) else rp
        return {"r_min": None, "r_max": r_max, "structure": 4, "n_critical": 0}
    raise StructureViolation(f"critical points of V0 in order {kinds} for {f}")


def cubic_critical_count(p, f):
    """Interior critical points of (r^2+a^2)^3 dV0/dr (roots of its derivative)."""
    hd = geo.horizon_data(p)
    c = v0_cubic_coeffs(p, f)
    return len(_interior_roots(np.polyder(c), hd.r_plus, hd.r_bar_plus))


def potential_max(p, f, which="V", n=2001):
    """(r, value) of the maximum of V (or V0) over [r_+, rbar_+]."""
    hd = geo.horizon_data(p)
    rp, rbp = hd.r_plus, hd.r_bar_plus
    V0 = v0_rational(p, f.omega, f.m, f.lambda_tilde)
    if which == "V":
        _, _, VSL, Vmu = _potential_pieces(p)
        V = V0 + VSL + Vmu
    else:
        V = V0
    r = np.linspace(rp, rbp, n)
    vals = V(r)
    i = int(np.argmax(vals))
    if i in (0, n - 1):
        return float(r[i]), float(vals[i])
    res = minimize_scalar(lambda x: -float(V(x)), bounds=(r[i - 1], r[i + 1]),
                          method="bounded", options={"xatol": 1e-12 * rbp})
    if -res.fun >= vals[i]:
        return float(res.x), float(-res.fun)
    return float(r[i]), float(vals[i])


def r_trap(p, f, regime, rp_params=None):
    """Trapping radius: argmax V for the trapped subcases, 0 otherwise."""
    from .spectrum import trapped_subcase
    sub = trapped_subcase(p, rp_params, f, regime)
    if sub.get("trapped"):
        return potential_max(p, f, "V")[0]
    return 0.0


# ---------------------------------------------------------------------------
# Frobenius seeds

@dataclass
class Seed:
    at: str
    r: float
    rstar: float
    u: complex
    up: complex
    order: int = DEFAULT_ORDER
    truncation: float = 0.0


def _horizon_setup(p, at):
    hd = geo.horizon_data(p)
    if at == EVENT:
        return hd, hd.r_plus, 1.0, hd.kappa_plus, hd.omega_plus
    if at == COSMO:
        return hd, hd.r_bar_plus, -1.0, hd.kappa_bar_plus, hd.omega_bar_plus
    raise ValueError(f"unknown horizon {at!r}")


def _series_coeffs(p, f, at, order):
    hd, rh, s, kap, omh = _horizon_setup(p, at)
    if abs(f.omega - omh * f.m) < RESONANCE_TOL:
        raise ResonantFrequency(f"omega={f.omega} resonant with omega_h*m at {at}")
    a2 = p.a ** 2
    X = Polynomial([rh, s])                     # r as a polynomial in x
    Dx = _delta_poly(p)(X)
    Dc = Dx.coef.copy()
    Dc[0] = 0.0                                  # Delta(0) = 0 up to round-off
    D = Polynomial(Dc[1:]) if Dc.size > 1 else Polynomial([0.0])
    Dfull = Polynomial(Dc)
    R2 = X * X + a2
    k = p.a * f.m * p.Xi
    c = f.lambda_tilde - 2.0 * p.a * f.m * f.omega * p.Xi
    K = f.omega * R2 - k
    Q = K * K - Dfull * c - p.mu2_kg * Dfull * R2
    p2 = D * D
    p1 = D * Dfull.deriv()
    D0 = D.coef[0]
    eta = -1j * (f.omega - omh * f.m) / (2.0 * kap)

    def coef(P, j):
        return P.coef[j] if j < P.coef.size else 0.0

    deg = max(p2.degree(), p1.degree(), Q.degree())
    cs = np.zeros(order + 1, dtype=complex)
    cs[0] = 1.0 / math.sqrt(rh * rh + a2)        # |u| -> 1 on the horizon
    for N in range(1, order + 1):
        acc = 0.0j
        for j in range(1, min(N, deg) + 1):
            sv = N - j + eta
            Fk = coef(p2, j) * sv * (sv - 1.0) + coef(p1, j) * sv + coef(Q, j)
            acc += cs[N - j] * Fk
        cs[N] = -acc / (D0 * D0 * (N * N + 2.0 * N * eta))
    others = [abs(ri - rh) for ri in hd.roots if ri != rh]
    rho = min(others)
    return cs, eta, D, s, rh, rho


def frobenius_solution(p, f, at, order=DEFAULT_ORDER, match_radius=None):
    """Outgoing Frobenius seed (u, du/dr*) at distance ``match_radius`` from a horizon.

    When ``match_radius`` is None the point is where the last series term drops
    to 1e-14 of the first, capped at half the distance to the next root.
    """
    cs, eta, D, s, rh, rho = _series_coeffs(p, f, at, order)
    N = order
    if match_radius is None:
        cn = abs(cs[N]) / abs(cs[0])
        x = 0.5 * rho if cn == 0 else min(0.5 * rho, (MATCH_RATIO / cn) ** (1.0 / N))
        user = False
    else:
        x = float(match_radius)
        user = True
        if not (0 < x < rho):
            raise SeriesDiverged(f"match_radius {x} outside the convergence disc (radius {rho})")
    return _seed_at(p, f, at, cs, eta, D, s, rh, x, order, user)


def _seed_at(p, f, at, cs, eta, D, s, rh, x, order, strict):
    n = np.arange(cs.size)
    terms = cs * x ** n
    ssum = terms.sum()
    trunc = abs(terms[-1]) / abs(ssum) if ssum != 0 else math.inf
    if strict and trunc > SERIES_TOL:
        raise SeriesDiverged(f"last-term ratio {trunc:.3e} exceeds {SERIES_TOL:g}")
    xe = np.exp(eta * math.log(x))
    psi = xe * ssum
    # Delta * d psi/dr = s * D(x) * x^eta * sum c_n (n + eta) x^n
    D_psi_r = s * D(x) * xe * np.sum(cs * (n + eta) * x ** n)
    r = rh + s * x
    a2 = p.a ** 2
    R2 = r * r + a2
    sq = math.sqrt(R2)
    u = sq * psi
    Dr = float(geo.delta_eval(p, r))
    up = (Dr * r * psi / sq + sq * D_psi_r) / R2
    return Seed(at, r, float(geo.tortoise(p, r)), complex(u), complex(up), order, float(trunc))


def seed_batch(p, freqs, at, order=DEFAULT_ORDER, x=None):
    """Seeds for several frequencies at one common radius (the most cautious one)."""
    data = [_series_coeffs(p, f, at, order) for f in freqs]
    if x is None:
        xs = []
        for cs, eta, D, s, rh, rho in data:
            cn = abs(cs[order]) / abs(cs[0])
            xs.append(0.5 * rho if cn == 0 else min(0.5 * rho, (MATCH_RATIO / cn) ** (1.0 / order)))
        x = min(xs)
    return [_seed_at(p, f, at, cs, eta, D, s, rh, x, order, False)
            for f, (cs, eta, D, s, rh, rho) in zip(freqs, data)]


# ---------------------------------------------------------------------------
# integration in r*

@dataclass
class RadialSolution:
    grid: np.ndarray
    r: np.ndarray
    u: np.ndarray
    u_prime: np.ndarray
    boundary: str
    frobenius_order: int
    H: np.ndarray | None = None
    params: object = None
    freq: object = None
    meta: dict = field(default_factory=dict)

    def residual(self):
        """Max relative FD residual of u'' + (omega^2 - V) u - H on interior points."""
        t = self.grid
        if t.size < 5:
            return 0.0
        h = np.diff(t)
        if not np.allclose(h, h[0], rtol=1e-9, atol=0):
            raise ValueError("residual check needs a uniform r* grid")
        h = h[0]
        u = self.u
        # fourth-order stencil, so the check is not dominated by its own truncation
        upp = (-u[4:] + 16 * u[3:-1] - 30 * u[2:-2] + 16 * u[1:-3] - u[:-4]) / (12 * h * h)
        f = self.freq
        V = potential_eval(self.params, f, self.r[2:-2])["V"]
        Hs = self.H[2:-2] if self.H is not None else 0.0
        res = upp + (f.omega ** 2 - V) * u[2:-2] - Hs
        scale = np.max(np.abs((f.omega ** 2 - V) * u[2:-2])) + np.max(np.abs(upp)) + 1e-300
        return float(np.max(np.abs(res)) / scale)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["rstar", "re_u", "im_u", "re_up", "im_up"])
            for t, u, up in zip(self.grid, self.u, self.u_prime):
                wr.writerow([f"{t:.17g}", f"{u.real:.17g}", f"{u.imag:.17g}",
                             f"{up.real:.17g}", f"{up.imag:.17g}"])


def _batch_rhs_factory(p, omegas, ms, lts, H=None):
    a2 = p.a ** 2
    Xi = p.Xi
    dc = geo.delta_coeffs(p)
    omegas = np.asarray(omegas, dtype=float)
    k = p.a * np.asarray(ms, dtype=float) * Xi
    c = np.asarray(lts, dtype=float) - 2.0 * p.a * np.asarray(ms, dtype=float) * omegas * Xi
    w2 = omegas ** 2
    two_wk = 2.0 * omegas * k
    k2 = k * k
    M, l, mu2 = p.M, p.l, p.mu2_kg
    S4, S2, S1 = -5.0 / l ** 2, 3.0 * (1.0 - p.alpha), -4.0 * M
    n = omegas.size

    def rhs(t, y):
        r = y[0]
        D = (((dc[0] * r + dc[1]) * r + dc[2]) * r + dc[3]) * r + dc[4]
        R2 = r * r + a2
        iR = 1.0 / R2
        S = ((S4 * r * r + S2) * r + S1) * r + a2
        Vfree = -3.0 * r * r * D * D * iR ** 4 + D * S * iR ** 3 + mu2 * D * iR
        V = two_wk * iR + (c * D - k2) * iR * iR + Vfree
        q = V - w2
        ur, ui = y[1:1 + n], y[1 + n:1 + 2 * n]
        vr, vi = y[1 + 2 * n:1 + 3 * n], y[1 + 3 * n:]
        ar = q * ur
        ai = q * ui
        if H is not None:
            h = H(t)
            ar = ar + np.real(h)
            ai = ai + np.imag(h)
        return np.concatenate(([D * iR], vr, vi, ar, ai))

    return rhs


def integrate_batch(p, freqs, seeds, t_end, t_eval=None, H=None, rtol=1e-11, atol=1e-13,
                    dense=False):
    """Integrate several frequencies from a common seed radius to r* = t_end.

    All seeds must sit at the same radius.  Returns the scipy solution object.
    """
    r0 = seeds[0].r
    t0 = seeds[0].rstar
    if any(abs(s.r - r0) > 1e-14 * max(1.0, r0) for s in seeds):
        raise ValueError("batch seeds must share one radius")
    rhs = _batch_rhs_factory(p, [f.omega for f in freqs], [f.m for f in freqs],
                             [f.lambda_tilde for f in freqs], H)
    u0 = np.array([s.u for s in seeds])
    up0 = np.array([s.up for s in seeds])
    scale = max(1.0, float(np.max(np.abs(np.concatenate([u0, up0])))))
    y0 = np.concatenate(([r0], u0.real, u0.imag, up0.real, up0.imag))
    atol_v = np.full(y0.size, atol * scale)
    atol_v[0] = 1e-14 * r0
    sol = solve_ivp(rhs, (t0, t_end), y0, method="DOP853", rtol=rtol, atol=atol_v,
                    t_eval=t_eval, dense_output=dense)
    if sol.status != 0:
        raise StepSizeUnderflow(f"radial integration failed: {sol.message}")
    return sol


def _unpack(y, n):
    u = y[1:1 + n] + 1j * y[1 + n:1 + 2 * n]
    up = y[1 + 2 * n:1 + 3 * n] + 1j * y[1 + 3 * n:]
    return u, up


def integrate_radial(p, f, seed, direction, rstar_span, H=None, t_eval=None, n_eval=401,
                     rtol=1e-11, atol=1e-13):
    """Integrate from a seed across rstar_span = (start, end) and sample on a grid.

    The seed must come from the horizon on the side where integration starts:
    an event-horizon seed goes ``to_plus_infinity`` and vice versa.  ``H`` is
    an optional callable of r* giving the inhomogeneity.
    """
    hd = geo.horizon_data(p)
    if direction == TO_PLUS and seed.at != EVENT and seed.at is not None:
        raise ValueError("to_plus_infinity needs an event-horizon seed")
    if direction == TO_MINUS and seed.at != COSMO and seed.at is not None:
        raise ValueError("to_minus_infinity needs a cosmological-horizon seed")
    t0, t1 = float(rstar_span[0]), float(rstar_span[1])
    if direction == TO_PLUS and t1 <= t0 or direction == TO_MINUS and t1 >= t0:
        raise ValueError("rstar_span does not point in the requested direction")
    if abs(t0 - seed.rstar) > 1e-9 * max(1.0, abs(t0)):
        # first carry the seed to the start of the span
        pre = integrate_batch(p, [f], [seed], t0, H=H, rtol=rtol, atol=atol)
        y = pre.y[:, -1]
        u, up = _unpack(y, 1)
        seed = Seed(seed.at, float(y[0]), t0, complex(u[0]), complex(up[0]), seed.order)
    if not (hd.r_plus < seed.r < hd.r_bar_plus):
        raise OutOfDomain("seed radius outside the static region")
    if t_eval is None:
        t_eval = np.linspace(t0, t1, n_eval)
    sol = integrate_batch(p, [f], [seed], t1, t_eval=t_eval, H=H, rtol=rtol, atol=atol)
    u, up = _unpack(sol.y, 1)
    grid = sol.t
    order = 1 if direction == TO_PLUS else -1
    Hs = np.array([H(t) for t in grid], dtype=complex) if H is not None else None
    out = RadialSolution(grid[::order].copy(), sol.y[0][::order].copy(), u[0][::order].copy(),
                         up[0][::order].copy(), seed.at, seed.order,
                         None if Hs is None else Hs[::order].copy(), p, f)
    return out


# ---------------------------------------------------------------------------
# manufactured solutions

def manufactured_solution(p, f, grid, width=2.0, B=0.7 + 0.2j):
    """Smooth u0 that is outgoing at both ends, with H := u0'' + (omega^2 - V) u0.

    u0 = (1 - S) e^{-i k r*} + S B e^{i kbar r*},  S = (1 + tanh(r*/w)) / 2.
    Returns ``(RadialSolution, H_callable)``.
    """
    hd = geo.horizon_data(p)
    kp = f.omega - hd.omega_plus * f.m
    kb = f.omega - hd.omega_bar_plus * f.m
    w = float(width)

    def parts(t):
        t = np.asarray(t, dtype=float)
        th = np.tanh(t / w)
        S = 0.5 * (1.0 + th)
        S1 = 0.5 * (1.0 - th * th) / w
        S2 = -2.0 * th * S1 / w
        e1 = np.exp(-1j * kp * t)
        e2 = B * np.exp(1j * kb * t)
        u = (1 - S) * e1 + S * e2
        up = -S1 * e1 + (1 - S) * (-1j * kp) * e1 + S1 * e2 + S * (1j * kb) * e2
        upp = (-S2 * e1 - 2 * S1 * (-1j * kp) * e1 + (1 - S) * (-kp * kp) * e1
               + S2 * e2 + 2 * S1 * (1j * kb) * e2 + S * (-kb * kb) * e2)
        return u, up, upp

    grid = np.asarray(grid, dtype=float)
    r = geo.tortoise_inverse(p, grid)
    V = potential_eval(p, f, r)["V"]
    u, up, upp = parts(grid)
    Hs = upp + (f.omega ** 2 - V) * u

    _, _, VSL, Vmu = _potential_pieces(p)
    Vrat = v0_rational(p, f.omega, f.m, f.lambda_tilde) + VSL + Vmu

    def H(t):
        rr = geo.tortoise_inverse(p, float(t))
        uu, _, uupp = parts(t)
        return complex(uupp + (f.omega ** 2 - float(Vrat(rr))) * uu)

    sol = RadialSolution(grid, np.asarray(r, dtype=float), u, up, "manufactured", 0, Hs, p, f,
                         meta={"k_plus": kp, "k_bar": kb, "B": B, "width": w})
    return sol, H, parts

"""Frequency-localized multiplier currents and the regime multipliers.

All primes are d/dr*.  For a solution of u'' + (omega^2 - V) u = H,

    Q^h = h Re(u' conj u) - h'/2 |u|^2
    Q^y = y (|u'|^2 + (omega^2 - V)|u|^2)
    Q^f = Q^{h=f'} + Q^{y=f}
    Q^dt = omega Im(u' conj u)

and similarly for the Hawking-Reall fields with omega replaced by
omega - omega_h m.  Multipliers are "profiles": functions returning their
value and first three r*-derivatives on a grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, fsolve
from scipy.special import erf

from . import geometry as geo
from . import radial as rad
from . import spectrum as sp
from .errors import GridMismatch, UnknownRegime

KINDS = ("Qh", "Qy", "Qf", "Qt", "QK", "QKbar")


# ---------------------------------------------------------------------------
# profiles

class Profile:
    """A multiplier; ``derivs(p, r, rs)`` returns rows g, g', g'', g''' in r*."""

    def derivs(self, p, r, rs):
        g = self.r_derivs(np.asarray(r, dtype=float))
        return _to_rstar(p, r, g)

    def r_derivs(self, r):
        raise NotImplementedError

    def __add__(self, other):
        return Sum(self, other)


def _to_rstar(p, r, g):
    T = rad.tortoise_factor(p)
    Tr = T.deriv()
    Trr = Tr.deriv()
    t, t1, t2 = T(r), Tr(r), Trr(r)
    g0, g1, g2, g3 = g
    return np.array([
        g0,
        t * g1,
        t * t1 * g1 + t * t * g2,
        t * (t1 * t1 + t * t2) * g1 + 3 * t * t * t1 * g2 + t ** 3 * g3,
    ])


class Zero(Profile):
    def derivs(self, p, r, rs):
        return np.zeros((4, np.size(r)))


class Sum(Profile):
    def __init__(self, *parts):
        self.parts = parts

    def derivs(self, p, r, rs):
        return sum(q.derivs(p, r, rs) for q in self.parts)


class Product(Profile):
    """Leibniz product of two profiles (third order)."""

    def __init__(self, A, B):
        self.A, self.B = A, B

    def derivs(self, p, r, rs):
        a = self.A.derivs(p, r, rs)
        b = self.B.derivs(p, r, rs)
        return np.array([
            a[0] * b[0],
            a[1] * b[0] + a[0] * b[1],
            a[2] * b[0] + 2 * a[1] * b[1] + a[0] * b[2],
            a[3] * b[0] + 3 * a[2] * b[1] + 3 * a[1] * b[2] + a[0] * b[3],
        ])


class RationalProfile(Profile):
    """Profile given by a :class:`radial.Rational` in r."""

    def __init__(self, R):
        self.R = R

    def r_derivs(self, r):
        d1 = self.R.deriv()
        d2 = d1.deriv()
        return np.array([self.R(r), d1(r), d2(r), d2.deriv()(r)])


class Exponential(Profile):
    """sign * exp(C (r - r_ref))."""

    def __init__(self, C, r_ref, sign=1.0):
        self.C, self.r_ref, self.sign = float(C), float(r_ref), float(sign)

    def r_derivs(self, r):
        e = self.sign * np.exp(self.C * (r - self.r_ref))
        return np.array([e, self.C * e, self.C ** 2 * e, self.C ** 3 * e])


class Linear(Profile):
    def __init__(self, slope, r0):
        self.slope, self.r0 = float(slope), float(r0)

    def r_derivs(self, r):
        z = np.zeros_like(r)
        return np.array([self.slope * (r - self.r0), z + self.slope, z, z])


class PiecewiseExp(Profile):
    """1 - exp(C (r3 - r)) on r <= r3 and 0 beyond (piecewise C^0, y-only)."""

    def __init__(self, C, r3):
        self.C, self.r3 = float(C), float(r3)

    def r_derivs(self, r):
        on = r <= self.r3
        e = np.where(on, np.exp(self.C * np.where(on, self.r3 - r, 0.0)), 0.0)
        y = np.where(on, 1.0 - e, 0.0)
        y1 = np.where(on, self.C * e, 0.0)
        y2 = np.where(on, -self.C ** 2 * e, 0.0)
        y3 = np.where(on, self.C ** 3 * e, 0.0)
        return np.array([y, y1, y2, y3])


class Arctan(Profile):
    """amp * (2/pi) * arctan((r - r0)/w)."""

    def __init__(self, r0, w=1.0, amp=1.0):
        self.r0, self.w, self.amp = float(r0), float(w), float(amp)

    def r_derivs(self, r):
        z = (r - self.r0) / self.w
        c = 2.0 * self.amp / math.pi
        q = 1.0 / (1.0 + z * z)
        return np.array([
            c * np.arctan(z),
            c * q / self.w,
            c * (-2 * z * q * q) / self.w ** 2,
            c * (6 * z * z - 2) * q ** 3 / self.w ** 3,
        ])


def smooth_step(t):
    """C-infinity step 0 -> 1 on [0, 1] with its first three derivatives."""
    t = np.asarray(t, dtype=float)
    out = np.zeros((4,) + t.shape)
    out[0] = np.where(t >= 1.0, 1.0, 0.0)
    mid = (t > 0.0) & (t < 1.0)
    if np.any(mid):
        tm = t[mid]

        def e(s):
            with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
                a = np.exp(-1.0 / s)
                a1 = a / s ** 2
                a2 = a * (1.0 / s ** 4 - 2.0 / s ** 3)
                a3 = a * (1.0 / s ** 6 - 6.0 / s ** 5 + 6.0 / s ** 4)
            return [np.nan_to_num(v) for v in (a, a1, a2, a3)]

        a, a1, a2, a3 = e(tm)
        b, b1, b2, b3 = e(1.0 - tm)
        b1, b3 = -b1, -b3
        N = (a, a1, a2, a3)
        D = (a + b, a1 + b1, a2 + b2, a3 + b3)
        S = N[0] / D[0]
        S1 = (N[1] - S * D[1]) / D[0]
        S2 = (N[2] - 2 * S1 * D[1] - S * D[2]) / D[0]
        S3 = (N[3] - 3 * S2 * D[1] - 3 * S1 * D[2] - S * D[3]) / D[0]
        out[0][mid], out[1][mid], out[2][mid], out[3][mid] = S, S1, S2, S3
    return out


class Bump(Profile):
    """Smooth plateau: 1 on [p_lo, p_hi], 0 outside (s_lo, s_hi).

    ``coord`` selects whether the edges are radii ("r") or tortoise values
    ("rstar").
    """

    def __init__(self, p_lo, p_hi, s_lo, s_hi, coord="r", scale=1.0):
        if not (s_lo < p_lo <= p_hi < s_hi):
            raise ValueError("need s_lo < p_lo <= p_hi < s_hi")
        self.p_lo, self.p_hi, self.s_lo, self.s_hi = map(float, (p_lo, p_hi, s_lo, s_hi))
        self.coord = coord
        self.scale = float(scale)

    def _eval(self, x):
        L = (x - self.s_lo) / (self.p_lo - self.s_lo)
        R = (self.s_hi - x) / (self.s_hi - self.p_hi)
        A = smooth_step(L)
        B = smooth_step(R)
        kl = 1.0 / (self.p_lo - self.s_lo)
        kr = -1.0 / (self.s_hi - self.p_hi)
        left = x < 0.5 * (self.p_lo + self.p_hi)
        g = np.where(left, A[0], B[0])
        g1 = np.where(left, A[1] * kl, B[1] * kr)
        g2 = np.where(left, A[2] * kl ** 2, B[2] * kr ** 2)
        g3 = np.where(left, A[3] * kl ** 3, B[3] * kr ** 3)
        return self.scale * np.array([g, g1, g2, g3])

    def derivs(self, p, r, rs):
        if self.coord == "rstar":
            return self._eval(np.asarray(rs, dtype=float))
        return _to_rstar(p, r, self._eval(np.asarray(r, dtype=float)))


class TrapF(Profile):
    """The trapping multiplier f seeded at r_t, built in r.

    f_r = eps(x) + A exp(b1 x - g x^2 / 2), x = r - r_t, where eps steps
    smoothly from eps_L to eps_R.  A, b1, g fix the r*-jet at r_t to
    f = 0, f' = 1, f'' = 0, f''' = -2 Delta(r_t); the two floor levels are
    then tuned so that f(r_+) = -1 and f(rbar_+) = +1.  Because f_r > 0 is
    bounded below, f' = (Delta/R2) f_r is comparable to Delta up to both
    horizons.
    """

    def __init__(self, p, r_t, width=None):
        hd = geo.horizon_data(p)
        self.p = p
        self.r_t = rt = float(r_t)
        if not hd.r_plus < rt < hd.r_bar_plus:
            raise ValueError("trap seed outside (r_+, rbar_+)")
        T = rad.tortoise_factor(p)
        T0, T1, T2 = float(T(rt)), float(T.deriv()(rt)), float(T.deriv(2)(rt))
        D0 = float(geo.delta_eval(p, rt))
        g0 = 1.0 / T0
        g1 = -T1 * g0 / T0
        g2 = (-2.0 * D0 - T0 * (T1 * T1 + T0 * T2) * g0 - 3 * T0 * T0 * T1 * g1) / T0 ** 3
        self._jet = (g0, g1, g2)
        self.w = float(width or (hd.r_bar_plus - hd.r_plus) / 4.0)
        self.xL, self.xR = rt - hd.r_plus, hd.r_bar_plus - rt
        self.normalized = False
        epsL = epsR = 1e-3 * g0

        def resid(e):
            if not self._fit(*e):
                return [1e3, 1e3]
            return [self._f(self.xR) - 1.0, self._f(-self.xL) + 1.0]

        with np.errstate(all="ignore"):
            sol, _, ier, _ = fsolve(resid, [0.05, 0.05], full_output=True, xtol=1e-13)
        if min(sol) > 0 and self._fit(*sol) and max(map(abs, resid(sol))) < 1e-10:
            epsL, epsR = sol
            self.normalized = True
        elif not self._fit(epsL, epsR):
            raise ValueError("no positive trapping profile at this seed")
        self._fit(epsL, epsR)
        self.eps = (float(epsL), float(epsR))

    def _fit(self, eL, eR):
        g0, g1, g2 = self._jet
        e0, e1 = 0.5 * (eL + eR), (eR - eL) / (2 * self.w)
        A = g0 - e0
        if not A > 0:
            return False
        b1 = (g1 - e1) / A
        gam = b1 * b1 - g2 / A
        if not gam > 0:
            return False
        self._par = (eL, eR, A, b1, gam)
        return True

    def _f(self, x):
        eL, eR, A, b1, gam = self._par
        w = self.w
        x0 = b1 / gam
        k = math.sqrt(gam / 2.0)
        pre = A * math.exp(b1 * b1 / (2 * gam)) * math.sqrt(math.pi / (2 * gam))
        lc = np.logaddexp(x / w, -x / w) - math.log(2.0)
        floor = eL * x + (eR - eL) * 0.5 * (x + w * lc)
        return floor + pre * (erf(k * (x - x0)) - erf(-k * x0))

    def r_derivs(self, r):
        eL, eR, A, b1, gam = self._par
        w = self.w
        x = np.asarray(r, dtype=float) - self.r_t
        th = np.tanh(x / w)
        sech2 = 1.0 - th * th
        e = eL + (eR - eL) * 0.5 * (1 + th)
        e1 = (eR - eL) * sech2 / (2 * w)
        e2 = -(eR - eL) * th * sech2 / w ** 2
        G = A * np.exp(b1 * x - 0.5 * gam * x * x)
        q = b1 - gam * x
        return np.array([self._f(x), e + G, e1 + G * q, e2 + G * (q * q - gam)])


class ExpIntegralY(Profile):
    """y = -exp(-C * int_{-inf}^{r*} chi) with chi a bump in r* (y, y' only)."""

    def __init__(self, C, chi, t_lo, t_hi, n=4001):
        self.C = float(C)
        self.chi = chi
        t = np.linspace(t_lo, t_hi, n)
        c = chi._eval(t)[0]
        self._Phi = CubicSpline(t, cumulative_trapezoid(c, t, initial=0.0))
        self._t = (t_lo, t_hi)
        self._total = float(self._Phi(t_hi))

    def derivs(self, p, r, rs):
        rs = np.asarray(rs, dtype=float)
        lo, hi = self._t
        Phi = np.where(rs <= lo, 0.0, np.where(rs >= hi, self._total, self._Phi(np.clip(rs, lo, hi))))
        c = self.chi._eval(rs)
        y = -np.exp(-self.C * Phi)
        y1 = -self.C * c[0] * y
        y2 = -self.C * (c[1] * y + c[0] * y1)
        y3 = -self.C * (c[2] * y + 2 * c[1] * y1 + c[0] * y2)
        return np.array([y, y1, y2, y3])


# ---------------------------------------------------------------------------
# multiplier sets

@dataclass
class MultiplierSet:
    f: Profile
    h: Profile
    y: Profile
    regime: object = None
    r_trap: float = 0.0
    recipe: str | None = None
    B: float = math.nan
    info: dict = field(default_factory=dict)


def _grid(p, n=2000, frac=1e-6):
    hd = geo.horizon_data(p)
    span = hd.r_bar_plus - hd.r_plus
    t_lo = geo.tortoise(p, hd.r_plus + frac * span)
    t_hi = geo.tortoise(p, hd.r_bar_plus - frac * span)
    rs = np.linspace(t_lo, t_hi, n)
    r = geo.tortoise_inverse(p, rs)
    return r, rs


def _middle_rstar(p, frac=0.02):
    """r*-half-width of the region where Delta is at least ``frac`` of its max."""
    hd = geo.horizon_data(p)
    rD = geo.special_radii(p)["r_delta_max"]
    Dm = float(geo.delta_eval(p, rD))
    g = lambda r: float(geo.delta_eval(p, r)) - frac * Dm
    r1 = brentq(g, hd.r_plus, rD)
    r2 = brentq(g, rD, hd.r_bar_plus)
    return geo.tortoise(p, r1), geo.tortoise(p, r2)


def _clip_seed(p, r):
    hd = geo.horizon_data(p)
    span = hd.r_bar_plus - hd.r_plus
    return min(max(r, hd.r_plus + 0.02 * span), hd.r_bar_plus - 0.02 * span)


def _r3(p, f, r_right, which="V"):
    """Largest r <= r_right with omega^2 - V >= (omega^2 - V(r_+))/2 on [r_+, r]."""
    hd = geo.horizon_data(p)
    r = np.linspace(hd.r_plus, max(r_right, hd.r_plus + 1e-9), 2001)
    V = rad.potential_eval(p, f, r)["V" if which == "V" else "V0"]
    g = f.omega ** 2 - V
    thr = 0.5 * g[0]
    bad = np.nonzero(g < thr)[0]
    i = bad[0] - 1 if bad.size else r.size - 1
    return float(r[max(i, 1)])


def build_multipliers(p, rp, f, regime, recipe=None):
    """Instantiate the multiplier recipe attached to the triple's regime."""
    if rp is None:
        rp = sp.RegimeParams()
    if isinstance(regime, sp.RegimeLabel) and not regime.flags:
        raise UnknownRegime("triple carries no regime flag")
    sub = sp.trapped_subcase(p, rp, f, regime)
    rec = recipe or sub.get("recipe")
    if rec is None:
        raise UnknownRegime(f"no recipe for regime {regime!r}")
    hd = geo.horizon_data(p)
    span = hd.r_bar_plus - hd.r_plus
    delta = rp.bump_delta or span / 40.0
    C = rp.C_large
    rV = sub["r_Vmax"]
    Z = Zero()
    info = dict(sub)
    r_trap = sub["r_Vmax"] if sub["trapped"] else 0.0

    def bump_at(rc, plateau, support):
        lo = max(rc - support, hd.r_plus + 1e-6 * span)
        hi = min(rc + support, hd.r_bar_plus - 1e-6 * span)
        plo = max(rc - plateau, lo + 0.25 * (support - plateau))
        phi = min(rc + plateau, hi - 0.25 * (support - plateau))
        return Bump(plo, phi, lo, hi)

    if rec in ("dS_trap", "natural_1"):
        fF, hF, yF = TrapF(p, _clip_seed(p, rV)), Z, Z
    elif rec in ("dS_barrier", "natural_3", "sharp"):
        rc = _clip_seed(p, rV)
        fF = TrapF(p, rc)
        hF = bump_at(rc, delta / 2, delta)
        yF = Z
    elif rec in ("dS_exp_y", "natural_4a"):
        fF, hF, yF = Z, Z, Exponential(C, hd.r_bar_plus)
    elif rec == "natural_2":
        r3 = _r3(p, f, rV)
        info["r3"] = r3
        fF, hF, yF = TrapF(p, _clip_seed(p, rV)), Z, PiecewiseExp(C, r3)
    elif rec == "natural_4b":
        rV0 = _clip_seed(p, sub["r_V0max"])
        r3 = _r3(p, f, rV0, "V0")
        info["r3"] = r3
        fF = TrapF(p, rV0)
        hF = bump_at(_clip_seed(p, rV), delta, 2 * delta)
        yF = PiecewiseExp(C, r3)
    elif rec == "lessflat":
        fF = Arctan(rV)
        r = np.linspace(hd.r_plus, hd.r_bar_plus, 2001)
        g = rad.potential_eval(p, f, r)["V"] - f.omega ** 2
        top = g.max()
        inner = r[g >= 0.5 * top]
        outer = r[g >= 0.25 * top]
        if inner.size < 2 or top <= 0:
            hF = Z
        else:
            s_lo, s_hi = outer[0], outer[-1]
            p_lo, p_hi = inner[0], inner[-1]
            if not s_lo < p_lo:
                s_lo = max(hd.r_plus + 1e-9, p_lo - delta)
            if not p_hi < s_hi:
                s_hi = min(hd.r_bar_plus - 1e-9, p_hi + delta)
            hF = Bump(p_lo, p_hi, s_lo, s_hi)
        yF = Z
    elif rec == "omega_dominated":
        rf = geo.special_radii(p)["r_delta_frac"]
        fF, hF, yF = Z, Z, Linear(1.0 / span, rf)
    elif rec == "flat_stationary":
        a2 = p.a ** 2
        Rc2 = ((hd.r_plus + hd.r_bar_plus) / 2) ** 2 + a2
        yF = RationalProfile(rad.Rational(a2, {0: [a2 * a2 - Rc2 ** 2, 0.0, 2 * a2, 0.0, 1.0]}))
        t1, t2 = _middle_rstar(p)
        info["middle"] = (t1, t2)
        chi = Bump(t1, t2, t1 - 1.0, t2 + 1.0, coord="rstar")
        hF = Product(RationalProfile(rad.Rational(a2, {1: [C * f.lambda_tilde]})), chi)
        fF = Z
    elif rec in ("flat_small_omega", "flat_bounded"):
        t1, t2 = _middle_rstar(p)
        info["middle"] = (t1, t2)
        chi = Bump(t1, t2, t1 - 1.0, t2 + 1.0, coord="rstar")
        # rate normalized so that the exponent stays O(1) across the support
        yF = ExpIntegralY(1.0 / (t2 - t1 + 2.0), chi, t1 - 2.0, t2 + 2.0)
        fF, hF = Z, Z
    else:
        raise UnknownRegime(f"unknown recipe {rec!r}")
    ms = MultiplierSet(fF, hF, yF, regime, float(r_trap), rec, info=info)
    r, rs = _grid(p, 400)
    d = [q.derivs(p, r, rs) for q in (fF, hF, yF)]
    ms.B = float(np.max(np.abs(d[0]).sum(axis=0) + np.abs(d[1][:3]).sum(axis=0)
                        + np.abs(d[2][:2]).sum(axis=0)))
    return ms


# ---------------------------------------------------------------------------
# currents on solutions

def _potential_rstar(p, f, r):
    pe = rad.potential_eval(p, f, r)
    T = rad.tortoise_factor(p)(r)
    return pe["V"], T * pe["dV_dr"], pe


def _fields(mult, sol):
    p = sol.params
    f = sol.freq
    r, rs = sol.r, sol.grid
    if r is None or np.size(r) != np.size(rs):
        raise GridMismatch("solution lacks r samples matching its r* grid")
    return (mult.f.derivs(p, r, rs), mult.h.derivs(p, r, rs), mult.y.derivs(p, r, rs))


def current_eval(kind, mult, sol, f=None):
    """Pointwise values of the current ``kind`` on the solution grid."""
    if kind not in KINDS:
        raise ValueError(f"unknown current {kind!r}")
    f = f or sol.freq
    p = sol.params
    u, up = sol.u, sol.u_prime
    V, _, _ = _potential_rstar(p, f, sol.r)
    F, Hh, Y = _fields(mult, sol)
    w2 = f.omega ** 2
    Re = np.real(up * np.conj(u))
    Im = np.imag(up * np.conj(u))
    au2 = np.abs(u) ** 2
    aup2 = np.abs(up) ** 2
    hd = geo.horizon_data(p)
    if kind == "Qh":
        return Hh[0] * Re - 0.5 * Hh[1] * au2
    if kind == "Qy":
        return Y[0] * (aup2 + (w2 - V) * au2)
    if kind == "Qf":
        return F[0] * (aup2 + (w2 - V) * au2) + F[1] * Re - 0.5 * F[2] * au2
    if kind == "Qt":
        return f.omega * Im
    if kind == "QK":
        return (f.omega - hd.omega_plus * f.m) * Im
    return (f.omega - hd.omega_bar_plus * f.m) * Im


def current_derivative(kind, mult, sol, f=None):
    """Closed-form r*-derivative of the current."""
    f = f or sol.freq
    p = sol.params
    u, up = sol.u, sol.u_prime
    H = sol.H if sol.H is not None else np.zeros_like(u)
    V, dV, _ = _potential_rstar(p, f, sol.r)
    F, Hh, Y = _fields(mult, sol)
    w2 = f.omega ** 2
    au2 = np.abs(u) ** 2
    aup2 = np.abs(up) ** 2
    hd = geo.horizon_data(p)
    ImHu = np.imag(H * np.conj(u))
    if kind == "Qh":
        h = Hh
        return h[0] * aup2 + (h[0] * (V - w2) - 0.5 * h[2]) * au2 + h[0] * np.real(u * np.conj(H))
    if kind == "Qy":
        y = Y
        return (y[1] * aup2 + (w2 * y[1] - (y[1] * V + y[0] * dV)) * au2
                + 2 * y[0] * np.real(up * np.conj(H)))
    if kind == "Qf":
        g = F
        return (2 * g[1] * aup2 + (-g[0] * dV - 0.5 * g[3]) * au2
                + np.real(2 * g[0] * np.conj(H) * up + g[1] * np.conj(H) * u))
    if kind == "Qt":
        return f.omega * ImHu
    if kind == "QK":
        return (f.omega - hd.omega_plus * f.m) * ImHu
    if kind == "QKbar":
        return (f.omega - hd.omega_bar_plus * f.m) * ImHu
    raise ValueError(f"unknown current {kind!r}")


def identity_check(kind, mult, sol, f=None):
    """Max relative gap between a central difference of Q and its closed-form derivative."""
    Q = current_eval(kind, mult, sol, f)
    dQ = current_derivative(kind, mult, sol, f)
    t = sol.grid
    h = np.diff(t)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise GridMismatch("identity_check needs a uniform r* grid")
    fd = (Q[2:] - Q[:-2]) / (2 * h[0])
    ref = dQ[1:-1]
    scale = max(float(np.max(np.abs(ref))), 1e-300)
    return float(np.max(np.abs(fd - ref)) / scale)


# ---------------------------------------------------------------------------
# coercivity certificates

def _conditions(p, rp, f, mult, r, rs):
    """(name, lhs, weight) arrays for the recipe's pointwise inequalities."""
    V, dV, pe = _potential_rstar(p, f, r)
    D = geo.delta_eval(p, r)
    F = mult.f.derivs(p, r, rs)
    Hh = mult.h.derivs(p, r, rs)
    Y = mult.y.derivs(p, r, rs)
    w2 = f.omega ** 2
    lt = f.lambda_tilde
    rec = mult.recipe
    rt = mult.r_trap if mult.r_trap else mult.info.get("r_Vmax", 0.0)
    one = np.ones_like(r)
    bulk_f = -F[0] * dV - 0.5 * F[3]
    bulk_h = Hh[0] * (V - w2) - 0.5 * Hh[2]
    bulk_y = Y[1] * (w2 - V) - Y[0] * dV
    out = []
    if rec == "dS_trap":
        out.append(("f_bulk", bulk_f, D * ((r - rt) ** 2 * lt + 1)))
        out.append(("f_prime", 2 * F[1], D))
    elif rec == "natural_1":
        out.append(("f_bulk", bulk_f, D * ((r - rt) ** 2 * (lt + w2) + 1)))
        out.append(("f_prime", 2 * F[1], D))
    elif rec == "natural_2":
        out.append(("bulk", bulk_f + bulk_y, D * ((r - rt) ** 2 * (lt + w2) + 1)))
        out.append(("derivative_terms", Y[1] + 2 * F[1], D))
    elif rec in ("dS_barrier", "natural_3"):
        out.append(("bulk", bulk_h + bulk_f, D * (lt + 1)))
        out.append(("derivative_terms", 2 * F[1] + Hh[0], D))
    elif rec == "sharp":
        out.append(("bulk", bulk_h + bulk_f, D * (lt + 1)))
        out.append(("derivative_terms", 2 * F[1] + Hh[0], D))
        out.append(("lt_minus_2awmXi", (lt - 2 * p.a * f.omega * f.m * p.Xi) * one, lt * one))
        out.append(("V_at_max_minus_w2", (mult.info["Vmax"] - w2) * one, lt * one))
    elif rec in ("dS_exp_y", "natural_4a"):
        out.append(("y_bulk", bulk_y, D * lt))
        out.append(("y_prime", Y[1], D))
    elif rec == "natural_4b":
        out.append(("bulk", bulk_h + bulk_y + bulk_f, D * lt))
        out.append(("derivative_terms", Y[1] + 2 * F[1] + Hh[0], D))
    elif rec == "lessflat":
        out.append(("bulk", bulk_f + bulk_h, D * (lt + w2 + 1)))
        out.append(("derivative_terms", 2 * F[1] + Hh[0], D))
    elif rec == "omega_dominated":
        out.append(("y_prime", Y[1], D))
        out.append(("y_bulk", bulk_y, D * w2))
    elif rec == "flat_stationary":
        R2 = r * r + p.a ** 2
        Vt = pe["V0"] + pe["V_mu"]
        T = D / R2
        dVt = T * (rad.v0_rational(p, f.omega, f.m, lt) + rad.v_mu_rational(p)).deriv()(r)
        # (r Delta h / R2^2)' = T d/dr(r Delta / R2^2) h + (r Delta / R2^2) h'
        g = rad.Rational(p.a ** 2, {2: np.polynomial.Polynomial([0.0, 1.0]) * rad._delta_poly(p)})
        gv, gr = g(r), g.deriv()(r)
        twist = T * gr * Hh[0] + gv * Hh[1]
        lhs = Y[1] * w2 - (Y[1] * Vt + Y[0] * dVt) - 0.5 * Hh[2] + twist + Hh[0] * (Vt - w2)
        t1, t2 = mult.info["middle"]
        mid = (rs >= t1) & (rs <= t2)
        out.append(("psi_bulk_middle", np.where(mid, lhs, np.inf), np.where(mid, D * (lt + 1), 1.0)))
        out.append(("psi_derivative_terms", Y[1] - 4 * r * D * Y[0] / R2 ** 2 + Hh[0], D))
    elif rec in ("flat_small_omega", "flat_bounded"):
        R2 = r * r + p.a ** 2
        out.append(("frequency_gap", (f.omega - p.a * f.m * p.Xi / R2) ** 2,
                    max(f.m * f.m, f.omega ** 2) * one))
        t1, t2 = mult.info["middle"]
        mid = (rs >= t1) & (rs <= t2)
        out.append(("y_prime_middle", np.where(mid, Y[1], np.inf), np.where(mid, D, 1.0)))
    else:
        raise UnknownRegime(f"unknown recipe {rec!r}")
    return out


def certify_coercivity(p, rp, f, mult, n=2000):
    """Sample the recipe's sign conditions on an r* grid.

    ``certified_b`` is the largest b with lhs >= b * weight everywhere (it is
    negative when some condition fails); ``min_slack`` is the smallest
    lhs / max(weight), which has the same sign.
    """
    r, rs = _grid(p, n)
    conds = _conditions(p, rp, f, mult, r, rs)
    details = []
    for name, lhs, wt in conds:
        finite = np.isfinite(lhs)
        ratio = lhs[finite] / wt[finite]
        b = float(np.min(ratio))
        slack = float(np.min(lhs[finite]) / np.max(wt[finite]))
        details.append({"name": name, "certified_b": b, "min_slack": slack})
    b = min(d["certified_b"] for d in details)
    s = min(d["min_slack"] for d in details)
    regime = mult.regime.primary if isinstance(mult.regime, sp.RegimeLabel) else mult.regime
    return {"regime": regime, "r_trap": float(mult.r_trap), "min_slack": s,
            "certified_b": b, "grid_points": int(n), "recipe": mult.recipe,
            "conditions": details}


def report_json(rep):
    """The five public fields of a certification report."""
    return {k: rep[k] for k in ("regime", "r_trap", "min_slack", "certified_b", "grid_points")}

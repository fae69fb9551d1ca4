"""Background geometry of Kerr-de Sitter.

Everything here is a pure function of a :class:`BlackHoleParams`.  The horizon
polynomial is

    Delta(r) = (r^2 + a^2)(1 - r^2/l^2) - 2 M r
             = -r^4/l^2 + (1 - a^2/l^2) r^2 - 2 M r + a^2

and the static region is the interval (r_+, rbar_+) between its two largest
roots.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import NotSubextremal, OutOfDomain

SUBEXTREMAL = "subextremal"
NOT_SUBEXTREMAL = "not_subextremal"
BORDERLINE = "borderline"

# relative size below which |P| counts as zero
P_TOL = 1e-12


@dataclass(frozen=True)
class BlackHoleParams:
    """Kerr-de Sitter parameters (a, M, l) plus the Klein-Gordon mass squared."""

    a: float
    M: float
    l: float
    mu2_kg: float = 0.0

    def __post_init__(self):
        for name in ("a", "M", "l", "mu2_kg"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise OutOfDomain(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if self.M <= 0:
            raise OutOfDomain(f"M must be positive, got {self.M}")
        if self.l <= 0:
            raise OutOfDomain(f"l must be positive, got {self.l}")
        if self.mu2_kg < 0:
            raise OutOfDomain(f"mu2_kg must be non-negative, got {self.mu2_kg}")

    @classmethod
    def from_dict(cls, d):
        """Build from a config mapping with keys ``a, M, l`` and optional ``mu2_kg``."""
        missing = [k for k in ("a", "M", "l") if k not in d]
        if missing:
            raise KeyError(f"missing parameter(s): {', '.join(missing)}")
        return cls(a=d["a"], M=d["M"], l=d["l"], mu2_kg=d.get("mu2_kg", 0.0))

    def to_dict(self):
        return {"a": self.a, "M": self.M, "l": self.l, "mu2_kg": self.mu2_kg}

    def scaled_to_unit_l(self):
        """Same geometry in units where l = 1 (mu2 carries length^-2)."""
        s = self.l
        return BlackHoleParams(self.a / s, self.M / s, 1.0, self.mu2_kg * s * s)

    @property
    def Xi(self):
        return 1.0 + self.a ** 2 / self.l ** 2

    @property
    def alpha(self):
        """a^2 / l^2."""
        return self.a ** 2 / self.l ** 2


@dataclass(frozen=True)
class HorizonData:
    """Roots of Delta and the quantities attached to the two horizons."""

    roots: tuple
    kappa_plus: float
    kappa_bar_plus: float
    omega_plus: float
    omega_bar_plus: float
    Xi: float
    tortoise_coeffs: tuple
    tortoise_const: float = field(default=0.0)

    @property
    def r_minus_bar(self):
        return self.roots[0]

    @property
    def r_minus(self):
        return self.roots[1]

    @property
    def r_plus(self):
        return self.roots[2]

    @property
    def r_bar_plus(self):
        return self.roots[3]


# ---------------------------------------------------------------------------
# Delta polynomial

def delta_coeffs(p):
    """Coefficients of Delta, highest power first."""
    return np.array([-1.0 / p.l ** 2, 0.0, 1.0 - p.alpha, -2.0 * p.M, p.a ** 2])


def delta_eval(p, r):
    """Delta(r), evaluated by Horner's rule."""
    return np.polyval(delta_coeffs(p), r)


def delta_deriv(p, r, k=1):
    """k-th r-derivative of Delta (k = 0..4; higher ones vanish)."""
    if k < 0:
        raise ValueError("derivative order must be non-negative")
    c = delta_coeffs(p)
    if k > 4:
        return np.zeros_like(np.asarray(r, dtype=float))
    if k:
        c = np.polyder(c, k)
    return np.polyval(c, r)


# ---------------------------------------------------------------------------
# subextremality

def _p_terms(x, y):
    # monomials of P(x, y); x = a^2/l^2, y = M^2/l^2
    u = 1.0 - x
    return (
        -27.0 * y * y,
        36.0 * x * u * y,
        u ** 3 * y,
        -16.0 * x ** 3,
        -8.0 * x * x * u * u,
        -x * u ** 4,
    )


def discriminant_P(x, y):
    """The two-variable discriminant P(a^2/l^2, M^2/l^2).

    Positive exactly when Delta has four distinct real roots (given |a| < l).
    """
    return math.fsum(_p_terms(x, y))


def classify_subextremal(a, M, l):
    """Return ``"subextremal"``, ``"not_subextremal"`` or ``"borderline"``.

    Borderline means |P| is below ``1e-12 * max(1, largest monomial)``, where
    the sign of P can no longer be trusted.
    """
    if M <= 0 or l <= 0:
        raise OutOfDomain("M and l must be positive")
    x = (a / l) ** 2
    y = (M / l) ** 2
    terms = _p_terms(x, y)
    P = math.fsum(terms)
    tol = P_TOL * max(1.0, max(abs(t) for t in terms))
    if abs(P) <= tol:
        return BORDERLINE
    if P > 0 and abs(a) < l:
        return SUBEXTREMAL
    return NOT_SUBEXTREMAL


def count_real_roots(a, M, l, imag_tol=1e-7):
    """Number of distinct real roots of Delta from companion-matrix eigenvalues.

    Independent of :func:`discriminant_P`; used as a cross-check.
    """
    c = np.array([-1.0 / l ** 2, 0.0, 1.0 - a * a / l ** 2, -2.0 * M, a * a])
    z = np.roots(c)
    scale = max(1.0, float(np.max(np.abs(z))))
    real = np.sort(z[np.abs(z.imag) <= imag_tol * scale].real)
    if real.size == 0:
        return 0
    n = 1
    for i in range(1, real.size):
        if real[i] - real[i - 1] > imag_tol * scale:
            n += 1
    return n


def is_subextremal(p):
    return classify_subextremal(p.a, p.M, p.l) == SUBEXTREMAL


def _polish(c, dc, r):
    # one Newton step, kept only if it does not make things worse
    d = np.polyval(dc, r)
    if d == 0:
        return r
    r1 = r - np.polyval(c, r) / d
    return r1 if abs(np.polyval(c, r1)) <= abs(np.polyval(c, r)) else r


@lru_cache(maxsize=256)
def horizon_data(p):
    """Roots, surface gravities and angular velocities; cached per parameter set."""
    verdict = classify_subextremal(p.a, p.M, p.l)
    if verdict != SUBEXTREMAL:
        raise NotSubextremal(f"parameters {p.to_dict()} are {verdict}")
    c = delta_coeffs(p)
    dc = np.polyder(c)
    z = np.roots(c)
    roots = sorted(float(_polish(c, dc, zz.real)) for zz in z)
    a2 = p.a ** 2
    Xi = p.Xi
    d_at = [float(np.polyval(dc, r)) for r in roots]
    rm_, r_m, rp, rbp = roots
    kp = abs(d_at[2]) / (2.0 * (rp * rp + a2))
    kbp = abs(d_at[3]) / (2.0 * (rbp * rbp + a2))
    coeffs = tuple((r * r + a2) / d for r, d in zip(roots, d_at))
    hd = HorizonData(
        roots=tuple(roots),
        kappa_plus=kp,
        kappa_bar_plus=kbp,
        omega_plus=p.a * Xi / (rp * rp + a2),
        omega_bar_plus=p.a * Xi / (rbp * rbp + a2),
        Xi=Xi,
        tortoise_coeffs=coeffs,
        tortoise_const=0.0,
    )
    # fix the additive constant so that r*(r_frac) = 0
    rf = _r_frac(p, hd)
    const = -_tortoise_raw(hd, rf)
    return HorizonData(**{**hd.__dict__, "tortoise_const": float(const)})


# ---------------------------------------------------------------------------
# special radii

def _frac_cubic(p, r):
    # d/dr [Delta/(r^2+a^2)^2] = -2 s(r) / (r^2+a^2)^3
    a2 = p.a ** 2
    return p.Xi * r ** 3 - 3.0 * p.M * r ** 2 + a2 * p.Xi * r + p.M * a2


def _r_frac(p, hd):
    return brentq(lambda r: _frac_cubic(p, r), hd.r_plus, hd.r_bar_plus,
                  xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


@lru_cache(maxsize=256)
def special_radii(p):
    """Maximizers of Delta/(r^2+a^2)^2 and of Delta on (r_+, rbar_+)."""
    hd = horizon_data(p)
    rf = _r_frac(p, hd)
    rmax = brentq(lambda r: delta_deriv(p, r, 1), hd.r_plus, hd.r_bar_plus,
                  xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return {"r_delta_frac": float(rf), "r_delta_max": float(rmax)}


def max_delta_over_a2(p):
    """max of Delta/a^2 over the static region (inf when a = 0)."""
    if p.a == 0:
        return math.inf
    rmax = special_radii(p)["r_delta_max"]
    return float(delta_eval(p, rmax)) / p.a ** 2


# ---------------------------------------------------------------------------
# tortoise coordinate

def _tortoise_raw(hd, r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    for ri, Ai in zip(hd.roots, hd.tortoise_coeffs):
        if Ai != 0.0:
            out = out + Ai * np.log(np.abs(r - ri))
    return out


def _check_open(hd, r):
    r = np.asarray(r, dtype=float)
    if np.any(~(r > hd.r_plus)) or np.any(~(r < hd.r_bar_plus)):
        raise OutOfDomain(
            f"r must lie in ({hd.r_plus!r}, {hd.r_bar_plus!r})")


def tortoise(p, r):
    """r*(r), increasing from -inf at r_+ to +inf at rbar_+, zero at r_frac."""
    hd = horizon_data(p)
    _check_open(hd, r)
    out = _tortoise_raw(hd, r) + hd.tortoise_const
    return float(out) if np.ndim(out) == 0 else out


def _tortoise_dist(hd, d, side):
    # r* written in terms of the distance to the nearer horizon, so that we can
    # resolve points exponentially close to it
    r = hd.r_plus + d if side < 0 else hd.r_bar_plus - d
    out = hd.tortoise_const
    for i, (ri, Ai) in enumerate(zip(hd.roots, hd.tortoise_coeffs)):
        if Ai == 0.0:
            continue
        if (side < 0 and i == 2) or (side > 0 and i == 3):
            out += Ai * math.log(d)
        else:
            out += Ai * math.log(abs(r - ri))
    return out


def _tortoise_dist_array(hd, d, side):
    r = hd.r_plus + d if side < 0 else hd.r_bar_plus - d
    out = np.full_like(d, hd.tortoise_const)
    near = 2 if side < 0 else 3
    for i, (ri, Ai) in enumerate(zip(hd.roots, hd.tortoise_coeffs)):
        if Ai == 0.0:
            continue
        out += Ai * (np.log(d) if i == near else np.log(np.abs(r - ri)))
    return out, r


def _tortoise_inverse_array(p, hd, x):
    """Vectorized Newton in t = log(distance to the nearer horizon)."""
    if not np.all(np.isfinite(x)):
        raise OutOfDomain("r* must be finite")
    rf = special_radii(p)["r_delta_frac"]
    out = np.empty_like(x)
    a2 = p.a ** 2
    for side in (-1, 1):
        sel = (x <= 0) if side < 0 else (x > 0)
        if not np.any(sel):
            continue
        xs = x[sel]
        dmax = (rf - hd.r_plus) if side < 0 else (hd.r_bar_plus - rf)
        t_hi = math.log(dmax)
        A = hd.tortoise_coeffs[2] if side < 0 else hd.tortoise_coeffs[3]
        c0 = _tortoise_dist(hd, dmax, side) - A * t_hi
        t = np.minimum((xs - c0) / A, t_hi)
        t = np.maximum(t, -700.0)
        ok = np.zeros(xs.shape, dtype=bool)
        for _ in range(60):
            d = np.exp(t)
            g, r = _tortoise_dist_array(hd, d, side)
            g -= xs
            with np.errstate(divide="ignore", invalid="ignore"):
                dg = d * (r * r + a2) / delta_eval(p, r) * (-side)
                step = np.nan_to_num(g / dg)
            t_new = np.clip(t - step, -700.0, t_hi)
            conv = np.abs(t_new - t) <= 1e-15 * np.maximum(1.0, np.abs(t))
            t = t_new
            ok = conv
            if np.all(conv):
                break
        r = hd.r_plus + np.exp(t) if side < 0 else hd.r_bar_plus - np.exp(t)
        bad = ~ok
        if np.any(bad):
            r[bad] = [tortoise_inverse(p, float(v)) for v in xs[bad]]
        out[sel] = r
    lo = np.nextafter(hd.r_plus, np.inf)
    hi = np.nextafter(hd.r_bar_plus, -np.inf)
    return np.clip(out, lo, hi)


def tortoise_inverse(p, rstar):
    """Invert r*(r) by bracketing in log-distance to the horizon, then Newton."""
    hd = horizon_data(p)
    if np.ndim(rstar):
        x = np.asarray(rstar, dtype=float)
        return _tortoise_inverse_array(p, hd, x.ravel()).reshape(x.shape)
    x = float(rstar)
    if not math.isfinite(x):
        raise OutOfDomain("r* must be finite")
    rf = special_radii(p)["r_delta_frac"]
    side = -1 if x <= 0 else 1
    dmax = (rf - hd.r_plus) if side < 0 else (hd.r_bar_plus - rf)

    def g(t):
        # increasing in t for side < 0, decreasing for side > 0
        return _tortoise_dist(hd, math.exp(t), side) - x

    t_hi = math.log(dmax)
    t_lo = t_hi - 1.0
    while side * g(t_lo) < 0 and t_lo > -700:
        t_lo = max(t_lo - 2.0 * (t_hi - t_lo), -700.0)
    # the root lies between t_lo and t_hi
    ga, gb = g(t_lo), g(t_hi)
    if ga == 0:
        t = t_lo
    elif gb == 0 or ga * gb > 0:
        t = t_hi if abs(gb) < abs(ga) else t_lo
    else:
        t = brentq(g, t_lo, t_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    r = hd.r_plus + math.exp(t) if side < 0 else hd.r_bar_plus - math.exp(t)
    # Newton in r as a final polish (dr*/dr = (r^2+a^2)/Delta)
    for _ in range(2):
        if not (hd.r_plus < r < hd.r_bar_plus):
            break
        F = float(tortoise(p, r)) - x
        dr = F * float(delta_eval(p, r)) / (r * r + p.a ** 2)
        r_new = r - dr
        if hd.r_plus < r_new < hd.r_bar_plus and abs(float(tortoise(p, r_new)) - x) < abs(F):
            r = r_new
        else:
            break
    # never return a horizon itself
    if r <= hd.r_plus:
        r = np.nextafter(hd.r_plus, np.inf)
    if r >= hd.r_bar_plus:
        r = np.nextafter(hd.r_bar_plus, -np.inf)
    return float(r)


# ---------------------------------------------------------------------------
# causal structure

def causal_predicates(p, r, theta):
    """Ergoregion membership and whether the vector field W is timelike at (r, theta).

    g(W, W) is a negative multiple of Delta, so W is timelike exactly where
    Delta > 0; on the horizons it is null.
    """
    hd = horizon_data(p)
    scale = max(1.0, hd.r_bar_plus) ** 4 / p.l ** 2
    slack = 1e-12 * max(1.0, hd.r_bar_plus)
    if not (hd.r_plus - slack <= r <= hd.r_bar_plus + slack):
        raise OutOfDomain(f"r={r} outside [r_+, rbar_+]")
    if not (0.0 <= theta <= math.pi):
        raise OutOfDomain(f"theta={theta} outside [0, pi]")
    D = float(delta_eval(p, r))
    if abs(D) <= 1e-12 * scale:
        D = 0.0
    s2 = math.sin(theta) ** 2
    dth = 1.0 + p.alpha * math.cos(theta) ** 2
    g_tt_sign = D - dth * p.a ** 2 * s2
    return {"in_ergoregion": bool(g_tt_sign < 0), "W_timelike": bool(D > 0)}


def g_W_W(p, r, theta):
    """g(W, W) = -Delta rho^2 / (r^2+a^2)^2."""
    rho2 = r * r + p.a ** 2 * math.cos(theta) ** 2
    return -float(delta_eval(p, r)) * rho2 / (r * r + p.a ** 2) ** 2


def parameter_inequality_report(p, rel_tol=1e-9):
    """Slack of each parameter inequality that subextremality implies.

    Each entry is ``(slack, passed)`` where slack > 0 means strict satisfaction
    and ``passed`` allows slack down to ``-rel_tol * scale``.
    """
    hd = horizon_data(p)
    a, M, l = abs(p.a), p.M, p.l
    rp, rbp = hd.r_plus, hd.r_bar_plus
    checks = {
        "a2_over_l2_lt_quarter": (0.25 - p.alpha, 1.0),
        "a_over_M_lt_1.2": (1.2 - a / M, 1.2),
        "r_plus_gt_abs_a": (rp - a, rp),
        "M_lt_r_plus": (rp - M, rp),
        "r_plus_lt_r_bar_plus": (rbp - rp, rbp),
        "r_bar_plus_lt_l": (l - rbp, l),
        "r_bar_plus2_gt_l2_over_7": (rbp * rbp - l * l / 7.0, l * l),
        "root_sum_zero": (1e-10 * rbp - abs(math.fsum(hd.roots)), rbp),
    }
    return {k: (float(s), bool(s > -rel_tol * sc)) for k, (s, sc) in checks.items()}

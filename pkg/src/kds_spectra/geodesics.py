"""Null geodesics of Kerr-de Sitter and the E = 0 trapped orbit.

Conserved quantities follow the convention E = g(gamma', d_t) = p_t and
Xi L = -p_phi, so that with K = Xi^2 (Q + a^2 E^2 - 2 a Xi L E)

    rho^4 r'^2     = R(r)     = Xi^2 ((r^2+a^2) E - a Xi L)^2 - Delta K
    rho^4 theta'^2 = Th(theta) = Delta_theta K - Xi^2 (Xi L - a E sin^2)^2 / sin^2

and R / (Xi^2 (r^2+a^2)^2) = E^2 - V0 with omega = E, m = L and
lambda_tilde = Q + a^2 E^2.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import geometry as geo
from . import radial as rad
from .errors import OutOfDomain, PolarSingularity

RTOL = 1e-10
ATOL = 1e-12
SIN_MIN = 1e-12
# affine step used to leave a turning point
NUDGE = 1e-5


@dataclass
class GeodesicState:
    t: float
    r: float
    theta: float
    phi: float
    E: float
    L: float
    Q: float
    sign_r: int = 1
    sign_theta: int = 1
    K: float = field(init=False)
    K_variant: float = field(init=False)

    def __post_init__(self):
        self.K = math.nan
        self.K_variant = math.nan

    def with_params(self, p):
        self.K = carter_K(p, self.E, self.L, self.Q)
        self.K_variant = carter_K_variant(p, self.E, self.L, self.Q)
        return self


def carter_K(p, E, L, Q):
    """Separation constant entering R and Theta."""
    Xi = p.Xi
    return Xi * Xi * (Q + p.a ** 2 * E * E - 2 * p.a * Xi * L * E)


def carter_K_variant(p, E, L, Q):
    """K with the doubled Xi in the cross term, kept for comparison only."""
    Xi = p.Xi
    return Xi * Xi * (Q + p.a ** 2 * E * E - 2 * p.a * Xi * L * E * Xi)


def metric(p, r, theta):
    """Covariant Boyer-Lindquist metric, coordinate order (t, r, theta, phi)."""
    a, Xi = p.a, p.Xi
    s2 = math.sin(theta) ** 2
    c2 = math.cos(theta) ** 2
    R2 = r * r + a * a
    rho2 = r * r + a * a * c2
    D = float(geo.delta_eval(p, r))
    Dth = 1.0 + p.alpha * c2
    k = rho2 * Xi * Xi
    g = np.zeros((4, 4))
    g[0, 0] = (Dth * a * a * s2 - D) / k
    g[0, 3] = g[3, 0] = a * s2 * (D - Dth * R2) / k
    g[3, 3] = s2 * (Dth * R2 * R2 - D * a * a * s2) / k
    g[1, 1] = rho2 / D
    g[2, 2] = rho2 / Dth
    return g


def radial_R(p, E, L, K, r):
    Xi = p.Xi
    R2 = r * r + p.a ** 2
    return Xi * Xi * (R2 * E - p.a * Xi * L) ** 2 - geo.delta_eval(p, r) * K


def radial_R_prime(p, E, L, K, r):
    Xi = p.Xi
    R2 = r * r + p.a ** 2
    return 4 * r * E * Xi * Xi * (R2 * E - p.a * Xi * L) - geo.delta_deriv(p, r, 1) * K


def polar_Theta(p, E, L, K, theta):
    Xi = p.Xi
    s2 = np.sin(theta) ** 2
    Dth = 1.0 + p.alpha * np.cos(theta) ** 2
    return Dth * K - Xi * Xi * (Xi * L - p.a * E * s2) ** 2 / s2


def polar_Theta_prime(p, E, L, K, theta):
    Xi = p.Xi
    s, c = math.sin(theta), math.cos(theta)
    s2 = s * s
    u = Xi * L - p.a * E * s2
    # d/dtheta of u^2/s2 with du/dtheta = -2 a E s c
    d = (2 * u * (-2 * p.a * E * s * c) * s2 - u * u * 2 * s * c) / (s2 * s2)
    return -2 * p.alpha * c * s * K - Xi * Xi * d


def _tphi_dot(p, E, L, r, theta):
    a, Xi = p.a, p.Xi
    s2 = math.sin(theta) ** 2
    if s2 < SIN_MIN ** 2 and L != 0:
        raise PolarSingularity(f"sin(theta) < {SIN_MIN} with L != 0")
    rho2 = r * r + a * a * math.cos(theta) ** 2
    Dth = 1.0 + p.alpha * math.cos(theta) ** 2
    R2 = r * r + a * a
    D = float(geo.delta_eval(p, r))
    w = E * a * s2 - Xi * L
    z = Xi * L * a - R2 * E
    tdot = (a * Xi * Xi / Dth * w + Xi * Xi * R2 * z / D) / rho2
    # no factor a on the first term, which is what Hamilton's equations give
    phidot = (Xi * Xi / Dth * w / s2 + Xi * Xi * a * z / D) / rho2
    return tdot, phidot


def velocities(p, st):
    """(t', r', theta', phi') of a state, square roots taken with its signs."""
    hd = geo.horizon_data(p)
    if not hd.r_plus < st.r < hd.r_bar_plus:
        raise OutOfDomain(f"r={st.r} outside (r_+, rbar_+)")
    rho2 = st.r ** 2 + p.a ** 2 * math.cos(st.theta) ** 2
    K = carter_K(p, st.E, st.L, st.Q)
    tdot, phidot = _tphi_dot(p, st.E, st.L, st.r, st.theta)
    R = float(radial_R(p, st.E, st.L, K, st.r))
    Th = float(polar_Theta(p, st.E, st.L, K, st.theta))
    rdot = st.sign_r * math.sqrt(max(R, 0.0)) / rho2
    thdot = st.sign_theta * math.sqrt(max(Th, 0.0)) / rho2
    return np.array([tdot, rdot, thdot, phidot])


def geodesic_rhs(p, state):
    """Affine-time derivatives of (t, r, theta, phi)."""
    return velocities(p, state)


def null_residual(p, st, vel=None):
    """|g(v, v)| relative to the lapse-split norm of v.

    Writing g(v, v) = -N^2 t'^2 + g_phph (phi' - w t')^2 + g_rr r'^2 + g_thth theta'^2
    the scale is the same sum with the first sign flipped.  Termwise
    normalization breaks down where g_tt vanishes.
    """
    v = velocities(p, st) if vel is None else vel
    g = metric(p, st.r, st.theta)
    gv = float(v @ g @ v)
    w = -g[0, 3] / g[3, 3]
    N2 = g[0, 3] ** 2 / g[3, 3] - g[0, 0]
    scale = (N2 * v[0] ** 2 + g[3, 3] * (v[3] - w * v[0]) ** 2
             + g[1, 1] * v[1] ** 2 + g[2, 2] * v[2] ** 2)
    return float(abs(gv) / max(scale, 1e-300))


def conserved_from_metric(p, st, vel=None):
    """E = g(v, d_t), L = -g(v, d_phi)/Xi, and Q from theta', recomputed."""
    v = velocities(p, st) if vel is None else vel
    g = metric(p, st.r, st.theta)
    low = g @ v
    E = low[0]
    L = -low[3] / p.Xi
    rho2 = st.r ** 2 + p.a ** 2 * math.cos(st.theta) ** 2
    s2 = math.sin(st.theta) ** 2
    Dth = 1.0 + p.alpha * math.cos(st.theta) ** 2
    Xi = p.Xi
    K = (rho2 ** 2 * v[2] ** 2 + Xi * Xi * (Xi * L - p.a * E * s2) ** 2 / s2) / Dth
    Q = K / (Xi * Xi) - p.a ** 2 * E * E + 2 * p.a * Xi * L * E
    return float(E), float(L), float(Q)


@dataclass
class Trajectory:
    v: np.ndarray
    y: np.ndarray       # rows t, r, theta, phi
    E: float
    L: float
    Q: float
    null_residual: np.ndarray
    conserved: np.ndarray   # rows E, L, Q recomputed from the metric
    status: str = "ok"
    turning_points: int = 0
    meta: dict = field(default_factory=dict)

    def drift(self):
        ref = np.array([self.E, self.L, self.Q])
        scale = np.maximum(np.abs(ref), 1.0)
        return float(np.max(np.abs(self.conserved - ref[:, None]) / scale[:, None]))

    def to_csv(self, path):
        write_trajectory_csv(path, self)


def _state_at(st, y):
    return replace(st, t=float(y[0]), r=float(y[1]), theta=float(y[2]), phi=float(y[3]))


def _fast_rhs(p, E, L, K, sr, sth):
    # same as velocities() without the per-call state object
    a, Xi, al = p.a, p.Xi, p.alpha
    a2 = a * a
    c = geo.delta_coeffs(p)
    Xi2 = Xi * Xi
    XL = Xi * L
    sqrt, sin, cos = math.sqrt, math.sin, math.cos

    def rhs(_, y):
        r, th = y[1], y[2]
        ct = cos(th)
        s2 = sin(th) ** 2
        c2 = ct * ct
        rho2 = r * r + a2 * c2
        Dth = 1.0 + al * c2
        R2 = r * r + a2
        D = (((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]
        w = E * a * s2 - XL
        z = XL * a - R2 * E
        R = Xi2 * z * z - D * K
        Th = Dth * K - Xi2 * w * w / s2
        return np.array([
            (a * Xi2 / Dth * w + Xi2 * R2 * z / D) / rho2,
            sr * sqrt(R if R > 0.0 else 0.0) / rho2,
            sth * sqrt(Th if Th > 0.0 else 0.0) / rho2,
            (Xi2 / Dth * w / s2 + Xi2 * a * z / D) / rho2,
        ])
    return rhs


def integrate_geodesic(p, state, affine_span, n_out=1001, rtol=RTOL, atol=ATOL,
                       max_segments=100000):
    """Integrate the squared first-order system with explicit signs.

    Segments end at zeros of R or Theta (turning points) or near a horizon;
    at a turning point the sign flips and the orbit is moved off it by a
    second-order Taylor step (r'' = R'/(2 rho^4), theta'' = Th'/(2 rho^4)).
    """
    hd = geo.horizon_data(p)
    span = hd.r_bar_plus - hd.r_plus
    guard = 1e-6 * span
    st = replace(state)
    K = carter_K(p, st.E, st.L, st.Q)
    v_out = np.linspace(0.0, float(affine_span), int(n_out))
    ys, vs = [], []
    v = 0.0
    turns = 0
    status = "ok"
    R_tol = 1e-14 * max(1.0, abs(K), p.Xi ** 2 * hd.r_bar_plus ** 4 * st.E ** 2)

    R0 = float(radial_R(p, st.E, st.L, K, st.r))
    T0 = float(polar_Theta(p, st.E, st.L, K, st.theta))
    if R0 < -R_tol or T0 < -R_tol:
        raise OutOfDomain(f"seed is not on a null geodesic: R={R0:.3e}, Theta={T0:.3e}")

    def nudge(st, v):
        rho4 = (st.r ** 2 + p.a ** 2 * math.cos(st.theta) ** 2) ** 2
        y = np.array([st.t, st.r, st.theta, st.phi])
        R = float(radial_R(p, st.E, st.L, K, st.r))
        Th = float(polar_Theta(p, st.E, st.L, K, st.theta))
        moved = False
        acc = np.zeros(4)
        if R <= R_tol:
            Rp = float(radial_R_prime(p, st.E, st.L, K, st.r))
            if abs(Rp) > R_tol:
                acc[1] = Rp / (2 * rho4)
                st.sign_r = 1 if Rp > 0 else -1
                moved = True
        if Th <= R_tol:
            Tp = float(polar_Theta_prime(p, st.E, st.L, K, st.theta))
            if abs(Tp) > R_tol:
                acc[2] = Tp / (2 * rho4)
                st.sign_theta = 1 if Tp > 0 else -1
                moved = True
        if not moved:
            return st, v, False
        vel = velocities(p, st)
        y = y + vel * NUDGE + 0.5 * acc * NUDGE ** 2
        return _state_at(st, y), v + NUDGE, True

    st, v, moved = nudge(st, v)
    if moved:
        turns += 1
    ys.append(np.array([[state.t], [state.r], [state.theta], [state.phi]]))
    vs.append(np.array([0.0]))
    segments = 0
    while v < affine_span and segments < max_segments:
        segments += 1
        cur = st

        rhs = _fast_rhs(p, cur.E, cur.L, K, cur.sign_r, cur.sign_theta)

        def ev_r(_, y):
            return float(radial_R(p, cur.E, cur.L, K, y[1])) if cur.sign_r else 1.0

        def ev_th(_, y):
            return float(polar_Theta(p, cur.E, cur.L, K, y[2]))

        def ev_h(_, y):
            return min(y[1] - hd.r_plus, hd.r_bar_plus - y[1]) - guard

        for e in (ev_r, ev_th, ev_h):
            e.terminal = True
            e.direction = -1
        y0 = np.array([st.t, st.r, st.theta, st.phi])
        # the radial event only matters when the orbit actually moves in r
        events = [ev_th, ev_h]
        if float(radial_R(p, st.E, st.L, K, st.r)) > R_tol:
            events.insert(0, ev_r)
        te = v_out[(v_out > v) & (v_out <= affine_span)]
        sol = solve_ivp(rhs, (v, affine_span), y0, method="DOP853", rtol=rtol, atol=atol,
                        t_eval=te, events=events)
        if sol.t.size:
            vs.append(sol.t)
            ys.append(sol.y)
        if sol.status == 1:
            hit = [i for i, e in enumerate(sol.t_events) if e.size]
            i = hit[0]
            ve = float(sol.t_events[i][0])
            ye = sol.y_events[i][0]
            st = _state_at(st, ye)
            v = ve
            if events[i] is ev_h:
                status = "escaped"
                vs.append(np.array([ve]))
                ys.append(ye[:, None])
                break
            st, v, moved = nudge(st, v)
            if not moved:
                # degenerate zero (double root): nothing drives the orbit off it
                if events[i] is ev_r:
                    st.sign_r = 0
                else:
                    st.sign_theta = 0
            turns += 1
        else:
            v = affine_span
    V = np.concatenate(vs)
    Y = np.concatenate(ys, axis=1)
    order = np.argsort(V, kind="stable")
    V, Y = V[order], Y[:, order]
    nres = np.empty(V.size)
    cons = np.empty((3, V.size))
    for k in range(V.size):
        s = _state_at(state, Y[:, k])
        vel = velocities(p, replace(s, sign_r=1, sign_theta=1))
        nres[k] = null_residual(p, s, vel)
        cons[:, k] = conserved_from_metric(p, s, vel)
    return Trajectory(V, Y, state.E, state.L, state.Q, nres, cons, status, turns)


def hamiltonian_orbit(p, E, L, Q, r0, theta0, sign_r=1, sign_theta=1, affine_span=10.0,
                      t_eval=None, rtol=1e-12, atol=1e-13):
    """Reference orbit from Hamilton's equations in (x, p); no turning-point logic.

    H = g^{ab} p_a p_b / 2 with p_t = E, p_phi = -Xi L; derivatives in (r, theta)
    by complex step.
    """
    a, Xi = p.a, p.Xi
    K = carter_K(p, E, L, Q)
    pt, pphi = E, -Xi * L

    def H(r, th, pr, pth, pt=pt, pphi=pphi):
        c = np.cos(th)
        s2 = np.sin(th) ** 2
        rho2 = r * r + a * a * c * c
        D = geo.delta_eval(p, r) if not np.iscomplexobj(r) else _delta_c(p, r)
        Dth = 1.0 + p.alpha * c * c
        R2 = r * r + a * a
        val = (D * pr * pr + Dth * pth * pth - Xi * Xi * (R2 * pt + a * pphi) ** 2 / D
               + Xi * Xi * (a * s2 * pt + pphi) ** 2 / (Dth * s2))
        return 0.5 * val / rho2

    def rhs(_, z):
        t, r, th, ph, pr, pth = z
        h = 1e-30
        dHr = H(r + 1j * h, th, pr, pth).imag / h
        dHth = H(r, th + 1j * h, pr, pth).imag / h
        dHpr = H(r, th, pr + 1j * h, pth).imag / h
        dHpth = H(r, th, pr, pth + 1j * h).imag / h
        tdot = H(r, th, pr, pth, pt=pt + 1j * h).imag / h
        phidot = H(r, th, pr, pth, pphi=pphi + 1j * h).imag / h
        return [tdot, dHpr, dHpth, phidot, -dHr, -dHth]

    rho2 = r0 ** 2 + a * a * math.cos(theta0) ** 2
    D0 = float(geo.delta_eval(p, r0))
    Dth0 = 1.0 + p.alpha * math.cos(theta0) ** 2
    R = float(radial_R(p, E, L, K, r0))
    Th = float(polar_Theta(p, E, L, K, theta0))
    pr0 = sign_r * math.sqrt(max(R, 0.0)) / D0
    pth0 = sign_theta * math.sqrt(max(Th, 0.0)) / Dth0
    sol = solve_ivp(rhs, (0.0, affine_span), [0.0, r0, theta0, 0.0, pr0, pth0],
                    method="DOP853", rtol=rtol, atol=atol, t_eval=t_eval)
    return sol


def _delta_c(p, r):
    a2 = p.a ** 2
    return (r * r + a2) * (1 - r * r / p.l ** 2) - 2 * p.M * r


def trapped_orthogonal_exists(p):
    """Whether an E = 0 trapped null geodesic exists, with its seed."""
    if p.a == 0:
        return {"exists": False, "r_orbit": None, "theta0": None, "criterion": math.inf}
    crit = geo.max_delta_over_a2(p)
    if not crit <= 1.0:
        return {"exists": False, "r_orbit": None, "theta0": None, "criterion": crit}
    r_orb = geo.special_radii(p)["r_delta_max"]

    def g(th):
        return (1.0 + p.alpha * math.cos(th) ** 2) * math.sin(th) ** 2 - crit

    lo, hi = 1e-6, math.pi / 2
    if g(hi) == 0.0:
        th0 = hi
    elif g(lo) * g(hi) > 0:
        return {"exists": False, "r_orbit": r_orb, "theta0": None, "criterion": crit}
    else:
        th0 = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return {"exists": True, "r_orbit": float(r_orb), "theta0": float(th0), "criterion": crit}


def trapped_seed(p, Q=1.0, r_offset=0.0):
    info = trapped_orthogonal_exists(p)
    if not info["exists"]:
        raise OutOfDomain("no d_t-orthogonal trapped geodesic for these parameters")
    Dmax = float(geo.delta_eval(p, info["r_orbit"]))
    L = math.sqrt(Dmax * Q) / (abs(p.a) * p.Xi)
    r0 = info["r_orbit"] * (1.0 + r_offset)
    return GeodesicState(0.0, r0, info["theta0"], 0.0, 0.0, L, Q).with_params(p), info


def integrate_trapped(p, affine_span=100.0, r_offset=0.0, n_out=1001):
    """E = 0 orbit from (r_Delta_max (1 + r_offset), theta0) with its diagnostics."""
    st, info = trapped_seed(p, r_offset=r_offset)
    tr = integrate_geodesic(p, st, affine_span, n_out=n_out)
    r_orb = info["r_orbit"]
    gdt = np.array([abs(float(metric(p, tr.y[1, k], tr.y[2, k])[0] @ _vel_at(p, st, tr.y[:, k])))
                    for k in range(tr.v.size)])
    tr.meta.update(info)
    tr.meta.update({
        "max_r_deviation": float(np.max(np.abs(tr.y[1] - r_orb))),
        "conserved_drift": tr.drift(),
        "max_null_residual": float(np.max(tr.null_residual)),
        "max_g_dot_dt": float(np.max(gdt)),
        "K_variant": st.K_variant,
        "K": st.K,
    })
    return tr


def _vel_at(p, st, y):
    return velocities(p, replace(_state_at(st, y), sign_r=1, sign_theta=1))


def find_trapped_parameters(l=1.0, n_a=97, n_M=119, target=0.5):
    """Grid search over subextremal (a, M) at fixed l for max Delta/a^2 <= 1.

    Returns the admissible grid point whose criterion value is closest to
    ``target`` (an interior point of the admissible set).
    """
    best = None
    for a in np.linspace(0.01 * l, 0.49 * l, n_a):
        for M in np.linspace(0.005 * l, 0.3 * l, n_M):
            if geo.classify_subextremal(float(a), float(M), float(l)) != "subextremal":
                continue
            p = geo.BlackHoleParams(a=float(a), M=float(M), l=float(l))
            v = geo.max_delta_over_a2(p)
            if v <= 1.0 and (best is None or abs(v - target) < abs(best[0] - target)):
                best = (v, p)
    if best is None:
        raise OutOfDomain("no admissible parameters on the grid")
    return best[1]


def correspondence_check(p, sample_count=100, seed=0):
    """Max relative gap between rho^4 r'^2/(Xi^2 R2^2) and E^2 - V0.

    r'^2 is obtained from the numerically inverted metric and the null
    condition; the other side comes from the radial potential.
    """
    rng = np.random.default_rng(seed)
    hd = geo.horizon_data(p)
    Xi, a = p.Xi, p.a
    worst = 0.0
    for _ in range(int(sample_count)):
        r = float(rng.uniform(hd.r_plus, hd.r_bar_plus))
        r = min(max(r, hd.r_plus + 1e-6), hd.r_bar_plus - 1e-6)
        th = float(rng.uniform(0.2, math.pi - 0.2))
        E = float(rng.uniform(-2, 2))
        L = float(rng.uniform(-5, 5))
        s2 = math.sin(th) ** 2
        Dth = 1.0 + p.alpha * math.cos(th) ** 2
        # choose Q so that the polar motion is allowed: Theta >= 0
        K_min = Xi * Xi * (Xi * L - a * E * s2) ** 2 / (Dth * s2)
        K = K_min + float(rng.uniform(0.1, 20))
        Q = K / (Xi * Xi) - a * a * E * E + 2 * a * Xi * L * E
        pth2 = (Dth * K - Xi * Xi * (Xi * L - a * E * s2) ** 2 / s2) / Dth ** 2
        ginv = np.linalg.inv(metric(p, r, th))
        pt, pphi = E, -Xi * L
        rest = (ginv[0, 0] * pt * pt + 2 * ginv[0, 3] * pt * pphi + ginv[3, 3] * pphi * pphi
                + ginv[2, 2] * pth2)
        pr2 = -rest / ginv[1, 1]
        rdot2 = ginv[1, 1] ** 2 * pr2
        rho2 = r * r + a * a * math.cos(th) ** 2
        R2 = r * r + a * a
        lhs = rho2 ** 2 * rdot2 / (Xi * Xi * R2 * R2)
        V0 = float(rad.v0_scalar(p, E, L, Q + a * a * E * E, r))
        rhs = E * E - V0
        scale = max(abs(E * E) + abs(V0), 1e-300)
        worst = max(worst, abs(lhs - rhs) / scale)
    return float(worst)


def write_trajectory_csv(path, tr):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["v", "t", "r", "theta", "phi", "E", "L", "Q", "null_residual"])
        for k in range(tr.v.size):
            wr.writerow([f"{tr.v[k]:.17g}"] + [f"{x:.17g}" for x in tr.y[:, k]]
                        + [f"{x:.17g}" for x in tr.conserved[:, k]] + [f"{tr.null_residual[k]:.17g}"])

"""Wronskians, real-axis mode scans and the frequency-regime decomposition."""
from __future__ import annotations

import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from . import geometry as geo
from . import radial as rad
from .angular import AngularProblem, solve_eigenvalues
from .errors import EmptySet, KdsError, Resonant

EXCLUSION_BAND = 1e-8

F_DS = "F_dS"
F_SHARP_ENLARGED = "F_sharp_enlarged"
F_FLAT = "F_flat"
F_LESSFLAT = "F_lessflat"
F_NATURAL = "F_natural"
F_OMEGA_DOMINATED = "F_omega_dominated"
REGIMES = (F_DS, F_SHARP_ENLARGED, F_FLAT, F_LESSFLAT, F_NATURAL, F_OMEGA_DOMINATED)
ALLOWED_PAIRS = (frozenset({F_FLAT, F_SHARP_ENLARGED}), frozenset({F_FLAT, F_DS}))

# which recipe to use when a triple carries two flags
_PRECEDENCE = (F_NATURAL, F_OMEGA_DOMINATED, F_LESSFLAT, F_SHARP_ENLARGED, F_DS, F_FLAT)


@dataclass(frozen=True)
class RegimeParams:
    """Constants of the frequency decomposition.

    ``eps_trap``, ``eps_prime``, ``a0`` and ``C_large`` are the auxiliary
    small/large constants used by the multiplier recipes.
    """

    omega_high: float = 10.0
    omega_low: float = 0.05
    lambda_low: float = 0.05
    alpha: float = 0.05
    E: float = 10.0
    C: float | None = None
    eps_trap: float = 0.05
    eps_prime: float = 0.05
    a0: float = 0.1
    C_large: float = 10.0
    # bump half-width in r; None means (rbar_+ - r_+)/40
    bump_delta: float | None = None

    def __post_init__(self):
        if self.C is None:
            object.__setattr__(self, "C", self.omega_high ** 2 / self.lambda_low)
        for k in ("omega_high", "omega_low", "lambda_low", "alpha", "E", "C",
                  "eps_trap", "eps_prime", "a0", "C_large"):
            v = float(getattr(self, k))
            if not v > 0:
                raise ValueError(f"{k} must be positive")
            object.__setattr__(self, k, v)
        if self.bump_delta is not None:
            if not float(self.bump_delta) > 0:
                raise ValueError("bump_delta must be positive")
            object.__setattr__(self, "bump_delta", float(self.bump_delta))
        if not self.omega_low < self.omega_high:
            raise ValueError("need omega_low < omega_high")
        if not self.lambda_low < 1 or not self.alpha < 1:
            raise ValueError("need lambda_low < 1 and alpha < 1")
        if self.C < self.omega_high ** 2 / self.lambda_low * (1 - 1e-12):
            raise ValueError("need C >= omega_high^2 / lambda_low")

    @classmethod
    def from_dict(cls, d):
        keys = cls.__dataclass_fields__.keys()
        return cls(**{k: d[k] for k in keys if k in d and d[k] is not None})

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class RegimeLabel:
    flags: tuple
    superradiant: bool
    de_sitter: bool
    in_F_SF_C: bool

    def flags_str(self):
        return "|".join(self.flags)

    @property
    def primary(self):
        for name in _PRECEDENCE:
            if name in self.flags:
                return name
        return None


@dataclass
class WronskianResult:
    frequency: object
    W: complex
    rstar_variation: float
    resonant: bool
    samples: np.ndarray | None = None


# ---------------------------------------------------------------------------
# superradiance and regimes

def is_superradiant(p, omega, m):
    hd = geo.horizon_data(p)
    return (omega - hd.omega_plus * m) * (omega - hd.omega_bar_plus * m) < 0


def superradiant_band(p, omega, m):
    """Second form: a m omega inside (a^2 m^2 Xi/(rbar^2+a^2), a^2 m^2 Xi/(r_+^2+a^2))."""
    hd = geo.horizon_data(p)
    a2 = p.a ** 2
    amw = p.a * m * omega
    lo = a2 * m * m * p.Xi / (hd.r_bar_plus ** 2 + a2)
    hi = a2 * m * m * p.Xi / (hd.r_plus ** 2 + a2)
    return lo < amw < hi


def is_de_sitter(p, omega, m):
    hd = geo.horizon_data(p)
    return abs(omega) <= abs(p.a * m) * p.Xi / (hd.r_bar_plus ** 2 + p.a ** 2)


def classify_frequency(p, rp, f):
    """Regime flags of a triple (omega, m, lambda_tilde)."""
    return classify_values(p, rp, f.omega, f.m, f.lambda_tilde)


def classify_values(p, rp, omega, m, lt):
    hd = geo.horizon_data(p)
    a = p.a
    a2 = a * a
    Xi = p.Xi
    rp2 = hd.r_plus ** 2 + a2
    rb2 = hd.r_bar_plus ** 2 + a2
    w2 = omega * omega
    amw = a * m * omega
    am2 = a2 * m * m
    oh, ll, al = rp.omega_high, rp.lambda_low, rp.alpha
    X = am2 * Xi / rp2 + abs(a) * al * lt
    X_abs = am2 * Xi / rp2 + abs(a) * al * abs(lt)
    dS = abs(omega) <= abs(a * m) * Xi / rb2
    flags = []
    # at a = 0 the de Sitter set shrinks to omega = 0, which counts as empty
    if a != 0 and lt >= oh and dS and amw >= 0:
        flags.append(F_DS)
    if lt >= oh / (abs(a) * Xi / rp2 + al) and am2 * Xi / rb2 < amw < X:
        flags.append(F_SHARP_ENLARGED)
    if abs(omega) <= oh and abs(lt) < oh * oh / ll:
        flags.append(F_FLAT)
    # excluded band [0, X); the closed end only matters at omega = 0, which
    # the de Sitter regime already takes, so m = 0 at omega != 0 stays covered
    lo_in = omega == 0 and a != 0
    excl = (lo_in or 0 < amw) and amw < X
    excl_abs = (lo_in or 0 < amw) and amw < X_abs
    if lt >= oh * oh / ll and lt > (w2 + am2) / ll and not excl:
        flags.append(F_LESSFLAT)
    if abs(omega) >= oh and ll * lt <= w2 + am2 <= lt / ll and not excl:
        flags.append(F_NATURAL)
    if abs(omega) >= oh and abs(lt) < ll * (w2 + am2) and not excl_abs:
        flags.append(F_OMEGA_DOMINATED)
    sr = (omega - hd.omega_plus * m) * (omega - hd.omega_bar_plus * m) < 0
    C = rp.C
    in_sf = (1.0 / C <= abs(omega) <= C and lt <= C and sr
             and abs(omega - hd.omega_plus * m) > 1.0 / C
             and abs(omega - hd.omega_bar_plus * m) > 1.0 / C)
    return RegimeLabel(tuple(flags), bool(sr), bool(dS), bool(in_sf))


def classify_arrays(p, rp, omega, m, lt):
    """Vectorized regime flags: a boolean (n, 6) array with columns in ``REGIMES`` order.

    Same inequalities as :func:`classify_values`, for large samples.
    """
    omega = np.asarray(omega, dtype=float)
    m = np.asarray(m, dtype=float)
    lt = np.asarray(lt, dtype=float)
    hd = geo.horizon_data(p)
    a = p.a
    a2 = a * a
    Xi = p.Xi
    rp2 = hd.r_plus ** 2 + a2
    rb2 = hd.r_bar_plus ** 2 + a2
    w2 = omega * omega
    amw = a * m * omega
    am2 = a2 * m * m
    oh, ll, al = rp.omega_high, rp.lambda_low, rp.alpha
    X = am2 * Xi / rp2 + abs(a) * al * lt
    X_abs = am2 * Xi / rp2 + abs(a) * al * np.abs(lt)
    dS = np.abs(omega) <= np.abs(a * m) * Xi / rb2
    out = np.zeros(omega.shape + (len(REGIMES),), dtype=bool)
    out[..., 0] = (a != 0) & (lt >= oh) & dS & (amw >= 0)
    with np.errstate(divide="ignore"):
        out[..., 1] = (lt >= oh / (abs(a) * Xi / rp2 + al)) & (am2 * Xi / rb2 < amw) & (amw < X)
    out[..., 2] = (np.abs(omega) <= oh) & (np.abs(lt) < oh * oh / ll)
    lo_in = (omega == 0) & (a != 0)
    excl = (lo_in | (0 < amw)) & (amw < X)
    excl_abs = (lo_in | (0 < amw)) & (amw < X_abs)
    out[..., 3] = (lt >= oh * oh / ll) & (lt > (w2 + am2) / ll) & ~excl
    out[..., 4] = ((np.abs(omega) >= oh) & (ll * lt <= w2 + am2) & (w2 + am2 <= lt / ll)
                   & ~excl)
    out[..., 5] = (np.abs(omega) >= oh) & (np.abs(lt) < ll * (w2 + am2)) & ~excl_abs
    return out


def trapped_subcase(p, rp, f, regime):
    """Which multiplier recipe applies, and whether the triple is trapped."""
    if rp is None:
        rp = RegimeParams()
    primary = regime.primary if isinstance(regime, RegimeLabel) else regime
    hd = geo.horizon_data(p)
    a2 = p.a ** 2
    w2 = f.omega ** 2
    lt = f.lambda_tilde
    eps = rp.eps_trap
    rV, Vmax = rad.potential_max(p, f, "V")
    rV0, V0max = rad.potential_max(p, f, "V0")
    amw = p.a * f.m * f.omega
    X = a2 * f.m ** 2 * p.Xi / (hd.r_plus ** 2 + a2) + abs(p.a) * rp.alpha * lt
    out = {"primary": primary, "r_Vmax": rV, "Vmax": Vmax, "r_V0max": rV0, "V0max": V0max,
           "trapped": False}
    if primary == F_DS:
        if abs(V0max - w2) <= eps * lt:
            out.update(recipe="dS_trap", trapped=True)
        elif w2 - V0max >= eps * lt:
            out.update(recipe="dS_exp_y")
        else:
            out.update(recipe="dS_barrier")
    elif primary == F_NATURAL:
        if abs(Vmax - w2) <= eps * lt:
            out.update(recipe="natural_1" if amw < 0 else "natural_2", trapped=True)
        elif w2 - V0max >= eps * lt:
            out.update(recipe="natural_4a")
        elif amw < 0:
            out.update(recipe="natural_3")
        else:
            out.update(recipe="natural_4b")
    elif primary == F_SHARP_ENLARGED:
        out.update(recipe="sharp")
    elif primary == F_LESSFLAT:
        out.update(recipe="lessflat")
    elif primary == F_OMEGA_DOMINATED:
        out.update(recipe="omega_dominated")
    elif primary == F_FLAT:
        if abs(f.omega) <= rp.omega_low and (f.m == 0 or abs(p.a) <= rp.a0):
            out.update(recipe="flat_stationary")
        elif abs(f.omega) <= rp.omega_low:
            out.update(recipe="flat_small_omega")
        else:
            out.update(recipe="flat_bounded")
    else:
        out.update(recipe=None)
    return out


# ---------------------------------------------------------------------------
# Wronskian

def _resonant(p, f, band=EXCLUSION_BAND):
    hd = geo.horizon_data(p)
    return (abs(f.omega - hd.omega_plus * f.m) < band
            or abs(f.omega - hd.omega_bar_plus * f.m) < band)


def wronskian_batch(p, freqs, n_eval=10, order=rad.DEFAULT_ORDER):
    """Wronskians of the two outgoing solutions for a batch of triples.

    u_H (outgoing at r_+) is carried forward and u_Hbar (outgoing at rbar_+)
    backward over the strip between the two seed radii; W is sampled at
    ``n_eval`` common interior points.
    """
    freqs = list(freqs)
    if not freqs:
        return []
    for f in freqs:
        if _resonant(p, f):
            raise Resonant(f"{f} lies in the resonant exclusion band")
    sH = rad.seed_batch(p, freqs, rad.EVENT, order)
    sB = rad.seed_batch(p, freqs, rad.COSMO, order)
    t0, t1 = sH[0].rstar, sB[0].rstar
    te = np.linspace(t0, t1, n_eval + 2)[1:-1]
    n = len(freqs)
    solH = rad.integrate_batch(p, freqs, sH, t1, t_eval=te)
    solB = rad.integrate_batch(p, freqs, sB, t0, t_eval=te[::-1])
    uH, upH = rad._unpack(solH.y, n)
    uB, upB = rad._unpack(solB.y[:, ::-1], n)
    W = upB * uH - uB * upH
    out = []
    for i, f in enumerate(freqs):
        w = W[i]
        mean = w.mean()
        spread = float(np.max(np.abs(w - mean)) / abs(mean)) if mean != 0 else math.inf
        out.append(WronskianResult(f, complex(mean), spread, False, w.copy()))
    return out


def wronskian(p, f, n_eval=10):
    """W = u'_Hbar u_H - u_Hbar u'_H for one triple (r*-independent)."""
    return wronskian_batch(p, [f], n_eval)[0]


def flux_identity_check(p, f, sol):
    """Normalized residual of  kbar |u|^2(+inf) + k |u|^2(-inf) = int Im(conj(u) H) dr*.

    Uses the first and last grid points as the two ends.
    """
    hd = geo.horizon_data(p)
    kp = f.omega - hd.omega_plus * f.m
    kb = f.omega - hd.omega_bar_plus * f.m
    u = sol.u
    Hs = sol.H if sol.H is not None else np.zeros_like(u)
    right = kb * abs(u[-1]) ** 2
    left = kp * abs(u[0]) ** 2
    integral = simpson(np.imag(np.conj(u) * Hs), x=sol.grid)
    scale = max(abs(right), abs(left), abs(integral), 1e-300)
    return float(abs(right + left - integral) / scale)


# ---------------------------------------------------------------------------
# scanning

def omega_grid(omega_range, omega_step):
    lo, hi = float(omega_range[0]), float(omega_range[1])
    if omega_step <= 0:
        raise ValueError("omega_step must be positive")
    if hi < lo:
        return np.zeros(0)
    n = int(math.floor((hi - lo) / omega_step + 1e-9)) + 1
    return lo + omega_step * np.arange(n)


def _eigen_row(p, m, omegas, ell_max):
    lams = {}
    for w in omegas:
        evs = solve_eigenvalues(AngularProblem(p, m, p.a * w), ell_max)
        lams[float(w)] = [e.lambda_ for e in evs]
    return lams


def _scan_m(job):
    """Worker: every (ell, omega) for one m.  Returns rows and failures."""
    p, rp, m, omegas, ell_max, order = job
    rows = []
    failures = []
    if ell_max < abs(m):
        return rows, failures
    lams = _eigen_row(p, m, omegas, ell_max)
    for ell in range(abs(m), ell_max + 1):
        freqs = []
        for w in omegas:
            f = rad.FrequencyTriple.make(p, w, m, ell, lams[float(w)][ell - abs(m)])
            if _resonant(p, f):
                failures.append((float(w), m, ell, "resonant band skipped"))
                continue
            freqs.append(f)
        try:
            res = wronskian_batch(p, freqs, order=order)
        except KdsError as exc:
            failures.extend((f.omega, m, ell, f"{type(exc).__name__}: {exc}") for f in freqs)
            continue
        for r in res:
            lab = classify_frequency(p, rp, r.frequency)
            rows.append({"omega": r.frequency.omega, "m": m, "ell": ell,
                         "lambda": r.frequency.lambda_, "W": r.W, "spread": r.rstar_variation,
                         "label": lab})
    return rows, failures


def detect_candidates(omegas, W, threshold=1e-4, window=2):
    """Indices of local minima of |W| that dip below threshold * median(|W|)
    while both Re W and Im W change sign within ``window`` points."""
    W = np.asarray(W)
    n = W.size
    if n < 3:
        return []
    A = np.abs(W)
    med = np.median(A)
    out = []
    for i in range(n):
        lo, hi = max(0, i - 1), min(n, i + 2)
        if A[i] > A[lo:hi].min():
            continue
        if not A[i] < threshold * med:
            continue
        a, b = max(0, i - window), min(n, i + window + 1)
        re, im = W.real[a:b], W.imag[a:b]
        if np.any(np.sign(re[1:]) != np.sign(re[:-1])) and np.any(np.sign(im[1:]) != np.sign(im[:-1])):
            out.append(i)
    return out


def _refine(p, m, ell, w_lo, w_hi, depth, factor=4):
    best = None
    for _ in range(depth):
        ws = np.linspace(w_lo, w_hi, 2 * factor + 1)
        freqs = [rad.FrequencyTriple.from_angular(p, w, m, ell) for w in ws]
        freqs = [f for f in freqs if not _resonant(p, f)]
        if not freqs:
            break
        res = wronskian_batch(p, freqs)
        A = np.array([abs(r.W) for r in res])
        j = int(np.argmin(A))
        best = (freqs[j].omega, float(A[j]))
        h = (w_hi - w_lo) / (2 * factor)
        w_lo, w_hi = best[0] - h, best[0] + h
    return best


@dataclass
class ScanResult:
    rows: list
    candidates: list
    failures: list = field(default_factory=list)

    @property
    def n_attempted(self):
        return len(self.rows) + len(self.failures)


def mode_scan(p, rp, omega_range, omega_step, m_range, ell_max, threshold=1e-4,
              refine_depth=3, workers=1, order=rad.DEFAULT_ORDER, progress=False):
    """|W| on a rectangular (omega, m, ell) grid plus zero candidates.

    Rows come back sorted by (m, ell, omega) whatever the worker count.
    """
    omegas = omega_grid(omega_range, omega_step)
    ms = sorted(set(int(m) for m in m_range))
    jobs = [(p, rp, m, omegas, int(ell_max), order) for m in ms]
    if omegas.size == 0 or not jobs:
        return ScanResult([], [], [])
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_scan_m, jobs))
    else:
        results = []
        for j in jobs:
            results.append(_scan_m(j))
            if progress:
                print(f"m={j[2]} done", file=sys.stderr)
    rows, failures = [], []
    for r, fl in results:
        rows.extend(r)
        failures.extend(fl)
    rows.sort(key=lambda d: (d["m"], d["ell"], d["omega"]))
    failures.sort(key=lambda t: (t[1], t[2], t[0]))
    cands = []
    by_row = {}
    for d in rows:
        by_row.setdefault((d["m"], d["ell"]), []).append(d)
    for (m, ell), rr in sorted(by_row.items()):
        W = np.array([d["W"] for d in rr])
        ws = np.array([d["omega"] for d in rr])
        for i in detect_candidates(ws, W, threshold):
            entry = {"omega": float(ws[i]), "m": m, "ell": ell, "abs_W": float(abs(W[i])),
                     "refined": False}
            if refine_depth > 0:
                lo = ws[max(i - 1, 0)]
                hi = ws[min(i + 1, ws.size - 1)]
                try:
                    best = _refine(p, m, ell, lo, hi, refine_depth)
                except KdsError:
                    best = None
                if best is not None:
                    entry.update(omega=float(best[0]), abs_W=float(best[1]), refined=True)
            cands.append(entry)
    return ScanResult(rows, cands, failures)


def quantitative_ms_scan(p, rp, n_omega=8):
    """min |W| over a grid of the compact superradiant set F_SF,C."""
    hd = geo.horizon_data(p)
    C = rp.C
    if p.a == 0:
        raise EmptySet("no superradiant frequencies when a = 0")
    m_max = int(math.floor(math.sqrt(C) / p.Xi))
    best = None
    npts = 0
    for m in range(-m_max, m_max + 1):
        if m == 0:
            continue
        lo = min(hd.omega_plus * m, hd.omega_bar_plus * m) + 1.0 / C
        hi = max(hd.omega_plus * m, hd.omega_bar_plus * m) - 1.0 / C
        if hi <= lo:
            continue
        ws = np.linspace(lo, hi, n_omega)
        ws = ws[(np.abs(ws) >= 1.0 / C) & (np.abs(ws) <= C)]
        if ws.size == 0:
            continue
        ell_top = abs(m) + int(math.ceil(math.sqrt(C))) + 1
        rows = {}
        for w in ws:
            evs = solve_eigenvalues(AngularProblem(p, m, p.a * w), ell_top)
            rows[float(w)] = evs
        for ell in range(abs(m), ell_top + 1):
            freqs = []
            for w in ws:
                ev = rows[float(w)][ell - abs(m)]
                f = rad.FrequencyTriple.make(p, w, m, ell, ev.lambda_)
                if classify_frequency(p, rp, f).in_F_SF_C:
                    freqs.append(f)
            if not freqs:
                continue
            for r in wronskian_batch(p, freqs):
                npts += 1
                if best is None or abs(r.W) < best[0]:
                    best = (abs(r.W), r.frequency)
    if best is None:
        raise EmptySet("F_SF,C contains no grid point")
    return {"min_abs_W": float(best[0]), "argmin": best[1], "grid_points": npts}

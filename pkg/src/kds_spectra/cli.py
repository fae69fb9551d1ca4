"""Command line front end.

Every command reads one JSON config (``--config file``) and then applies
``--key value`` overrides, values parsed as JSON when possible.  Exit codes:
0 success, 2 bad input, 3 parameters not subextremal, 4 failure budget
exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import angular as ang
from . import currents as cur
from . import geodesics as gd
from . import geometry as geo
from . import radial as rad
from . import spectrum as sp
from .errors import KdsError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_SUBEXTREMAL = 3
EXIT_BUDGET = 4

COMMANDS = ("params-check", "angular-eig", "radial-solve", "wronskian-scan",
            "regime-classify", "certify", "geodesic-trap")

# defaults of the Schwarzschild-de Sitter stability scan
SCAN_DEFAULTS = {"omega_range": [0.05, 2.0], "omega_step": 0.01, "m_set": [-2, -1, 0, 1, 2],
                 "ell_max": 4, "threshold": 1e-4, "refine_depth": 3, "failure_budget": 1e-3,
                 "workers": 1}


class InputError(Exception):
    pass


class NotSubextremalExit(Exception):
    pass


def _fmt(x):
    return f"{x:.17g}"


def _clean(obj):
    # JSON without NaN/Infinity literals
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump(obj, fh=None):
    text = json.dumps(_clean(obj), indent=2, sort_keys=True)
    if fh is None:
        print(text)
    else:
        fh.write(text + "\n")


# ---------------------------------------------------------------------------
# configuration

def parse_overrides(tokens):
    """``["--a", "0.5", "--m-set", "[0,1]"]`` -> ``{"a": 0.5, "m_set": [0, 1]}``."""
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or len(tok) < 3:
            raise InputError(f"expected --key, got {tok!r}")
        if i + 1 >= len(tokens):
            raise InputError(f"flag {tok} has no value")
        key = tok[2:].replace("-", "_")
        raw = tokens[i + 1]
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
        i += 2
    return out


def load_config(path, overrides):
    cfg = {}
    if path is not None:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed JSON in {path}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise InputError("config must be a JSON object")
    cfg.update(overrides)
    if "KDS_WORKERS" in os.environ:
        try:
            cfg["workers"] = int(os.environ["KDS_WORKERS"])
        except ValueError as exc:
            raise InputError("KDS_WORKERS must be an integer") from exc
    return cfg


def _params(cfg, require_subextremal=True):
    try:
        p = geo.BlackHoleParams.from_dict(cfg)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad black hole parameters: {exc}") from exc
    if require_subextremal:
        verdict = geo.classify_subextremal(p.a, p.M, p.l)
        if verdict != geo.SUBEXTREMAL:
            raise NotSubextremalExit(_verdict_message(p, verdict))
    return p


def _regime_params(cfg):
    try:
        return sp.RegimeParams.from_dict(cfg.get("regime_params", cfg))
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad regime parameters: {exc}") from exc


def _get(cfg, key, default=None, kind=None):
    if key not in cfg:
        if default is None:
            raise InputError(f"missing config key {key!r}")
        return default
    v = cfg[key]
    if kind is None:
        return v
    try:
        return kind(v)
    except (TypeError, ValueError) as exc:
        raise InputError(f"config key {key!r}: {exc}") from exc


def _out_path(cfg, key="output", required=False):
    path = cfg.get(key)
    if path is None:
        if required:
            raise InputError(f"missing config key {key!r}")
        return None
    d = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(d):
        raise InputError(f"output directory {d} does not exist")
    return path


def _workers(cfg):
    w = _get(cfg, "workers", 1, int)
    if w < 1:
        raise InputError("workers must be >= 1")
    return w


def _verdict_message(p, verdict):
    if verdict == geo.BORDERLINE:
        return (f"borderline: a={p.a}, M={p.M}, l={p.l} sits on the extremal boundary "
                "(discriminant within tolerance of zero)")
    return f"not subextremal: a={p.a}, M={p.M}, l={p.l}"


def _triple(p, cfg):
    omega = _get(cfg, "omega", kind=float)
    m = _get(cfg, "m", kind=int)
    ell = _get(cfg, "ell", kind=int)
    if "lambda" in cfg:
        return rad.FrequencyTriple.make(p, omega, m, ell, float(cfg["lambda"]))
    return rad.FrequencyTriple.from_angular(p, omega, m, ell)


# ---------------------------------------------------------------------------
# commands

def cmd_params_check(cfg):
    p = _params(cfg, require_subextremal=False)
    verdict = geo.classify_subextremal(p.a, p.M, p.l)
    if verdict != geo.SUBEXTREMAL:
        raise NotSubextremalExit(_verdict_message(p, verdict))
    hd = geo.horizon_data(p)
    radii = geo.special_radii(p)
    mx = geo.max_delta_over_a2(p)
    ineq = geo.parameter_inequality_report(p)
    rep = {
        "verdict": verdict,
        "params": p.to_dict(),
        "roots": {"r_minus_bar": hd.r_minus_bar, "r_minus": hd.r_minus,
                  "r_plus": hd.r_plus, "r_bar_plus": hd.r_bar_plus},
        "kappa_plus": hd.kappa_plus,
        "kappa_bar_plus": hd.kappa_bar_plus,
        "omega_plus": hd.omega_plus,
        "omega_bar_plus": hd.omega_bar_plus,
        "r_delta_frac": radii["r_delta_frac"],
        "r_delta_max": radii["r_delta_max"],
        "max_delta_over_a2": mx,
        "ergoregion_connected": bool(p.a != 0 and mx <= 1.0),
        "inequalities": {k: {"slack": s, "passed": ok} for k, (s, ok) in ineq.items()},
    }
    _dump(rep)
    return EXIT_OK


def cmd_angular_eig(cfg):
    p = _params(cfg)
    ms = cfg.get("m_set", [cfg["m"]] if "m" in cfg else None)
    if ms is None:
        raise InputError("need m or m_set")
    if "xi" in cfg:
        xi = float(cfg["xi"])
    elif "omega" in cfg:
        xi = p.a * float(cfg["omega"])
    else:
        raise InputError("need xi or omega")
    ell_max = _get(cfg, "ell_max", kind=int)
    res = _get(cfg, "resolution", 64, int)
    path = _out_path(cfg)
    rows = []
    for m in sorted(int(v) for v in ms):
        if ell_max < abs(m):
            continue
        rows.extend(ang.solve_eigenvalues(ang.AngularProblem(p, m, xi, res), ell_max))
    if path is None:
        wr = csv.writer(sys.stdout, lineterminator="\n")
        wr.writerow(["m", "ell", "xi", "lambda", "lambda_tilde"])
        for ev in rows:
            wr.writerow([ev.m, ev.ell, _fmt(xi), _fmt(ev.lambda_), _fmt(ev.lambda_tilde)])
    else:
        ang.write_eigenvalue_csv(path, rows, xi)
    return EXIT_OK


def cmd_radial_solve(cfg):
    p = _params(cfg)
    f = _triple(p, cfg)
    boundary = cfg.get("boundary", rad.EVENT)
    if boundary not in (rad.EVENT, rad.COSMO):
        raise InputError(f"boundary must be {rad.EVENT!r} or {rad.COSMO!r}")
    path = _out_path(cfg, required=True)
    n_eval = _get(cfg, "n_eval", 401, int)
    seed = rad.frobenius_solution(p, f, boundary)
    other = rad.frobenius_solution(p, f, rad.COSMO if boundary == rad.EVENT else rad.EVENT)
    end = float(cfg.get("rstar_end", other.rstar))
    direction = rad.TO_PLUS if boundary == rad.EVENT else rad.TO_MINUS
    sol = rad.integrate_radial(p, f, seed, direction, (seed.rstar, end), n_eval=n_eval)
    sol.to_csv(path)
    _dump({"omega": f.omega, "m": f.m, "ell": f.ell, "lambda": f.lambda_,
           "boundary": boundary, "rstar_span": [seed.rstar, end], "points": int(sol.grid.size),
           "output": path})
    return EXIT_OK


def write_scan_csv(fh, rows):
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(["omega", "m", "ell", "lambda", "re_W", "im_W", "abs_W", "regime_flags",
                 "superradiant", "de_sitter"])
    for d in rows:
        W = d["W"]
        lab = d["label"]
        wr.writerow([_fmt(d["omega"]), d["m"], d["ell"], _fmt(d["lambda"]), _fmt(W.real),
                     _fmt(W.imag), _fmt(abs(W)), lab.flags_str(), str(lab.superradiant).lower(),
                     str(lab.de_sitter).lower()])


def cmd_wronskian_scan(cfg):
    p = _params(cfg)
    rp = _regime_params(cfg)
    job = dict(SCAN_DEFAULTS)
    job.update({k: cfg[k] for k in SCAN_DEFAULTS if k in cfg})
    job["workers"] = _workers(cfg)
    path = _out_path(cfg, required=True)
    cand_path = _out_path(cfg, "candidates_output") or os.path.splitext(path)[0] + ".candidates.json"
    try:
        lo, hi = (float(v) for v in job["omega_range"])
        step = float(job["omega_step"])
        ms = [int(m) for m in job["m_set"]]
        ell_max = int(job["ell_max"])
        budget = float(job["failure_budget"])
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad scan job: {exc}") from exc
    if not (math.isfinite(lo) and math.isfinite(hi)) or step <= 0:
        raise InputError("omega_range must be finite and omega_step positive")
    res = sp.mode_scan(p, rp, (lo, hi), step, ms, ell_max, threshold=float(job["threshold"]),
                       refine_depth=int(job["refine_depth"]), workers=job["workers"],
                       progress=True)
    with open(path, "w", newline="") as fh:
        write_scan_csv(fh, res.rows)
    with open(cand_path, "w") as fh:
        _dump(res.candidates, fh)
    n = res.n_attempted
    frac = len(res.failures) / n if n else 0.0
    print(f"{len(res.rows)} rows, {len(res.failures)} failures, "
          f"{len(res.candidates)} candidates", file=sys.stderr)
    for w, m, ell, msg in res.failures[:20]:
        print(f"  failed omega={w:.17g} m={m} ell={ell}: {msg}", file=sys.stderr)
    if frac > budget:
        print(f"failure fraction {frac:.3g} exceeds budget {budget:.3g}", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_regime_classify(cfg):
    p = _params(cfg)
    rp = _regime_params(cfg)
    triples = cfg.get("triples")
    if triples is None:
        triples = [[cfg.get("omega"), cfg.get("m"), cfg.get("ell")]]
    out = []
    for t in triples:
        try:
            omega, m, ell = float(t[0]), int(t[1]), int(t[2])
        except (TypeError, ValueError, IndexError) as exc:
            raise InputError(f"bad triple {t!r}") from exc
        f = rad.FrequencyTriple.from_angular(p, omega, m, ell)
        lab = sp.classify_frequency(p, rp, f)
        row = {"omega": omega, "m": m, "ell": ell, "lambda": f.lambda_,
               "lambda_tilde": f.lambda_tilde, "flags": list(lab.flags), "primary": lab.primary,
               "superradiant": lab.superradiant, "de_sitter": lab.de_sitter,
               "in_F_SF_C": lab.in_F_SF_C}
        if lab.primary is not None:
            sub = sp.trapped_subcase(p, rp, f, lab)
            row.update(recipe=sub["recipe"], trapped=sub["trapped"],
                       r_trap=sub["r_Vmax"] if sub["trapped"] else 0.0)
        out.append(row)
    _dump(out if cfg.get("triples") is not None else out[0])
    return EXIT_OK


def _proposals(p, rp, regime, rng):
    """One proposed (omega, m, ell) aimed at ``regime``; classification decides."""
    hd = geo.horizon_data(p)
    a, Xi = p.a, p.Xi
    a2 = a * a
    rb2 = hd.r_bar_plus ** 2 + a2
    rp2 = hd.r_plus ** 2 + a2
    oh, ll = rp.omega_high, rp.lambda_low
    s = 1 if rng.random() < 0.5 else -1
    if regime == sp.F_DS:
        m = s * int(rng.integers(1, 6))
        ell = int(rng.integers(max(abs(m), 4), 16))
        w = np.sign(a * m) * rng.random() * abs(a * m) * Xi / rb2
        return float(w), m, ell
    if regime == sp.F_SHARP_ENLARGED:
        m = s * int(rng.integers(1, 6))
        ell = int(rng.integers(max(abs(m), 12), 40))
        lt = ell * (ell + 1.0)
        lo = a2 * m * m * Xi / rb2
        hi = a2 * m * m * Xi / rp2 + abs(a) * rp.alpha * lt
        return float((lo + rng.random() * (hi - lo)) / (a * m)), m, ell
    if regime == sp.F_FLAT:
        ell = int(rng.integers(0, 21))
        m = int(rng.integers(-ell, ell + 1))
        w = s * (rng.random() * rp.omega_low if rng.random() < 0.3 else rng.random() * oh)
        return float(w), m, ell
    if regime == sp.F_LESSFLAT:
        ell = int(rng.integers(int(math.sqrt(oh * oh / ll)) + 1, 70))
        m = int(rng.integers(-ell, ell + 1))
        return float(s * rng.random() * 0.2 * ell), m, ell
    if regime == sp.F_NATURAL:
        w = s * (oh + rng.random() * 3 * oh)
        ell = int(rng.integers(int(0.5 * abs(w)), int(3 * abs(w)) + 1))
        return float(w), int(rng.integers(-ell, ell + 1)), ell
    if regime == sp.F_OMEGA_DOMINATED:
        w = s * (oh + rng.random() * 3 * oh)
        ell = int(rng.integers(0, max(1, int(0.15 * abs(w)))))
        return float(w), int(rng.integers(-ell, ell + 1)), ell
    raise ValueError(regime)


def sample_regime(p, rp, regime, count, rng, attempts=400):
    """Up to ``count`` triples whose primary regime is ``regime``."""
    found = []
    seen = set()
    if p.a == 0 and regime in (sp.F_DS, sp.F_SHARP_ENLARGED):
        # both sets need a m omega != 0
        return found
    for _ in range(attempts):
        if len(found) >= count:
            break
        w, m, ell = _proposals(p, rp, regime, rng)
        key = (round(w, 12), m, ell)
        if key in seen or (regime != sp.F_FLAT and w == 0.0):
            continue
        seen.add(key)
        try:
            f = rad.FrequencyTriple.from_angular(p, w, m, ell)
        except KdsError:
            continue
        lab = sp.classify_frequency(p, rp, f)
        if lab.primary == regime:
            found.append((f, lab))
    return found


def cmd_certify(cfg):
    p = _params(cfg)
    rp = _regime_params(cfg)
    count = max(10, _get(cfg, "samples_per_regime", 10, int))
    n_grid = _get(cfg, "grid_points", 2000, int)
    rng = np.random.default_rng(_get(cfg, "seed", 0, int))
    rows = []
    for regime in sp.REGIMES:
        trip = sample_regime(p, rp, regime, count, rng)
        row = {"regime": regime, "samples": len(trip), "empty": not trip,
               "r_trap": None, "min_slack": None, "certified_b": None, "grid_points": n_grid,
               "certified": 0, "recipes": {}}
        worst = None
        for f, lab in trip:
            try:
                mult = cur.build_multipliers(p, rp, f, lab)
                rep = cur.certify_coercivity(p, rp, f, mult, n=n_grid)
            except KdsError as exc:
                print(f"  {regime} omega={f.omega:.6g} m={f.m} ell={f.ell}: {exc}",
                      file=sys.stderr)
                continue
            row["recipes"][rep["recipe"]] = row["recipes"].get(rep["recipe"], 0) + 1
            row["certified"] += rep["certified_b"] > 0
            if worst is None or rep["certified_b"] < worst["certified_b"]:
                worst = rep
        if worst is not None:
            row.update(r_trap=worst["r_trap"], min_slack=worst["min_slack"],
                       certified_b=worst["certified_b"])
        rows.append(row)
        print(f"{regime}: {row['samples']} samples, {row['certified']} certified",
              file=sys.stderr)
    rep = {"params": p.to_dict(), "regime_params": rp.to_dict(), "rows": rows}
    path = _out_path(cfg)
    if path is None:
        _dump(rep)
    else:
        with open(path, "w") as fh:
            _dump(rep, fh)
    return EXIT_OK


def cmd_geodesic_trap(cfg):
    p = _params(cfg)
    path = _out_path(cfg)
    info = gd.trapped_orthogonal_exists(p)
    rep = {"params": p.to_dict(), **info}
    if info["exists"]:
        span = _get(cfg, "affine_span", 100.0, float)
        tr = gd.integrate_trapped(p, span, n_out=_get(cfg, "n_out", 1001, int))
        rep.update({k: tr.meta[k] for k in ("max_r_deviation", "conserved_drift",
                                            "max_null_residual", "max_g_dot_dt", "K",
                                            "K_variant")})
        rep["status"] = tr.status
        rep["turning_points"] = tr.turning_points
        if path is not None:
            gd.write_trajectory_csv(path, tr)
            rep["output"] = path
    _dump(rep)
    return EXIT_OK


HANDLERS = {
    "params-check": cmd_params_check,
    "angular-eig": cmd_angular_eig,
    "radial-solve": cmd_radial_solve,
    "wronskian-scan": cmd_wronskian_scan,
    "regime-classify": cmd_regime_classify,
    "certify": cmd_certify,
    "geodesic-trap": cmd_geodesic_trap,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="kds-spectra", description=__doc__.splitlines()[0],
                                 allow_abbrev=False)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config file")
    return ap


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    ap = build_parser()
    try:
        ns, rest = ap.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = load_config(ns.config, parse_overrides(rest))
        return HANDLERS[ns.command](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NotSubextremalExit as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NOT_SUBEXTREMAL
    except KdsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Scaled reference experiments, reported as checks.

Every suite returns a list of :class:`Check`; the CLI prints them and
writes a JSON-lines report, and the acceptance tests assert on them.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import macro
from .config import Config
from .phase_grid import compute_zeta_max
from .solver import run, setup

SUITES = ("zeta_table", "pulse_convergence", "dvm_conservation", "well_balance",
          "sod", "expansion", "normal_shock")

# relative domain extent zeta_max / theta_max, rows delta = 2..5
ZETA_EPS = (1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12, 1e-14)
ZETA_TABLE = {
    2: (4.605, 9.210, 13.816, 18.421, 23.026, 27.631, 32.236),
    3: (5.453, 10.380, 15.175, 19.916, 24.628, 29.320, 33.999),
    4: (6.471, 11.667, 16.627, 21.488, 26.295, 31.067, 35.815),
    5: (7.656, 13.065, 18.165, 23.133, 28.026, 32.870, 37.680),
}
# reference least-squares convergence rates, Kn = 1e-2, delta = 0
PULSE_ROC = {2: 3.63, 3: 4.06, 4: 4.93, 5: 5.92}
PULSE_DX = (4, 8, 12, 16, 20)


@dataclass
class Check:
    suite: str
    name: str
    measured: object
    expected: object
    tolerance: object
    passed: bool
    note: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"[{flag}] {self.suite}/{self.name}: measured={_short(self.measured)} "
                f"expected={_short(self.expected)} tol={_short(self.tolerance)}"
                + (f" ({self.note})" if self.note else ""))

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def make_config(**kw) -> Config:
    base = dict(case="pulse", p=3, n_elements=10, t_final=1.0, n_v=16)
    base.update(kw)
    return Config(**base)


def primitive_profile(result):
    """Positions (N,) and primitive states (N, 3) at every solution point."""
    disc = result.problem.disc
    Q = disc.moments(result.f)
    return disc.nodes().ravel(), macro.conserved_to_primitive(Q, disc.gamma)


# -- criterion 1 ------------------------------------------------------------

def zeta_table(tol: float = 1e-3) -> list[Check]:
    checks = []
    for delta, row in ZETA_TABLE.items():
        for eps, ref in zip(ZETA_EPS, row):
            got = compute_zeta_max(delta, eps, 1.0)
            checks.append(Check("zeta_table", f"delta={delta},eps={eps:.0e}", round(got, 6),
                                ref, tol, abs(got - ref) <= tol))
    return checks


# -- criterion 2 ------------------------------------------------------------

def convergence_rates(dx, errors):
    """Least-squares slope of log(error) against log(dx), plus pairwise orders."""
    ldx, lerr = np.log(np.asarray(dx)), np.log(np.asarray(errors))
    slope = float(np.polyfit(ldx, lerr, 1)[0])
    pairs = [float((lerr[i] - lerr[i + 1]) / (ldx[i] - ldx[i + 1])) for i in range(len(dx) - 1)]
    return slope, pairs


def pulse_convergence(orders=(2, 3, 4, 5), n_elements=PULSE_DX, n_v: int = 128,
                      kn: float = 1e-2, ref_p: int = 5, ref_elements: int = 100,
                      roc_tol: float = 0.75, t_final: float = 1.0) -> list[Check]:
    ref = run(make_config(case="pulse", p=ref_p, n_elements=ref_elements, n_v=n_v,
                          kn=kn, t_final=t_final))
    rdisc = ref.problem.disc
    rho_ref = primitive_profile(ref)[1][:, 0].reshape(rdisc.mesh.n_elements, rdisc.basis.n_s)
    checks = []
    for p in orders:
        errs = []
        for ne in n_elements:
            res = run(make_config(case="pulse", p=p, n_elements=ne, n_v=n_v, kn=kn,
                                  t_final=t_final))
            x, q = primitive_profile(res)
            exact = macro.interpolate(rho_ref, rdisc.mesh, rdisc.basis, x)
            errs.append(float(np.max(np.abs(q[:, 0] - exact))))
        dx = [1.0 / ne for ne in n_elements]
        slope, pairs = convergence_rates(dx, errs)
        expected = PULSE_ROC.get(p)
        if expected is not None:
            checks.append(Check("pulse_convergence", f"P{p} RoC", slope, expected, roc_tol,
                                abs(slope - expected) <= roc_tol, f"errors {_short(errs)}"))
        fine = pairs[-3:]
        checks.append(Check("pulse_convergence", f"P{p} finest pair orders", fine,
                            f">= {p + 0.5}", None, min(fine) >= p + 0.5))
    return checks


# -- criterion 3 ------------------------------------------------------------

def dvm_conservation(kns=(1e-1, 1e-3), deltas=(0.0, 4.0), n_v: int = 16, n_zeta: int = 16,
                     p: int = 5, n_elements: int = 20, t_final: float = 1.0,
                     tol: float = 1e-10, contrast: float = 100.0) -> list[Check]:
    checks = []
    errors = {}
    for kn in kns:
        for delta in deltas:
            cfg = make_config(case="pulse", p=p, n_elements=n_elements, n_v=n_v,
                              n_zeta=n_zeta if delta > 0 else 1, delta=delta, kn=kn,
                              t_final=t_final)
            err = run(cfg).rows[-1][4]
            errors[(kn, delta, True)] = err
            checks.append(Check("dvm_conservation", f"DVM mass error Kn={kn:g},delta={delta:g}",
                                err, f"<= {tol:g}", tol, err <= tol))
    kn, delta = min(kns), max(deltas)
    # the standard mode may break down before the end; the log kept up to the
    # failure still measures its conservation error
    cfg = make_config(case="pulse", p=p, n_elements=n_elements, n_v=n_v, n_zeta=n_zeta,
                      delta=delta, kn=kn, t_final=t_final, dvm=False,
                      output_interval=t_final / 100)
    rows = []
    note = ""
    try:
        run(cfg, rows=rows)
    except Exception as exc:
        note = f"; standard run failed after t={rows[-1][0]:.4g}: {exc}"
    std = max(r[4] for r in rows)
    ratio = std / max(errors[(kn, delta, True)], 1e-300)
    checks.append(Check("dvm_conservation", f"standard/DVM mass error Kn={kn:g},delta={delta:g}",
                        ratio, f">= {contrast:g}", contrast, ratio >= contrast,
                        f"standard {std:.3e}{note}"))
    return checks


# -- criterion 4 ------------------------------------------------------------

def well_balance(steps: int = 1000, tol: float = 1e-11) -> list[Check]:
    """Uniform equilibrium on a periodic mesh held for ``steps`` RK4 steps."""
    from .solver import initial_field

    cfg = make_config(case="pulse", p=3, n_elements=8, n_v=32, n_zeta=16, delta=4.0,
                      kn=1e-2, t_final=1.0)
    prob = setup(cfg)
    disc, solver = prob.disc, prob.solver
    prims = np.zeros(disc.shape[:2] + (3,))
    prims[...] = (1.3, 0.7, 0.9)
    f = initial_field(disc, prims, cfg.init_iters)
    rho0 = disc.moments(f)[:, 0].copy()
    Q = None
    for _ in range(steps):
        Q = disc.moments(f)
        solver.rk4_step(f, solver.time_step(Q), Q=Q)
    drift = float(np.max(np.abs(disc.moments(f)[:, 0] - rho0)))
    return [Check("well_balance", f"density drift after {steps} steps", drift,
                  f"<= {tol:g}", tol, drift <= tol)]


# -- criterion 5 ------------------------------------------------------------

def _plateau_and_shock(x, rho, exact_star, contact, shock, h, rho_far):
    band = (x > contact + 2 * h) & (x < shock - 2 * h)
    plateau = float(np.mean(rho[band]))
    half = 0.5 * (exact_star + rho_far)
    right = x > contact + 2 * h
    xs, rs = x[right], rho[right]
    idx = np.flatnonzero((rs[:-1] >= half) & (rs[1:] < half))
    if len(idx) == 0:
        return plateau, math.nan
    i = idx[-1]
    loc = xs[i] + (half - rs[i]) * (xs[i + 1] - xs[i]) / (rs[i + 1] - rs[i])
    return plateau, float(loc)


def sod(p: int = 3, n_elements: int = 50, n_v: int = 16, n_zeta: int = 16,
        t_final: float = 0.2, coarse_kn_h: float = 0.01) -> list[Check]:
    cfg = make_config(case="sod", p=p, n_elements=n_elements, n_v=n_v, n_zeta=n_zeta,
                      kn_h=0.1, t_final=t_final)
    res = run(cfg)
    x, q = primitive_profile(res)
    gamma = res.problem.disc.gamma
    q_l, q_r = np.array([1.0, 0.0, 1.0]), np.array([0.125, 0.0, 0.1])
    star = macro.riemann_star_state(q_l, q_r, gamma)
    rho_star_r = star.rho_r
    # right-going shock speed from the mass jump
    s_shock = star.u * star.rho_r / (star.rho_r - q_r[0])
    contact = 0.5 + star.u * t_final
    shock = 0.5 + s_shock * t_final
    h = 1.0 / n_elements
    plateau, loc = _plateau_and_shock(x, q[:, 0], rho_star_r, contact, shock, h, q_r[0])
    rel = abs(plateau - rho_star_r) / rho_star_r
    # a non-positive density at any stage aborts the run, so finishing with a
    # positive minimum covers the whole history
    min_rho = float(np.min(q[:, 0]))
    checks = [
        Check("sod", "post-shock plateau density", plateau, rho_star_r, 0.05, rel <= 0.05,
              f"relative error {rel:.3e}"),
        Check("sod", "shock location", loc, shock, h, abs(loc - shock) <= h),
        Check("sod", "minimum density", min_rho, "> 0", None, min_rho > 0.0),
    ]
    cfg2 = dataclasses.replace(cfg, kn_h=coarse_kn_h)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            res2 = run(cfg2)
            completed = res2.t >= t_final * (1 - 1e-12)
        except Exception as exc:  # reported as a failed check
            completed = False
            caught.append(warnings.WarningMessage(str(exc), RuntimeWarning, "", 0))
    warned = any(issubclass(w.category, macro.ResolutionWarning) for w in caught)
    checks.append(Check("sod", f"Kn_h={coarse_kn_h:g} completes", completed, True, None, completed))
    checks.append(Check("sod", f"Kn_h={coarse_kn_h:g} resolution warning", warned, True, None,
                        warned))
    return checks


# -- criterion 6 ------------------------------------------------------------

def center_overshoot(x, q, gamma, q_l, q_r, t, half_width=0.04):
    """Peak specific internal energy near x = 0.5 minus the exact centre value."""
    e = macro.specific_internal_energy(q, gamma)
    exact = macro.exact_riemann(q_l, q_r, gamma, np.array([0.0]))
    e_c = float(macro.specific_internal_energy(exact, gamma)[0])
    band = np.abs(x - 0.5) <= half_width
    return float(np.max(e[band])) - e_c


def expansion(p: int = 3, n_elements: int = 100, n_v: int = 32, n_zeta: int = 32,
              kn: float = 1e-3, t_final: float = 0.15, l1_tol: float = 0.02,
              smooth_elements=(100, 200)) -> list[Check]:
    q_l, q_r = np.array([1.0, -2.0, 0.4]), np.array([1.0, 2.0, 0.4])
    checks = []
    try:
        res = run(make_config(case="expansion", p=p, n_elements=n_elements, n_v=n_v,
                              n_zeta=n_zeta, kn=kn, t_final=t_final))
        ok = True
    except Exception as exc:
        checks.append(Check("expansion", "no solver failure", str(exc), "completed", None, False))
        ok = False
    if ok:
        disc = res.problem.disc
        x, q = primitive_profile(res)
        exact = macro.exact_riemann(q_l, q_r, disc.gamma, (x - 0.5) / t_final)
        shape = (disc.mesh.n_elements, disc.basis.n_s)
        l1 = macro.domain_integral(np.abs(q[:, 0] - exact[:, 0]).reshape(shape),
                                   disc.mesh, disc.basis)
        checks += [
            Check("expansion", "no solver failure", True, True, None, True),
            Check("expansion", "minimum density", float(q[:, 0].min()), "> 0", None,
                  bool(q[:, 0].min() > 0.0)),
            Check("expansion", "density L1 error", l1, f"<= {l1_tol:g}", l1_tol, l1 <= l1_tol),
        ]
    spikes = []
    for ne in smooth_elements:
        h = 1.0 / ne
        r = run(make_config(case="expansion", p=p, n_elements=ne, n_v=n_v, n_zeta=n_zeta,
                            kn=h / 10.0, smooth_ic=True, t_final=t_final))
        x, q = primitive_profile(r)
        spikes.append(center_overshoot(x, q, r.problem.disc.gamma, q_l, q_r, t_final))
    mono = all(b < a for a, b in zip(spikes, spikes[1:]))
    checks.append(Check("expansion", "smoothed-IC centre overshoot decreases with N_e", spikes,
                        "monotone decrease", None, mono,
                        "N_e = " + ", ".join(str(n) for n in smooth_elements)))
    return checks


# -- criterion 7 ------------------------------------------------------------

def fu_shape(u, w, fu, bulk, theta, f_eq=None, floor=1e-3):
    """Shape summary of a velocity slice.

    Returns the number of local maxima above ``floor`` times the peak, the
    normalized third central moment about ``bulk``, and, given the sampled
    local equilibrium ``f_eq``, the largest deviation from it relative to
    the peak. The equilibrium is symmetric about ``bulk`` up to the sampling
    of the velocity grid, so that deviation bounds the asymmetry of ``fu``.
    """
    peak = fu.max()
    sig = fu > floor * peak
    interior = (fu[1:-1] > fu[:-2]) & (fu[1:-1] >= fu[2:]) & sig[1:-1]
    n_peaks = int(np.count_nonzero(interior))
    m0 = np.sum(w * fu)
    skew = float(np.sum(w * fu * (u - bulk) ** 3) / (m0 * theta ** 1.5))
    dev = None if f_eq is None else float(np.max(np.abs(fu - f_eq)) / peak)
    return n_peaks, skew, dev


def normal_shock_run(mach: float, t_final: float = 100.0, steady_tol: float = 0.0,
                     p: int = 3, n_elements: int = 100, n_v: int = 32, n_zeta: int = 32):
    cfg = make_config(case="normal_shock", mach=mach, p=p, n_elements=n_elements, n_v=n_v,
                      n_zeta=n_zeta, kn=1.0, t_final=t_final, steady_tol=steady_tol,
                      output_interval=1.0)
    return run(cfg)


def shock_metrics(res) -> dict:
    disc = res.problem.disc
    case = res.problem.case
    x, q = primitive_profile(res)
    shape = (disc.mesh.n_elements, disc.basis.n_s)
    _, ratio = macro.shock_thickness(q[:, 0].reshape(shape), disc.mesh, disc.basis,
                                     case.q_left[0], case.q_right[0], case.lambda_left)
    down = x >= 15.0
    rh_err = float(np.max(np.abs(np.mean(q[down], axis=0) - case.q_right) / np.abs(case.q_right)))
    return {"ratio": ratio, "rh_error": rh_err, "residual": res.rows[-1][-1], "t": res.t,
            "x": x, "q": q}


def normal_shock(machs=(1.5, 3.8, 9.0), main_mach: float = 3.8, t_final: float = 100.0,
                 sweep_steady_tol: float = 1e-5, residual_tol: float = 1e-5,
                 rh_tol: float = 0.01, **grid) -> list[Check]:
    checks = []
    main = normal_shock_run(main_mach, t_final, 0.0, **grid)
    mm = shock_metrics(main)
    checks.append(Check("normal_shock", f"M={main_mach} temporal residual at t={mm['t']:g}",
                        mm["residual"], f"< {residual_tol:g}", residual_tol,
                        mm["residual"] < residual_tol))
    checks.append(Check("normal_shock", f"M={main_mach} downstream state vs Rankine-Hugoniot",
                        mm["rh_error"], f"<= {rh_tol:g}", rh_tol, mm["rh_error"] <= rh_tol))
    disc = main.problem.disc
    case = main.problem.case
    x = disc.nodes()
    Q = disc.moments(main.f)
    for label, xloc in (("upstream", -20.0), ("downstream", 20.0)):
        u, fu = macro.extract_fu(main.f, xloc, disc.mesh, disc.basis, disc.op.vgrid)
        node = int(np.argmin(np.abs(x.ravel() - xloc)))
        qs = macro.conserved_to_primitive(Q[node:node + 1], disc.gamma)[0]
        f_eq = disc.equilibrium(Q[node:node + 1], 5)[0].max(axis=-1)
        n_peaks, skew, dev = fu_shape(u, disc.op.vgrid.weights, fu, qs[1], qs[2] / qs[0], f_eq)
        checks.append(Check("normal_shock", f"f_u {label} single peak (above 1e-3 of max)",
                            n_peaks, 1, None, n_peaks == 1))
        checks.append(Check("normal_shock", f"f_u {label} deviation from local Maxwellian",
                            dev, "<= 0.01", 0.01, dev <= 0.01,
                            f"skewness about bulk velocity {skew:.3e}"))
    ratios = {}
    for m in machs:
        if m == main_mach:
            ratios[m] = mm["ratio"]
            continue
        r = normal_shock_run(m, t_final, sweep_steady_tol, **grid)
        ratios[m] = shock_metrics(r)["ratio"]
    vals = [ratios[m] for m in machs]
    checks.append(Check("normal_shock", "inverse thickness ratios positive", vals, "> 0", None,
                        all(v > 0 for v in vals), "M = " + ", ".join(f"{m:g}" for m in machs)))
    peak = max(ratios, key=ratios.get)
    interior = machs[0] < peak < machs[-1]
    checks.append(Check("normal_shock", "inverse thickness ratio peaks at interior Mach",
                        peak, main_mach, None, peak == main_mach and interior))
    return checks


def run_suite(name: str, **kw) -> list[Check]:
    funcs = {"zeta_table": zeta_table, "pulse_convergence": pulse_convergence,
             "dvm_conservation": dvm_conservation, "well_balance": well_balance,
             "sod": sod, "expansion": expansion, "normal_shock": normal_shock}
    if name not in funcs:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return funcs[name](**kw)

"""Sweep orchestration: schedule, evolution, QFI and SNR extraction, fits."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math

import numpy as np

from .config import SweepConfig
from .errors import TricritError
from .evolve import (LindbladConfig, LindbladMode, dissipative_snr, excitation_amplitude, gaussian_evolve,
                     ground_gaussian, schrodinger_evolve)
from .fitting import FitModel, final_decade, fit_scaling
from .fockspace import FockBasis, eig_hermitian
from .models import (AqrmParams, full_aqrm_builder, build_jcm_np_hamiltonian, build_np_hamiltonian,
                     jcm_np_solution, np_solution)
from .presets import model_base
from .qfi import photon_stats, qfi_jcm_analytic, qfi_np_analytic
from .records import OutputRecord, make_meta
from .schedules import BoundaryLine, PowerCurve, RampLaw, Schedule, StraightLine, build_schedule

REL_DOMEGA = 1e-5


@dataclass
class CellResult:
    config: SweepConfig
    schedule: Schedule
    data: OutputRecord
    fits: dict
    certificate: dict


def sample_indices(n_grid: int, n_samples: int) -> np.ndarray:
    """Indices of schedule grid points, evenly spaced in ln(distance)."""
    return np.unique(np.round(np.linspace(0, n_grid - 1, n_samples)).astype(int))


def _freq(base):
    return base.omega if isinstance(base, AqrmParams) else base.omega_t


def _analytic_qfi(p):
    return (qfi_np_analytic(p) if isinstance(p, AqrmParams) else qfi_jcm_analytic(p)).value


def _analytic_n(p):
    if isinstance(p, AqrmParams):
        return np_solution(p).N
    return 0.5 * (math.cosh(2 * jcm_np_solution(p).gamma_t) - 1)


def _richardson(f1, f2):
    scale = np.maximum(np.abs(f2), 1e-300)
    return (4 * f2 - f1) / 3, float(np.max(np.abs(f2 - f1) / scale))


def _paired_states(cfg, sched, times, dw):
    """(minus, plus) state lists at omega -+ dw/2 on the same coupling schedule."""
    if cfg.engine == "gaussian":
        lo = gaussian_evolve(sched, sample_times=times, domega=-dw / 2).states
        hi = gaussian_evolve(sched, sample_times=times, domega=dw / 2).states
        return lo, hi
    if cfg.engine == "analytic":
        lo, hi = [], []
        for t in times:
            A, c = sched.quadratic_at(t)
            lo.append(ground_gaussian(A - dw / 2, c))
            hi.append(ground_gaussian(A + dw / 2, c))
        return lo, hi
    w = _freq(sched.base)
    runs = [_fock_run(cfg, sched, times, w + s * dw / 2) for s in (-1, 1)]
    return runs[0].states, runs[1].states


def _fock_builder(sched, basis):
    if sched.path.model == "aqrm":
        return lambda p: build_np_hamiltonian(p, basis)
    return lambda p: build_jcm_np_hamiltonian(p, basis)


def _fock_run(cfg, sched, times, omega):
    basis = FockBasis(cfg.n_max)
    bld = _fock_builder(sched, basis)
    _, st = eig_hermitian(bld(sched.params_at(0.0, omega)))
    return schrodinger_evolve(bld, sched, st[0], times, omega, certify=False)


def _reference(cfg, sched, times):
    """(mean_n, var_n) along the reference run."""
    if cfg.engine == "gaussian":
        tr = gaussian_evolve(sched, sample_times=times)
        return tr.column("mean_n"), tr.column("var_n")
    if cfg.engine == "analytic":
        gs = [ground_gaussian(*sched.quadratic_at(t)) for t in times]
        return np.array([g.mean_n for g in gs]), np.array([g.var_n for g in gs])
    tr = _fock_run(cfg, sched, times, _freq(sched.base))
    return tr.column("mean_n"), tr.column("var_n")


def _stats(states):
    return np.array([photon_stats(s)[0] for s in states])


def phase_sensitivity(sched: Schedule) -> float:
    """d Theta / d omega = int 2 dGap/dA dt along the schedule, with Theta = int 2 gap dt."""
    A = np.array([sched.quadratic_at(t)[0] for t in sched.t])
    return float(np.trapezoid(2 * A / sched.gap, sched.t)) if len(sched.t) > 1 else 0.0


def qfi_and_snr(cfg, sched, times, rtol: float = 1e-3, max_levels: int = 8):
    """Fidelity QFI and photon-number SNR of the evolved state.

    The first step keeps the accumulated relative phase of the paired runs
    near 0.01 rad; the step is then halved until successive estimates agree
    to `rtol` and the last two are Richardson-combined.
    """
    w = _freq(sched.base)
    d = min(REL_DOMEGA * w, 0.01 / max(phase_sensitivity(sched), 1e-300))
    F, dn = [], []
    relF = reln = math.inf
    for level in range(max_levels):
        lo, hi = _paired_states(cfg, sched, times, d)
        F.append(np.array([8.0 * a.infidelity(b) / d ** 2 for a, b in zip(lo, hi)]))
        dn.append((_stats(hi) - _stats(lo)) / d)
        if len(F) >= 2:
            Fr, relF = _richardson(F[-2], F[-1])
            dnr, reln = _richardson(dn[-2], dn[-1])
            if relF <= rtol and reln <= rtol:
                break
        d /= 2
    return Fr, dnr, {"qfi_richardson_rel": relF, "dn_richardson_rel": reln, "domega": d,
                     "fd_levels": len(F)}


def default_fits(cfg: SweepConfig, sched: Schedule, cols: dict) -> dict:
    """The scaling fits each protocol is compared against, over the final decade of the distance.

    Fits of F use the instantaneous ground-state QFI reached at time T; when
    the evolved-state QFI is available the same F fits are repeated on it
    under names ending in '_dyn'.
    """
    path, ramp = sched.path, sched.ramp
    fitopt = cfg.fit or {}
    decades = float(fitopt.get("decades", 1.0))
    dist, T = cols["dist"], cols["T"]
    sel = (dist <= final_decade(dist, decades)[1] * (1 + 1e-12)) & (T > 0)
    out = {}

    def put(name, fn):
        try:
            out[name] = fn()
        except TricritError as e:
            out[name] = e

    sources = [("", cols["F_analytic"])]
    if "F_fidelity" in cols:
        sources.append(("_dyn", cols["F_fidelity"]))
    for tag, F in sources:
        if isinstance(path, BoundaryLine):
            put("F_vs_T_power" + tag, lambda: fit_scaling(T, F, FitModel.Power, mask=sel))
            put("F_vs_T_p4" + tag, lambda: fit_scaling(T, F, FitModel.Power, mask=sel, fixed=4.0))
        elif isinstance(path, PowerCurve) or ramp.law is RampLaw.GapQuadratic:
            put("F_vs_T_power" + tag, lambda: fit_scaling(T, F, FitModel.Power, mask=sel))
            if isinstance(path, StraightLine):
                put("F_vs_T_p2" + tag, lambda: fit_scaling(T, F, FitModel.Power, mask=sel, fixed=2.0))
        else:
            put("F_vs_T_exp" + tag, lambda: fit_scaling(T, F, FitModel.Exponential, mask=sel))
    if isinstance(path, BoundaryLine):
        put("T_vs_dist", lambda: fit_scaling(dist, T, FitModel.InversePower, mask=sel, fixed=0.5,
                                             intercept=True))
        put("T_vs_dist_free", lambda: fit_scaling(dist, T, FitModel.InversePower, mask=sel))
    elif isinstance(path, PowerCurve) or ramp.law is RampLaw.GapQuadratic:
        put("T_vs_dist", lambda: fit_scaling(dist, T, FitModel.InversePower, mask=sel))
    else:
        put("T_vs_dist", lambda: fit_scaling(dist, T, FitModel.LogTime, mask=sel, intercept=True))
    return out


def fits_record(fits: dict, meta: dict) -> OutputRecord:
    rows = []
    for name, f in fits.items():
        if isinstance(f, Exception):
            rows.append([name, "error", type(f).__name__, math.nan, math.nan, math.nan, math.nan, math.nan, 0])
            continue
        for k, v in f.coefficients.items():
            # log-space fits report the error of ln a
            err = f.stderr.get(k, f.stderr.get("ln_a", math.nan))
            rows.append([name, f.model.value, k, v, err, f.window[0], f.window[1], f.residual_rms, f.n_points])
    return OutputRecord(["fit", "model", "param", "value", "stderr", "window_lo", "window_hi",
                         "residual_rms", "n_points"], rows, dict(meta, table="fits"))


def run_cell(cfg: SweepConfig) -> CellResult:
    base = model_base(cfg.preset, cfg.overrides)
    path, ramp = cfg.path_spec(), cfg.ramp_spec()
    sched = build_schedule(path, ramp, base, cfg.start, cfg.endpoint)
    if cfg.dissipation is not None:
        return _dissipative_cell(cfg, sched)
    idx = sample_indices(len(sched.t), cfg.n_samples)
    times = sched.t[idx]
    u = sched.u[idx]
    cols = {"s": u}
    a, b = sched.couplings(u)
    cols["g1" if path.model == "aqrm" else "g_t"] = a
    cols["g2" if path.model == "aqrm" else "h"] = b
    cols["dist"] = path.distance(u)
    cols["T"] = times
    cols["gap"] = sched.gap[idx]
    pts = [path.point(base, x) for x in u]
    cols["F_analytic"] = np.array([_analytic_qfi(p) for p in pts])
    cols["N_adiabatic"] = np.array([_analytic_n(p) for p in pts])
    cert = dict(sched.certificate)
    if "qfi" in cfg.outputs or "snr" in cfg.outputs or "trajectory" in cfg.outputs:
        n, var = _reference(cfg, sched, times)
        cols["N"] = n
        cols["var_n"] = var
    if "qfi" in cfg.outputs or "snr" in cfg.outputs:
        F, dn, c = qfi_and_snr(cfg, sched, times)
        cert.update(c)
        if "qfi" in cfg.outputs:
            cols["F_fidelity"] = F
        if "snr" in cfg.outputs:
            with np.errstate(divide="ignore", invalid="ignore"):
                cols["snr"] = np.where(cols["var_n"] > 1e-14, dn ** 2 / cols["var_n"], np.nan)
    if "qfi" in cfg.outputs or "trajectory" in cfg.outputs:
        exc = excitation_amplitude(sched)
        xe = -np.log(path.distance(exc.u))
        cols["c2_sq"] = np.interp(-np.log(cols["dist"]), xe, exc.c2_sq)
    meta = make_meta(cfg.hash, cfg.preset, "sweep", name=cfg.name, T=sched.T,
                     certificate={k: v for k, v in cert.items() if np.isscalar(v)})
    names = list(cols)
    rows = [list(r) for r in zip(*(cols[k] for k in names))]
    data = OutputRecord(names, rows, meta)
    fits = default_fits(cfg, sched, cols) if "fits" in cfg.outputs else {}
    return CellResult(cfg, sched, data, fits, cert)


def _full_builder(basis):
    return full_aqrm_builder(basis)


def _dissipative_cell(cfg, sched):
    dis = cfg.dissipation
    mode = LindbladMode(dis.get("mode", "BosonicOnly"))
    lc = LindbladConfig(float(dis.get("kappa_p", 0.0)), float(dis.get("kappa_a", 0.0)), mode)
    full = mode is LindbladMode.FullModel
    basis = FockBasis(cfg.n_max, with_spin=full)
    bld = _full_builder(basis) if full else _fock_builder(sched, basis)

    def rho0_at(w):
        _, st = eig_hermitian(bld(sched.params_at(0.0, w)))
        return st[0].density()

    w = _freq(sched.base)
    times = np.linspace(0.0, sched.T, cfg.n_samples)
    dw = float(dis.get("omega_step", 1e-4 * w))
    tr = dissipative_snr(bld, sched, lc, rho0_at, w, domega=dw, sample_times=times,
                         richardson=bool(dis.get("richardson", True)))
    pts = [sched.params_at(t) for t in times]
    cols = {"t": times, "g1": tr.column("g1"), "g2": tr.column("g2"), "mean_n": tr.column("mean_n"),
            "var_n": tr.column("var_n"), "snr": tr.column("snr"),
            "F_analytic": np.array([_analytic_qfi(p) for p in pts]), "trace": tr.column("trace")}
    if full:
        cols["sigma_z"] = tr.column("sigma_z")
    cert = dict(tr.certificate)
    cert["rise_then_fall"] = rise_then_fall(cols["snr"])
    meta = make_meta(cfg.hash, cfg.preset, "sweep", name=cfg.name, T=sched.T,
                     certificate={k: v for k, v in cert.items() if v is None or np.isscalar(v)})
    names = list(cols)
    rows = [list(r) for r in zip(*(cols[k] for k in names))]
    return CellResult(cfg, sched, OutputRecord(names, rows, meta), {}, cert)


def rise_then_fall(S, rel: float = 1e-3) -> bool:
    """True when S peaks strictly inside the run, exceeding both ends by more than `rel`."""
    S = np.asarray(S, float)
    S = S[np.isfinite(S)]
    if len(S) < 3:
        return False
    j = int(np.argmax(S))
    peak = S[j]
    return 0 < j < len(S) - 1 and S[0] < peak * (1 - rel) and S[-1] < peak * (1 - rel)


def run_sweep(cfg: SweepConfig, workers: int = 1) -> list:
    """Evaluate every scan cell (concurrently when workers > 1) and merge in scan order.

    Returns [data record, fits record]; scanned runs get a leading 'scan' column.
    """
    cells = cfg.cells()

    def work(item):
        v, c = item
        try:
            return run_cell(c)
        except TricritError as e:
            e.args = (f"[cell {cfg.scan['field']}={v}] {e.args[0]}",) + e.args[1:] if cfg.scan else e.args
            raise

    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(work, cells))
    else:
        results = [work(c) for c in cells]
    meta = make_meta(cfg.hash, cfg.preset, "sweep", name=cfg.name)
    if cfg.scan is None:
        r = results[0]
        meta.update({k: r.data.meta[k] for k in ("T", "certificate")})
        data = OutputRecord(r.data.columns, r.data.rows, meta)
        return [data, fits_record(r.fits, meta)]
    cols = ["scan"] + results[0].data.columns
    rows, fit_rows = [], []
    for (v, _), r in zip(cells, results):
        rows += [[v] + row for row in r.data.rows]
        fit_rows += [[v] + row for row in fits_record(r.fits, meta).rows]
    meta["scan_field"] = cfg.scan["field"]
    fr = fits_record({}, meta)
    return [OutputRecord(cols, rows, meta), OutputRecord(["scan"] + fr.columns, fit_rows, fr.meta)]

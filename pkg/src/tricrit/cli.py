"""Command-line entry point.  Every subcommand writes a columnar record (JSON metadata line,
header, comma-separated rows) to stdout or to --out.

Exit codes: 0 success, 2 configuration error, 3 physics-domain error,
4 numerical-certificate failure.
"""
from __future__ import annotations

import argparse
from dataclasses import replace
import hashlib
import json
import math
import os
import sys

import numpy as np

from .config import SweepConfig
from .errors import ConfigError, NumericalError, PhysicsError
from .evolve import excitation_amplitude, gaussian_evolve, ground_gaussian
from .fitting import FitModel, final_decade, fit_scaling
from .models import AqrmParams, classify_phase, ground_observables, np_coefficients, np_solution, PhaseLabel
from .presets import FIGURE_PRESETS, MODEL_PRESETS, figure_config, model_base
from .qfi import qfi_fidelity, qfi_np_analytic
from .records import OutputRecord, make_meta, read_record, save_record, write_record
from .reproduce import FIGURES, phase_surfaces, reproduce
from .schedules import build_schedule
from .sweep import _fock_run, fits_record, run_cell, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_NUMERICAL = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors already; route the message through stderr only
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _args_hash(ns) -> str:
    d = {k: v for k, v in vars(ns).items() if k not in ("func", "out")}
    return hashlib.sha256(json.dumps(d, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _emit(rec: OutputRecord, out):
    if out:
        save_record(rec, out)
    else:
        write_record(rec, sys.stdout)


def _sweep_config(ns) -> SweepConfig:
    """Config from --config or --figure, then the command-line overrides."""
    if ns.config:
        cfg = SweepConfig.load(ns.config)
    else:
        cfg = figure_config(ns.figure)
    if ns.delta is not None:
        cfg = replace(cfg, ramp={**cfg.ramp, "delta": ns.delta})
    for key in ("k", "eta", "beta"):
        v = getattr(ns, key)
        if v is not None:
            if key not in cfg.path_spec().__dataclass_fields__:
                raise ConfigError(f"path {cfg.path.get('variant')} has no parameter {key}")
            cfg = replace(cfg, path={**cfg.path, key: v})
    if ns.endpoint is not None:
        cfg = replace(cfg, endpoint=ns.endpoint)
    if ns.n_samples is not None:
        cfg = replace(cfg, n_samples=ns.n_samples)
    if getattr(ns, "engine", None):
        cfg = replace(cfg, engine=ns.engine)
    if getattr(ns, "n_max", None) is not None:
        cfg = replace(cfg, n_max=ns.n_max)
    return cfg


def _schedule_of(cfg):
    return build_schedule(cfg.path_spec(), cfg.ramp_spec(), model_base(cfg.preset, cfg.overrides),
                          cfg.start, cfg.endpoint)


def cmd_phase_diagram(ns):
    rec = phase_surfaces(ns.n, ns.lim, model_base(ns.preset))
    rec.meta.update(config_hash=_args_hash(ns), preset=ns.preset)
    _emit(rec, ns.out)


def cmd_np(ns):
    base = model_base(ns.preset)
    p = AqrmParams.scaled(base.Omega, base.omega, ns.s1, ns.s2)
    lab = classify_phase(p)
    if lab is not PhaseLabel.NP:
        g = ground_observables(p)
        row = [p.g1, p.g2, g.label, math.nan, math.nan, math.nan, math.nan, g.dx, g.dp, math.nan]
    else:
        s = np_solution(p)
        row = [p.g1, p.g2, lab.value, s.gamma, s.Delta, s.E0, s.N, s.dx, s.dp, qfi_np_analytic(p).value]
    rec = OutputRecord(["g1", "g2", "phase", "gamma", "gap", "E0", "N", "dx", "dp", "F_analytic"], [row],
                       make_meta(_args_hash(ns), ns.preset, "np"))
    _emit(rec, ns.out)


def _gaussian_ground_at(p: AqrmParams):
    A, c = np_coefficients(p)
    return lambda w: ground_gaussian(A + (w - p.omega), c)


def cmd_qfi_map(ns):
    base = model_base(ns.preset)
    s = np.linspace(-ns.lim, ns.lim, ns.n)
    rows = []
    for s1 in s:
        for s2 in s:
            p = AqrmParams.scaled(base.Omega, base.omega, float(s1), float(s2))
            if classify_phase(p) is not PhaseLabel.NP:
                rows.append([p.g1, p.g2, math.nan, math.nan, math.nan, math.nan])
                continue
            sol = np_solution(p)
            Ff = qfi_fidelity(_gaussian_ground_at(p), p.omega, parameter="omega").value
            rows.append([p.g1, p.g2, qfi_np_analytic(p).value, Ff, sol.gamma, sol.Delta])
    rec = OutputRecord(["g1", "g2", "F_analytic", "F_fidelity", "gamma", "gap"], rows,
                       make_meta(_args_hash(ns), ns.preset, "qfi-map", n=ns.n, lim=ns.lim))
    _emit(rec, ns.out)


def cmd_schedule(ns):
    cfg = _sweep_config(ns)
    sched = _schedule_of(cfg)
    g1, g2 = sched.couplings()
    names = ["t", "g1", "g2", "v", "gap"] if sched.path.model == "aqrm" else ["t", "g_t", "h", "v", "gap"]
    idx = np.unique(np.round(np.linspace(0, len(sched.t) - 1, cfg.n_samples)).astype(int))
    rows = [[sched.t[i], g1[i], g2[i], sched.v[i], sched.gap[i]] for i in idx]
    rec = OutputRecord(names, rows, make_meta(cfg.hash, cfg.preset, "schedule", name=cfg.name, T=sched.T,
                                              certificate=sched.certificate))
    _emit(rec, ns.out)


def _gaussian_parity(g) -> float:
    V, m = g.cov, g.mean
    return float(math.exp(-0.5 * m @ np.linalg.solve(V, m)) / (2 * math.sqrt(np.linalg.det(V))))


def cmd_evolve(ns):
    cfg = _sweep_config(ns)
    sched = _schedule_of(cfg)
    times = np.linspace(0.0, sched.T, cfg.n_samples)
    if cfg.engine == "fock":
        tr = _fock_run(cfg, sched, times, None)
        cols = [tr.column(k) for k in ("g1", "g2", "mean_n", "var_n", "fid_gs", "c2_sq", "parity")]
        cert = tr.certificate
    else:
        tr = gaussian_evolve(sched, sample_times=times)
        exc = excitation_amplitude(sched)
        c2 = np.interp(times, exc.t, exc.c2_sq)
        par = np.array([_gaussian_parity(g) for g in tr.states])
        cols = [tr.column("g1"), tr.column("g2"), tr.column("mean_n"), tr.column("var_n"), tr.column("fid_gs"),
                c2, par]
        cert = {}
    rows = [list(r) for r in zip(times, *cols)]
    rec = OutputRecord(["t", "g1", "g2", "mean_n", "var_n", "fid_gs", "c2_sq", "parity"], rows,
                       make_meta(cfg.hash, cfg.preset, "evolve", engine=cfg.engine, T=sched.T,
                                 certificate=cert))
    _emit(rec, ns.out)


def cmd_lindblad(ns):
    cfg = _sweep_config(ns)
    dis = dict(cfg.dissipation or {})
    rates = {k: v for k, v in MODEL_PRESETS[cfg.preset].items() if k.startswith("kappa")}
    for k in ("kappa_p", "kappa_a"):
        v = getattr(ns, k)
        if v is not None:
            dis[k] = v
        dis.setdefault(k, rates.get(k, 0.0))
    if ns.mode:
        dis["mode"] = ns.mode
    dis.setdefault("mode", "BosonicOnly")
    if ns.no_richardson:
        dis["richardson"] = False
    cfg = replace(cfg, dissipation=dis, outputs=("snr",))
    cell = run_cell(cfg)
    _emit(cell.data, ns.out)


def cmd_fit(ns):
    rec = read_record(ns.input)
    x = np.asarray(rec.column(ns.x), float)
    y = np.asarray(rec.column(ns.y), float)
    window = tuple(ns.window) if ns.window else None
    if ns.decades is not None:
        window = final_decade(x[np.isfinite(x) & (x > 0)], ns.decades, ns.toward)
    f = fit_scaling(x, y, FitModel(ns.model), window=window, fixed=ns.fixed, intercept=ns.intercept,
                    scale=ns.scale)
    meta = make_meta(_args_hash(ns), rec.meta.get("preset", ""), "fit", source=os.path.basename(ns.input))
    _emit(fits_record({f"{ns.y}_vs_{ns.x}": f}, meta), ns.out)


def cmd_reproduce(ns):
    rep = reproduce(ns.figure_id)
    if ns.outdir:
        os.makedirs(ns.outdir, exist_ok=True)
        for name, rec in rep.records.items():
            save_record(rec, os.path.join(ns.outdir, name.replace("/", "_") + ".csv"))
    for line in rep.lines():
        print(line, file=sys.stderr)
    _emit(rep.verdict_record(), ns.out)


def cmd_sweep(ns):
    cfg = SweepConfig.load(ns.config_file)
    data, fits = run_sweep(cfg, workers=ns.workers)
    if ns.out:
        root, ext = os.path.splitext(ns.out)
        save_record(data, ns.out)
        save_record(fits, f"{root}_fits{ext or '.csv'}")
    else:
        write_record(data, sys.stdout)
        if fits.rows:
            write_record(fits, sys.stdout)


def _config_args(p, engine=True):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="JSON sweep configuration")
    src.add_argument("--figure", default="fig2-k2", choices=FIGURE_PRESETS, help="named configuration")
    p.add_argument("--delta", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--endpoint", type=float, help="final path parameter (distance units of the path)")
    p.add_argument("--n-samples", type=int)
    if engine:
        p.add_argument("--engine", choices=("gaussian", "fock"))
        p.add_argument("--n-max", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="tricrit", description="Critical metrology near the triple point of the anisotropic Rabi model.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the record to this file instead of stdout")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)
    sub.add_parser = add_parser

    p = sub.add_parser("phase-diagram", help="phase label, |alpha|, dx, dp over the (g1, g2) plane")
    p.add_argument("--n", type=int, default=101)
    p.add_argument("--lim", type=float, default=2.0, help="half-width of the grid in units of gc")
    p.add_argument("--preset", default="main", choices=list(MODEL_PRESETS))
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("np", help="normal-phase solution at one point")
    p.add_argument("s1", type=float, help="g1 / gc")
    p.add_argument("s2", type=float, help="g2 / gc")
    p.add_argument("--preset", default="main", choices=list(MODEL_PRESETS))
    p.set_defaults(func=cmd_np)

    p = sub.add_parser("qfi-map", help="analytic and fidelity QFI over the plane")
    p.add_argument("--n", type=int, default=41)
    p.add_argument("--lim", type=float, default=0.98)
    p.add_argument("--preset", default="main", choices=list(MODEL_PRESETS))
    p.set_defaults(func=cmd_qfi_map)

    p = sub.add_parser("schedule", help="time, couplings, ramp rate and gap along a protocol")
    _config_args(p, engine=False)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("evolve", help="unitary evolution along a protocol")
    _config_args(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("lindblad", help="dissipative evolution and photon-number SNR")
    _config_args(p, engine=False)
    p.add_argument("--n-max", type=int)
    p.add_argument("--kappa-p", type=float)
    p.add_argument("--kappa-a", type=float)
    p.add_argument("--mode", choices=("FullModel", "BosonicOnly"))
    p.add_argument("--no-richardson", action="store_true")
    p.set_defaults(func=cmd_lindblad)

    p = sub.add_parser("fit", help="fit a scaling law to two columns of a record")
    p.add_argument("input")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--model", required=True, choices=[m.value for m in FitModel])
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--decades", type=float, help="fit only the final decades of x")
    p.add_argument("--toward", default="min", choices=("min", "max"))
    p.add_argument("--fixed", type=float)
    p.add_argument("--intercept", action="store_true")
    p.add_argument("--scale", type=float, default=1.0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("reproduce", help="rerun a figure and compare against printed values")
    p.add_argument("figure_id", help=f"one of {', '.join(FIGURES)}")
    p.add_argument("--outdir", help="also write the underlying data records here")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("sweep", help="run a JSON sweep configuration")
    p.add_argument("config_file")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if getattr(ns, "n_samples", None) is not None and ns.n_samples < 2:
        print("error: --n-samples must be at least 2", file=sys.stderr)
        return EXIT_CONFIG
    try:
        ns.func(ns)
    except PhysicsError as e:
        print(f"physics error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_PHYSICS
    except NumericalError as e:
        print(f"numerical error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, KeyError, OSError) as e:
        print(f"config error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

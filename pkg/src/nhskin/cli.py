"""Command-line front end: binds config files and presets to the library
and writes all tabular outputs (comma-separated records and matrices)."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ExperimentConfig, build_kgrid, build_model, build_times
from .dqpt import detect_critical_points, loschmidt, scaling_study
from .grids import KGrid, Window
from .models import Suppress
from .spectral import (
    band_structure,
    char_poly_roots,
    obc_spectrum,
    real_space_spectrum,
    scan_winding,
    winding_control_spectrum,
)
from .models import PBC
from .wavepacket import GaussianSpec, evolve


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return f"{x:.12g}"


def _write_records(path: Path, header: str, rows) -> None:
    lines = [f"# {header}"]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_matrix(path: Path, mat: np.ndarray) -> None:
    lines = [",".join(_fmt(v) for v in row) for row in np.atleast_2d(mat)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_spectrum(path: Path, eigvals: np.ndarray) -> None:
    order = np.lexsort((eigvals.imag, eigvals.real))
    _write_records(path, "re,im", [(z.real, z.imag) for z in eigvals[order]])


def _load(args) -> ExperimentConfig:
    if args.preset and args.config:
        raise ValueError("pass either --preset or --config, not both")
    if args.preset:
        cfg = cfgmod.preset(args.preset)
    elif args.config:
        cfg = cfgmod.load_config(args.config)
    else:
        raise ValueError("a --preset name or a --config file is required")
    if args.nk is not None:
        cfg = replace(cfg, grid=replace(cfg.grid, n_sites=args.nk))
    analysis = cfg.analysis
    if args.tmax is not None:
        analysis = replace(analysis, t_max=args.tmax)
    if args.dt is not None:
        analysis = replace(analysis, dt=args.dt)
    if args.prominence is not None:
        analysis = replace(analysis, prominence=args.prominence)
    cfg = replace(cfg, analysis=analysis)
    if args.window is not None:
        cfg = replace(cfg, grid=replace(cfg.grid, window=args.window))
    return cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_spectrum(cfg: ExperimentConfig, out: Path) -> None:
    model = build_model(cfg)
    grid = build_kgrid(cfg)
    bands = band_structure(model, grid.n, grid.window)
    rows = []
    for ik, k in enumerate(grid.points):
        row = [k]
        for b in range(bands.n_bands):
            e = bands.energies[b, ik]
            row.extend([e.real, e.imag])
        rows.append(row)
    hdr = "k," + ",".join(f"re_band{b},im_band{b}" for b in range(bands.n_bands))
    _write_records(out / "bloch_bands.csv", hdr, rows)
    n = cfg.grid.n_sites
    _write_spectrum(out / "spectrum_pbc.csv", real_space_spectrum(model, n, PBC))
    _write_spectrum(out / "spectrum_obc.csv", obc_spectrum(model, n))
    _write_spectrum(out / "spectrum_wc_left.csv",
                    winding_control_spectrum(model, n, Suppress.LEFTWARD_END_HOPS))
    _write_spectrum(out / "spectrum_wc_right.csv",
                    winding_control_spectrum(model, n, Suppress.RIGHTWARD_END_HOPS))


def cmd_winding_scan(cfg: ExperimentConfig, out: Path) -> None:
    model = build_model(cfg)
    a = cfg.analysis
    records = scan_winding(model, (a.scan_re_min, a.scan_re_max),
                           (a.scan_im_min, a.scan_im_max),
                           a.scan_resolution, nk=a.scan_nk)
    _write_records(out / "winding_scan.csv", "re,im,winding", records)


def cmd_gbz(cfg: ExperimentConfig, out: Path) -> None:
    model = build_model(cfg)
    root_rows, summary_rows = [], []
    for re0, im0 in cfg.analysis.gbz_eps0:
        rep = char_poly_roots(model, complex(re0, im0))
        for idx, z in enumerate(rep.roots):
            root_rows.append((re0, im0, rep.pole_order, idx, z.real, z.imag, abs(z)))
        pair = rep.symplectic_pair
        summary_rows.append((
            re0, im0, rep.pole_order,
            rep.ordinary_gap if rep.ordinary_gap is not None else float("nan"),
            pair.inner_gap if pair else float("nan"),
            pair.outer_gap if pair else float("nan"),
            pair.reciprocal_mismatch if pair else float("nan"),
        ))
    _write_records(out / "gbz_roots.csv",
                   "re_eps0,im_eps0,pole_order,root_index,re_z,im_z,abs_z", root_rows)
    _write_records(out / "gbz_summary.csv",
                   "re_eps0,im_eps0,pole_order,ordinary_gap,inner_gap,outer_gap,"
                   "reciprocal_mismatch", summary_rows)


def cmd_evolve(cfg: ExperimentConfig, out: Path) -> None:
    model = build_model(cfg)
    grid = build_kgrid(cfg)
    run = evolve(model, cfg.wavepacket, grid, build_times(cfg))
    n = grid.n
    nb = run.n_bands
    rows = []
    for it, t in enumerate(run.times):
        kmax = [run.kmax_numeric[it, b] if b < nb else float("nan") for b in (0, 1)]
        com = [run.com_numeric_channels[it, b] % n if b < nb else float("nan")
               for b in (0, 1)]
        vg = [run.vg[it, b] if b < nb else float("nan") for b in (0, 1)]
        rows.append((t, kmax[0], kmax[1], com[0], com[1],
                     run.com_numeric_total[it] % n, vg[0], vg[1]))
    _write_records(out / "trajectory.csv",
                   "t,kmax_plus,kmax_minus,com_plus,com_minus,com_total,vg_plus,vg_minus",
                   rows)
    mom_density = (np.abs(run.momentum_amps) ** 2).sum(axis=1)
    real_density = (np.abs(run.real_amps) ** 2).sum(axis=2)
    _write_matrix(out / "heatmap_momentum.csv", mom_density)
    _write_matrix(out / "heatmap_real.csv", real_density)


def cmd_dqpt(cfg: ExperimentConfig, out: Path) -> None:
    model = build_model(cfg)
    grid = build_kgrid(cfg)
    run = evolve(model, cfg.wavepacket, grid, build_times(cfg))
    series = loschmidt(run)
    cps = detect_critical_points(series, prominence_fraction=cfg.analysis.prominence,
                                 run=run)
    _write_records(out / "loschmidt.csv", "t,echo,rate",
                   zip(series.times, series.echo, series.rate))
    rows = []
    for i, tc in enumerate(cps.critical_times):
        interval = cps.intervals[i] if i < cps.intervals.size else float("nan")
        pred = (cps.predicted_times[i]
                if cps.predicted_times is not None and i < cps.predicted_times.size
                else float("nan"))
        rows.append((i, tc, interval, pred))
    _write_records(out / "critical_points.csv", "index,t_c,interval,predicted_t_c", rows)
    _write_records(out / "revivals.csv", "index,t_revival",
                   list(enumerate(cps.revival_times)))


def cmd_scaling(cfg: ExperimentConfig, out: Path) -> None:
    model = build_model(cfg)
    base = cfg.wavepacket
    n_base = cfg.grid.n_sites

    def make_spec(n: int) -> GaussianSpec:
        scale = n / n_base
        return replace(base, n0_plus=base.n0_plus * scale,
                       n0_minus=base.n0_minus * scale)

    report = scaling_study(model, make_spec, cfg.analysis.scaling_n,
                           cfg.analysis.t_max, dt=cfg.analysis.dt,
                           prominence_fraction=cfg.analysis.prominence,
                           window=Window(cfg.grid.window))
    rows = []
    for i, n in enumerate(report.n_values):
        fitted = report.slope * n if report.slope is not None else float("nan")
        rows.append((n, report.critical_counts[i], report.mean_intervals[i], fitted))
    _write_records(out / "scaling_summary.csv",
                   "n,critical_count,mean_interval,fitted_interval", rows)
    slope = report.slope if report.slope is not None else float("nan")
    resid = report.residual if report.residual is not None else float("nan")
    _write_records(out / "scaling_fit.csv", "slope,residual,fit_applicable",
                   [(slope, resid, int(report.fit_applicable))])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nhskin",
        description="1D non-Hermitian lattice toolkit: spectra, winding maps,"
                    " characteristic roots, wavepacket channels, echo diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "spectrum": cmd_spectrum,
        "winding-scan": cmd_winding_scan,
        "gbz": cmd_gbz,
        "evolve": cmd_evolve,
        "dqpt": cmd_dqpt,
        "scaling": cmd_scaling,
    }
    for name in commands:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--preset", type=str, default=None)
        p.add_argument("--out", type=str, default="out")
        p.add_argument("--nk", type=int, default=None,
                       help="override grid size / site count")
        p.add_argument("--tmax", type=float, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--prominence", type=float, default=None)
        p.add_argument("--window", choices=["0_2pi", "pm_pi"], default=None)
    sub.add_parser("preset-list")

    args = parser.parse_args(argv)
    if args.command == "preset-list":
        for name in cfgmod.PRESET_NAMES:
            print(name)
        return 0
    try:
        cfg = _load(args)
    except Exception as exc:
        print(f"error in stage config: {exc}", file=sys.stderr)
        return 1
    try:
        commands[args.command](cfg, _outdir(args))
    except Exception as exc:
        print(f"error in stage {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

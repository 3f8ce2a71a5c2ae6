"""Configuration-driven command line front end.

One JSON config file describes the model, correlation, grids, time
stepping, Monte Carlo settings and fit windows; subcommands select the
route.  Unknown config keys are hard errors (silent misconfiguration of
physics parameters is worse than noise).  Every output directory receives
``manifest.json`` with the full resolved config, seed and package version,
sufficient to re-run the experiment exactly; outputs carry no timestamps
so identical config + seed produce byte-identical files.

Exit codes: 0 ok, 2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic_continuum import (GaussianPureState, MomentSeries, Provenance, cubic_coefficient,
                                 msd_closed_form)
from .analytic_lattice import (BallisticFlag, LatticeMSDLaw, LatticeMomentInputs,
                               diffusion_constant, msd_inverse_laplace_closed_form)
from .core_model import (GaussianCorrelation, ModelParams, Space, laplacian_g_at_zero,
                         load_correlation_csv, validate_hypotheses)
from .errors import ConfigError, Error, InputError, NumericalError
from .evolve_lattice import LatticeInitialData, evolve_hierarchy
from .mc_simulator import (colored_noise_convergence_study, gaussian_wavepacket, point_state,
                           run_classical, run_continuum, run_lattice)
from .noise_field import FieldGrid
from .transforms_fit import FitResult, fit_power_law

__all__ = ["DEFAULT_CONFIG", "load_config", "save_config", "run", "emit_plot_data", "main"]


DEFAULT_CONFIG = {
    "model": {"hbar": 1.0, "mass": 1.0, "v0": 1.0, "dim": 1, "space": "continuum"},
    "correlation": {"kind": "gaussian", "matrix": [[1.0]], "path": None},
    "initial": {"kind": "gaussian", "sigma": [1.0], "trace": 1.0},
    "grid": {"points": 1024, "length": 280.0},
    "lattice_box": {"sites": 256},
    "evolve": {"y_box": 9, "dt": 0.01, "record_every": 10, "t_max": 50.0},
    "time": {"t_min": 0.0, "t_max": 10.0, "dt": 0.01, "record_every": 10, "n_points": 181},
    "mc": {"n_traj": 2000, "batch_size": 250, "boundary_tol": 1e-6, "scheme": "stratonovich"},
    "fit": {"window": [2.0, 10.0]},
    "colored": {"nu_list": [0.4, 0.2, 0.1], "include_ito": True, "window_frac": 0.5},
    "classical": {"v0_init": [0.0]},
    "seed": 12345,
    "out_dir": "out",
    "route": None,
}


def _check_keys(cfg, template, path="config"):
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: expected an object, got {type(cfg).__name__}")
    for key, val in cfg.items():
        if key not in template:
            raise ConfigError(f"{path}.{key}: unknown key")
        if isinstance(template[key], dict) and template[key]:
            _check_keys(val, template[key], f"{path}.{key}")


def _merge(template, override):
    out = copy.deepcopy(template)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path) -> dict:
    """Parse and validate a config file against the known key tree."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    _check_keys(raw, DEFAULT_CONFIG)
    return _merge(DEFAULT_CONFIG, raw)


def save_config(cfg: dict, path):
    with open(path, "w", newline="\n") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _build_params(cfg) -> ModelParams:
    m = cfg["model"]
    try:
        space = Space(m["space"])
    except ValueError:
        raise ConfigError(f"config.model.space: must be 'continuum' or 'lattice', got {m['space']!r}")
    return ModelParams(hbar=float(m["hbar"]), mass=float(m["mass"]), v0=float(m["v0"]),
                       dim=int(m["dim"]), space=space)


def _build_correlation(cfg, params):
    c = cfg["correlation"]
    if c["kind"] == "gaussian":
        return GaussianCorrelation(c["matrix"])
    if c["kind"] == "table":
        if not c.get("path"):
            raise ConfigError("config.correlation.path: required for kind 'table'")
        return load_correlation_csv(c["path"], dim=params.dim)
    raise ConfigError(f"config.correlation.kind: unknown kind {c['kind']!r}")


def _build_initial(cfg, params):
    ini = cfg["initial"]
    if ini["kind"] == "gaussian":
        return GaussianPureState(ini["sigma"], dim=params.dim, trace=float(ini["trace"]))
    if ini["kind"] == "point":
        return None  # point states are built on the grid
    raise ConfigError(f"config.initial.kind: unknown kind {ini['kind']!r}")


def _write_manifest(out_dir: Path, cfg, route):
    manifest = {
        "config": cfg,
        "route": route,
        "seed": cfg["seed"],
        "package_version": __version__,
        "rerun": f"wnt {route} --config config.json --seed {cfg['seed']}",
    }
    with open(out_dir / "manifest.json", "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    save_config(cfg, out_dir / "config.json")


def _write_fit(fit: FitResult, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(fit.to_json(indent=2, sort_keys=True))
        fh.write("\n")


def _time_grid(cfg):
    t = cfg["time"]
    lo = float(t["t_min"])
    return np.linspace(lo, float(t["t_max"]), int(t["n_points"]))


# ---------------------------------------------------------------- routes


def _route_validate(cfg, out_dir, threads):
    params = _build_params(cfg)
    corr = _build_correlation(cfg, params)
    report = validate_hypotheses(corr, params)
    print(report.summary())
    (out_dir / "validation.txt").write_text(report.summary() + "\n")
    return 0 if report.passed else 2


def _route_analytic_msd(cfg, out_dir, threads):
    params = _build_params(cfg)
    corr = _build_correlation(cfg, params)
    init = _build_initial(cfg, params)
    if init is None:
        raise ConfigError("config.initial.kind: analytic route needs a gaussian initial state")
    times = _time_grid(cfg)
    series = msd_closed_form(times, init, corr, params)
    series.to_csv(out_dir / "msd_closed_form.csv")
    fit = fit_power_law(series, window=tuple(cfg["fit"]["window"]))
    _write_fit(fit, out_dir / "fit.json")
    coeff = cubic_coefficient(init, corr, params)
    with open(out_dir / "cubic_coefficient.json", "w", newline="\n") as fh:
        json.dump({"cubic_coefficient": coeff}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"exponent {fit.exponent:.4f} (window {fit.window}), cubic coefficient {coeff:.6g}")
    return 0


def _lattice_inputs(cfg, params, corr):
    if cfg["initial"]["kind"] != "point":
        raise ConfigError("config.initial.kind: lattice law routes use the point initial state")
    return LatticeMomentInputs.point_localized(corr, params)


def _route_lattice_law(cfg, out_dir, threads):
    params = _build_params(cfg)
    corr = _build_correlation(cfg, params)
    inputs = _lattice_inputs(cfg, params, corr)
    law = LatticeMSDLaw.from_inputs(inputs)
    d = diffusion_constant(inputs, trace=1.0)
    payload = {
        "Cd": law.cd,
        "gamma": [float(g) for g in inputs.gamma],
        "D": "ballistic" if isinstance(d, BallisticFlag) else d,
    }
    with open(out_dir / "law.json", "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    times = _time_grid(cfg)
    mask = times >= 0
    series = MomentSeries(times=times[mask], msd=msd_inverse_laplace_closed_form(times[mask], law),
                          provenance=Provenance.CLOSED_FORM)
    series.to_csv(out_dir / "msd_lattice_law.csv")
    print(f"Cd {law.cd:.6g}, gamma {payload['gamma']}, D {payload['D']}")
    return 0


def _route_evolve_lattice(cfg, out_dir, threads):
    params = _build_params(cfg)
    corr = _build_correlation(cfg, params)
    ev = cfg["evolve"]
    init = LatticeInitialData.point(params.dim, int(ev["y_box"]))
    series, info = evolve_hierarchy(init, corr, params, t_max=float(ev["t_max"]), dt=float(ev["dt"]),
                                    record_every=int(ev["record_every"]))
    series.to_csv(out_dir / "msd_evolve.csv")
    diag = {"trace_drift": info["trace_drift"], "max_imag_residue": info["max_imag_residue"],
            "max_boundary_mass": info["max_boundary_mass"]}
    with open(out_dir / "evolve_diagnostics.json", "w", newline="\n") as fh:
        json.dump(diag, fh, indent=2, sort_keys=True)
        fh.write("\n")
    fit = fit_power_law(series, window=tuple(cfg["fit"]["window"]))
    _write_fit(fit, out_dir / "fit.json")
    print(f"exponent {fit.exponent:.4f} on window {fit.window}; trace drift {diag['trace_drift']:.2e}")
    return 0


def _mc_common(cfg, params, threads):
    mc = cfg["mc"]
    t = cfg["time"]
    return dict(t_max=float(t["t_max"]), dt=float(t["dt"]), n_traj=int(mc["n_traj"]),
                seed=int(cfg["seed"]), record_every=int(t["record_every"]),
                boundary_tol=float(mc["boundary_tol"]), scheme=mc["scheme"], threads=threads,
                batch_size=int(mc["batch_size"]))


def _route_mc_continuum(cfg, out_dir, threads):
    params = _build_params(cfg)
    corr = _build_correlation(cfg, params)
    grid = FieldGrid.continuum(params.dim, int(cfg["grid"]["points"]), float(cfg["grid"]["length"]))
    if cfg["initial"]["kind"] == "gaussian":
        psi0 = gaussian_wavepacket(grid, cfg["initial"]["sigma"])
    else:
        psi0 = point_state(grid)
    result = run_continuum(grid, psi0, corr, params, **_mc_common(cfg, params, threads))
    result.to_csv(out_dir / "ensemble.csv")
    fit = fit_power_law(result.times, result.msd_mean, window=tuple(cfg["fit"]["window"]))
    _write_fit(fit, out_dir / "fit.json")
    print(f"exponent {fit.exponent:.4f} +- {fit.stderr_exponent:.4f} on {fit.window}; "
          f"norm drift {result.norm_drift_max:.2e}, boundary {result.boundary_mass_max:.2e}")
    return 0


def _route_mc_lattice(cfg, out_dir, threads):
    params = _build_params(cfg)
    corr = _build_correlation(cfg, params)
    grid = FieldGrid.lattice(params.dim, int(cfg["lattice_box"]["sites"]))
    psi0 = point_state(grid) if cfg["initial"]["kind"] == "point" else gaussian_wavepacket(
        grid, cfg["initial"]["sigma"])
    result = run_lattice(grid, psi0, corr, params, **_mc_common(cfg, params, threads))
    result.to_csv(out_dir / "ensemble.csv")
    fit = fit_power_law(result.times, result.msd_mean, window=tuple(cfg["fit"]["window"]))
    _write_fit(fit, out_dir / "fit.json")
    print(f"exponent {fit.exponent:.4f} +- {fit.stderr_exponent:.4f} on {fit.window}")
    return 0


def _route_classical(cfg, out_dir, threads):
    params = _build_params(cfg)
    corr = _build_correlation(cfg, params)
    t = cfg["time"]
    result = run_classical(params.dim, corr, params, cfg["classical"]["v0_init"],
                           t_max=float(t["t_max"]), dt=float(t["dt"]),
                           n_traj=int(cfg["mc"]["n_traj"]), seed=int(cfg["seed"]),
                           record_every=int(t["record_every"]), threads=threads)
    result.to_series().to_csv(out_dir / "msd_classical.csv")
    vseries = MomentSeries(times=result.times, msd=np.maximum(result.vvar_mean, 0.0),
                           provenance=Provenance.MONTE_CARLO)
    vseries.to_csv(out_dir / "velocity_variance.csv")
    fit = fit_power_law(result.times, result.msd_mean, window=tuple(cfg["fit"]["window"]))
    _write_fit(fit, out_dir / "fit.json")

    # velocity-variance slope against the two reference expressions
    x = result.times
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, result.vvar_mean, rcond=None)
    slope = float(coef[0])
    pred = A @ coef
    sst = float(np.sum((result.vvar_mean - result.vvar_mean.mean()) ** 2))
    r2 = 1.0 - float(np.sum((result.vvar_mean - pred) ** 2)) / sst if sst > 0 else 1.0
    lap_g = laplacian_g_at_zero(corr)
    report = {
        "vvar_slope": slope,
        "vvar_r2": r2,
        "slope_reference_full": -params.v0**2 * lap_g / params.mass**2,
        "slope_reference_printed_half": 0.5 * params.v0**2 * lap_g,
        "msd_exponent": fit.exponent,
    }
    with open(out_dir / "classical_report.json", "w", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"msd exponent {fit.exponent:.3f}; vvar slope {slope:.4f} "
          f"(reference {report['slope_reference_full']:.4f}, printed form {report['slope_reference_printed_half']:.4f})")
    return 0


def _route_colored_study(cfg, out_dir, threads):
    params = _build_params(cfg)
    corr = _build_correlation(cfg, params)
    grid = FieldGrid.continuum(params.dim, int(cfg["grid"]["points"]), float(cfg["grid"]["length"]))
    init = _build_initial(cfg, params)
    if init is None:
        raise ConfigError("config.initial.kind: colored study needs a gaussian initial state")
    psi0 = gaussian_wavepacket(grid, cfg["initial"]["sigma"])
    t = cfg["time"]
    rows = colored_noise_convergence_study(
        cfg["colored"]["nu_list"], grid, psi0, init, corr, params,
        t_max=float(t["t_max"]), dt=float(t["dt"]), n_traj=int(cfg["mc"]["n_traj"]),
        seed=int(cfg["seed"]), record_every=int(t["record_every"]),
        window_frac=float(cfg["colored"]["window_frac"]),
        include_ito=bool(cfg["colored"]["include_ito"]),
        boundary_tol=float(cfg["mc"]["boundary_tol"]), threads=threads,
        batch_size=int(cfg["mc"]["batch_size"]))
    table = [{"label": r.label, "nu": r.nu, "deviation": r.deviation, "stderr": r.stderr,
              "z": r.z_score} for r in rows]
    with open(out_dir / "colored_study.json", "w", newline="\n") as fh:
        json.dump(table, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for r in rows:
        r.result.to_csv(out_dir / f"ensemble_{r.label.replace('=', '_')}.csv")
        print(f"{r.label:>12}: deviation {r.deviation:+.4f} +- {r.stderr:.4f} (z = {r.z_score:+.1f})")
    return 0


def cubic_adjudication(mc_result, init, corr, params, window) -> dict:
    """Measured cubic coefficients (both routes) against the two reference
    normalizations; see docs/conventions.md.

    The Monte Carlo estimator averages (msd - free)/t^3 per trajectory over
    the window (the ratio has roughly flat variance once the cubic term
    dominates), giving an honest 95% interval from trajectory scatter.
    """
    times = mc_result.times
    mask = (times >= window[0]) & (times <= window[1])
    free = init.free_msd(times, params)
    ratios = (mc_result.per_traj_msd[:, mask] - free[mask]) / times[mask] ** 3
    b_traj = ratios.mean(axis=1)
    b_mc = float(np.mean(b_traj))
    b_mc_se = float(np.std(b_traj, ddof=1) / math.sqrt(mc_result.n_traj))
    b_cf = cubic_coefficient(init, corr, params)
    lap_g = laplacian_g_at_zero(corr)
    cand_full = -(1.0 / 3.0) * (params.v0 / params.mass) ** 2 * lap_g * init.trace
    cand_halved = cand_full / 2.0**params.dim

    def match(value):
        for name, cand in (("full", cand_full), ("dimension-halved", cand_halved)):
            if abs(value - cand) <= 0.1 * abs(cand):
                return name
        return "neither"

    return {
        "cubic_closed_form": b_cf,
        "cubic_monte_carlo": b_mc,
        "cubic_monte_carlo_ci95": [b_mc - 1.96 * b_mc_se, b_mc + 1.96 * b_mc_se],
        "reference_full_third": cand_full,
        "reference_dimension_halved": cand_halved,
        "internal_agreement_rel": abs(b_mc - b_cf) / abs(b_cf),
        "closed_form_matches": match(b_cf),
        "monte_carlo_matches": match(b_mc),
    }


def _route_compare(cfg, out_dir, threads):
    params = _build_params(cfg)
    corr = _build_correlation(cfg, params)
    lines = []
    report = {}
    if params.space is Space.CONTINUUM:
        init = _build_initial(cfg, params)
        grid = FieldGrid.continuum(params.dim, int(cfg["grid"]["points"]), float(cfg["grid"]["length"]))
        psi0 = gaussian_wavepacket(grid, cfg["initial"]["sigma"])
        mc = run_continuum(grid, psi0, corr, params, **_mc_common(cfg, params, threads))
        window = tuple(cfg["fit"]["window"])
        times = mc.times
        cf = msd_closed_form(times, init, corr, params)
        cf.to_csv(out_dir / "msd_closed_form.csv")
        mc.to_csv(out_dir / "ensemble.csv")

        adj = cubic_adjudication(mc, init, corr, params, window)
        mask = (times >= window[0]) & (times <= window[1])
        ratio = mc.msd_mean[mask] / cf.msd[mask]
        with open(out_dir / "pointwise_ratio.csv", "w", newline="\n") as fh:
            fh.write("t,msd_mc,msd_closed_form,ratio\n")
            for t_i, a, b in zip(times[mask], mc.msd_mean[mask], cf.msd[mask]):
                fh.write(f"{t_i:.17g},{a:.17g},{b:.17g},{a / b:.17g}\n")
        adj["pointwise_ratio_minmax"] = [float(ratio.min()), float(ratio.max())]
        adj["exponent_closed_form"] = fit_power_law(cf, window=window).exponent
        adj["exponent_monte_carlo"] = fit_power_law(times, mc.msd_mean, window=window).exponent
        report["continuum"] = adj
        ci_half = adj["cubic_monte_carlo"] - adj["cubic_monte_carlo_ci95"][0]
        lines += [
            "continuum cubic-coefficient adjudication",
            f"  closed form      : {adj['cubic_closed_form']:.6g}  (matches: {adj['closed_form_matches']})",
            f"  monte carlo      : {adj['cubic_monte_carlo']:.6g} +- {ci_half:.2g} (95%)  "
            f"(matches: {adj['monte_carlo_matches']})",
            f"  reference 1/3    : {adj['reference_full_third']:.6g}",
            f"  reference 1/(3*2^d): {adj['reference_dimension_halved']:.6g}",
            f"  internal agreement: {100 * adj['internal_agreement_rel']:.2f}%",
        ]
    else:
        inputs = _lattice_inputs(cfg, params, corr)
        law = LatticeMSDLaw.from_inputs(inputs)
        ev = cfg["evolve"]
        init = LatticeInitialData.point(params.dim, int(ev["y_box"]))
        series, info = evolve_hierarchy(init, corr, params, t_max=float(ev["t_max"]),
                                        dt=float(ev["dt"]), record_every=int(ev["record_every"]))
        series.to_csv(out_dir / "msd_evolve.csv")
        mask = series.times > 0
        lawvals = msd_inverse_laplace_closed_form(series.times[mask], law)
        calib = float(series.msd[mask][-1] / lawvals[-1])
        ratio = series.msd[mask] / (calib * lawvals)
        table = MomentSeries(times=series.times[mask], msd=calib * lawvals,
                             provenance=Provenance.CLOSED_FORM)
        table.to_csv(out_dir / "msd_lattice_law_calibrated.csv")
        with open(out_dir / "pointwise_ratio.csv", "w", newline="\n") as fh:
            fh.write("t,msd_evolve,law_calibrated,ratio\n")
            for t_i, a, b in zip(series.times[mask], series.msd[mask], calib * lawvals):
                fh.write(f"{t_i:.17g},{a:.17g},{b:.17g},{a / b:.17g}\n")
        report["lattice"] = {
            "calibration_constant": calib,
            "max_rel_deviation": float(np.max(np.abs(ratio - 1.0))),
            "exponent_evolve": fit_power_law(series, window=tuple(cfg["fit"]["window"])).exponent,
        }
        lines += [
            "lattice evolve vs closed-form law",
            f"  calibration constant: {calib:.8f}",
            f"  max rel deviation   : {report['lattice']['max_rel_deviation']:.3e}",
            f"  evolve exponent     : {report['lattice']['exponent_evolve']:.4f}",
        ]

    with open(out_dir / "compare_report.json", "w", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    text = "\n".join(lines) + "\n"
    (out_dir / "compare_report.txt").write_text(text)
    print(text, end="")
    return 0


_ROUTES = {
    "validate": _route_validate,
    "analytic-msd": _route_analytic_msd,
    "lattice-law": _route_lattice_law,
    "evolve-lattice": _route_evolve_lattice,
    "mc-continuum": _route_mc_continuum,
    "mc-lattice": _route_mc_lattice,
    "classical": _route_classical,
    "colored-study": _route_colored_study,
    "compare": _route_compare,
}


def run(config_path, route=None, seed=None, out_dir=None, threads=1) -> int:
    """Execute a route from a config file; returns the process exit code."""
    cfg = load_config(config_path)
    route = route or cfg.get("route")
    if route not in _ROUTES:
        raise ConfigError(f"unknown route {route!r}; pick one of {sorted(_ROUTES)}")
    if seed is not None:
        cfg["seed"] = int(seed)
    if out_dir is not None:
        cfg["out_dir"] = str(out_dir)
    cfg["route"] = route
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    code = _ROUTES[route](cfg, out, threads)
    _write_manifest(out, cfg, route)
    return code


# ------------------------------------------------------------ plot data


def emit_plot_data(series_list, labels, out_prefix, fits=None):
    """Write a gnuplot-ready .dat table and a log-log SVG chart.

    Columns come in (t, value) pairs per series; rows beyond a series'
    length carry the token ``NA``.  The SVG annotates each series with its
    fitted slope when ``fits`` is given.
    """
    if not series_list:
        raise InputError("emit_plot_data needs at least one series")
    series_list = list(series_list)
    labels = list(labels)
    if len(labels) != len(series_list):
        raise InputError("labels must match series")

    dat_path = Path(f"{out_prefix}.dat")
    svg_path = Path(f"{out_prefix}.svg")
    n_rows = max(s.times.size for s in series_list)
    with open(dat_path, "w", newline="\n") as fh:
        fh.write("# " + "  ".join(f"t_{lbl} {lbl}" for lbl in labels) + "\n")
        for i in range(n_rows):
            cells = []
            for s in series_list:
                if i < s.times.size:
                    cells += [f"{s.times[i]:.17g}", f"{s.msd[i]:.17g}"]
                else:
                    cells += ["NA", "NA"]
            fh.write(" ".join(cells) + "\n")

    _write_loglog_svg(svg_path, series_list, labels, fits)
    return dat_path, svg_path


_SVG_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _write_loglog_svg(path, series_list, labels, fits=None):
    width, height = 640, 480
    ml, mr, mt, mb = 70, 20, 20, 50
    pts = []
    for s in series_list:
        mask = (s.times > 0) & (s.msd > 0)
        pts.append((np.log10(s.times[mask]), np.log10(s.msd[mask])))
    xs = np.concatenate([p[0] for p in pts if p[0].size])
    ys = np.concatenate([p[1] for p in pts if p[1].size])
    if xs.size == 0:
        raise InputError("no positive data to plot on log-log axes")
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    x1 = x0 + 1.0 if x1 <= x0 else x1
    y1 = y0 + 1.0 if y1 <= y0 else y1

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * (width - ml - mr)

    def sy(y):
        return height - mb - (y - y0) / (y1 - y0) * (height - mt - mb)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{width - ml - mr}" height="{height - mt - mb}" '
           'fill="none" stroke="black"/>']
    for dec in range(math.floor(x0), math.ceil(x1) + 1):
        if x0 <= dec <= x1:
            out.append(f'<line x1="{sx(dec):.1f}" y1="{height - mb}" x2="{sx(dec):.1f}" '
                       f'y2="{mt}" stroke="#dddddd"/>')
            out.append(f'<text x="{sx(dec):.1f}" y="{height - mb + 18}" text-anchor="middle">'
                       f'1e{dec}</text>')
    for dec in range(math.floor(y0), math.ceil(y1) + 1):
        if y0 <= dec <= y1:
            out.append(f'<line x1="{ml}" y1="{sy(dec):.1f}" x2="{width - mr}" '
                       f'y2="{sy(dec):.1f}" stroke="#dddddd"/>')
            out.append(f'<text x="{ml - 6}" y="{sy(dec) + 4:.1f}" text-anchor="end">1e{dec}</text>')
    out.append(f'<text x="{(ml + width - mr) / 2}" y="{height - 12}" text-anchor="middle">t</text>')
    out.append(f'<text x="16" y="{(mt + height - mb) / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {(mt + height - mb) / 2})">msd</text>')

    for i, ((lx, ly), lbl) in enumerate(zip(pts, labels)):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        if lx.size:
            path_d = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(lx, ly))
            out.append(f'<polyline points="{path_d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        note = lbl
        if fits is not None and fits[i] is not None:
            note += f" slope {fits[i].exponent:.3f}"
        out.append(f'<text x="{ml + 10}" y="{mt + 18 + 16 * i}" fill="{color}">{note}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


# ------------------------------------------------------------------ main


def _route_fit(args) -> int:
    series = MomentSeries.from_csv(args.csv)
    if (args.t_lo is None) != (args.t_hi is None):
        raise ConfigError("--t-lo and --t-hi must be given together")
    window = (args.t_lo, args.t_hi) if args.t_lo is not None else None
    fit = fit_power_law(series, window=window)
    text = fit.to_json(indent=2, sort_keys=True)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "fit.json").write_text(text + "\n")
    return 0


def _route_plot(args) -> int:
    series = [MomentSeries.from_csv(p) for p in args.csv]
    labels = [Path(p).stem for p in args.csv]
    fits = []
    for s in series:
        try:
            fits.append(fit_power_law(s))
        except Error:
            fits.append(None)
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    dat, svg = emit_plot_data(series, labels, out / "series", fits=fits)
    print(f"wrote {dat} and {svg}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wnt",
        description="Transport of a quantum particle in a rapidly fluctuating random potential: "
                    "analytic, deterministic and Monte Carlo routes.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config file")
    common.add_argument("--seed", type=int, default=None, help="override config seed")
    common.add_argument("--out", default=None, help="override output directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads for ensembles")

    for name in _ROUTES:
        sub.add_parser(name, parents=[common], help=f"run the {name} route")

    p_fit = sub.add_parser("fit", help="power-law fit of an existing series CSV")
    p_fit.add_argument("csv")
    p_fit.add_argument("--t-lo", type=float, default=None)
    p_fit.add_argument("--t-hi", type=float, default=None)
    p_fit.add_argument("--out", default=None)

    p_plot = sub.add_parser("plot", help="emit gnuplot .dat and log-log .svg for series CSVs")
    p_plot.add_argument("csv", nargs="+")
    p_plot.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "fit":
            return _route_fit(args)
        if args.command == "plot":
            return _route_plot(args)
        return run(args.config, route=args.command, seed=args.seed, out_dir=args.out,
                   threads=args.threads)
    except (ConfigError, InputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

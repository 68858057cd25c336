"""Configuration-driven command line runner.

Every invocation executes one mode (relax, vdos, tst, bias-check,
oracle), writes its data series as plot-ready CSVs plus a manifest.json
recording the resolved configuration, derived parameters, library
versions, wall time and a content hash per output file. Reruns with the
same config and seed reproduce the CSVs byte for byte.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import MODES, RunConfig, load_config
from .constants import (WAVENUMBER_PER_HARTREE, angstrom_to_bohr,
                        hartree_to_kelvin, kelvin_to_hartree)
from .diagnostics import relax
from .errors import (BasisMismatchError, ConfigurationError, DomainError,
                     KvnError, ResolutionError, TableFormatError)
from .grid import build_grid, encode_gaussian
from .oracles import canonical_sampler, cos_filter_stationary_bias, \
    langevin_ensemble, verlet_ensemble
from .propagator import calibrate, momentum_bias_experiment
from .tst import TstConfig, analytic_canonical_state, arrhenius_sweep, \
    crossing_reference
from .vdos import QpeConfig, aimd_reference_spectrum, prepare_branch_states, \
    qpe_spectrum, reference_frequency

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

BIAS_TOLERANCE_LAW = 0.10
BIAS_TOLERANCE_ORACLE = 0.01

_CONFIG_CLASS_ERRORS = (ConfigurationError, ResolutionError, DomainError,
                        TableFormatError, BasisMismatchError)


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header.split(","))
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _grid_from(cfg: RunConfig):
    g = cfg.grid
    return build_grid(g.n_r, g.n_p, (g.r_min_bohr, g.r_max_bohr),
                      (g.p_min_au, g.p_max_au))


def _grid_derived(grid) -> dict:
    return {"dR_bohr": grid.dR, "dP_au": grid.dP,
            "grid_shape": list(grid.shape)}


def _run_relax(cfg: RunConfig, out_dir: Path):
    grid = _grid_from(cfg)
    pes = cfg.pes.build()
    lv = cfg.langevin
    params = calibrate(cfg.pes.mu_au, lv.gamma_au, lv.dt_au,
                       kelvin_to_hartree(lv.t_phys_kelvin), lv.correction)
    initial = encode_gaussian(grid, angstrom_to_bohr(cfg.init.r0_angstrom),
                              cfg.init.p0_au, cfg.init.sigma_r_bohr,
                              cfg.init.sigma_p_au)
    rl = cfg.relax
    trace, _, snapshots = relax(initial, pes, params, rl.n_steps,
                                rl.record_every, rl.snapshot_steps)

    outputs = ["relax_trace.csv"]
    _write_csv(out_dir / "relax_trace.csv",
               "time_fs,mean_R_angstrom,T_kin_K,D_KL_nats,cum_success_prob",
               zip(trace.time_fs, trace.mean_r_angstrom, trace.t_kin_kelvin,
                   trace.d_kl_nats, trace.cum_success_prob))
    r_col = np.repeat(grid.R, len(grid.P))
    p_col = np.tile(grid.P, len(grid.R))
    for step in sorted(snapshots):
        name = f"snapshot_step{step:06d}.csv"
        _write_csv(out_dir / name, "R_bohr,P_au,density",
                   zip(r_col, p_col, snapshots[step].ravel()))
        outputs.append(name)

    derived = {"s": params.s, "t_int_hartree": params.t_int,
               "t_int_kelvin": hartree_to_kelvin(params.t_int),
               "sigma_h_au": params.sigma_h, "collapsed": trace.collapsed,
               **_grid_derived(grid)}
    if trace.collapsed:
        print("numerical failure: filter success probability collapsed; "
              "trace truncated", file=sys.stderr)
        return EXIT_NUMERICAL, derived, outputs
    return EXIT_OK, derived, outputs


def _run_vdos(cfg: RunConfig, out_dir: Path):
    grid = _grid_from(cfg)
    pes = cfg.pes.build()
    mu = cfg.pes.mu_au
    v = cfg.vdos
    base = QpeConfig(m=v.m, tau=v.tau_au, omega_shift=v.omega_shift_au,
                     inner_steps=v.inner_steps)
    eq = analytic_canonical_state(grid, pes, mu,
                                  kelvin_to_hartree(v.t_kelvin))
    omega_ref = (v.omega_ref_au if v.omega_ref_au is not None
                 else reference_frequency(pes, mu, grid.R))
    alpha_plus, alpha_minus, (w_plus, w_minus) = prepare_branch_states(
        eq, omega_ref, mu)

    spectra = []
    if v.branch in ("plus", "both"):
        spectra.append(qpe_spectrum(
            alpha_plus, pes, mu, dataclasses.replace(base, branch="plus"),
            branch_weight=w_plus))
    if v.branch in ("minus", "both"):
        spectra.append(qpe_spectrum(
            alpha_minus, pes, mu, dataclasses.replace(base, branch="minus"),
            branch_weight=w_minus))
    if v.aimd_reference:
        dt_rec = v.tau_au / 8.0
        r0, p0 = canonical_sampler(pes, mu, kelvin_to_hartree(v.t_kelvin),
                                   v.aimd_n_traj, cfg.seed,
                                   (grid.r_min, grid.r_max))
        ens = verlet_ensemble(pes, mu, r0, p0, dt_rec, 8 * base.n_bins,
                              record_every=1)
        spectra.append(aimd_reference_spectrum(ens, base,
                                               window=v.aimd_window))

    rows = []
    peaks = {}
    for spec in spectra:
        omega_cm1 = spec.omega_cm1
        rows.extend((omega_cm1[j], spec.prob[j], spec.branch)
                    for j in range(len(spec.prob)))
        peaks[spec.branch] = {"bin": spec.peak_bin,
                              "omega_cm1": float(omega_cm1[spec.peak_bin])}
    _write_csv(out_dir / "vdos_spectrum.csv", "omega_cm1,prob,branch", rows)

    total = w_plus + w_minus
    meta = {"m": v.m, "tau_au": v.tau_au, "omega_shift_au": v.omega_shift_au,
            "inner_steps": v.inner_steps, "t_kelvin": v.t_kelvin,
            "omega_ref_au": omega_ref,
            "bin_width_au": base.bin_width,
            "window_width_au": base.window_width,
            "branch_weights": {"plus": w_plus, "minus": w_minus},
            "postselection_yield": {"plus": w_plus / total,
                                    "minus": w_minus / total},
            "peaks": peaks}
    (out_dir / "vdos_meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n")

    derived = {"omega_ref_au": omega_ref,
               "omega_ref_cm1": omega_ref * WAVENUMBER_PER_HARTREE,
               **_grid_derived(grid)}
    return EXIT_OK, derived, ["vdos_spectrum.csv", "vdos_meta.json"]


def _run_tst(cfg: RunConfig, out_dir: Path):
    grid = _grid_from(cfg)
    pes = cfg.pes.build()
    mu = cfg.pes.mu_au
    t = cfg.tst
    tcfg = TstConfig(r_dividing=t.r_dividing_bohr, sigma=t.sigma_bohr,
                     temperatures=t.temperatures_kelvin)
    fit = arrhenius_sweep(grid, pes, mu, tcfg)
    _write_csv(out_dir / "tst_rates.csv",
               "T_kelvin,inv_T,flux_au,population,k_au,k_per_second,log_k",
               ((r.t_kelvin, 1.0 / r.t_kelvin, r.flux_au, r.population,
                 r.k_au, r.k_per_second, math.log(r.k_au))
                for r in fit.results))
    outputs = ["tst_rates.csv"]
    derived = {"activation_energy_hartree": fit.activation_energy,
               "ln_prefactor": fit.ln_prefactor,
               "sigma_bohr": 2.0 * grid.dR if t.sigma_bohr is None
               else t.sigma_bohr, **_grid_derived(grid)}
    if t.crossing:
        t_low = min(t.temperatures_kelvin)
        cross = crossing_reference(pes, mu, t_low, t.crossing_n_traj,
                                   t.crossing_t_sim_au, cfg.seed, tcfg,
                                   (grid.r_min, grid.r_max),
                                   dt=t.crossing_dt_au)
        _write_csv(out_dir / "crossing.csv", "N_cross,k_cross,k_min",
                   [(cross.n_cross, cross.k_cross, cross.k_min)])
        outputs.append("crossing.csv")
        derived["crossing_t_kelvin"] = t_low
    return EXIT_OK, derived, outputs


def _run_bias_check(cfg: RunConfig, out_dir: Path):
    b = cfg.bias_check
    t_phys = kelvin_to_hartree(b.t_kelvin)
    rows = []
    all_pass = True
    for s in b.s_values:
        params = calibrate(b.mu_au, gamma=s, dt=1.0, t_phys=t_phys)
        p_max = 8.0 * math.sqrt(b.mu_au * params.t_int)
        grid = build_grid(3, b.n_p, (0.0, 1.0), (-p_max, p_max))
        result = momentum_bias_experiment(grid, params)
        predicted = 0.5 * math.tanh(s)
        oracle = cos_filter_stationary_bias(s)
        err_law = abs(result.bias - predicted) / predicted
        err_oracle = abs(result.bias - oracle) / abs(oracle)
        ok = (err_law <= BIAS_TOLERANCE_LAW
              and err_oracle <= BIAS_TOLERANCE_ORACLE)
        all_pass &= ok
        print(f"s={s:g}: measured bias {result.bias:.6e} vs half-tanh "
              f"{predicted:.6e} ({err_law:.2%}) "
              f"[{'PASS' if ok else 'FAIL'}]")
        rows.append((s, result.bias, predicted, oracle, err_law, err_oracle,
                     "PASS" if ok else "FAIL"))
    _write_csv(out_dir / "bias_check.csv",
               "s,measured_bias,predicted_half_tanh,product_oracle,"
               "rel_err_predicted,rel_err_oracle,status", rows)
    derived = {"n_momentum_nodes": 1 << b.n_p,
               "tolerance_vs_law": BIAS_TOLERANCE_LAW,
               "tolerance_vs_oracle": BIAS_TOLERANCE_ORACLE}
    return (EXIT_OK if all_pass else EXIT_NUMERICAL), derived, \
        ["bias_check.csv"]


def _run_oracle(cfg: RunConfig, out_dir: Path):
    o = cfg.oracle
    pes = cfg.pes.build()
    mu = cfg.pes.mu_au
    t_ha = kelvin_to_hartree(o.t_kelvin)
    if o.kind == "langevin":
        ens = langevin_ensemble(pes, mu, o.gamma_au, t_ha, o.dt_au,
                                o.n_steps, o.n_traj, cfg.seed, o.r0_bohr,
                                o.p0_au, o.record_every)
    else:
        r0, p0 = canonical_sampler(pes, mu, t_ha, o.n_traj, cfg.seed,
                                   (o.r_min_bohr, o.r_max_bohr))
        ens = verlet_ensemble(pes, mu, r0, p0, o.dt_au, o.n_steps,
                              o.record_every)
    t_kin_kelvin = hartree_to_kelvin(np.mean(ens.P ** 2, axis=1) / mu)
    _write_csv(out_dir / "oracle_summary.csv", "t_au,mean_R_bohr,T_kin_K",
               zip(ens.times, np.mean(ens.R, axis=1), t_kin_kelvin))
    outputs = ["oracle_summary.csv"]
    if o.dump_trajectories:
        n_rec, n_traj = ens.R.shape
        ids = np.tile(np.arange(n_traj), n_rec)
        times = np.repeat(ens.times, n_traj)
        _write_csv(out_dir / "trajectories.csv", "traj_id,t_au,R_bohr,P_au",
                   zip(ids, times, ens.R.ravel(), ens.P.ravel()))
        outputs.append("trajectories.csv")
    return EXIT_OK, {"n_records": len(ens.times)}, outputs


_HANDLERS = {"relax": _run_relax, "vdos": _run_vdos, "tst": _run_tst,
             "bias-check": _run_bias_check, "oracle": _run_oracle}


def _resolved_config(cfg: RunConfig) -> dict:
    out = {"mode": cfg.mode, "out": cfg.out_dir, "seed": cfg.seed}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if dataclasses.is_dataclass(value):
            out[f.name] = dataclasses.asdict(value)
    return out


def _sha256(path: Path) -> str:
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    return f"sha256:{digest}"


def _write_manifest(out_dir: Path, cfg: RunConfig, derived: dict,
                    outputs: list[str], wall_seconds: float) -> None:
    manifest = {
        "mode": cfg.mode,
        "config": _resolved_config(cfg),
        "derived": derived,
        "versions": {"kvnmd": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "wall_time_seconds": wall_seconds,
        "outputs": {name: _sha256(out_dir / name) for name in outputs},
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=list) + "\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kvnmd",
        description="Phase-space wavefunction runs driven by an INI config.")
    parser.add_argument("--config", required=True, help="path to the run "
                        "configuration (INI, dotted sections)")
    parser.add_argument("--out", help="output directory (overrides run.out)")
    parser.add_argument("--seed", type=int,
                        help="RNG seed (overrides run.seed)")
    parser.add_argument("--mode", choices=MODES,
                        help="run mode (overrides run.mode)")
    args = parser.parse_args(argv)

    cfg, errors = load_config(args.config, mode_override=args.mode,
                              out_override=args.out,
                              seed_override=args.seed)
    if cfg is None:
        for line in errors:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        code, derived, outputs = _HANDLERS[cfg.mode](cfg, out_dir)
    except _CONFIG_CLASS_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KvnError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    wall = time.perf_counter() - start
    _write_manifest(out_dir, cfg, derived, outputs, wall)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Named figure-data reproductions and result-file writers.

Every figure command emits plot-ready CSV (no rendering here).  Spectra are
written as ``theta_deg,power_db`` columns; experiment summaries as one row per
estimator.
"""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

import numpy as np

from .adaptation import adapt_covariance, fit_map
from .beamforming import ds_power, induced_power, output_sir, quadratic_term_power
from .config import ScenarioConfig, load_preset
from .covariance import (matrix_to_json, mean_correlation, reference_correlation,
                         sample_correlation)
from .exceptions import ConfigError
from .experiments import (_ADAPTATION, _INTERFERER, _OPERATIONAL, _build_scene,
                          _interference_region, fit_scenario_maps, make_snapshots,
                          run_adaptation_phase, run_experiment, run_reference_phase)
from .geometry import SectorRegion, sample_positions, simulated_steering_vector, true_doa
from .hpd import matrix_power_half

_DB_FLOOR = 1e-300


def to_db(values) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(np.asarray(values, dtype=float), _DB_FLOOR))


def write_spectrum_csv(path, angles_deg, power_linear, header_extra: str = "") -> None:
    """Two-column spectrum file: theta_deg, power_db."""
    data = np.column_stack([angles_deg, to_db(power_linear)])
    header = "theta_deg,power_db"
    if header_extra:
        header = header_extra + "\n" + header
    np.savetxt(path, data, delimiter=",", header=header, fmt="%.6f")


def write_multi_spectrum_csv(path, angles_deg, named_powers: dict, header_extra: str = "") -> None:
    cols = [np.asarray(angles_deg, dtype=float)]
    names = []
    for name, power in named_powers.items():
        names.append(f"{name}_db")
        cols.append(to_db(power))
    header = "theta_deg," + ",".join(names)
    if header_extra:
        header = header_extra + "\n" + header
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=header, fmt="%.6f")


def write_stats_json(path, stats: dict, extra: dict | None = None) -> None:
    payload = {"schema": 1, "estimators": {k: v.to_json() for k, v in sorted(stats.items())}}
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_stats_csv(path, stats: dict) -> None:
    with open(path, "w") as fh:
        fh.write("estimator,median_deg,iqr_deg,rmse_deg,std_deg,bias_deg,count\n")
        for name, s in sorted(stats.items()):
            fh.write(f"{name},{s.median:.6f},{s.iqr:.6f},{s.rmse:.6f},"
                     f"{s.std:.6f},{s.bias:.6f},{s.count}\n")


def write_trials_csv(path, trials) -> None:
    names = sorted(trials[0].estimates) if trials else []
    with open(path, "w") as fh:
        cols = ["repeat", "trial", "true_theta_deg"]
        cols += [f"est_{n}_deg" for n in names] + [f"err_{n}_deg" for n in names]
        fh.write(",".join(cols) + "\n")
        for r in trials:
            row = [str(r.repeat), str(r.trial), f"{r.true_theta:.6f}"]
            row += [f"{r.estimates[n]:.6f}" for n in names]
            row += [f"{r.errors[n]:.6f}" for n in names]
            fh.write(",".join(row) + "\n")


def write_matrix_json(path, matrix, label: str) -> None:
    with open(path, "w") as fh:
        json.dump({"schema": 1, "label": label, "matrix": matrix_to_json(matrix)}, fh)
        fh.write("\n")


def write_maps_json(path, maps: dict) -> None:
    payload = {"schema": 1, "maps": {variant: m.to_json() for variant, m in sorted(maps.items())}}
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


# ---------------------------------------------------------------------------
# figure scenarios


def _sector_position(theta_deg: float, radius: float = 175.0) -> np.ndarray:
    t = np.radians(theta_deg)
    return np.array([radius * np.cos(t), radius * np.sin(t), 0.0])


def theoretic_output_sir(interferer_angles, theta_s_values, num_reference: int = 100,
                         num_adaptation: int = 100, snr_db: float = 20.0, seed: int = 1234,
                         radius: float = 175.0) -> dict:
    """Population-level adapted-DS output SIR versus desired direction.

    Equal-power desired source and interferer(s) in free space; the
    adaptation-phase mean uses the population correlation of each
    transmission.  Returns ``{variant: array over theta_s_values}`` where the
    value is the worst-case SIR over the interferers.
    """
    from .geometry import ArrayGeometry

    geom = ArrayGeometry.ula(9, 0.0625, 0.125)
    roi = SectorRegion(((30.0, 150.0),), 100.0, 250.0)
    rng = np.random.default_rng(seed)
    eps = 1e-7
    d_ints = [simulated_steering_vector(geom, _sector_position(a, radius))
              for a in interferer_angles]

    refs = [reference_correlation(simulated_steering_vector(geom, p), eps)
            for p in sample_positions(roi, num_reference, rng)]
    sigma_s = mean_correlation(refs)

    h_list = [simulated_steering_vector(geom, p)
              for p in sample_positions(roi, num_adaptation, rng)]
    sigma_v = float(np.mean(np.abs(h_list[0]) ** 2)) / 10.0 ** (snr_db / 10.0)
    sigma_a = mean_correlation([np.outer(h, h.conj()) for h in h_list])
    for d_i in d_ints:
        sigma_a = sigma_a + np.outer(d_i, d_i.conj())
    sigma_a = sigma_a + sigma_v * np.eye(geom.num_elements)

    out = {}
    for variant in ("coral", "parallel-transport"):
        amap = fit_map(sigma_s, sigma_a, variant)
        sirs = []
        for theta_s in theta_s_values:
            d_s = simulated_steering_vector(geom, _sector_position(theta_s, radius))
            sigma_op = np.outer(d_s, d_s.conj()) + sigma_v * np.eye(geom.num_elements)
            for d_i in d_ints:
                sigma_op = sigma_op + np.outer(d_i, d_i.conj())
            adapted = adapt_covariance(amap, sigma_op)
            sirs.append(min(output_sir(ds_power, adapted, geom, float(theta_s), float(a))
                            for a in interferer_angles))
        out[variant] = np.array(sirs)
    return out


def _fit_preset_maps(cfg: ScenarioConfig):
    """Reference + one adaptation repeat with the config's fixed-interferer rule."""
    reference = run_reference_phase(cfg)
    rng = np.random.default_rng([cfg.phases.seed, _ADAPTATION, 0])
    fixed = None
    if cfg.phases.interferer_placement == "fixed" and cfg.phases.adaptation_interferers > 0:
        int_rng = np.random.default_rng([cfg.phases.seed, _INTERFERER, 0])
        n_fixed = max(cfg.phases.operational_interferers, cfg.phases.adaptation_interferers)
        fixed = sample_positions(_interference_region(cfg), n_fixed, int_rng)
    adaptation = run_adaptation_phase(cfg, rng, interferer_positions=fixed)
    return reference, adaptation, fit_scenario_maps(cfg, reference, adaptation), fixed


def _example_scene(cfg: ScenarioConfig, fixed_interferers, min_separation_deg: float = 20.0):
    """First deterministic operational draw whose source/interferer directions
    are separated enough to make a readable spectrum figure."""
    geom = cfg.geometry
    for trial in range(64):
        rng = np.random.default_rng([cfg.phases.seed ^ trial, _OPERATIONAL, 0])
        desired = sample_positions(cfg.roi, 1, rng)
        n_int = cfg.phases.operational_interferers
        if n_int == 0:
            interferers = np.zeros((0, 3))
        elif fixed_interferers is not None:
            interferers = np.asarray(fixed_interferers)[:n_int]
        else:
            interferers = sample_positions(_interference_region(cfg), n_int, rng)
        if interferers.shape[0] == 0:
            return desired, interferers, rng
        sep = min(abs(true_doa(geom, desired[0]) - true_doa(geom, p)) for p in interferers)
        if sep >= min_separation_deg:
            return desired, interferers, rng
    return desired, interferers, rng  # fall back to the last draw


def _spectrum_example(cfg: ScenarioConfig, out_dir: Path, tag: str,
                      with_spectra: bool = True, with_quadratic: bool = True) -> list:
    """Baseline/adapted DS spectra plus the map's quadratic terms for one scene."""
    reference, adaptation, maps, fixed = _fit_preset_maps(cfg)
    desired, interferers, rng = _example_scene(cfg, fixed)
    scene = _build_scene(cfg, desired, interferers)
    snaps = make_snapshots(cfg, scene, rng)
    sigma = sample_correlation(snaps)
    geom, grid = cfg.geometry, cfg.grid
    amap = maps.get("coral") or next(iter(maps.values()))
    angles = grid.angles
    theta_s = true_doa(geom, desired[0])
    theta_i = [true_doa(geom, p) for p in interferers]
    note = (f"true_theta_deg={theta_s:.3f} interferer_theta_deg="
            f"{','.join(f'{t:.3f}' for t in theta_i) or 'none'}")

    paths = []
    if with_spectra:
        spectra = out_dir / f"{tag}_spectra.csv"
        write_multi_spectrum_csv(spectra, angles, {
            "ds_baseline": ds_power(sigma, geom, angles),
            "ds_adapted": ds_power(adapt_covariance(amap, sigma), geom, angles),
        }, header_extra=note)
        paths.append(spectra)
    if with_quadratic:
        quad = out_dir / f"{tag}_quadratic_terms.csv"
        write_multi_spectrum_csv(quad, angles, {
            "map": quadratic_term_power(amap.e, geom, angles),
            "sigma_a_inv_sqrt": quadratic_term_power(matrix_power_half(amap.sigma_a, -0.5),
                                                     geom, angles),
            "sigma_s_sqrt": quadratic_term_power(matrix_power_half(amap.sigma_s, 0.5),
                                                 geom, angles),
        }, header_extra=note)
        paths.append(quad)
    return paths


def fig1(out_dir: Path, seed: int | None = None, **_) -> list:
    """Theoretic adapted-DS output SIR vs desired direction, 1 and 2 interferers."""
    theta_s = np.arange(31.0, 150.0, 1.0)
    one = theoretic_output_sir([30.0], theta_s, seed=seed if seed is not None else 1234)
    two = theoretic_output_sir([30.0, 150.0], theta_s, seed=seed if seed is not None else 1234)
    path = out_dir / "fig1_output_sir.csv"
    cols = np.column_stack([theta_s, one["coral"], one["parallel-transport"],
                            two["coral"], two["parallel-transport"]])
    np.savetxt(path, cols, delimiter=",", fmt="%.6f",
               header="theta_s_deg,sir_coral_1int_db,sir_pt_1int_db,"
                      "sir_coral_2int_db,sir_pt_2int_db")
    return [path]


def fig3(out_dir: Path, seed: int | None = None, **_) -> list:
    """Reverberant-room DS spectra and quadratic terms (beta = 400 ms scene)."""
    cfg = load_preset("acoustic_beta400")
    if seed is not None:
        cfg = cfg.with_seed(seed)
    return _spectrum_example(cfg, out_dir, "fig3")


def fig4(out_dir: Path, trials: int | None = None, seed: int | None = None,
         betas=(0.2, 0.3, 0.4, 0.5), **_) -> list:
    """Median error versus reverberation time for all beamformers."""
    base = load_preset("acoustic_beta400")
    if seed is not None:
        base = base.with_seed(seed)
    rows = []
    names = None
    for beta in betas:
        cfg = replace(base, room=replace(base.room, rt60=float(beta)))
        result = run_experiment(cfg, trials_per_repeat=trials)
        if names is None:
            names = sorted(result.stats)
        rows.append([beta] + [result.stats[n].median for n in names])
    path = out_dir / "fig4_beta_sweep.csv"
    np.savetxt(path, np.asarray(rows), delimiter=",", fmt="%.6f",
               header="beta_s," + ",".join(f"median_{n}_deg" for n in names))
    return [path]


def _experiment_figure(cfg: ScenarioConfig, out_dir: Path, tag: str,
                       trials: int | None) -> list:
    result = run_experiment(cfg, trials_per_repeat=trials)
    stats_csv = out_dir / f"{tag}_stats.csv"
    write_stats_csv(stats_csv, result.stats)
    trials_csv = out_dir / f"{tag}_trials.csv"
    write_trials_csv(trials_csv, result.trials)
    return [stats_csv, trials_csv]


def fig5(out_dir: Path, trials: int | None = None, seed: int | None = None, **_) -> list:
    """Acoustic in-ROI interferer experiment (SIR -20 dB) error statistics."""
    cfg = load_preset("acoustic_sir-20")
    if seed is not None:
        cfg = cfg.with_seed(seed)
    return _experiment_figure(cfg, out_dir, "fig5", trials)


def fig7(out_dir: Path, seed: int | None = None, **_) -> list:
    """RF baseline/adapted DS spectra for one strong-interferer scene."""
    cfg = load_preset("rf_sir-20")
    if seed is not None:
        cfg = cfg.with_seed(seed)
    return _spectrum_example(cfg, out_dir, "fig7", with_quadratic=False)


def fig8(out_dir: Path, seed: int | None = None, **_) -> list:
    """Quadratic-term spectra of the RF map (null toward the interferer)."""
    cfg = load_preset("rf_sir-20")
    if seed is not None:
        cfg = cfg.with_seed(seed)
    return _spectrum_example(cfg, out_dir, "fig8", with_spectra=False)


def fig10(out_dir: Path, trials: int | None = None, seed: int | None = None, **_) -> list:
    """RF single-interferer experiment (SIR -20 dB) error statistics."""
    cfg = load_preset("rf_sir-20")
    if seed is not None:
        cfg = cfg.with_seed(seed)
    return _experiment_figure(cfg, out_dir, "fig10", trials)


def fig11(out_dir: Path, seed: int | None = None, **_) -> list:
    """Two-section ROI: induced spectrum of the map (both lobes, interferer null)."""
    cfg = load_preset("rf_two_roi")
    if seed is not None:
        cfg = cfg.with_seed(seed)
    reference, adaptation, maps, fixed = _fit_preset_maps(cfg)
    amap = maps.get("coral") or next(iter(maps.values()))
    angles = cfg.grid.angles
    theta_i = [true_doa(cfg.geometry, p) for p in (fixed if fixed is not None else [])]
    note = "interferer_theta_deg=" + (",".join(f"{t:.3f}" for t in theta_i) or "none")
    path = out_dir / "fig11_induced_spectrum.csv"
    write_spectrum_csv(path, angles, induced_power(amap, cfg.geometry, angles),
                       header_extra=note)
    return [path]


FIGURES = {"fig1": fig1, "fig3": fig3, "fig4": fig4, "fig5": fig5,
           "fig7": fig7, "fig8": fig8, "fig10": fig10, "fig11": fig11}


def run_figure(name: str, out_dir, trials: int | None = None, seed: int | None = None) -> list:
    if name not in FIGURES:
        raise ConfigError(f"unknown figure {name!r}; available: {', '.join(sorted(FIGURES))}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return FIGURES[name](out_dir, trials=trials, seed=seed)

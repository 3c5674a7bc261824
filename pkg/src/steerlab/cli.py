"""Command-line interface.

Subcommands
-----------
reference   emit the reference-phase mean correlation (sigma_s.json)
adapt       run the adaptation phase and fit maps (sigma_a.json, map.json)
estimate    synthesize one operational scene, emit spectra CSVs and estimates
experiment  full Monte-Carlo protocol (stats.json, trials.csv)
figure      named figure-data reproductions (fig1, fig3, fig4, fig5, fig7,
            fig8, fig10, fig11)

Exit codes: 0 success, 2 configuration problems, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import figures
from .adaptation import AdaptationMap, adapt_covariance
from .beamforming import ds_power, music_power, mvdr_power
from .config import load_config
from .covariance import sample_correlation
from .exceptions import ConfigError, InvalidInput, NumericalFailure
from .experiments import (_ADAPTATION, _INTERFERER, _OPERATIONAL, _build_scene,
                          _interference_region, estimate_all, fit_scenario_maps,
                          make_snapshots, run_adaptation_phase, run_experiment,
                          run_reference_phase)
from .figures import (write_maps_json, write_matrix_json, write_multi_spectrum_csv,
                      write_stats_csv, write_stats_json, write_trials_csv)
from .geometry import sample_positions, true_doa
from .hpd import invert_hpd


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steerlab",
                                     description="Phased-array DoA estimation with "
                                                 "domain adaptation")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True, trials=False, jobs=False):
        if config_required:
            p.add_argument("--config", required=True, help="scenario TOML file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        if trials:
            p.add_argument("--trials", type=int, default=None,
                           help="operational trials per interferer draw")
        if jobs:
            p.add_argument("--jobs", type=int, default=1, help="parallel trial workers")

    add_common(sub.add_parser("reference", help="emit the reference correlation"))
    add_common(sub.add_parser("adapt", help="run the adaptation phase and fit maps"))
    p_est = sub.add_parser("estimate", help="estimate one scene")
    add_common(p_est)
    p_est.add_argument("--map", dest="map_path", default=None,
                       help="reuse maps from a previous `adapt` run (map.json)")
    add_common(sub.add_parser("experiment", help="full Monte-Carlo experiment"),
               trials=True, jobs=True)
    p_fig = sub.add_parser("figure", help="emit plot-ready data for a named figure")
    p_fig.add_argument("name", choices=sorted(figures.FIGURES), help="figure name")
    add_common(p_fig, config_required=False, trials=True)
    return parser


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_reference(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    ref = run_reference_phase(cfg)
    write_matrix_json(out / "sigma_s.json", ref.sigma, "sigma_s")
    if ref.sigma_inv is not None:
        write_matrix_json(out / "sigma_s_inv.json", ref.sigma_inv, "sigma_s_inv")
    print(f"wrote {out / 'sigma_s.json'}")
    return 0


def _fit_with_config_rule(cfg):
    ref = run_reference_phase(cfg)
    rng = np.random.default_rng([cfg.phases.seed, _ADAPTATION, 0])
    fixed = None
    if cfg.phases.interferer_placement == "fixed" and cfg.phases.adaptation_interferers > 0:
        int_rng = np.random.default_rng([cfg.phases.seed, _INTERFERER, 0])
        n_fixed = max(cfg.phases.operational_interferers, cfg.phases.adaptation_interferers)
        fixed = sample_positions(_interference_region(cfg), n_fixed, int_rng)
    adapt = run_adaptation_phase(cfg, rng, interferer_positions=fixed)
    return ref, adapt, fit_scenario_maps(cfg, ref, adapt), fixed


def _cmd_adapt(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    ref, adapt, maps, _ = _fit_with_config_rule(cfg)
    write_matrix_json(out / "sigma_s.json", ref.sigma, "sigma_s")
    write_matrix_json(out / "sigma_a.json", adapt.sigma, "sigma_a")
    if adapt.sigma_inv is not None:
        write_matrix_json(out / "sigma_a_inv.json", adapt.sigma_inv, "sigma_a_inv")
    write_maps_json(out / "map.json", maps)
    print(f"wrote {out / 'sigma_a.json'} and {out / 'map.json'}")
    return 0


def _load_maps(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"map file not found: {path}")
    with open(path) as fh:
        payload = json.load(fh)
    if "maps" not in payload:
        raise ConfigError(f"{path} is not a map.json file")
    return {variant: AdaptationMap.from_json(obj) for variant, obj in payload["maps"].items()}


def _cmd_estimate(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    if args.map_path:
        maps = _load_maps(args.map_path)
        fixed = None
        if cfg.phases.interferer_placement == "fixed" and cfg.phases.operational_interferers > 0:
            int_rng = np.random.default_rng([cfg.phases.seed, _INTERFERER, 0])
            fixed = sample_positions(_interference_region(cfg),
                                     cfg.phases.operational_interferers, int_rng)
        missing = set(cfg.beamformers.values()) - set(maps)
        if missing:
            raise ConfigError(f"map.json lacks variants {sorted(missing)}")
    else:
        _, _, maps, fixed = _fit_with_config_rule(cfg)

    rng = np.random.default_rng([cfg.phases.seed, _OPERATIONAL, 0])
    desired = sample_positions(cfg.roi, 1, rng)
    n_int = cfg.phases.operational_interferers
    if n_int == 0:
        interferers = np.zeros((0, 3))
    elif fixed is not None:
        interferers = np.asarray(fixed)[:n_int]
    else:
        interferers = sample_positions(_interference_region(cfg), n_int, rng)
    scene = _build_scene(cfg, desired, interferers)
    snaps = make_snapshots(cfg, scene, rng)
    estimates = estimate_all(cfg, maps, snaps, scene.num_active_sources)

    sigma = sample_correlation(snaps)
    geom, angles = cfg.geometry, cfg.grid.angles
    for name, variant in sorted(cfg.beamformers.items()):
        amap = maps[variant]
        if name == "ds":
            base = ds_power(sigma, geom, angles)
            adapted = ds_power(adapt_covariance(amap, sigma), geom, angles)
        elif name == "mvdr":
            inv = invert_hpd(sigma)
            base = mvdr_power(inv, geom, angles, input_is_inverse=True)
            if variant == "inverse-domain-coral":
                adapted = mvdr_power(adapt_covariance(amap, inv), geom, angles,
                                     input_is_inverse=True)
            else:
                adapted = mvdr_power(adapt_covariance(amap, sigma), geom, angles)
        else:
            base = music_power(sigma, geom, angles, scene.num_active_sources)
            adapted = music_power(adapt_covariance(amap, sigma), geom, angles, 1)
        write_multi_spectrum_csv(out / f"spectrum_{name}.csv", angles,
                                 {"baseline": base, "adapted": adapted})

    truth = true_doa(geom, desired[0])
    payload = {"schema": 1, "true_theta_deg": truth, "estimates_deg": estimates,
               "errors_deg": {k: abs(v - truth) for k, v in estimates.items()}}
    with open(out / "estimates.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_experiment(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    result = run_experiment(cfg, trials_per_repeat=args.trials, jobs=args.jobs)
    write_stats_json(out / "stats.json", result.stats,
                     extra={"trials": len(result.trials), "seed": cfg.phases.seed})
    write_stats_csv(out / "stats.csv", result.stats)
    write_trials_csv(out / "trials.csv", result.trials)
    write_maps_json(out / "map.json", result.maps_per_repeat[0])
    print(f"wrote {out / 'stats.json'} ({len(result.trials)} trials)")
    for name, s in sorted(result.stats.items()):
        print(f"  {name:16s} median {s.median:7.2f} deg, IQR {s.iqr:7.2f} deg")
    return 0


def _cmd_figure(args) -> int:
    paths = figures.run_figure(args.name, args.out, trials=args.trials, seed=args.seed)
    for p in paths:
        print(f"wrote {p}")
    return 0


_COMMANDS = {
    "reference": _cmd_reference,
    "adapt": _cmd_adapt,
    "estimate": _cmd_estimate,
    "experiment": _cmd_experiment,
    "figure": _cmd_figure,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, InvalidInput) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except NumericalFailure as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Three-phase experiment protocol, Monte-Carlo trials, and summary metrics.

Protocol per scenario: a pre-deployment reference phase builds the mean
steering-vector correlation (no received signals), the adaptation phase
collects received transmissions and averages their sample correlations, the
fitted maps then stay fixed while operational trials estimate directions.

Reproducibility: every phase draws from its own stream derived from the
scenario seed; operational trial ``t`` of repeat ``r`` uses
``default_rng([seed ^ t, _OPERATIONAL, r])``, so results are independent of
worker scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .adaptation import AdaptationMap, adapt_covariance, fit_map
from .beamforming import (ds_spectrum, estimate_doa, music_spectrum, mvdr_spectrum)
from .config import KIND_RF, ScenarioConfig
from .covariance import mean_correlation, reference_correlation, sample_correlation
from .exceptions import ConfigError, InvalidInput
from .geometry import ArrayGeometry, sample_positions, simulated_steering_vector, true_doa
from .hpd import hermitian_eig, hermitize, invert_hpd
from .scene import Scene, stft_bin, synthesize_received

# rng stream tags (second word of the seed sequence)
_REFERENCE = 101
_ADAPTATION = 211
_INTERFERER = 223
_OPERATIONAL = 307


@dataclass(frozen=True)
class PhaseOutput:
    """Mean correlation matrix of a phase, plus the mean of the inverses when
    an inverse-domain map is requested."""

    sigma: np.ndarray
    sigma_inv: np.ndarray | None = None


@dataclass(frozen=True)
class TrialResult:
    repeat: int
    trial: int
    true_theta: float
    estimates: dict  # estimator name -> degrees

    @property
    def errors(self) -> dict:
        return {k: abs(v - self.true_theta) for k, v in self.estimates.items()}

    @property
    def signed_errors(self) -> dict:
        return {k: v - self.true_theta for k, v in self.estimates.items()}


@dataclass(frozen=True)
class SummaryStats:
    median: float
    iqr: float
    rmse: float
    std: float
    bias: float
    count: int

    def to_json(self) -> dict:
        return {"median_deg": self.median, "iqr_deg": self.iqr, "rmse_deg": self.rmse,
                "std_deg": self.std, "bias_deg": self.bias, "count": self.count}


def _needs_inverse(cfg: ScenarioConfig) -> bool:
    return "inverse-domain-coral" in cfg.beamformers.values()


def run_reference_phase(cfg: ScenarioConfig) -> PhaseOutput:
    """Mean correlation of simulated steering vectors drawn from the ROI.

    Uses only the free-space model (no received signals) on a dedicated RNG
    stream, so the output is independent of SNR/SIR and of the other phases.
    """
    rng = np.random.default_rng([cfg.phases.seed, _REFERENCE])
    geom = cfg.geometry
    positions = sample_positions(cfg.roi, cfg.phases.num_reference, rng)
    eps = cfg.phases.epsilon
    mats = [reference_correlation(simulated_steering_vector(geom, p), eps) for p in positions]
    sigma = mean_correlation(mats)
    sigma_inv = mean_correlation([invert_hpd(m) for m in mats]) if _needs_inverse(cfg) else None
    return PhaseOutput(sigma=sigma, sigma_inv=sigma_inv)


def _build_scene(cfg: ScenarioConfig, desired_positions, interferer_positions,
                 desired_active: bool = True) -> Scene:
    if cfg.kind == KIND_RF:
        return Scene(geometry=cfg.geometry, desired_positions=desired_positions,
                     interferer_positions=interferer_positions, snr_db=cfg.signal.snr_db,
                     sir_db=cfg.signal.sir_db, num_snapshots=cfg.signal.num_snapshots,
                     desired_active=desired_active)
    return Scene(geometry=cfg.geometry, desired_positions=desired_positions,
                 interferer_positions=interferer_positions, snr_db=cfg.signal.snr_db,
                 sir_db=cfg.signal.sir_db, room=cfg.room,
                 sample_rate_hz=cfg.signal.sample_rate_hz, duration_s=cfg.signal.duration_s,
                 desired_active=desired_active)


def make_snapshots(cfg: ScenarioConfig, scene: Scene, rng: np.random.Generator):
    """Synthesize one transmission and reduce it to narrowband snapshots."""
    received = synthesize_received(scene, rng)
    if cfg.kind == KIND_RF:
        return received
    return stft_bin(received, cfg.signal.sample_rate_hz, cfg.stft.window, cfg.stft.hop,
                    cfg.stft.bin_index)


def _interference_region(cfg: ScenarioConfig):
    return cfg.interference_region if cfg.interference_region is not None else cfg.roi


def run_adaptation_phase(cfg: ScenarioConfig, rng: np.random.Generator,
                         interferer_positions=None) -> PhaseOutput:
    """Mean sample correlation over ``num_adaptation`` received transmissions.

    ``interferer_positions`` pins the interferer(s) for every transmission
    (fixed placement); otherwise each transmission redraws them from the
    interference region (falling back to the ROI).
    """
    geom = cfg.geometry
    n_int = cfg.phases.adaptation_interferers
    acc = None
    acc_inv = None
    need_inv = _needs_inverse(cfg)
    for _ in range(cfg.phases.num_adaptation):
        desired = sample_positions(cfg.roi, 1, rng)
        if n_int == 0:
            interferers = np.zeros((0, 3))
        elif interferer_positions is not None:
            interferers = np.asarray(interferer_positions)[:n_int]
        else:
            interferers = sample_positions(_interference_region(cfg), n_int, rng)
        scene = _build_scene(cfg, desired, interferers,
                             desired_active=cfg.phases.adaptation_desired_active)
        sigma = sample_correlation(make_snapshots(cfg, scene, rng))
        acc = sigma if acc is None else acc + sigma
        if need_inv:
            inv = invert_hpd(sigma)
            acc_inv = inv if acc_inv is None else acc_inv + inv
    n = cfg.phases.num_adaptation
    return PhaseOutput(sigma=hermitize(acc / n),
                       sigma_inv=hermitize(acc_inv / n) if need_inv else None)


def ensure_hpd(sigma, eps: float) -> np.ndarray:
    """Add ``eps * I`` when the smallest eigenvalue falls below ``eps``."""
    sigma = hermitize(sigma)
    w, _ = hermitian_eig(sigma)
    if w.min() < eps:
        sigma = sigma + eps * np.eye(sigma.shape[0])
    return sigma


def fit_scenario_maps(cfg: ScenarioConfig, reference: PhaseOutput,
                      adaptation: PhaseOutput) -> dict:
    """Fit one map per distinct variant requested by the beamformer table."""
    maps = {}
    eps = cfg.phases.epsilon
    for variant in sorted(set(cfg.beamformers.values())):
        if variant == "inverse-domain-coral":
            maps[variant] = fit_map(ensure_hpd(reference.sigma_inv, eps),
                                    ensure_hpd(adaptation.sigma_inv, eps), variant)
        else:
            maps[variant] = fit_map(ensure_hpd(reference.sigma, eps),
                                    ensure_hpd(adaptation.sigma, eps), variant)
    return maps


def estimate_all(cfg: ScenarioConfig, maps: dict, snapshots, num_active_sources: int) -> dict:
    """Baseline and adapted DoA estimates for every configured beamformer."""
    geom, grid = cfg.geometry, cfg.grid
    sigma = sample_correlation(snapshots)
    estimates = {}
    inv = None
    for name, variant in sorted(cfg.beamformers.items()):
        amap = maps[variant]
        if name == "ds":
            baseline = ds_spectrum(sigma, geom, grid)
            adapted = ds_spectrum(adapt_covariance(amap, sigma), geom, grid)
        elif name == "mvdr":
            if inv is None:
                inv = invert_hpd(sigma)
            baseline = mvdr_spectrum(inv, geom, grid, input_is_inverse=True)
            if variant == "inverse-domain-coral":
                adapted = mvdr_spectrum(adapt_covariance(amap, inv), geom, grid,
                                        input_is_inverse=True)
            else:
                adapted = mvdr_spectrum(adapt_covariance(amap, sigma), geom, grid)
        elif name == "music":
            signal_dim = max(1, min(num_active_sources, geom.num_elements - 1))
            baseline = music_spectrum(sigma, geom, grid, signal_dim)
            adapted = music_spectrum(adapt_covariance(amap, sigma), geom, grid, signal_dim=1)
        else:  # unreachable after config validation
            raise ConfigError(f"unknown beamformer {name!r}")
        estimates[name] = estimate_doa(baseline)
        estimates[f"{name}_adapted"] = estimate_doa(adapted)
    return estimates


def _run_trial(cfg: ScenarioConfig, maps: dict, repeat: int, trial: int,
               fixed_interferers) -> TrialResult:
    rng = np.random.default_rng([cfg.phases.seed ^ trial, _OPERATIONAL, repeat])
    n_int = cfg.phases.operational_interferers
    desired = sample_positions(cfg.roi, 1, rng)
    if n_int == 0:
        interferers = np.zeros((0, 3))
    elif fixed_interferers is not None:
        interferers = np.asarray(fixed_interferers)[:n_int]
    else:
        interferers = sample_positions(_interference_region(cfg), n_int, rng)
    scene = _build_scene(cfg, desired, interferers)
    snaps = make_snapshots(cfg, scene, rng)
    estimates = estimate_all(cfg, maps, snaps, scene.num_active_sources)
    return TrialResult(repeat=repeat, trial=trial,
                       true_theta=true_doa(cfg.geometry, desired[0]), estimates=estimates)


def run_operational_trials(cfg: ScenarioConfig, maps: dict, n_trials: int, repeat: int = 0,
                           fixed_interferers=None, executor=None) -> list:
    """Independent operational trials; deterministic per (seed, repeat, trial)."""
    if {"mvdr", "music"} & set(cfg.beamformers):
        if cfg.num_snapshots < cfg.geometry.num_elements:
            raise ConfigError("mvdr/music baselines need at least M snapshots "
                              "per transmission")
    if executor is not None:
        futures = [executor.submit(_run_trial, cfg, maps, repeat, t, fixed_interferers)
                   for t in range(n_trials)]
        results = [f.result() for f in futures]
    else:
        results = [_run_trial(cfg, maps, repeat, t, fixed_interferers)
                   for t in range(n_trials)]
    results.sort(key=lambda r: (r.repeat, r.trial))
    return results


@dataclass(frozen=True)
class ExperimentResult:
    config: ScenarioConfig
    reference: PhaseOutput
    maps_per_repeat: list  # list of dicts variant -> AdaptationMap
    trials: list  # TrialResult
    stats: dict  # estimator name -> SummaryStats


def run_experiment(cfg: ScenarioConfig, trials_per_repeat: int | None = None,
                   jobs: int = 1) -> ExperimentResult:
    """Full protocol: reference, then per interferer draw adapt + evaluate."""
    n_trials = trials_per_repeat or cfg.phases.operational_trials
    reference = run_reference_phase(cfg)
    all_results: list = []
    maps_per_repeat = []
    executor = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for repeat in range(cfg.phases.interferer_draws):
            rng = np.random.default_rng([cfg.phases.seed, _ADAPTATION, repeat])
            fixed = None
            if cfg.phases.interferer_placement == "fixed":
                n_fixed = max(cfg.phases.operational_interferers,
                              cfg.phases.adaptation_interferers)
                if n_fixed > 0:
                    int_rng = np.random.default_rng([cfg.phases.seed, _INTERFERER, repeat])
                    fixed = sample_positions(_interference_region(cfg), n_fixed, int_rng)
            adaptation = run_adaptation_phase(cfg, rng, interferer_positions=fixed)
            maps = fit_scenario_maps(cfg, reference, adaptation)
            maps_per_repeat.append(maps)
            all_results.extend(run_operational_trials(cfg, maps, n_trials, repeat=repeat,
                                                      fixed_interferers=fixed,
                                                      executor=executor))
    finally:
        if executor is not None:
            executor.shutdown()
    return ExperimentResult(config=cfg, reference=reference, maps_per_repeat=maps_per_repeat,
                            trials=all_results, stats=summarize(all_results))


def summarize(results) -> dict:
    """Per-estimator summary: median/IQR of |error|, RMSE/std/bias of signed error."""
    results = list(results)
    if not results:
        raise InvalidInput("no trial results to summarize")
    names = sorted(results[0].estimates)
    stats = {}
    for name in names:
        abs_err = np.array([r.errors[name] for r in results])
        signed = np.array([r.signed_errors[name] for r in results])
        stats[name] = SummaryStats(
            median=float(np.percentile(abs_err, 50)),
            iqr=float(np.percentile(abs_err, 75) - np.percentile(abs_err, 25)),
            rmse=float(np.sqrt(np.mean(signed**2))),
            std=float(np.std(signed)),
            bias=float(np.mean(signed)),
            count=len(results),
        )
    return stats


def crb_single_source(geom: ArrayGeometry, snr_db: float, num_snapshots: int,
                      theta_deg: float) -> float:
    """Deterministic single-source direction CRB (standard deviation, degrees).

    For a linear array along x with per-element SNR ``snr`` (linear) and L
    snapshots:

        var(theta) >= (lambda / 2 pi)^2 / (2 L snr sin^2(theta) sum_m (x_m - x_bar)^2)

    The sin(theta) derivative factor follows from the angle-from-axis
    convention (phase varies with cos theta): the bound is finite at broadside
    and diverges toward endfire (0 or 180 deg).
    """
    if num_snapshots < 1:
        raise InvalidInput("num_snapshots must be >= 1")
    snr = 10.0 ** (snr_db / 10.0)
    x = geom.elements[:, 0]
    spread = float(((x - x.mean()) ** 2).sum())
    if spread <= 0:
        raise InvalidInput("array has no aperture along its axis")
    s = math.sin(math.radians(theta_deg))
    if abs(s) < 1e-12:  # endfire: no first-order sensitivity
        return math.inf
    var_rad = (geom.wavelength / (2.0 * math.pi)) ** 2 / (
        2.0 * num_snapshots * snr * s * s * spread)
    return math.degrees(math.sqrt(var_rad))

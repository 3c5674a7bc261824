"""Acceptance suite: one test per release gate, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines and timings.  Heavy Monte-Carlo fixtures are shared across criteria.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from steerlab.adaptation import adapt_covariance, fit_map
from steerlab.beamforming import ds_spectrum, estimate_doa, induced_power
from steerlab.config import SignalSpec, load_preset
from steerlab.covariance import sample_correlation
from steerlab.experiments import (crb_single_source, fit_scenario_maps, make_snapshots,
                                  run_adaptation_phase, run_experiment, run_reference_phase,
                                  _build_scene)
from steerlab.figures import theoretic_output_sir
from steerlab.geometry import sample_positions, simulated_steering_vector, true_doa
from steerlab.hpd import hermitian_eig, matrix_power_half


def report(num, ok, detail):
    print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def random_hpd(rng, n, ridge=0.05):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return g @ g.conj().T + ridge * np.eye(n)


# ---------------------------------------------------------------------------
# shared Monte-Carlo fixtures


@pytest.fixture(scope="module")
def rf_sweep():
    """RF strong-interferer experiment at SIR 0, -10, -20 dB (10 draws x 100 trials)."""
    base = load_preset("rf_sir-20")
    results = {}
    for sir in (0.0, -10.0, -20.0):
        cfg = replace(base, signal=replace(base.signal, sir_db=sir))
        results[sir] = run_experiment(cfg).stats
    return results


@pytest.fixture(scope="module")
def acoustic_beta400():
    cfg = load_preset("acoustic_beta400")
    return run_experiment(cfg).stats


@pytest.fixture(scope="module")
def acoustic_sir20():
    cfg = load_preset("acoustic_sir-20")
    cfg = replace(cfg, phases=replace(cfg.phases, interferer_draws=3, operational_trials=60))
    return run_experiment(cfg).stats


# ---------------------------------------------------------------------------
# criteria


def test_criterion_01_alignment_identity():
    """Fitted maps reproduce the reference correlation exactly at population level."""
    t0 = time.time()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(200):
        s, a = random_hpd(rng, 9), random_hpd(rng, 9)
        for variant in ("coral", "parallel-transport"):
            amap = fit_map(s, a, variant)
            resid = np.linalg.norm(amap.e @ a @ amap.e.conj().T - s) / np.linalg.norm(s)
            worst = max(worst, resid)
    dt = time.time() - t0
    ok = worst < 1e-10 and dt < 5.0
    assert report(1, ok, f"max alignment residual {worst:.2e} over 200 HPD pairs, "
                         f"both variants, {dt:.1f}s")


def test_criterion_02_commuting_agreement():
    """Coral and parallel-transport maps coincide on commuting inputs."""
    t0 = time.time()
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        g = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
        q, _ = np.linalg.qr(g)
        s = (q * rng.uniform(0.5, 3.0, 9)) @ q.conj().T
        a = (q * rng.uniform(0.5, 3.0, 9)) @ q.conj().T
        s, a = 0.5 * (s + s.conj().T), 0.5 * (a + a.conj().T)
        e = fit_map(s, a, "coral").e
        e_pt = fit_map(s, a, "parallel-transport").e
        worst = max(worst, np.linalg.norm(e - e_pt) / np.linalg.norm(e))
    dt = time.time() - t0
    ok = worst < 1e-9 and dt < 5.0
    assert report(2, ok, f"max map difference {worst:.2e} over 100 commuting pairs, {dt:.1f}s")


def test_criterion_03_theoretic_output_sir_positive():
    """Adapted DS output SIR stays above 0 dB across the tested source directions."""
    t0 = time.time()
    theta_s = np.arange(40.0, 141.0, 10.0)
    worst = math.inf
    for interferers in ([30.0], [30.0, 150.0]):
        sirs = theoretic_output_sir(interferers, theta_s, seed=1234)
        for variant in ("coral", "parallel-transport"):
            worst = min(worst, sirs[variant].min())
    dt = time.time() - t0
    ok = worst > 0.0 and dt < 120.0
    assert report(3, ok, f"min adapted output SIR {worst:.2f} dB over both variants and "
                         f"one/two interferers, {dt:.1f}s")


def test_criterion_04_rf_strong_interferer_table(rf_sweep):
    """Adapted medians reach the table's scale while the baseline stays lost."""
    stats = rf_sweep[-20.0]
    adapted = {k: stats[k].median for k in ("ds_adapted", "mvdr_adapted", "music_adapted")}
    baseline_ds = stats["ds"].median
    ok = all(v <= 2.0 for v in adapted.values()) and baseline_ds >= 20.0
    detail = ", ".join(f"{k} {v:.2f}" for k, v in adapted.items())
    assert report(4, ok, f"SIR -20 dB: {detail} (all <= 2.0), baseline ds median "
                         f"{baseline_ds:.1f} (>= 20)")


def test_criterion_05_rf_sir_sweep(rf_sweep):
    """Adapted medians stay small and IQRs stay tighter across the SIR sweep."""
    ok = True
    details = []
    for sir, stats in sorted(rf_sweep.items()):
        for name in ("ds", "mvdr", "music"):
            adapted = stats[f"{name}_adapted"]
            baseline = stats[name]
            ok &= adapted.median <= 2.0
            ok &= adapted.iqr < baseline.iqr
        details.append(f"SIR {sir:+.0f}: medians "
                       + "/".join(f"{stats[f'{n}_adapted'].median:.2f}"
                                  for n in ("ds", "mvdr", "music")))
    assert report(5, ok, "; ".join(details))


def test_criterion_06_acoustic_trends(acoustic_beta400, acoustic_sir20):
    """Reverberant-room improvements: ordering, not absolute values."""
    ok_beta = acoustic_beta400["ds_adapted"].median < acoustic_beta400["ds"].median
    ratios = {}
    ok_sir = True
    for name in ("ds", "mvdr", "music"):
        ratio = acoustic_sir20[f"{name}_adapted"].median / acoustic_sir20[name].median
        ratios[name] = ratio
        ok_sir &= ratio <= 0.5
    ok = ok_beta and ok_sir
    detail = (f"beta=400ms ds {acoustic_beta400['ds_adapted'].median:.2f} < "
              f"{acoustic_beta400['ds'].median:.2f}; SIR -20 adapted/baseline ratios "
              + ", ".join(f"{k} {v:.2f}" for k, v in ratios.items()) + " (all <= 0.5)")
    assert report(6, ok, detail)


def test_criterion_07_induced_spectrum_nulls():
    """The fitted map attenuates the whole interference region."""
    t0 = time.time()
    cfg = load_preset("rf_two_section_interference")
    reference = run_reference_phase(cfg)
    rng = np.random.default_rng([cfg.phases.seed, 211, 0])
    adaptation = run_adaptation_phase(cfg, rng)
    maps = fit_scenario_maps(cfg, reference, adaptation)
    angles = cfg.grid.angles
    power = induced_power(maps["coral"], cfg.geometry, angles)
    roi = (angles >= 70.0) & (angles <= 120.0)
    interference = (((angles >= 30.0) & (angles <= 60.0))
                    | ((angles >= 130.0) & (angles <= 160.0)))
    attenuation = 10.0 * np.log10(power[roi].max() / power[interference])
    dt = time.time() - t0
    ok = attenuation.min() >= 15.0 and dt < 120.0
    assert report(7, ok, f"min attenuation inside both interference sections "
                         f"{attenuation.min():.1f} dB (>= 15), {dt:.1f}s")


def test_criterion_08_numerical_substrate():
    """Eigendecomposition and matrix-root round trips on 1000 random matrices."""
    t0 = time.time()
    rng = np.random.default_rng(808)
    worst_rec = worst_uni = worst_sqrt = worst_inv = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 17))
        a = random_hpd(rng, n, ridge=0.2)
        w, v = hermitian_eig(a)
        scale = np.linalg.norm(a)
        worst_rec = max(worst_rec, np.linalg.norm((v * w) @ v.conj().T - a) / scale)
        worst_uni = max(worst_uni, np.linalg.norm(v.conj().T @ v - np.eye(n)))
        s = matrix_power_half(a, 0.5)
        si = matrix_power_half(a, -0.5)
        worst_sqrt = max(worst_sqrt, np.linalg.norm(s @ s - a) / scale)
        worst_inv = max(worst_inv, np.linalg.norm(si @ s - np.eye(n)))
    worst_char = 0.0
    for _ in range(500):
        g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        a2 = g + g.conj().T
        w, _ = hermitian_eig(a2)
        tr = np.trace(a2).real
        det = np.linalg.det(a2).real
        disc = math.sqrt(max(tr * tr - 4 * det, 0.0))
        expected = np.array([(tr + disc) / 2, (tr - disc) / 2])
        worst_char = max(worst_char, np.abs(w - expected).max()
                         / max(1.0, np.abs(expected).max()))
    dt = time.time() - t0
    ok = (worst_rec < 1e-9 and worst_uni < 1e-9 and worst_sqrt < 1e-9
          and worst_inv < 1e-9 and worst_char < 1e-12 and dt < 10.0)
    assert report(8, ok, f"worst: reconstruction {worst_rec:.1e}, unitarity {worst_uni:.1e}, "
                         f"sqrt {worst_sqrt:.1e}, invsqrt {worst_inv:.1e}, "
                         f"2x2 char-poly {worst_char:.1e}, {dt:.1f}s")


def test_criterion_09_adaptation_mean_population_oracle():
    """Empirical adaptation-phase mean matches the analytic channel mixture."""
    t0 = time.time()
    from test_experiments import tiny_rf_config  # reuse the small scenario builder
    L = 10_000
    cfg = tiny_rf_config(num_adaptation=5)
    cfg = replace(cfg, signal=SignalSpec(snr_db=10.0, sir_db=-10.0, num_snapshots=L))
    geom = cfg.geometry
    fixed = sample_positions(cfg.roi, 1, np.random.default_rng(909))
    out = run_adaptation_phase(cfg, np.random.default_rng([1, 211, 0]),
                               interferer_positions=fixed)
    replay = np.random.default_rng([1, 211, 0])
    g = simulated_steering_vector(geom, fixed[0])
    acc = np.zeros((9, 9), dtype=complex)
    for _ in range(cfg.phases.num_adaptation):
        desired = sample_positions(cfg.roi, 1, replay)
        h = simulated_steering_vector(geom, desired[0])
        rng_d, rng_i, _ = replay.spawn(3)
        s = (rng_d.standard_normal(L) + 1j * rng_d.standard_normal(L)) / np.sqrt(2)
        q = math.sqrt(10.0) * (rng_i.standard_normal(L)
                               + 1j * rng_i.standard_normal(L)) / np.sqrt(2)
        sigma_v = np.mean(np.abs(h) ** 2) / 10.0
        acc += (np.mean(np.abs(s) ** 2) * np.outer(h, h.conj())
                + np.mean(np.abs(q) ** 2) * np.outer(g, g.conj()) + sigma_v * np.eye(9))
    analytic = acc / cfg.phases.num_adaptation
    rel = np.linalg.norm(out.sigma - analytic) / np.linalg.norm(analytic)
    dt = time.time() - t0
    ok = rel < 3.0 / math.sqrt(L) and dt < 60.0
    assert report(9, ok, f"relative Frobenius error {rel:.2e} "
                         f"(< {3.0 / math.sqrt(L):.2e}) at L={L}, {dt:.1f}s")


@pytest.fixture(scope="module")
def snr_sweep_stds():
    """Adapted-DS error std per operational SNR, with the map fixed at 20 dB.

    Positions and signal seeds are shared across SNR cells (common random
    numbers), so cell differences are driven by the noise level only.
    """
    cfg = load_preset("rf_sir-20")
    reference = run_reference_phase(cfg)
    int_rng = np.random.default_rng([cfg.phases.seed, 223, 0])
    fixed = sample_positions(cfg.roi, 1, int_rng)
    adaptation = run_adaptation_phase(
        cfg, np.random.default_rng([cfg.phases.seed, 211, 0]), interferer_positions=fixed)
    amap = fit_scenario_maps(cfg, reference, adaptation)["coral"]
    geom, grid = cfg.geometry, cfg.grid
    stds = {}
    true_angles = []
    for snr in (0.0, 10.0, 20.0, 30.0):
        errors = []
        for t in range(200):
            rng = np.random.default_rng([cfg.phases.seed ^ t, 307, 99])
            desired = sample_positions(cfg.roi, 1, rng)
            scene = replace(_build_scene(cfg, desired, fixed), snr_db=snr)
            sigma = sample_correlation(make_snapshots(cfg, scene, rng))
            est = estimate_doa(ds_spectrum(adapt_covariance(amap, sigma), geom, grid))
            truth = true_doa(geom, desired[0])
            errors.append(est - truth)
            if snr == 30.0:
                true_angles.append(truth)
        stds[snr] = float(np.std(errors))
    return cfg, stds, true_angles


def test_criterion_10a_std_decreases_with_snr(snr_sweep_stds):
    _, stds, _ = snr_sweep_stds
    seq = [stds[s] for s in (0.0, 10.0, 20.0, 30.0)]
    ok = all(a > b for a, b in zip(seq, seq[1:]))
    assert report("10a", ok, "adapted-DS std over SNR 0/10/20/30 dB: "
                             + " > ".join(f"{v:.3f}" for v in seq) + " deg")


def test_criterion_10b_std_within_factor_three_of_bound(snr_sweep_stds):
    """Known-red gate: the interference-limited error floor sits far above the
    interference-free single-source bound.

    The empirical std plateaus at the spread of the map-induced,
    position-dependent bias (about 2 deg here; the scan grid alone floors it
    at 0.029 deg), while the bound at 30 dB with L=200 snapshots is about
    0.004 deg.  Both the residual-interference jitter and the bound scale as
    1/sqrt(L), so no snapshot count closes the gap; see the "Known-red gate"
    note in the README.
    """
    cfg, stds, true_angles = snr_sweep_stds
    bounds = [crb_single_source(cfg.geometry, 30.0, cfg.signal.num_snapshots, t)
              for t in true_angles]
    bound = float(np.mean(bounds))
    ratio = stds[30.0] / bound
    ok = ratio <= 3.0
    report("10b", ok, f"std {stds[30.0]:.3f} deg vs bound {bound:.5f} deg at 30 dB: "
                      f"ratio {ratio:.0f} (required <= 3)")
    assert ok, (f"adapted-DS std {stds[30.0]:.3f} deg exceeds 3x the single-source bound "
                f"{bound:.5f} deg; the scene is interference-limited, not noise-limited")

import math

import numpy as np
import pytest

from topospec.errors import AliasingConfigError
from topospec.hodge import laplacian_k, spectrum
from topospec.probe import diagonal_ensemble_weights, w_state_vector
from topospec.spectro import (
    CorrelatorSeries,
    EstimateConfig,
    correlator_exact,
    correlator_hadamard,
    estimate,
    hann_window,
    minimal_alpha,
    periodogram,
    prony_esprit,
    refine_peaks,
    zero_mode_test,
)
from topospec.susy import onehot_hamiltonian
from topospec.topograph import graph_from_edges

C4 = graph_from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
L1_C4 = laplacian_k(C4.B1, None)


def synthetic_series(freqs, amps, dt=0.25, m=256, noise=0.0, seed=0):
    t = dt * np.arange(m)
    vals = sum(a * np.exp(-1j * f * t) for f, a in zip(freqs, amps))
    if noise:
        rng = np.random.default_rng(seed)
        vals = vals + noise * (rng.normal(size=m) + 1j * rng.normal(size=m)) / math.sqrt(2)
    return CorrelatorSeries(dt=dt, values=vals)


# ---------------------------------------------------------------------------
# correlators
# ---------------------------------------------------------------------------


def test_exact_correlator_trivial_cases():
    tg = 0.3 * np.arange(32)
    ser = correlator_exact(np.zeros((3, 3)), np.array([1.0, 0, 0]), tg)
    assert np.allclose(ser.values, 1.0)
    evals, evecs = np.linalg.eigh(L1_C4)
    probe = evecs[:, 3]
    ser = correlator_exact(L1_C4, probe, tg, alpha=2.0)
    assert np.allclose(ser.values, np.exp(-1j * evals[3] / 2.0 * tg), atol=1e-12)
    assert np.allclose(np.abs(ser.values), 1.0, atol=1e-12)


def test_exact_correlator_matches_projection_weights():
    tg = 0.25 * np.arange(64)
    weights = diagonal_ensemble_weights(L1_C4, np.eye(4))
    ser = correlator_exact(L1_C4, None, tg, ensemble_weights=weights)
    evals = np.linalg.eigvalsh(L1_C4)
    expect = (weights * np.exp(-1j * np.outer(tg, evals))).sum(axis=1)
    assert np.abs(ser.values - expect).max() < 1e-12
    # nearly periodic revivals: |C| returns close to 1 at t = pi (period of
    # the {0,2,4} spectrum)
    idx = np.argmin(np.abs(tg - np.pi))
    assert abs(ser.values[idx]) > 0.95


def test_exact_correlator_nyquist_guard():
    tg = 1.0 * np.arange(16)
    with pytest.raises(AliasingConfigError) as exc:
        correlator_exact(L1_C4, np.ones(4) / 2, tg, alpha=1.0)
    assert f"{minimal_alpha(L1_C4, 1.0):.6g}"[:4] in str(exc.value)


def test_hadamard_h0_exact():
    ham = onehot_hamiltonian(np.zeros((2, 2)))
    tg = 0.4 * np.arange(6)
    psi = w_state_vector(2)
    ser = correlator_hadamard(ham, psi, tg, shots=0)
    assert np.allclose(ser.values, 1.0, atol=1e-12)


def test_hadamard_matches_exact_within_trotter():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(3, 3))
    M = (A + A.T) / 2
    ham = onehot_hamiltonian(M)
    tg = 0.3 * np.arange(12)
    psi = w_state_vector(3)
    alpha = 2.0
    exact = correlator_exact(M, np.ones(3) / math.sqrt(3), tg, alpha=alpha)
    approx = correlator_hadamard(ham, psi, tg, shots=0, order=2, steps=24, alpha=alpha)
    assert np.abs(exact.values - approx.values).max() < 5e-4


def test_shot_noise_matches_model():
    # empirical SE within 2x of sqrt((1 - |C|^2) / shots) over 100 repeats
    # t near the beat minimum keeps |C| moderate, where the complex-estimate
    # variance (2 - |C|^2)/M sits within 2x of the quoted (1 - |C|^2)/M
    h = np.array([[0.0, 0.5], [0.5, 0.8]])
    ham = onehot_hamiltonian(h)
    t_grid = 0.3 * np.arange(9)  # last point sits near the beat minimum
    psi = w_state_vector(2)
    shots = 4096
    exact = correlator_exact(h, np.ones(2) / math.sqrt(2), t_grid, alpha=1.0).values[-1]
    reps = []
    for rep in range(100):
        ser = correlator_hadamard(
            ham, psi, t_grid, shots=shots, order=2, steps=16, alpha=1.0, seed=rep
        )
        reps.append(ser.values[-1])
    reps = np.array(reps)
    se_emp = math.sqrt(np.mean(np.abs(reps - reps.mean()) ** 2))
    se_model = math.sqrt((1 - abs(exact) ** 2) / shots)
    assert se_model / 2 <= se_emp <= 2 * se_model


# ---------------------------------------------------------------------------
# periodogram + refinement
# ---------------------------------------------------------------------------


def test_periodogram_dc_lobe():
    ser = synthetic_series([0.0], [1.0])
    om, pw = periodogram(ser)
    assert pw.argmax() == 0
    # Hann sidelobes fall off fast away from the main lobe
    assert pw[8:-8].max() < 1e-4 * pw[0]


def test_periodogram_on_grid_peak():
    ser = synthetic_series([6 * 2 * math.pi / (256 * 0.25)], [1.0])
    om, pw = periodogram(ser)
    assert pw.argmax() == 6


def test_two_lines_resolved():
    dw = 2 * math.pi / (256 * 0.25)
    ser = synthetic_series([5 * dw, 8 * dw], [1.0, 0.8])
    om, pw = periodogram(ser)
    peaks = refine_peaks(om, pw, ser.dt)
    got = sorted(w for w, _ in peaks.lines)
    assert len(got) == 2
    assert abs(got[0] - 5 * dw) < 0.1 * dw
    assert abs(got[1] - 8 * dw) < 0.1 * dw


def test_parseval_within_one_percent():
    rng = np.random.default_rng(2)
    vals = rng.normal(size=128) + 1j * rng.normal(size=128)
    ser = CorrelatorSeries(dt=0.2, values=vals)
    om, pw = periodogram(ser)
    w = hann_window(128)
    time_energy = (np.abs(w * vals) ** 2).sum()
    freq_energy = pw.sum() / 128
    assert abs(freq_energy - time_energy) / time_energy < 0.01


def test_refine_symmetric_neighbors_zero_shift():
    # on-grid line: A- == A+ by symmetry, delta = 0
    dw = 2 * math.pi / (256 * 0.25)
    ser = synthetic_series([10 * dw], [1.0])
    om, pw = periodogram(ser)
    peaks = refine_peaks(om, pw, ser.dt)
    w0, _ = min(peaks.lines, key=lambda la: abs(la[0] - 10 * dw))
    assert abs(w0 - 10 * dw) < 1e-9


def test_refine_off_grid_sub_bin():
    dw = 2 * math.pi / (256 * 0.25)
    target = (10 + 0.3) * dw
    ser = synthetic_series([target], [1.0])
    om, pw = periodogram(ser)
    peaks = refine_peaks(om, pw, ser.dt)
    w0, _ = min(peaks.lines, key=lambda la: abs(la[0] - target))
    assert abs(w0 - target) < 0.05 * dw


def test_refine_sub_bin_sweep():
    dw = 2 * math.pi / (256 * 0.25)
    for frac in (0.1, 0.25, 0.4, 0.45):
        target = (12 + frac) * dw
        ser = synthetic_series([target], [1.0])
        om, pw = periodogram(ser)
        peaks = refine_peaks(om, pw, ser.dt)
        w0, _ = min(peaks.lines, key=lambda la: abs(la[0] - target))
        assert abs(w0 - target) < 0.05 * dw, frac


def test_flat_spectrum_fallback_noted():
    ser = CorrelatorSeries(dt=0.25, values=np.zeros(64, dtype=complex))
    om, pw = periodogram(ser)
    peaks = refine_peaks(om, pw, ser.dt)
    assert peaks.flat_spectrum


def test_estimator_consistency_snr():
    # |w_hat - w| <= 3 * beta_win * dw / snr in >= 95% of trials (Hann: 0.5)
    dw = 2 * math.pi / (256 * 0.25)
    rng = np.random.default_rng(3)
    ok = 0
    trials = 200
    for k in range(trials):
        target = (9 + rng.uniform(-0.45, 0.45)) * dw
        noise = 0.5  # moderate SNR so noise, not interpolation bias, dominates
        ser = synthetic_series([target], [1.0], noise=noise, seed=k)
        om, pw = periodogram(ser)
        peaks = refine_peaks(om, pw, ser.dt)
        if not peaks.lines:
            continue
        w0, a0 = min(peaks.lines, key=lambda la: abs(la[0] - target))
        band = (om > 0.5 * math.pi / ser.dt) & (om < 0.8 * math.pi / ser.dt)
        sigma = math.sqrt(pw[band].mean())  # rms noise amplitude in the spectrum
        snr = a0 / max(sigma, 1e-12)
        if abs(w0 - target) <= 3 * 0.5 * dw / snr:
            ok += 1
    assert ok / trials >= 0.95


# ---------------------------------------------------------------------------
# prony
# ---------------------------------------------------------------------------


def test_prony_two_lines_exact():
    ser = synthetic_series([0.8, 2.3], [0.6, 0.4], dt=0.2, m=64)
    freqs, info = prony_esprit(ser, ranks=(2, 3, 4))
    assert len(freqs) == 2
    assert abs(freqs[0] - 0.8) < 1e-9
    assert abs(freqs[1] - 2.3) < 1e-9


def test_prony_constant_signal():
    ser = CorrelatorSeries(dt=0.2, values=np.ones(64, dtype=complex))
    freqs, info = prony_esprit(ser, ranks=(1, 2))
    assert len(freqs) == 1
    assert abs(freqs[0]) < 1e-9


def test_prony_overrank_discards_spurious():
    ser = synthetic_series([1.1], [1.0], dt=0.2, m=64)
    freqs, info = prony_esprit(ser, ranks=(1, 2, 3, 6))
    assert len(freqs) == 1
    assert abs(freqs[0] - 1.1) < 1e-9


# ---------------------------------------------------------------------------
# zero-mode test and aggregation
# ---------------------------------------------------------------------------


def test_zero_mode_gradient_probe_false():
    # probe in the gradient space of C4 has no kernel weight
    evals, evecs = np.linalg.eigh(L1_C4)
    probe = evecs[:, 2]
    tg = 0.25 * np.arange(256)
    ser = correlator_exact(L1_C4, probe, tg)
    om, pw = periodogram(ser)
    ratio, is_zero = zero_mode_test(om, pw, 2 * ser.delta_omega, ser.dt)
    assert not is_zero


def test_zero_mode_harmonic_probe_true():
    evals, evecs = np.linalg.eigh(L1_C4)
    probe = evecs[:, 0]
    tg = 0.25 * np.arange(256)
    ser = correlator_exact(L1_C4, probe, tg)
    om, pw = periodogram(ser)
    ratio, is_zero = zero_mode_test(om, pw, 2 * ser.delta_omega, ser.dt)
    assert is_zero
    assert ratio > 1e3


def test_zero_mode_fivepoint_contractible_is_false():
    # at radius 1.0 the five-point complex has no kernel: low-frequency power
    # falls to sideband levels
    from topospec.cli import _fivepoint_l1
    from topospec.fixtures import FIVE_POINT_CLOUD

    l1, edges = _fivepoint_l1(FIVE_POINT_CLOUD, 1.0)
    assert spectrum(l1).beta_k == 0
    tg = 0.25 * np.arange(256)
    weights = diagonal_ensemble_weights(l1, np.eye(len(edges)))
    alpha = float(np.abs(np.linalg.eigvalsh(l1)).max()) * 0.25 / (0.8 * math.pi)
    ser = correlator_exact(l1, None, tg, alpha=max(1.0, alpha), ensemble_weights=weights)
    om, pw = periodogram(ser)
    ratio, is_zero = zero_mode_test(om, pw, 2 * ser.delta_omega, ser.dt)
    assert not is_zero


def test_estimate_c4_beta_and_gap():
    tg = 0.25 * np.arange(256)
    weights = diagonal_ensemble_weights(L1_C4, np.eye(4))
    ser = correlator_exact(L1_C4, None, tg, ensemble_weights=weights)
    est = estimate(ser, EstimateConfig(ensemble_dim=4))
    assert est.beta1_hat == 1
    assert abs(est.gap_hat - 2.0) <= ser.delta_omega
    assert spectrum(L1_C4).beta_k == est.beta1_hat


def test_estimate_beta1_matches_kernel_on_fivepoint():
    from topospec.cli import _fivepoint_l1
    from topospec.fixtures import FIVE_POINT_CLOUD, FIVE_POINT_RADII

    tg = 0.25 * np.arange(256)
    for eps in FIVE_POINT_RADII:
        l1, edges = _fivepoint_l1(FIVE_POINT_CLOUD, eps)
        alpha = max(1.0, float(np.abs(np.linalg.eigvalsh(l1)).max()) * 0.25 / (0.8 * math.pi))
        weights = diagonal_ensemble_weights(l1, np.eye(len(edges)))
        ser = correlator_exact(l1, None, tg, alpha=alpha, ensemble_weights=weights)
        est = estimate(ser, EstimateConfig(ensemble_dim=len(edges)))
        assert est.beta1_hat == spectrum(l1).beta_k


def test_estimate_counts_multiplicity_two():
    # two disjoint 4-cycles: kernel dimension 2, one merged zero line whose
    # strength fraction resolves the multiplicity
    edges8 = [(0, 1), (1, 2), (2, 3), (0, 3), (4, 5), (5, 6), (6, 7), (4, 7)]
    g = graph_from_edges(8, edges8, triangle_mode="none")
    l1 = laplacian_k(g.B1, None)
    assert spectrum(l1).beta_k == 2
    tg = 0.25 * np.arange(256)
    weights = diagonal_ensemble_weights(l1, np.eye(8))
    ser = correlator_exact(l1, None, tg, ensemble_weights=weights)
    est = estimate(ser, EstimateConfig(ensemble_dim=8))
    assert est.beta1_hat == 2


def test_estimate_alpha_sweep_invariance():
    tg = 0.25 * np.arange(256)
    weights = diagonal_ensemble_weights(L1_C4, np.eye(4))
    gaps, betas = [], []
    for alpha in (1.0, 1.7, 2.9):
        ser = correlator_exact(L1_C4, None, tg, alpha=alpha, ensemble_weights=weights)
        est = estimate(ser, EstimateConfig(ensemble_dim=4))
        gaps.append(est.gap_hat)
        betas.append(est.beta1_hat)
    assert betas == [1, 1, 1]
    # rescaled energies agree within the (alpha-scaled) resolution
    for alpha, g in zip((1.0, 1.7, 2.9), gaps):
        assert abs(g - 2.0) <= alpha * 2 * math.pi / (256 * 0.25)


def test_estimate_gap_absent_is_valid():
    # kernel-only probe: all power at omega = 0
    ser = CorrelatorSeries(dt=0.25, values=np.ones(128, dtype=complex))
    est = estimate(ser, EstimateConfig(ensemble_dim=1))
    assert est.gap_hat is None
    assert est.beta1_hat >= 1


def test_estimate_median_rank_order_invariance():
    tg = 0.25 * np.arange(256)
    weights = diagonal_ensemble_weights(L1_C4, np.eye(4))
    ser = correlator_exact(L1_C4, None, tg, ensemble_weights=weights)
    a = estimate(ser, EstimateConfig(ensemble_dim=4, prony_ranks=(2, 3, 4, 5)))
    b = estimate(ser, EstimateConfig(ensemble_dim=4, prony_ranks=(5, 4, 3, 2)))
    assert a.gap_hat == pytest.approx(b.gap_hat, abs=1e-12)


def test_estimate_alias_guard_keeps_consistent_lines():
    from topospec.spectro import secondary_grid, SECONDARY_GRID_RATIO

    assert SECONDARY_GRID_RATIO == pytest.approx(0.6180339887, abs=1e-9)
    tg1 = 0.25 * np.arange(256)
    tg2 = secondary_grid(tg1)
    weights = diagonal_ensemble_weights(L1_C4, np.eye(4))
    s1 = correlator_exact(L1_C4, None, tg1, ensemble_weights=weights)
    s2 = correlator_exact(L1_C4, None, tg2, ensemble_weights=weights)
    est = estimate(s1, EstimateConfig(ensemble_dim=4), secondary=s2)
    assert est.gap_hat is not None
    assert abs(est.gap_hat - 2.0) <= s1.delta_omega


def test_bootstrap_ci_contains_gap():
    tg = 0.25 * np.arange(256)
    weights = diagonal_ensemble_weights(L1_C4, np.eye(4))
    ser = correlator_exact(L1_C4, None, tg, ensemble_weights=weights)
    est = estimate(ser, EstimateConfig(ensemble_dim=4), bootstrap=True)
    assert est.gap_ci is not None
    lo, hi = est.gap_ci
    assert lo <= est.gap_hat * 1.05 and hi >= est.gap_hat * 0.95


def test_correlator_magnitude_invariant():
    # exact mode: |C| <= 1; sampled mode: |C| <= 1 + 3 sigma with sigma the
    # per-point shot scale 1/sqrt(shots)
    rng = np.random.default_rng(9)
    A = rng.normal(size=(3, 3))
    M = (A + A.T) / 2
    tg = 0.2 * np.arange(16)
    exact = correlator_exact(M, np.ones(3) / math.sqrt(3), tg, alpha=2.0)
    assert np.abs(exact.values).max() <= 1.0 + 1e-12
    ham = onehot_hamiltonian(M)
    psi = w_state_vector(3)
    shots = 512
    sampled = correlator_hadamard(ham, psi, tg, shots=shots, steps=8, alpha=2.0, seed=3)
    assert np.abs(sampled.values).max() <= 1.0 + 3.0 / math.sqrt(shots) + 1e-12


def test_series_csv(tmp_path):
    ser = synthetic_series([1.0], [1.0], m=32)
    ser.to_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "t,re,im"
    assert len(lines) == 33

"""Process reconstruction and scoring: count normalization, linear inversion,
Poisson likelihood, Nelder-Mead MLE, process fidelity and Monte-Carlo errors."""

import numpy as np
import pytest

from memtomo.channel import (
    IDENTITY_CHI,
    SETTING_ORDER,
    MemoryChannelParams,
    ShotConfig,
    chi_from_kraus,
    expected_dataset,
    memory_chi,
    off_chi,
    simulate_dataset,
    unitary_chi,
)
from memtomo.errors import (
    DegeneratePairError,
    NotPSDError,
    UnphysicalChiError,
    ZeroTraceError,
)
from memtomo.linalg import frobenius_distance, param_to_psd
from memtomo.tomography import (
    FidelityEstimate,
    ReconstructionResult,
    efficiency_of,
    linear_inversion,
    mle_reconstruct,
    monte_carlo_errors,
    nll,
    normalized_probs,
    process_fidelity,
    reconstruct,
)
from tests.conftest import noiseless_dataset, random_chi

IDX = {pair: i for i, pair in enumerate(SETTING_ORDER)}
X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
CHI_X = unitary_chi(X)


# --- normalized_probs -----------------------------------------------------------


def test_probs_identity_extremes():
    probs, intensities = normalized_probs(noiseless_dataset(IDENTITY_CHI).mean_counts())
    assert probs[IDX[("H", "H")]] == pytest.approx(1.0, abs=1e-12)
    assert probs[IDX[("H", "V")]] == pytest.approx(0.0, abs=1e-12)
    assert probs[IDX[("H", "D")]] == pytest.approx(0.5, abs=1e-12)
    assert np.allclose(intensities, 5000.0, atol=1e-9)


def test_probs_loss_invariant():
    full, i_full = normalized_probs(noiseless_dataset(IDENTITY_CHI).mean_counts())
    lossy, i_lossy = normalized_probs(noiseless_dataset(0.2 * IDENTITY_CHI).mean_counts())
    assert np.allclose(full, lossy, atol=1e-12)
    assert np.allclose(i_lossy, 0.2 * i_full, atol=1e-9)


def test_probs_unbalanced_memory_oracle():
    p = MemoryChannelParams(
        eta_h0=0.3, eta_v0=0.15, residual_phase=0.0, storage_time=0.0, off_depolarization=0.0
    )
    probs, _ = normalized_probs(noiseless_dataset(memory_chi(p)).mean_counts())
    contrast = 2.0 * np.sqrt(0.3 * 0.15) / 0.45
    assert probs[IDX[("D", "D")]] == pytest.approx((1.0 + contrast) / 2.0, abs=1e-12)
    assert probs[IDX[("D", "D")]] == pytest.approx(0.9714, abs=5e-5)


def test_probs_background_subtracted():
    shots = ShotConfig(photons_per_pulse=5000.0, background=0.25)
    counts = expected_dataset(IDENTITY_CHI, shots, "memory_on").mean_counts()
    probs, _ = normalized_probs(counts, background=0.25)
    clean, _ = normalized_probs(noiseless_dataset(IDENTITY_CHI).mean_counts())
    assert np.allclose(probs, clean, atol=1e-12)


def test_probs_degenerate_pair():
    counts = noiseless_dataset(IDENTITY_CHI).mean_counts().copy()
    for k in ("D", "A"):
        counts[IDX[("V", k)]] = 0.0
    with pytest.raises(DegeneratePairError):
        normalized_probs(counts)
    with pytest.warns(RuntimeWarning):
        probs, _ = normalized_probs(counts, on_degenerate="uniform")
    assert probs[IDX[("V", "D")]] == pytest.approx(0.5)
    assert probs[IDX[("V", "A")]] == pytest.approx(0.5)


# --- linear inversion -------------------------------------------------------------


def test_linear_identity():
    res = linear_inversion(noiseless_dataset(IDENTITY_CHI))
    assert res.method == "linear"
    assert res.converged
    assert frobenius_distance(res.chi, IDENTITY_CHI) < 1e-10


def test_linear_x_process():
    res = linear_inversion(noiseless_dataset(CHI_X))
    assert abs(res.chi[1, 1] - 1.0) < 1e-10
    assert frobenius_distance(res.chi, CHI_X) < 1e-10


def test_linear_memory_matches_kraus_oracle():
    p = MemoryChannelParams(
        eta_h0=0.3, eta_v0=0.15, residual_phase=0.0, storage_time=0.0, off_depolarization=0.0
    )
    oracle = chi_from_kraus([np.diag([np.sqrt(0.3), np.sqrt(0.15)])])
    res = linear_inversion(noiseless_dataset(memory_chi(p)))
    assert frobenius_distance(res.chi, oracle) < 1e-10


def test_linear_recovers_random_channels(rng):
    for _ in range(25):
        chi = random_chi(rng)
        res = linear_inversion(noiseless_dataset(chi))
        assert frobenius_distance(res.chi, chi) < 1e-10


def test_linear_reports_negative_eigenvalues():
    shots = ShotConfig(photons_per_pulse=200.0, repetitions=3, seed=21)
    ds = simulate_dataset(0.9 * IDENTITY_CHI, shots, "memory_on")
    res = linear_inversion(ds)
    assert np.isclose(res.min_eigenvalue, np.linalg.eigvalsh(res.chi)[0])
    assert frobenius_distance(res.chi, res.chi.conj().T) < 1e-12


# --- Poisson likelihood -------------------------------------------------------------


def test_nll_minimized_at_truth(rng):
    chi_true = random_chi(rng)
    ds = noiseless_dataset(chi_true)
    base = nll(chi_true, ds)
    assert np.isfinite(base)
    for _ in range(1000):
        other = random_chi(rng)
        assert nll(other, ds) >= base - 1e-6


def test_nll_gross_mismatch():
    ds = noiseless_dataset(CHI_X)
    assert nll(IDENTITY_CHI, ds) > nll(CHI_X, ds) + 1e4


def test_nll_rejects_unphysical():
    with pytest.raises(UnphysicalChiError):
        nll(np.diag([1.0, -0.2, 0.0, 0.0]).astype(complex), noiseless_dataset(IDENTITY_CHI))


# --- MLE ----------------------------------------------------------------------------


def test_mle_noiseless_identity():
    res = mle_reconstruct(noiseless_dataset(IDENTITY_CHI))
    assert res.method == "mle"
    assert res.converged
    assert res.iterations > 0
    assert np.isfinite(res.nll)
    assert frobenius_distance(res.chi, IDENTITY_CHI) < 1e-4
    assert res.min_eigenvalue >= -1e-12


def test_mle_noiseless_random_channels(rng):
    for _ in range(3):
        chi = random_chi(rng)
        res = mle_reconstruct(noiseless_dataset(chi))
        assert frobenius_distance(res.chi, chi) < 1e-4


def test_mle_noisy_dataset_physical():
    shots = ShotConfig(photons_per_pulse=5000.0, repetitions=500, seed=11)
    ds = simulate_dataset(off_chi(MemoryChannelParams()), shots, "memory_off")
    res = mle_reconstruct(ds)
    assert res.converged
    assert res.min_eigenvalue >= -1e-12
    assert 0.9 < np.trace(res.chi).real < 1.1
    assert process_fidelity(res.chi, off_chi(MemoryChannelParams())) > 0.998


def test_mle_is_deterministic():
    shots = ShotConfig(photons_per_pulse=2000.0, repetitions=50, seed=3)
    ds = simulate_dataset(off_chi(MemoryChannelParams()), shots, "memory_off")
    a = mle_reconstruct(ds, tol=1e-6)
    b = mle_reconstruct(ds, tol=1e-6)
    assert np.array_equal(a.chi, b.chi)
    assert a.nll == b.nll
    assert a.iterations == b.iterations


def test_mle_budget_exhaustion_flagged():
    shots = ShotConfig(photons_per_pulse=5000.0, repetitions=500, seed=13)
    ds = simulate_dataset(off_chi(MemoryChannelParams()), shots, "memory_off")
    res = mle_reconstruct(ds, max_iter=40, restarts=0)
    assert not res.converged
    assert res.chi.shape == (4, 4)
    assert res.min_eigenvalue >= -1e-12


def test_reconstruct_dispatcher():
    ds = noiseless_dataset(IDENTITY_CHI)
    assert reconstruct(ds, method="linear").method == "linear"
    assert reconstruct(ds, method="mle", tol=1e-6).method == "mle"
    with pytest.raises(ValueError):
        reconstruct(ds, method="bayes")


# --- process fidelity -----------------------------------------------------------------


def test_fidelity_identity_cases():
    assert process_fidelity(IDENTITY_CHI, IDENTITY_CHI) == pytest.approx(1.0, abs=1e-12)
    assert process_fidelity(IDENTITY_CHI, CHI_X) == pytest.approx(0.0, abs=1e-12)
    quarter = unitary_chi((np.eye(2) - 1j * X) / np.sqrt(2.0))
    assert process_fidelity(IDENTITY_CHI, quarter) == pytest.approx(0.5, abs=1e-12)


def test_fidelity_unitary_overlap_formula(rng):
    for _ in range(50):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        u, _ = np.linalg.qr(a)
        v, _ = np.linalg.qr(b)
        f = process_fidelity(unitary_chi(u), unitary_chi(v))
        # sqrt of a rank-deficient matrix amplifies eigenvalue round-off to ~1e-8
        assert f == pytest.approx(abs(np.trace(u.conj().T @ v)) ** 2 / 4.0, abs=1e-7)


def test_fidelity_symmetric_and_scale_invariant(rng):
    for _ in range(25):
        a, b = random_chi(rng), random_chi(rng)
        f = process_fidelity(a, b)
        assert 0.0 <= f <= 1.0
        assert process_fidelity(b, a) == pytest.approx(f, abs=1e-9)
        assert process_fidelity(0.2 * a, b) == pytest.approx(f, abs=1e-9)
        assert process_fidelity(a, 3.0 * b) == pytest.approx(f, abs=1e-9)


def test_fidelity_unbalanced_memory_closed_form():
    p = MemoryChannelParams(
        eta_h0=0.3, eta_v0=0.15, residual_phase=0.0, storage_time=0.0, off_depolarization=0.0
    )
    target = (np.sqrt(0.3) + np.sqrt(0.15)) ** 2 / (2.0 * 0.45)
    assert process_fidelity(memory_chi(p), IDENTITY_CHI) == pytest.approx(target, abs=1e-6)
    assert target == pytest.approx(0.9714, abs=5e-5)


def test_fidelity_off_chi_anchor():
    chi = off_chi(MemoryChannelParams(off_depolarization=0.04))
    assert process_fidelity(chi, IDENTITY_CHI) == pytest.approx(0.97, abs=1e-12)


def test_fidelity_errors():
    with pytest.raises(ZeroTraceError):
        process_fidelity(np.zeros((4, 4), dtype=complex), IDENTITY_CHI)
    with pytest.raises(NotPSDError):
        process_fidelity(IDENTITY_CHI, np.diag([1.0, -0.5, 0.0, 0.0]).astype(complex))


def test_efficiency_of():
    assert efficiency_of(0.15 * IDENTITY_CHI) == pytest.approx(0.15, abs=1e-12)


# --- Monte-Carlo error bars --------------------------------------------------------------


def test_monte_carlo_requires_enough_trials():
    ds = noiseless_dataset(IDENTITY_CHI)
    with pytest.raises(ValueError):
        monte_carlo_errors(ds, IDENTITY_CHI, trials=10)


def test_monte_carlo_estimate_properties():
    shots = ShotConfig(photons_per_pulse=5000.0, repetitions=500, seed=17)
    ds = simulate_dataset(off_chi(MemoryChannelParams()), shots, "memory_off")
    ref = off_chi(MemoryChannelParams())
    est = monte_carlo_errors(ds, ref, trials=30, tol=1e-6)
    assert est.trials == 30
    assert 0.97 <= est.value <= 1.0
    assert 0.0 < est.std_err < 0.01
    again = monte_carlo_errors(ds, ref, trials=30, tol=1e-6)
    assert est.value == again.value
    assert est.std_err == again.std_err


# --- result serialization ------------------------------------------------------------------


def test_reconstruction_result_round_trip():
    res = linear_inversion(noiseless_dataset(IDENTITY_CHI))
    doc = res.to_json_dict()
    assert set(doc) >= {"method", "chi_real", "chi_imag", "iterations", "converged", "min_eigenvalue"}
    back = ReconstructionResult.from_json_dict(doc)
    assert np.allclose(back.chi, res.chi, atol=1e-15)
    assert back.method == res.method
    assert back.converged == res.converged


def test_fidelity_estimate_round_trip():
    est = FidelityEstimate(value=0.97, std_err=0.01, trials=100)
    back = FidelityEstimate.from_json_dict(est.to_json_dict())
    assert back == est


def test_param_seed_matches_psd_projection(rng):
    # MLE seeding path: a PSD matrix survives the parametrization round trip
    chi = random_chi(rng)
    t = np.zeros(16)
    t[0] = np.sqrt(chi[0, 0].real)
    assert param_to_psd(t)[0, 0] == pytest.approx(chi[0, 0].real, abs=1e-12)

"""Polarization state algebra: the six tomography states, projector
probabilities, Stokes conversions and the Pauli basis."""

import numpy as np
import pytest

from memtomo.errors import DegeneratePairError, UnknownLabelError
from memtomo.states import (
    ANALYZER_PAIRS,
    LABELS,
    PAULI_BASIS,
    density_of,
    projector_prob,
    rho_from_stokes,
    stokes_from_probs,
    tomography_state,
)

INV_SQRT2 = 1.0 / np.sqrt(2.0)


def probs_of(rho):
    return {k: projector_prob(rho, k) for k in LABELS}


# --- tomography states --------------------------------------------------------


def test_state_amplitudes():
    assert np.allclose(tomography_state("H"), [1.0, 0.0])
    assert np.allclose(tomography_state("V"), [0.0, 1.0])
    assert np.allclose(tomography_state("D"), [INV_SQRT2, INV_SQRT2])
    assert np.allclose(tomography_state("A"), [INV_SQRT2, -INV_SQRT2])
    assert np.allclose(tomography_state("R"), [INV_SQRT2, -1j * INV_SQRT2])
    assert np.allclose(tomography_state("L"), [INV_SQRT2, 1j * INV_SQRT2])


def test_unknown_label_rejected():
    with pytest.raises(UnknownLabelError):
        tomography_state("Q")
    with pytest.raises(UnknownLabelError):
        projector_prob(np.eye(2) / 2.0, "h")


def test_mutually_unbiased_structure():
    # same state: 1; partner in a pair: 0; across pairs: 1/2
    pair_of = {}
    for a, b in ANALYZER_PAIRS:
        pair_of[a] = {a, b}
        pair_of[b] = {a, b}
    for i, a in enumerate(LABELS):
        for b in LABELS[i:]:
            overlap = abs(np.vdot(tomography_state(a), tomography_state(b))) ** 2
            if a == b:
                assert overlap == pytest.approx(1.0, abs=1e-12)
            elif b in pair_of[a]:
                assert overlap == pytest.approx(0.0, abs=1e-12)
            else:
                assert overlap == pytest.approx(0.5, abs=1e-12)


def test_l_is_plus_eigenstate_of_y():
    y = PAULI_BASIS[2]
    psi = tomography_state("L")
    assert np.allclose(y @ psi, psi)


# --- density matrices and projector probabilities -----------------------------


def test_density_of_r():
    rho = density_of(tomography_state("R"))
    target = 0.5 * np.array([[1.0, 1j], [-1j, 1.0]])
    assert np.allclose(rho, target, atol=1e-12)


def test_density_rejects_unnormalized():
    with pytest.raises(ValueError):
        density_of(np.array([1.0, 1.0]))


def test_projector_probs():
    rho_h = density_of(tomography_state("H"))
    assert projector_prob(rho_h, "H") == pytest.approx(1.0, abs=1e-12)
    assert projector_prob(rho_h, "D") == pytest.approx(0.5, abs=1e-12)
    rho_d = 0.2 * density_of(tomography_state("D"))
    assert projector_prob(rho_d, "A") == pytest.approx(0.0, abs=1e-12)


def test_projector_prob_is_linear(rng):
    rho1 = density_of(tomography_state("R"))
    rho2 = density_of(tomography_state("D"))
    for _ in range(50):
        a, b = rng.uniform(0.0, 1.0, size=2)
        for k in LABELS:
            combined = projector_prob(a * rho1 + b * rho2, k)
            assert combined == pytest.approx(
                a * projector_prob(rho1, k) + b * projector_prob(rho2, k), abs=1e-12
            )


# --- Pauli basis ---------------------------------------------------------------


def test_pauli_basis_orthonormal():
    for i in range(4):
        for j in range(4):
            inner = np.trace(PAULI_BASIS[i] @ PAULI_BASIS[j])
            assert inner == pytest.approx(2.0 if i == j else 0.0, abs=1e-15)
        assert np.allclose(PAULI_BASIS[i], PAULI_BASIS[i].conj().T)


# --- Stokes conversions ---------------------------------------------------------


def test_stokes_cardinal_directions():
    base = {k: 0.5 for k in LABELS}
    s = stokes_from_probs({**base, "H": 1.0, "V": 0.0})
    assert np.allclose(s, [0.0, 0.0, 1.0], atol=1e-12)
    s = stokes_from_probs({**base, "D": 1.0, "A": 0.0})
    assert np.allclose(s, [1.0, 0.0, 0.0], atol=1e-12)
    s = stokes_from_probs({**base, "R": 0.0, "L": 1.0})
    assert np.allclose(s, [0.0, 1.0, 0.0], atol=1e-12)


def test_stokes_pairwise_normalization_cancels_loss():
    base = {"H": 0.9, "V": 0.1, "D": 0.4, "A": 0.6, "R": 0.7, "L": 0.3}
    lossy = {k: 0.2 * v for k, v in base.items()}
    assert np.allclose(stokes_from_probs(base), stokes_from_probs(lossy), atol=1e-12)


def test_stokes_degenerate_pair_raises():
    probs = {"H": 0.5, "V": 0.5, "D": 0.0, "A": 0.0, "R": 0.5, "L": 0.5}
    with pytest.raises(DegeneratePairError):
        stokes_from_probs(probs)


def test_rho_from_stokes_center_and_pole():
    assert np.allclose(rho_from_stokes(np.zeros(3)), np.eye(2) / 2.0, atol=1e-15)
    assert np.allclose(rho_from_stokes(np.array([0.0, 0.0, 1.0])), np.diag([1.0, 0.0]), atol=1e-15)


def test_rho_from_stokes_clamps_overshoot():
    s = np.array([1.0 + 5e-10, 0.0, 0.0])
    rho = rho_from_stokes(s)
    assert np.min(np.linalg.eigvalsh(rho)) >= -1e-15
    # raw mode keeps the overshoot (used by linear inversion)
    raw = rho_from_stokes(s, clamp=False)
    assert np.min(np.linalg.eigvalsh(raw)) < 0.0


def test_state_probs_round_trip():
    for label in LABELS:
        rho = density_of(tomography_state(label))
        s = stokes_from_probs(probs_of(rho))
        assert np.allclose(rho_from_stokes(s), rho, atol=1e-12)


def test_random_state_round_trip(rng):
    for _ in range(200):
        s_true = rng.normal(size=3)
        s_true *= rng.uniform(0.0, 1.0) / np.linalg.norm(s_true)
        rho = rho_from_stokes(s_true)
        s_back = stokes_from_probs(probs_of(rho))
        assert np.allclose(s_back, s_true, atol=1e-12)

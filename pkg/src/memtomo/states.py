"""Polarization qubit algebra: the six tomography states, Pauli/Stokes maps.

Basis convention: |H> = (1, 0), |V> = (0, 1).  The circular states follow
R = (|H> - i|V>)/sqrt(2), L = (|H> + i|V>)/sqrt(2), which makes |L> the +1
eigenstate of Pauli Y; the Stokes map below relies on exactly that sign.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .errors import DegeneratePairError, UnknownLabelError

LABELS = ("H", "V", "D", "A", "R", "L")

# Analyzer pairs normalized independently when converting counts to
# probabilities; the pairwise ratio is what makes uniform loss drop out.
ANALYZER_PAIRS = (("H", "V"), ("D", "A"), ("R", "L"))

_SQ2 = 1.0 / np.sqrt(2.0)
_STATES = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "D": np.array([_SQ2, _SQ2], dtype=complex),
    "A": np.array([_SQ2, -_SQ2], dtype=complex),
    "R": np.array([_SQ2, -1j * _SQ2], dtype=complex),
    "L": np.array([_SQ2, 1j * _SQ2], dtype=complex),
}

IDENTITY = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# Unnormalized operator basis {I, X, Y, Z}: tr(G_i G_j) = 2 delta_ij, the
# identity process is chi = diag(1,0,0,0), and tr(chi) reads out efficiency.
PAULI_BASIS = np.stack([IDENTITY, PAULI_X, PAULI_Y, PAULI_Z])


def tomography_state(label: str) -> np.ndarray:
    """Amplitudes (a_H, a_V) of one of the six preparation/analysis states."""
    try:
        return _STATES[label].copy()
    except KeyError:
        raise UnknownLabelError(f"unknown polarization label {label!r}") from None


def density_of(psi: np.ndarray) -> np.ndarray:
    """Rank-1 density matrix |psi><psi| of a normalized pure state."""
    psi = np.asarray(psi, dtype=complex)
    norm = float(np.vdot(psi, psi).real)
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"state norm² = {norm} is not 1 within 1e-12")
    return np.outer(psi, psi.conj())


def projector_prob(rho: np.ndarray, analyzer: str) -> float:
    """Born-rule probability tr(|a><a| rho) of the analyzer state."""
    a = tomography_state(analyzer)
    rho = np.asarray(rho, dtype=complex)
    return float(np.real(a.conj() @ rho @ a))


def stokes_from_probs(probs: Mapping[str, float]) -> np.ndarray:
    """Stokes vector (s_X, s_Y, s_Z) from the six detection probabilities.

    Each analyzer pair is normalized by its own sum, so any loss common to a
    pair cancels exactly.  Probabilities are keyed by label H,V,D,A,R,L.
    """
    pairs = (("D", "A"), ("L", "R"), ("H", "V"))
    s = np.empty(3)
    for i, (plus, minus) in enumerate(pairs):
        total = probs[plus] + probs[minus]
        if total <= 0.0:
            raise DegeneratePairError(f"pair ({plus},{minus}) sums to {total}")
        s[i] = (probs[plus] - probs[minus]) / total
    return s


def rho_from_stokes(s: np.ndarray, clamp: bool = True) -> np.ndarray:
    """Density matrix (I + s·sigma)/2 of a Stokes vector.

    With ``clamp`` (the default) a vector outside the Bloch ball is scaled
    back to the surface; linear inversion disables this to keep the
    estimator linear, letting genuinely unphysical data show up as negative
    eigenvalues instead of being silently hidden.
    """
    s = np.asarray(s, dtype=float)
    norm = float(np.linalg.norm(s))
    if clamp and norm > 1.0:
        s = s / norm
    return 0.5 * (IDENTITY + s[0] * PAULI_X + s[1] * PAULI_Y + s[2] * PAULI_Z)

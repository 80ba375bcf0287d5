"""Phenomenological dual-rail memory channel and synthetic tomography data.

The memory is two independent storage arms inside a polarization
interferometer, one holding the H component and one the V component.  Its
retrieval action is a single diagonal Kraus operator built from the two arm
efficiencies and a residual inter-arm phase, optionally mixed with a small
depolarizing floor.  Process matrices live in the unnormalized Pauli basis
{I, X, Y, Z}, so an identity channel is chi = diag(1,0,0,0) and tr(chi) is
the channel transmission.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import (
    InputFormatError,
    NotUnitaryError,
    TraceIncreasingError,
    UnphysicalChiError,
)
from .linalg import PSD_TOL, hermiticity_defect
from .states import LABELS, PAULI_BASIS, density_of, projector_prob, tomography_state

CHANNEL_TAGS = ("memory_on", "memory_off", "transmitted")

# Canonical (preparation, analyzer) ordering used everywhere: prep-major.
SETTING_ORDER = tuple((p, a) for p in LABELS for a in LABELS)

DEPOLARIZING_CHI = np.eye(4, dtype=complex) / 4.0
DEPOLARIZING_CHI.setflags(write=False)

# Ideal pass-through process in the unnormalized Pauli convention.
IDENTITY_CHI = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)
IDENTITY_CHI.setflags(write=False)

# Domain separators for counter-based random streams, so the per-setting,
# per-trial and per-sweep-point streams never collide for one seed.
STREAM_SETTING = 0
STREAM_TRIAL = 1
STREAM_RESTART = 2
STREAM_POINT = 3

_MASK64 = (1 << 64) - 1


def keyed_rng(seed: int, domain: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for (seed, domain, index)."""
    key = np.array([seed & _MASK64, ((domain << 48) + index) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derived_seed(seed: int, domain: int, index: int) -> int:
    """Fold (seed, domain, index) into a fresh 64-bit seed."""
    return int(keyed_rng(seed, domain, index).integers(0, _MASK64, dtype=np.uint64))


@dataclass(frozen=True)
class MemoryChannelParams:
    """Phenomenological description of the dual-rail memory.

    eta_h0/eta_v0 are the zero-time retrieval efficiencies of the two arms,
    residual_phase the uncompensated inter-arm phase in radians, decay_tau
    the Gaussian dephasing constant in ns, and off_depolarization a small
    mixing weight modelling how far the pass-through process sits from a
    perfect identity.
    """

    eta_h0: float = 0.15
    eta_v0: float = 0.15
    residual_phase: float = 0.0
    decay_tau: float = 1000.0
    storage_time: float = 0.0
    off_depolarization: float = 0.02

    def __post_init__(self):
        for name in ("eta_h0", "eta_v0"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v} outside [0, 1]")
        if self.decay_tau <= 0.0:
            raise ValueError(f"decay_tau = {self.decay_tau} must be positive")
        if self.storage_time < 0.0:
            raise ValueError(f"storage_time = {self.storage_time} must be >= 0")
        if not 0.0 <= self.off_depolarization <= 0.1:
            raise ValueError(
                f"off_depolarization = {self.off_depolarization} outside [0, 0.1]"
            )


@dataclass(frozen=True)
class ShotConfig:
    """Photon budget and repetition count for one tomography acquisition."""

    photons_per_pulse: float = 5000.0
    background: float = 0.0
    repetitions: int = 500
    seed: int = 7

    def __post_init__(self):
        if self.photons_per_pulse <= 0.0:
            raise ValueError("photons_per_pulse must be positive")
        if self.background < 0.0:
            raise ValueError("background must be >= 0")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")


@dataclass(frozen=True)
class SettingCounts:
    """Per-shot counts for one (preparation, analyzer) pair."""

    prep: str
    analyzer: str
    counts: np.ndarray

    def __post_init__(self):
        counts = np.atleast_1d(np.asarray(self.counts, dtype=float))
        if counts.size == 0 or np.any(counts < 0):
            raise ValueError("counts must be a non-empty, non-negative array")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def mean(self) -> float:
        return float(self.counts.mean())


@dataclass(frozen=True)
class TomographyDataset:
    """Counts for all 36 (preparation, analyzer) settings of one channel."""

    channel_tag: str
    shots: ShotConfig
    settings: tuple[SettingCounts, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.channel_tag not in CHANNEL_TAGS:
            raise ValueError(f"channel_tag {self.channel_tag!r} not in {CHANNEL_TAGS}")
        object.__setattr__(self, "settings", tuple(self.settings))
        pairs = [(s.prep, s.analyzer) for s in self.settings]
        if sorted(pairs) != sorted(SETTING_ORDER):
            raise ValueError("dataset must contain each of the 36 settings exactly once")

    def mean_counts(self) -> np.ndarray:
        """Per-setting mean counts in canonical prep-major order, shape (36,)."""
        by_pair = {(s.prep, s.analyzer): s.mean for s in self.settings}
        return np.array([by_pair[pair] for pair in SETTING_ORDER])


def require_physical_chi(chi: np.ndarray, tol_psd: float = PSD_TOL) -> np.ndarray:
    """Validate Hermiticity, positivity and trace in (0, 1] of a process matrix."""
    chi = np.asarray(chi, dtype=complex)
    if chi.shape != (4, 4):
        raise UnphysicalChiError(f"process matrix must be 4x4, got {chi.shape}")
    if hermiticity_defect(chi) > 1e-12:
        raise UnphysicalChiError("process matrix is not Hermitian within 1e-12")
    w = np.linalg.eigvalsh(chi)
    if w[0] < -tol_psd:
        raise UnphysicalChiError(f"minimum eigenvalue {w[0]:.3e} below -{tol_psd:.1e}")
    trace = float(np.trace(chi).real)
    if not 0.0 < trace <= 1.0 + 1e-9:
        raise UnphysicalChiError(f"trace {trace} outside (0, 1]")
    return chi


def apply_chi(chi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Channel action sum_ij chi_ij G_i rho G_j in the Pauli basis."""
    chi = require_physical_chi(chi)
    rho = np.asarray(rho, dtype=complex)
    return np.einsum("ij,iab,bd,jdc->ac", chi, PAULI_BASIS, rho, PAULI_BASIS)


def chi_from_kraus(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """Process matrix of the channel rho -> sum_k K rho K†.

    Each Kraus operator expands as K = sum_i a_i G_i with a_i = tr(G_i K)/2,
    and chi accumulates the rank-1 outer products a a†.
    """
    ops = [np.asarray(k, dtype=complex) for k in kraus]
    total = sum(k.conj().T @ k for k in ops)
    w_max = float(np.linalg.eigvalsh(total)[-1])
    if w_max > 1.0 + 1e-9:
        raise TraceIncreasingError(f"sum K†K has max eigenvalue {w_max} > 1")
    chi = np.zeros((4, 4), dtype=complex)
    for k in ops:
        a = np.einsum("iab,ba->i", PAULI_BASIS, k) / 2.0
        chi += np.outer(a, a.conj())
    return chi


def unitary_chi(u: np.ndarray) -> np.ndarray:
    """Rank-1, trace-1 process matrix of a unitary (e.g. a waveplate)."""
    u = np.asarray(u, dtype=complex)
    defect = float(np.max(np.abs(u.conj().T @ u - np.eye(2))))
    if defect > 1e-10:
        raise NotUnitaryError(f"U†U deviates from identity by {defect:.3e}")
    return chi_from_kraus([u])


def efficiency_decay(t: float, eta0: float, tau: float) -> float:
    """Gaussian efficiency decay eta0 * exp(-(t/tau)^2) from spin dephasing."""
    if t < 0.0:
        raise ValueError("storage time must be >= 0")
    if tau <= 0.0:
        raise ValueError("decay constant must be positive")
    return float(eta0 * np.exp(-((t / tau) ** 2)))


def _mix_depolarizing(chi: np.ndarray, epsilon: float) -> np.ndarray:
    if epsilon == 0.0:
        return chi
    return (1.0 - epsilon) * chi + epsilon * float(np.trace(chi).real) * DEPOLARIZING_CHI


def memory_chi(params: MemoryChannelParams) -> np.ndarray:
    """Storage-and-retrieval process at the configured storage time.

    Retrieval is the single Kraus operator diag(sqrt(eta_H), e^{i phase}
    sqrt(eta_V)); the depolarizing mix preserves the trace, so tr(chi)
    stays equal to the mean arm efficiency.
    """
    eta_h = efficiency_decay(params.storage_time, params.eta_h0, params.decay_tau)
    eta_v = efficiency_decay(params.storage_time, params.eta_v0, params.decay_tau)
    k = np.diag(
        [np.sqrt(eta_h), np.exp(1j * params.residual_phase) * np.sqrt(eta_v)]
    ).astype(complex)
    return _mix_depolarizing(chi_from_kraus([k]), params.off_depolarization)


def off_chi(params: MemoryChannelParams) -> np.ndarray:
    """Pass-through process with the control off: near-identity, trace 1."""
    return _mix_depolarizing(IDENTITY_CHI.copy(), params.off_depolarization)


def transmitted_chi(params: MemoryChannelParams, storage_fraction: float = 1.0) -> np.ndarray:
    """Process seen by photons the memory failed to store.

    Each arm transmits the fraction it did not absorb, 1 - s*eta(t=0) with
    storage fraction s, so balanced arms reduce to the pass-through process.
    """
    k = np.diag(
        [
            np.sqrt(1.0 - storage_fraction * params.eta_h0),
            np.sqrt(1.0 - storage_fraction * params.eta_v0),
        ]
    ).astype(complex)
    return _mix_depolarizing(chi_from_kraus([k]), params.off_depolarization)


def expected_counts(chi: np.ndarray, shots: ShotConfig) -> np.ndarray:
    """Noise-free mean counts N0 * tr(P_a chi(rho_p)) + background, shape (36,)."""
    chi = require_physical_chi(chi)
    mu = np.empty(36)
    i = 0
    for prep in LABELS:
        rho_out = apply_chi(chi, density_of(tomography_state(prep)))
        for analyzer in LABELS:
            p = max(projector_prob(rho_out, analyzer), 0.0)
            mu[i] = shots.photons_per_pulse * p + shots.background
            i += 1
    return mu


def simulate_dataset(chi: np.ndarray, shots: ShotConfig, tag: str) -> TomographyDataset:
    """Draw Poisson counts for all 36 settings of a channel.

    Every setting gets its own counter-based stream keyed by (seed, setting
    index), so the output is reproducible bit-for-bit and settings could be
    generated in parallel without changing it.
    """
    mu = expected_counts(chi, shots)
    settings = []
    for i, (prep, analyzer) in enumerate(SETTING_ORDER):
        rng = keyed_rng(shots.seed, STREAM_SETTING, i)
        counts = rng.poisson(mu[i], size=shots.repetitions)
        settings.append(SettingCounts(prep=prep, analyzer=analyzer, counts=counts))
    return TomographyDataset(channel_tag=tag, shots=shots, settings=tuple(settings))


def expected_dataset(chi: np.ndarray, shots: ShotConfig, tag: str) -> TomographyDataset:
    """Noise-free dataset whose single 'shot' per setting is the exact mean.

    This is an in-memory oracle fixture for estimator tests; serialized
    datasets produced by simulate_dataset always carry integer counts.
    """
    mu = expected_counts(chi, shots)
    settings = tuple(
        SettingCounts(prep=prep, analyzer=analyzer, counts=np.array([mu[i]]))
        for i, (prep, analyzer) in enumerate(SETTING_ORDER)
    )
    return TomographyDataset(
        channel_tag=tag, shots=replace(shots, repetitions=1), settings=settings
    )


def dataset_to_json_dict(dataset: TomographyDataset) -> dict:
    """Serializable document with the fixed field names of the file schema."""
    def scalarize(x: float):
        return int(x) if float(x).is_integer() else float(x)

    return {
        "channel_tag": dataset.channel_tag,
        "shot_config": {
            "photons_per_pulse": dataset.shots.photons_per_pulse,
            "background": dataset.shots.background,
            "repetitions": dataset.shots.repetitions,
            "seed": dataset.shots.seed,
        },
        "settings": [
            {
                "prep": s.prep,
                "analyzer": s.analyzer,
                "counts": [scalarize(c) for c in s.counts],
            }
            for s in dataset.settings
        ],
    }


def dataset_from_json_dict(doc: dict) -> TomographyDataset:
    try:
        sc = doc["shot_config"]
        shots = ShotConfig(
            photons_per_pulse=float(sc["photons_per_pulse"]),
            background=float(sc["background"]),
            repetitions=int(sc["repetitions"]),
            seed=int(sc["seed"]),
        )
        settings = tuple(
            SettingCounts(
                prep=str(s["prep"]),
                analyzer=str(s["analyzer"]),
                counts=np.asarray(s["counts"], dtype=float),
            )
            for s in doc["settings"]
        )
        return TomographyDataset(
            channel_tag=str(doc["channel_tag"]), shots=shots, settings=settings
        )
    except InputFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"malformed tomography dataset: {exc}") from exc


def save_dataset(dataset: TomographyDataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dataset_to_json_dict(dataset), fh)
        fh.write("\n")


def load_dataset(path) -> TomographyDataset:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFormatError(f"cannot read dataset {path}: {exc}") from exc
    return dataset_from_json_dict(doc)

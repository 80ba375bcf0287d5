"""Process reconstruction from polarization tomography counts.

Two estimators over the same 36-setting count data: direct linear inversion
of the channel action on four anchor preparations, and Poisson
maximum-likelihood over the Cholesky-like parametrization chi = T†T, which
is positive semidefinite by construction.  Counts are normalized per
analyzer pair, so uniform loss cancels and the recovered trace tracks the
channel transmission.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.optimize import minimize

from .channel import (
    SETTING_ORDER,
    STREAM_RESTART,
    STREAM_TRIAL,
    SettingCounts,
    TomographyDataset,
    keyed_rng,
    require_physical_chi,
)
from .errors import (
    DegeneratePairError,
    InputFormatError,
    NotPSDError,
    ResamplingUnstableError,
    SingularSystemError,
    ZeroTraceError,
)
from .linalg import PSD_TOL, param_to_psd, params_from_psd, psd_sqrt
from .states import (
    ANALYZER_PAIRS,
    LABELS,
    PAULI_BASIS,
    density_of,
    rho_from_stokes,
    stokes_from_probs,
    tomography_state,
)

# Preparations whose output states pin down all 16 process parameters:
# both poles plus one equatorial state from each remaining analyzer pair.
ANCHOR_PREPS = ("H", "V", "D", "L")

_LABEL_INDEX = {label: i for i, label in enumerate(LABELS)}

MLE_DEFAULTS = {"max_iter": 50000, "tol": 1e-10, "restarts": 3}


def _design_matrix() -> np.ndarray:
    """d[(m,k),(i,j)] = tr(P_k G_i rho_m G_j) over the 36 canonical settings."""
    d = np.empty((36, 16), dtype=complex)
    for r, (prep, analyzer) in enumerate(SETTING_ORDER):
        rho_in = density_of(tomography_state(prep))
        proj = density_of(tomography_state(analyzer))
        d[r] = np.einsum(
            "ba,iac,cd,jdb->ij", proj, PAULI_BASIS, rho_in, PAULI_BASIS
        ).ravel()
    return d


_DESIGN = _design_matrix()
_DESIGN.setflags(write=False)


@dataclass(frozen=True)
class ReconstructionResult:
    """Estimated process matrix plus estimator diagnostics."""

    method: str
    chi: np.ndarray
    nll: float | None
    iterations: int
    converged: bool
    min_eigenvalue: float

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "chi_real": self.chi.real.tolist(),
            "chi_imag": self.chi.imag.tolist(),
            "nll": self.nll,
            "iterations": self.iterations,
            "converged": self.converged,
            "min_eigenvalue": self.min_eigenvalue,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ReconstructionResult":
        try:
            chi = np.asarray(doc["chi_real"], dtype=float) + 1j * np.asarray(
                doc["chi_imag"], dtype=float
            )
            if chi.shape != (4, 4):
                raise ValueError(f"chi has shape {chi.shape}, expected (4, 4)")
            return cls(
                method=str(doc["method"]),
                chi=chi,
                nll=None if doc["nll"] is None else float(doc["nll"]),
                iterations=int(doc["iterations"]),
                converged=bool(doc["converged"]),
                min_eigenvalue=float(doc["min_eigenvalue"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"malformed reconstruction result: {exc}") from exc


@dataclass(frozen=True)
class FidelityEstimate:
    """Fidelity point value with a Monte-Carlo standard error."""

    value: float
    std_err: float
    trials: int

    def to_json_dict(self) -> dict:
        return {"value": self.value, "std_err": self.std_err, "trials": self.trials}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "FidelityEstimate":
        try:
            return cls(
                value=float(doc["value"]),
                std_err=float(doc["std_err"]),
                trials=int(doc["trials"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"malformed fidelity estimate: {exc}") from exc


def normalized_probs(
    mean_counts: np.ndarray,
    background: float = 0.0,
    on_degenerate: str = "raise",
) -> tuple[np.ndarray, np.ndarray]:
    """Detection probabilities and per-preparation intensities from counts.

    Counts arrive in canonical prep-major order, shape (36,).  After
    background subtraction (clamped at zero) each analyzer pair is
    normalized by its own sum, so probabilities within a pair always add to
    one and loss common to the pair cancels.  The intensity of a
    preparation is the mean of its three pair sums.  A pair with no net
    counts either raises DegeneratePairError or, with
    ``on_degenerate="uniform"``, is replaced by a 50/50 split and reported
    through a single RuntimeWarning.
    """
    if on_degenerate not in ("raise", "uniform"):
        raise ValueError(f"on_degenerate must be 'raise' or 'uniform', got {on_degenerate!r}")
    n = np.asarray(mean_counts, dtype=float)
    if n.shape != (36,):
        raise ValueError(f"expected 36 mean counts, got shape {n.shape}")
    net = np.clip(n - background, 0.0, None).reshape(6, 6)
    probs = np.empty((6, 6))
    intensities = np.empty(6)
    degenerate = 0
    for m in range(6):
        pair_sums = np.empty(len(ANALYZER_PAIRS))
        for k, (plus, minus) in enumerate(ANALYZER_PAIRS):
            ip, im = _LABEL_INDEX[plus], _LABEL_INDEX[minus]
            total = net[m, ip] + net[m, im]
            pair_sums[k] = total
            if total <= 0.0:
                if on_degenerate == "raise":
                    raise DegeneratePairError(
                        f"preparation {LABELS[m]!r}: analyzer pair "
                        f"({plus},{minus}) has no counts above background"
                    )
                degenerate += 1
                probs[m, ip] = probs[m, im] = 0.5
            else:
                probs[m, ip] = net[m, ip] / total
                probs[m, im] = net[m, im] / total
        intensities[m] = pair_sums.mean()
    if degenerate:
        warnings.warn(
            f"{degenerate} degenerate analyzer pair(s) replaced by uniform outcomes",
            RuntimeWarning,
            stacklevel=2,
        )
    return probs.ravel(), intensities


def _li_system() -> np.ndarray:
    """16x16 map from chi entries to the stacked anchor output matrices."""
    a_mat = np.empty((16, 16), dtype=complex)
    r = 0
    for prep in ANCHOR_PREPS:
        rho_in = density_of(tomography_state(prep))
        blocks = np.einsum("iab,bc,jcd->ijad", PAULI_BASIS, rho_in, PAULI_BASIS)
        for a in range(2):
            for b in range(2):
                a_mat[r] = blocks[:, :, a, b].ravel()
                r += 1
    return a_mat


_LI_MATRIX = _li_system()
_LI_MATRIX.setflags(write=False)


def linear_inversion(
    dataset: TomographyDataset, on_degenerate: str = "raise"
) -> ReconstructionResult:
    """Closed-form process estimate from the four anchor preparations.

    The output state of each anchor is rebuilt from its pairwise-normalized
    Stokes vector, scaled by intensity/photons_per_pulse so the estimated
    trace carries the transmission, and the resulting 16 linear equations
    are solved for chi.  No positivity is imposed: statistical noise shows
    up honestly as negative eigenvalues in ``min_eigenvalue``.
    """
    probs, intensities = normalized_probs(
        dataset.mean_counts(), dataset.shots.background, on_degenerate
    )
    probs = probs.reshape(6, 6)
    rhs = np.empty(16, dtype=complex)
    r = 0
    for prep in ANCHOR_PREPS:
        m = _LABEL_INDEX[prep]
        s = stokes_from_probs({lab: probs[m, _LABEL_INDEX[lab]] for lab in LABELS})
        rho_out = (intensities[m] / dataset.shots.photons_per_pulse) * rho_from_stokes(
            s, clamp=False
        )
        rhs[r : r + 4] = rho_out.ravel()
        r += 4
    cond = np.linalg.cond(_LI_MATRIX)
    if not np.isfinite(cond) or cond > 1e10:
        raise SingularSystemError(f"anchor system condition number {cond:.3e}")
    try:
        chi = np.linalg.solve(_LI_MATRIX, rhs).reshape(4, 4)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"anchor system not solvable: {exc}") from exc
    chi = (chi + chi.conj().T) / 2.0
    min_eig = float(np.linalg.eigvalsh(chi)[0])
    return ReconstructionResult(
        method="linear",
        chi=chi,
        nll=None,
        iterations=0,
        converged=True,
        min_eigenvalue=min_eig,
    )


def _mean_rates(chi_flat: np.ndarray, n0: float, background: float) -> np.ndarray:
    return np.maximum(n0 * (_DESIGN @ chi_flat).real + background, 1e-12)


def nll(chi: np.ndarray, dataset: TomographyDataset) -> float:
    """Poisson negative log-likelihood sum(mu - n ln mu), constants dropped."""
    chi = require_physical_chi(chi)
    nbar = dataset.mean_counts()
    mu = _mean_rates(
        chi.ravel(), dataset.shots.photons_per_pulse, dataset.shots.background
    )
    return float(np.sum(mu - nbar * np.log(mu)))


def _psd_projection(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2.0)
    return (v * np.clip(w, 0.0, None)) @ v.conj().T


def _seed_params(dataset: TomographyDataset) -> np.ndarray:
    try:
        chi_li = linear_inversion(dataset, on_degenerate="uniform").chi
        chi_seed = _psd_projection(chi_li)
    except DegeneratePairError:
        chi_seed = None
    if chi_seed is None or float(np.trace(chi_seed).real) < 1e-8:
        chi_seed = np.diag([0.5, 0.01, 0.01, 0.01]).astype(complex)
    return params_from_psd(chi_seed)


def _initial_simplex(t0: np.ndarray, delta: float = 0.002) -> np.ndarray:
    sim = np.tile(t0, (t0.size + 1, 1))
    sim[1:] += delta * np.eye(t0.size)
    return sim


def mle_reconstruct(
    dataset: TomographyDataset,
    max_iter: int = 50000,
    tol: float = 1e-10,
    restarts: int = 3,
) -> ReconstructionResult:
    """Maximum-likelihood process estimate, PSD by construction.

    Minimizes the Poisson likelihood over chi = param_to_psd(t) with
    Nelder-Mead, seeded from the PSD-projected linear inversion; the trace
    is left free so loss is captured (a noisy fit of a lossless channel may
    land slightly above trace 1).  A run converges when the simplex
    objective spread falls below ``tol``; up to ``restarts`` further runs
    start from perturbed seeds when that fails within ``max_iter``
    evaluations, and the lowest objective wins.

    The working objective is the per-setting Poisson deviance
    (mu - n) - n*log1p((mu - n)/n), the likelihood shifted by its
    data-only minimum.  The shifted form matters: evaluating sum(mu - n ln
    mu) directly and comparing at tolerance 1e-10 would drown in the
    round-off of two nearly cancelling 1e5-scale sums.
    """
    nbar = dataset.mean_counts()
    n0 = dataset.shots.photons_per_pulse
    background = dataset.shots.background
    pos = nbar > 0.0
    safe_n = np.where(pos, nbar, 1.0)
    shift = float(np.sum(np.where(pos, nbar - nbar * np.log(safe_n), 0.0)))

    def deviance(t: np.ndarray) -> float:
        mu = _mean_rates(param_to_psd(t).ravel(), n0, background)
        d = mu - nbar
        return float(np.sum(np.where(pos, d - nbar * np.log1p(d / safe_n), mu)))

    t0 = _seed_params(dataset)
    best = None
    converged = False
    total_evals = 0
    for run in range(restarts + 1):
        if run == 0:
            start = t0
        else:
            rng = keyed_rng(dataset.shots.seed, STREAM_RESTART, run)
            start = t0 + rng.normal(0.0, 0.05, size=t0.size)
        res = minimize(
            deviance,
            start,
            method="Nelder-Mead",
            options={
                "maxfev": max_iter,
                "maxiter": max_iter,
                "fatol": tol,
                "xatol": np.inf,
                "adaptive": True,
                "initial_simplex": _initial_simplex(start),
            },
        )
        total_evals += res.nfev
        if best is None or res.fun < best.fun:
            best = res
        if res.success and res.fun <= best.fun + tol:
            converged = True
            break
    chi = param_to_psd(best.x)
    chi = (chi + chi.conj().T) / 2.0
    return ReconstructionResult(
        method="mle",
        chi=chi,
        nll=float(best.fun) + shift,
        iterations=total_evals,
        converged=converged,
        min_eigenvalue=float(np.linalg.eigvalsh(chi)[0]),
    )


def reconstruct(dataset: TomographyDataset, method: str = "mle", **opts) -> ReconstructionResult:
    """Dispatch to linear inversion or maximum likelihood by name."""
    if method == "linear":
        return linear_inversion(dataset, **opts)
    if method == "mle":
        return mle_reconstruct(dataset, **opts)
    raise ValueError(f"unknown reconstruction method {method!r}")


def _trace_normalized(chi: np.ndarray, tag: str) -> np.ndarray:
    chi = np.asarray(chi, dtype=complex)
    trace = float(np.trace(chi).real)
    if trace <= 1e-12:
        raise ZeroTraceError(f"{tag} process has non-positive trace {trace}")
    return chi / trace


def process_fidelity(chi_a: np.ndarray, chi_b: np.ndarray) -> float:
    """Fidelity (tr sqrt(sqrt(A) B sqrt(A)))² of the trace-normalized processes.

    Normalizing both arguments makes the figure compare what the channels do
    to what survives, insensitive to overall transmission.  The result is
    clamped to [0, 1] against round-off.
    """
    a = _trace_normalized(chi_a, "first")
    b = _trace_normalized(chi_b, "second")
    w_b = np.linalg.eigvalsh((b + b.conj().T) / 2.0)
    if w_b[0] < -PSD_TOL:
        raise NotPSDError(f"second process has eigenvalue {w_b[0]:.3e}")
    root_a = psd_sqrt(a)
    inner = root_a @ b @ root_a
    w = np.linalg.eigvalsh((inner + inner.conj().T) / 2.0)
    fid = float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)
    return min(max(fid, 0.0), 1.0)


def efficiency_of(chi: np.ndarray) -> float:
    """Channel transmission: the real trace of the process matrix."""
    return float(np.trace(np.asarray(chi, dtype=complex)).real)


def _resampled(dataset: TomographyDataset, rng: np.random.Generator) -> TomographyDataset:
    settings = tuple(
        SettingCounts(
            prep=s.prep,
            analyzer=s.analyzer,
            counts=rng.poisson(s.mean, size=s.counts.size),
        )
        for s in dataset.settings
    )
    return TomographyDataset(
        channel_tag=dataset.channel_tag, shots=dataset.shots, settings=settings
    )


def monte_carlo_errors(
    dataset: TomographyDataset,
    chi_ref: np.ndarray,
    trials: int = 100,
    **mle_opts,
) -> FidelityEstimate:
    """Parametric-bootstrap error bar on the fidelity to a reference process.

    Each trial redraws every setting's counts from Poisson laws at the
    observed means (one counter-based stream per trial), refits by maximum
    likelihood and records the fidelity of the refit to ``chi_ref``.
    Non-converged trials are dropped; losing more than 20% of them raises
    ResamplingUnstableError rather than reporting a silently biased bar.
    """
    if trials < 30:
        raise ValueError("trials must be >= 30 for a usable standard error")
    fidelities = []
    for trial in range(trials):
        rng = keyed_rng(dataset.shots.seed, STREAM_TRIAL, trial)
        result = mle_reconstruct(_resampled(dataset, rng), **mle_opts)
        if result.converged:
            fidelities.append(process_fidelity(result.chi, chi_ref))
    if len(fidelities) < 0.8 * trials:
        raise ResamplingUnstableError(
            f"only {len(fidelities)} of {trials} resampling trials converged"
        )
    values = np.array(fidelities)
    return FidelityEstimate(
        value=float(values.mean()),
        std_err=float(values.std(ddof=1)),
        trials=len(fidelities),
    )

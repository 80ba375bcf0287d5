"""Dual-rail optical-memory channel simulation and process tomography.

Models a polarization qubit memory as a parametrized lossy channel,
synthesizes photon-counting tomography data for the 36 canonical
(preparation, analyzer) settings, reconstructs the process matrix by
linear inversion or Poisson maximum likelihood, and scores channels with
the process fidelity plus Monte-Carlo error bars.
"""

from .channel import (
    CHANNEL_TAGS,
    IDENTITY_CHI,
    SETTING_ORDER,
    MemoryChannelParams,
    SettingCounts,
    ShotConfig,
    TomographyDataset,
    apply_chi,
    chi_from_kraus,
    dataset_from_json_dict,
    dataset_to_json_dict,
    efficiency_decay,
    expected_counts,
    expected_dataset,
    load_dataset,
    memory_chi,
    off_chi,
    save_dataset,
    simulate_dataset,
    transmitted_chi,
    unitary_chi,
)
from .errors import (
    DegeneratePairError,
    DimMismatchError,
    InputFormatError,
    MemtomoError,
    NoConvergenceError,
    NotHermitianError,
    NotPSDError,
    NotUnitaryError,
    ResamplingUnstableError,
    SingularSystemError,
    TraceIncreasingError,
    UnknownLabelError,
    UnphysicalChiError,
    ZeroTraceError,
)
from .linalg import (
    frobenius_distance,
    hermitian_eig,
    param_to_psd,
    params_from_psd,
    psd_sqrt,
)
from .states import (
    ANALYZER_PAIRS,
    LABELS,
    PAULI_BASIS,
    density_of,
    projector_prob,
    rho_from_stokes,
    stokes_from_probs,
    tomography_state,
)
from .sweep import (
    DEFAULT_STORAGE_TIMES,
    SweepConfig,
    SweepPoint,
    default_config_dict,
    run_sweep,
    sweep_config_from_dict,
    sweep_csv,
)
from .tomography import (
    ANCHOR_PREPS,
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

__version__ = "0.1.0"

"""Storage-time sweep: simulate, reconstruct and report fidelity vs time.

Drives the full pipeline over a grid of storage times, producing the
flat-fidelity / falling-efficiency signature of a loss-dominated memory as
a CSV report plus per-point detail.  All randomness derives from one master
seed: each (grid point, channel tag) pair gets its own dataset seed, so
points are independent and could run in parallel without changing a byte
of output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .channel import (
    IDENTITY_CHI,
    STREAM_POINT,
    MemoryChannelParams,
    ShotConfig,
    TomographyDataset,
    derived_seed,
    memory_chi,
    off_chi,
    simulate_dataset,
    transmitted_chi,
)
from .errors import InputFormatError, ResamplingUnstableError
from .tomography import (
    MLE_DEFAULTS,
    FidelityEstimate,
    ReconstructionResult,
    efficiency_of,
    mle_reconstruct,
    monte_carlo_errors,
    process_fidelity,
)

DEFAULT_STORAGE_TIMES = (12.5, 100.0, 250.0, 500.0, 750.0, 1000.0, 1250.0, 1500.0)
DEFAULT_STORAGE_TIME = 12.5
DEFAULT_MC_TRIALS = 50
DEFAULT_STORAGE_FRACTION = 1.0

CSV_HEADER = "storage_time_ns,efficiency,fidelity,fidelity_err,converged"

# Seed-derivation slots: each grid point owns a block of indices, one per
# channel tag, in the STREAM_POINT domain of the master seed.
_TAG_SLOTS = {"memory_on": 0, "memory_off": 1, "transmitted": 2}
_SLOTS_PER_POINT = 8


def dataset_seed(master_seed: int, point_index: int, tag: str) -> int:
    """Deterministic per-(grid point, channel tag) dataset seed."""
    slot = point_index * _SLOTS_PER_POINT + _TAG_SLOTS[tag]
    return derived_seed(master_seed, STREAM_POINT, slot)


@dataclass(frozen=True)
class SweepConfig:
    """Grid, channel model, photon budget and fit options for one sweep."""

    storage_times: tuple[float, ...] = DEFAULT_STORAGE_TIMES
    channel: MemoryChannelParams = field(default_factory=MemoryChannelParams)
    shots: ShotConfig = field(default_factory=ShotConfig)
    mc_trials: int = DEFAULT_MC_TRIALS
    mle: Mapping[str, float] = field(default_factory=lambda: dict(MLE_DEFAULTS))

    def __post_init__(self):
        times = tuple(float(t) for t in self.storage_times)
        object.__setattr__(self, "storage_times", times)
        if not times:
            raise ValueError("storage_times must be non-empty")
        if any(t < 0.0 for t in times):
            raise ValueError("storage_times must all be >= 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("storage_times must be strictly increasing")
        if self.mc_trials < 30:
            raise ValueError("mc_trials must be >= 30")
        unknown = set(self.mle) - set(MLE_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown mle option(s): {sorted(unknown)}")


@dataclass(frozen=True)
class SweepPoint:
    """Everything computed at one storage time."""

    storage_time: float
    efficiency: float
    fidelity: FidelityEstimate
    recon_on: ReconstructionResult
    recon_off: ReconstructionResult
    converged: bool

    def to_json_dict(self) -> dict:
        return {
            "storage_time_ns": self.storage_time,
            "efficiency": self.efficiency,
            "fidelity": self.fidelity.to_json_dict(),
            "reconstruction_on": self.recon_on.to_json_dict(),
            "reconstruction_off": self.recon_off.to_json_dict(),
            "converged": self.converged,
        }


def simulate_point(
    channel: MemoryChannelParams,
    shots: ShotConfig,
    master_seed: int,
    point_index: int = 0,
    storage_fraction: float = DEFAULT_STORAGE_FRACTION,
) -> dict[str, TomographyDataset]:
    """Synthesize the three channel datasets for one storage time.

    The recorded ShotConfig of each dataset carries its derived seed, so a
    saved file alone is enough to reproduce or resample it.
    """
    chis = {
        "memory_on": memory_chi(channel),
        "memory_off": off_chi(channel),
        "transmitted": transmitted_chi(channel, storage_fraction),
    }
    return {
        tag: simulate_dataset(
            chi,
            replace(shots, seed=dataset_seed(master_seed, point_index, tag)),
            tag,
        )
        for tag, chi in chis.items()
    }


def run_point(
    config: SweepConfig, point_index: int, storage_time: float
) -> SweepPoint:
    """Simulate, reconstruct and score a single grid point.

    The fidelity column compares the resampled memory-on reconstructions
    against the ideal pass-through process; under this model the off
    channel carries the same depolarizing floor as the memory, so scoring
    against the reconstructed off process would be blind to it.
    """
    channel = replace(config.channel, storage_time=storage_time)
    datasets = simulate_point(
        channel, config.shots, config.shots.seed, point_index
    )
    recon_on = mle_reconstruct(datasets["memory_on"], **config.mle)
    recon_off = mle_reconstruct(datasets["memory_off"], **config.mle)
    try:
        estimate = monte_carlo_errors(
            datasets["memory_on"], IDENTITY_CHI, trials=config.mc_trials, **config.mle
        )
        stable = True
    except ResamplingUnstableError:
        estimate = FidelityEstimate(
            value=process_fidelity(recon_on.chi, IDENTITY_CHI),
            std_err=float("nan"),
            trials=0,
        )
        stable = False
    return SweepPoint(
        storage_time=storage_time,
        efficiency=efficiency_of(recon_on.chi),
        fidelity=estimate,
        recon_on=recon_on,
        recon_off=recon_off,
        converged=recon_on.converged and recon_off.converged and stable,
    )


def run_sweep(config: SweepConfig) -> list[SweepPoint]:
    """All grid points in order; a non-converged point marks its row only."""
    return [
        run_point(config, i, t) for i, t in enumerate(config.storage_times)
    ]


def sweep_csv(points: Sequence[SweepPoint]) -> str:
    """Plot-ready report, one fixed-format row per grid point."""
    lines = [CSV_HEADER]
    for p in points:
        lines.append(
            f"{p.storage_time:g},{p.efficiency:.6f},{p.fidelity.value:.6f},"
            f"{p.fidelity.std_err:.6f},{str(p.converged).lower()}"
        )
    return "\n".join(lines) + "\n"


# --- configuration document ------------------------------------------------

_CHANNEL_FIELDS = ("eta_h0", "eta_v0", "residual_phase", "decay_tau", "off_depolarization")
_SHOT_FIELDS = ("photons_per_pulse", "background", "repetitions", "seed")


def default_config_dict() -> dict:
    """The full default configuration document, as printed by the CLI."""
    channel = MemoryChannelParams()
    shots = ShotConfig()
    return {
        "channel": {name: getattr(channel, name) for name in _CHANNEL_FIELDS},
        "shots": {name: getattr(shots, name) for name in _SHOT_FIELDS},
        "storage_time": DEFAULT_STORAGE_TIME,
        "storage_times": list(DEFAULT_STORAGE_TIMES),
        "storage_fraction": DEFAULT_STORAGE_FRACTION,
        "mc_trials": DEFAULT_MC_TRIALS,
        "mle": dict(MLE_DEFAULTS),
    }


def _merged_section(doc: Mapping, key: str, defaults: Mapping) -> dict:
    user = doc.get(key, {})
    if not isinstance(user, Mapping):
        raise InputFormatError(f"config section {key!r} must be an object")
    unknown = set(user) - set(defaults)
    if unknown:
        raise InputFormatError(f"unknown {key} option(s): {sorted(unknown)}")
    merged = dict(defaults)
    merged.update(user)
    return merged


def normalized_config(doc: Mapping | None) -> dict:
    """User document merged over defaults, with unknown keys rejected."""
    doc = {} if doc is None else dict(doc)
    defaults = default_config_dict()
    unknown = set(doc) - set(defaults)
    if unknown:
        raise InputFormatError(f"unknown config key(s): {sorted(unknown)}")
    merged = dict(defaults)
    for key in ("channel", "shots", "mle"):
        merged[key] = _merged_section(doc, key, defaults[key])
    for key in ("storage_time", "storage_times", "storage_fraction", "mc_trials"):
        if key in doc:
            merged[key] = doc[key]
    return merged


def channel_from_config(doc: Mapping, storage_time: float = 0.0) -> MemoryChannelParams:
    try:
        return MemoryChannelParams(storage_time=storage_time, **doc["channel"])
    except (TypeError, ValueError) as exc:
        raise InputFormatError(f"bad channel parameters: {exc}") from exc


def shots_from_config(doc: Mapping) -> ShotConfig:
    try:
        return ShotConfig(**doc["shots"])
    except (TypeError, ValueError) as exc:
        raise InputFormatError(f"bad shot configuration: {exc}") from exc


def sweep_config_from_dict(doc: Mapping | None) -> SweepConfig:
    """Build a validated SweepConfig from a (possibly partial) document."""
    merged = normalized_config(doc)
    try:
        return SweepConfig(
            storage_times=tuple(merged["storage_times"]),
            channel=channel_from_config(merged),
            shots=shots_from_config(merged),
            mc_trials=int(merged["mc_trials"]),
            mle={
                "max_iter": int(merged["mle"]["max_iter"]),
                "tol": float(merged["mle"]["tol"]),
                "restarts": int(merged["mle"]["restarts"]),
            },
        )
    except (TypeError, ValueError) as exc:
        raise InputFormatError(f"bad sweep configuration: {exc}") from exc


def load_config_file(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFormatError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputFormatError("config document must be a JSON object")
    return doc

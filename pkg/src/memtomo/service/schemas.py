"""Request/response models; field names match the on-disk JSON formats,
so a saved dataset or result file is also a valid request body fragment."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict


class ShotConfigModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    photons_per_pulse: float = 5000.0
    background: float = 0.0
    repetitions: int = 500
    seed: int = 7


class SettingModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    prep: str
    analyzer: str
    counts: list[int | float]


class DatasetModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    channel_tag: str
    shot_config: ShotConfigModel
    settings: list[SettingModel]


class ReconstructionModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    method: str
    chi_real: list[list[float]]
    chi_imag: list[list[float]]
    nll: float | None
    iterations: int
    converged: bool
    min_eigenvalue: float


class FidelityModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    value: float
    std_err: float
    trials: int


class MleOptionsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_iter: int = 50000
    tol: float = 1e-10
    restarts: int = 3


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: dict = {}
    seed: int | None = None


class SimulateResponse(BaseModel):
    datasets: dict[str, DatasetModel]


class ReconstructRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dataset: DatasetModel
    method: Literal["linear", "mle"] = "mle"
    opts: MleOptionsModel = MleOptionsModel()


class FidelityRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    result_on: ReconstructionModel
    result_off: ReconstructionModel
    dataset_on: DatasetModel | None = None
    trials: int = 100
    opts: MleOptionsModel = MleOptionsModel()


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: dict = {}
    seed: int | None = None


class SweepPointModel(BaseModel):
    storage_time_ns: float
    efficiency: float
    fidelity: FidelityModel
    reconstruction_on: ReconstructionModel
    reconstruction_off: ReconstructionModel
    converged: bool


class SweepResponse(BaseModel):
    csv: str
    points: list[SweepPointModel]

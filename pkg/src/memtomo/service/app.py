"""FastAPI application exposing the simulation/reconstruction pipeline.

Compute-only service: every endpoint takes and returns the same JSON
documents the CLI reads and writes, so clients own all file I/O.  Domain
errors surface as HTTP 422 with a one-line detail; a fit that merely fails
to converge is still a 200 with its ``converged`` flag cleared.
"""

from __future__ import annotations

from dataclasses import replace

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..channel import dataset_from_json_dict, dataset_to_json_dict
from ..errors import MemtomoError
from ..sweep import (
    channel_from_config,
    default_config_dict,
    normalized_config,
    run_sweep,
    shots_from_config,
    simulate_point,
    sweep_config_from_dict,
    sweep_csv,
)
from ..tomography import (
    FidelityEstimate,
    ReconstructionResult,
    linear_inversion,
    mle_reconstruct,
    monte_carlo_errors,
    process_fidelity,
)
from .schemas import (
    FidelityModel,
    FidelityRequest,
    ReconstructionModel,
    ReconstructRequest,
    SimulateRequest,
    SimulateResponse,
    SweepRequest,
    SweepResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="memtomo", version="0.1.0")

    @app.exception_handler(MemtomoError)
    async def _domain_error(request: Request, exc: MemtomoError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/defaults")
    def defaults() -> dict:
        return default_config_dict()

    @app.post("/simulate")
    def simulate(req: SimulateRequest) -> SimulateResponse:
        merged = normalized_config(req.config)
        if req.seed is not None:
            merged["shots"] = dict(merged["shots"], seed=req.seed)
        channel = channel_from_config(merged, storage_time=float(merged["storage_time"]))
        shots = shots_from_config(merged)
        datasets = simulate_point(
            channel,
            shots,
            master_seed=shots.seed,
            storage_fraction=float(merged["storage_fraction"]),
        )
        return SimulateResponse(
            datasets={tag: dataset_to_json_dict(ds) for tag, ds in datasets.items()}
        )

    @app.post("/reconstruct")
    def reconstruct(req: ReconstructRequest) -> ReconstructionModel:
        dataset = dataset_from_json_dict(req.dataset.model_dump())
        if req.method == "linear":
            result = linear_inversion(dataset)
        else:
            result = mle_reconstruct(dataset, **req.opts.model_dump())
        return ReconstructionModel(**result.to_json_dict())

    @app.post("/fidelity")
    def fidelity(req: FidelityRequest) -> FidelityModel:
        chi_on = ReconstructionResult.from_json_dict(req.result_on.model_dump()).chi
        chi_off = ReconstructionResult.from_json_dict(req.result_off.model_dump()).chi
        if req.dataset_on is None:
            estimate = FidelityEstimate(
                value=process_fidelity(chi_on, chi_off), std_err=0.0, trials=0
            )
        else:
            dataset = dataset_from_json_dict(req.dataset_on.model_dump())
            estimate = monte_carlo_errors(
                dataset, chi_off, trials=req.trials, **req.opts.model_dump()
            )
        return FidelityModel(**estimate.to_json_dict())

    @app.post("/sweep")
    def sweep(req: SweepRequest) -> SweepResponse:
        config = sweep_config_from_dict(req.config)
        if req.seed is not None:
            config = replace(config, shots=replace(config.shots, seed=req.seed))
        points = run_sweep(config)
        return SweepResponse(
            csv=sweep_csv(points),
            points=[p.to_json_dict() for p in points],
        )

    return app

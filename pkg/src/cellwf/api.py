"""HTTP service exposing the solver, the single-shot simulator and sweeps.

All endpoints are pure functions of the request body (seeds included), so
responses are reproducible. Config payloads are the same flat documents
the CLI reads from disk, with powers in dBm at the boundary.
"""

from __future__ import annotations

from typing import Any

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .configio import ConfigError, parse_system_config
from .experiments import SweepResult, parse_sweep_config, run_sweep, sweep_to_boundary
from .model import compute_rates, generate_realization
from .waterfill import (
    ALL_SCHEMES,
    allocate_scheme,
    initial_duals,
    partition_zones,
    solve_iterative,
    waterfill_objective,
)

app = FastAPI(title="cellwf", version=__version__)


class HealthResponse(BaseModel):
    status: str
    version: str


class SolveRequest(BaseModel):
    """One zoned water-filling instance over explicit gains."""

    gains: list[float] = Field(min_length=1, description="per-user SNR ratios c_z")
    distances: list[float] = Field(min_length=1, description="per-user distances, meters")
    cell_radius: float = Field(gt=0)
    budget: float = Field(default=1.0, gt=0, le=1.0,
                          description="total coefficient budget p_transmit / p_max")
    tolerance: float = Field(default=1e-8, gt=0)
    max_iterations: int = Field(default=100_000, ge=1)


class SolveResponse(BaseModel):
    zones: list[str]
    alpha: float
    rho: list[float]
    water_level_near: float | None
    water_level_far: float | None
    objective: float
    iterations: int
    converged: bool


class SchemeReport(BaseModel):
    scheme: str
    energy_efficiency_bit_j: float
    sum_rate_bit_s_hz: float
    total_transmit_power_w: float
    mean_iterations: float
    converged: bool
    rho: list[list[float]]
    per_user_rates: list[list[float]]


class SimulateRequest(BaseModel):
    config: dict[str, Any]
    schemes: list[str] = Field(default=list(ALL_SCHEMES), min_length=1)
    tolerance: float = Field(default=1e-8, gt=0)
    max_iterations: int = Field(default=100_000, ge=1)


class SimulateResponse(BaseModel):
    seed: int
    reports: list[SchemeReport]


class SweepRowModel(BaseModel):
    variable: str
    value: float
    scheme: str
    ee_mean: float
    ee_stderr: float
    sumrate_mean: float
    ptx_mw_mean: float
    iters_mean: float
    fail_rate: float
    sumrate_stderr: float
    ptx_mw_stderr: float


class SweepRequest(BaseModel):
    config: dict[str, Any]
    workers: int = Field(default=1, ge=1)


class SweepResponse(BaseModel):
    version: str
    rows: list[SweepRowModel]
    target_sum_rate: float | None
    wall_clock_seconds: float
    spec_echo: dict[str, Any]


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=422, detail=str(exc))


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/solve", response_model=SolveResponse)
def solve(req: SolveRequest) -> SolveResponse:
    if len(req.gains) != len(req.distances):
        raise _bad_request(ValueError("gains and distances must have the same length"))
    try:
        part = partition_zones(req.distances, req.cell_radius, req.budget, 1.0)
        dual0 = initial_duals(req.gains, part, tolerance=req.tolerance,
                              max_iterations=req.max_iterations)
        rho, dual = solve_iterative(req.gains, part, dual0)
    except ValueError as exc:
        raise _bad_request(exc) from exc

    return SolveResponse(
        zones=["near" if n else "far" for n in part.near_mask],
        alpha=part.alpha,
        rho=[float(x) for x in rho],
        water_level_near=1.0 / dual.lambda1 if part.near_mask.any() else None,
        water_level_far=1.0 / dual.lambda2 if part.far_mask.any() else None,
        objective=waterfill_objective(req.gains, rho),
        iterations=dual.iterations_used,
        converged=dual.converged,
    )


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    try:
        config = parse_system_config(req.config)
        unknown = [s for s in req.schemes if s not in ALL_SCHEMES]
        if unknown:
            raise ConfigError(f'unknown scheme "{unknown[0]}"; expected {ALL_SCHEMES}')
        real = generate_realization(config)
    except (ConfigError, RuntimeError) as exc:
        raise _bad_request(exc) from exc

    reports = []
    for scheme in req.schemes:
        alloc, solutions = allocate_scheme(real, config, scheme, tolerance=req.tolerance,
                                           max_iterations=req.max_iterations)
        report = compute_rates(real, alloc, config)
        duals = [s.dual for s in solutions if s.dual is not None]
        reports.append(SchemeReport(
            scheme=scheme,
            energy_efficiency_bit_j=report.energy_efficiency,
            sum_rate_bit_s_hz=report.sum_rate,
            total_transmit_power_w=report.total_transmit_power,
            mean_iterations=float(np.mean([d.iterations_used for d in duals])) if duals else 0.0,
            converged=all(d.converged for d in duals),
            rho=alloc.rho.tolist(),
            per_user_rates=report.per_user_rates.tolist(),
        ))
    return SimulateResponse(seed=config.rng_seed, reports=reports)


@app.post("/sweep", response_model=SweepResponse)
def sweep(req: SweepRequest) -> SweepResponse:
    try:
        spec = parse_sweep_config(req.config)
        result: SweepResult = run_sweep(spec, workers=req.workers)
    except (ConfigError, RuntimeError) as exc:
        # RuntimeError covers grids the channel construction cannot serve,
        # e.g. fewer antennas than clusters.
        raise _bad_request(exc) from exc
    rows = [SweepRowModel(**vars(row)) for row in result.rows]
    return SweepResponse(
        version=__version__,
        rows=rows,
        target_sum_rate=result.target_sum_rate,
        wall_clock_seconds=result.wall_clock_seconds,
        spec_echo=sweep_to_boundary(result.spec),
    )

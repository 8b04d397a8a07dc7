"""FastAPI application wrapping the core package.

Endpoints are synchronous wrappers over pure library calls: /train runs one
experiment from a flat config mapping, /compare digests two summary
documents, /selftest runs the oracle suites. Domain validation errors
surface as HTTP 400 with the library's message.
"""

from __future__ import annotations

import dataclasses

from fastapi import FastAPI, HTTPException

from .. import __version__, harness, selftest
from .schemas import (
    CompareRequest,
    CompareResponse,
    HealthResponse,
    SelftestResponse,
    SuiteModel,
    TrainRequest,
    TrainResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="qubitclf", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/train", response_model=TrainResponse)
    def train(request: TrainRequest) -> TrainResponse:
        try:
            config = harness.config_from_mapping(request.to_mapping())
            report = harness.run_experiment(config)
        except (ValueError, OSError) as err:
            raise HTTPException(status_code=400, detail=str(err)) from err
        return TrainResponse(**harness.report_to_dict(report))

    @app.post("/compare", response_model=CompareResponse)
    def compare(request: CompareRequest) -> CompareResponse:
        try:
            report_a = harness.report_from_dict(request.report_a)
            report_b = harness.report_from_dict(request.report_b)
            summary = harness.compare_runs(report_a, report_b)
        except (ValueError, OSError) as err:
            raise HTTPException(status_code=400, detail=str(err)) from err
        return CompareResponse(
            **harness.comparison_to_dict(summary),
            text=harness.format_comparison(summary),
        )

    @app.post("/selftest", response_model=SelftestResponse)
    def run_selftest() -> SelftestResponse:
        results = selftest.run_all()
        return SelftestResponse(
            passed=all(result.passed for result in results),
            suites=[SuiteModel(**dataclasses.asdict(result)) for result in results],
        )

    return app


app = create_app()

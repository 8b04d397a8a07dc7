"""Request and response bodies of the experiment service."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ConfigDict


class TrainRequest(BaseModel):
    """A flat configuration mapping plus an optional seed override."""

    model_config = ConfigDict(extra="forbid")

    config: dict[str, str | int | float] = {}
    seed: int | None = None

    def to_mapping(self) -> dict[str, str]:
        mapping = {str(key): str(value) for key, value in self.config.items()}
        if self.seed is not None:
            mapping["seed"] = str(self.seed)
        return mapping


class RecordModel(BaseModel):
    loop_index: int
    elapsed_seconds: float
    cost_reference: float
    train_accuracy: float
    test_accuracy: float
    accepted_updates: int
    skipped_components: int


class FinalMetrics(BaseModel):
    loop_index: int
    cost: float
    train_accuracy: float
    test_accuracy: float
    total_seconds: float


class TrainResponse(BaseModel):
    """Mirrors the on-disk summary document field for field."""

    config: dict[str, str | int | float]
    timing_convention: str
    final: FinalMetrics
    records: list[RecordModel]
    final_theta: list[float]


class CompareRequest(BaseModel):
    """Two full summary documents to compare."""

    model_config = ConfigDict(extra="forbid")

    report_a: dict[str, Any]
    report_b: dict[str, Any]


class ThresholdCrossing(BaseModel):
    accuracy: float
    a_seconds: float | None
    b_seconds: float | None


class RunSide(BaseModel):
    optimizer: str
    final_cost: float
    final_accuracy: float


class CompareResponse(BaseModel):
    thresholds: list[ThresholdCrossing]
    a: RunSide
    b: RunSide
    text: str


class SuiteModel(BaseModel):
    name: str
    passed: bool
    detail: str
    seconds: float


class SelftestResponse(BaseModel):
    passed: bool
    suites: list[SuiteModel]


class HealthResponse(BaseModel):
    status: str
    version: str

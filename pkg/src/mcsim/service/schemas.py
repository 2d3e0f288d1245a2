"""Wire schemas for the what-if API. All values travel in physical units."""

from __future__ import annotations

from pydantic import BaseModel, Field, field_validator

from ..datagen.features import CHANNEL_NAMES, WINDOW_STEPS
from ..datagen.samples import HORIZON


class WhatIfRequest(BaseModel):
    context: list[list[float]] = Field(..., description="90x7 feature window")
    future_pl: list[int] = Field(..., description="90 future pump levels in 1..9")
    n_samples: int = Field(default=50, ge=1, le=500)

    @field_validator("context")
    @classmethod
    def _check_context(cls, v):
        if len(v) != WINDOW_STEPS:
            raise ValueError(f"context must have exactly {WINDOW_STEPS} rows")
        for i, row in enumerate(v):
            if len(row) != len(CHANNEL_NAMES):
                raise ValueError(
                    f"context row {i} must have {len(CHANNEL_NAMES)} features")
        return v

    @field_validator("future_pl")
    @classmethod
    def _check_pl(cls, v):
        if len(v) != HORIZON:
            raise ValueError(f"future_pl must have exactly {HORIZON} entries")
        if any(not 1 <= p <= 9 for p in v):
            raise ValueError("future_pl entries must lie in 1..9")
        return v


class WhatIfResponse(BaseModel):
    mean: list[float]
    q10: list[float]
    q50: list[float]
    q90: list[float]
    trend: str
    model_version: str
    latency_ms: float


class SampleItem(BaseModel):
    id: int
    trend: str
    domain: int
    x: list[list[float]]
    last_level: int


class SamplesPage(BaseModel):
    page: int
    pages: int
    total: int
    items: list[SampleItem]


class HealthResponse(BaseModel):
    status: str
    model_version: str | None
    uptime_s: float

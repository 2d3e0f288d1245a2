"""FastAPI service exposing what-if forecasting and sample browsing.

The model, context bank, and browsable dataset load once at startup; request
handling is read-only. Identical prediction requests return byte-identical
bodies via a deterministic response cache keyed by the canonical request.
"""

from __future__ import annotations

import json
import time

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.exceptions import RequestValidationError

from ..danp import build_context_bank, load_model, predict
from ..datagen.dataset import load_dataset
from ..datagen.features import COL_PLEVEL
from ..datagen.trends import label_trend
from .schemas import HealthResponse, SampleItem, SamplesPage, WhatIfRequest

API_PREFIX = "/v1"
CACHE_CAP = 256


def create_app(model_dir=None, data_dir=None, server_seed: int = 2024) -> FastAPI:
    app = FastAPI(title="mcsim what-if service")
    state = {
        "model": None,
        "sidecar": None,
        "bank": None,
        "samples": [],
        "started": time.monotonic(),
        "cache": {},
    }
    app.state.mcsim = state

    if data_dir is not None:
        samples, _ = load_dataset(data_dir)
        state["samples"] = samples
    if model_dir is not None:
        model, sidecar = load_model(model_dir)
        state["model"] = model
        state["sidecar"] = sidecar
        cap = model.cfg.context_bank_cap
        bank_src = state["samples"] if state["samples"] else None
        if bank_src is None:
            raise RuntimeError("a dataset is required to build the context bank")
        state["bank"] = build_context_bank(bank_src, cap=cap,
                                           seed=model.cfg.context_bank_seed)

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        errors = [{"field": ".".join(str(p) for p in err["loc"] if p != "body"),
                   "message": err["msg"]} for err in exc.errors()]
        return Response(content=json.dumps({"errors": errors}, sort_keys=True),
                        status_code=400, media_type="application/json")

    @app.get(API_PREFIX + "/health", response_model=HealthResponse)
    def health():
        if state["model"] is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        return HealthResponse(
            status="ok",
            model_version=state["sidecar"]["model_version"],
            uptime_s=time.monotonic() - state["started"],
        )

    @app.post(API_PREFIX + "/predict")
    def http_predict(req: WhatIfRequest):
        if state["model"] is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        key = json.dumps(req.model_dump(), sort_keys=True)
        cached = state["cache"].get(key)
        if cached is not None:
            return Response(content=cached, media_type="application/json")
        t0 = time.perf_counter()
        fc = predict(state["model"], np.asarray(req.context, dtype=np.float64),
                     np.asarray(req.future_pl), state["bank"],
                     n_samples=req.n_samples, seed=server_seed)
        latency_ms = 1000.0 * (time.perf_counter() - t0)
        body = json.dumps({
            "mean": fc.mean.tolist(),
            "q10": fc.q10.tolist(),
            "q50": fc.q50.tolist(),
            "q90": fc.q90.tolist(),
            "trend": label_trend(fc.mean).value,
            "model_version": state["sidecar"]["model_version"],
            "latency_ms": latency_ms,
        }, sort_keys=True).encode("utf-8")
        if len(state["cache"]) >= CACHE_CAP:
            state["cache"].pop(next(iter(state["cache"])))
        state["cache"][key] = body
        return Response(content=body, media_type="application/json")

    @app.get(API_PREFIX + "/samples", response_model=SamplesPage)
    def http_samples(page: int = 0, size: int = 10, trend: str | None = None,
                     domain: int | None = None):
        if page < 0 or size < 1:
            raise HTTPException(status_code=400, detail="bad pagination")
        items = state["samples"]
        if trend is not None:
            items = [s for s in items if s.trend.value == trend]
        if domain is not None:
            items = [s for s in items if s.domain == domain]
        total = len(items)
        pages = (total + size - 1) // size
        if page >= pages and page != 0:
            raise HTTPException(status_code=404, detail="past last page")
        chunk = items[page * size:(page + 1) * size]
        out = [SampleItem(
            id=page * size + i,
            trend=s.trend.value,
            domain=s.domain,
            x=[[float(v) for v in row] for row in s.x.values],
            last_level=int(s.x.values[-1, COL_PLEVEL]),
        ) for i, s in enumerate(chunk)]
        return SamplesPage(page=page, pages=pages, total=total, items=out)

    return app

"""HTTP service: job submission, results, ratings, metrics, enrichment.

Jobs run asynchronously on a bounded worker pool; clients poll the job
status. Every error response is a JSON body ``{"code": ..., "message": ...}``.
The server binds to localhost by default and performs no authentication --
it is a desk-scale research tool fronted by the review UI.
"""
from __future__ import annotations

import concurrent.futures
import logging
import time
from contextlib import asynccontextmanager
from typing import Any, Optional

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .config import job_config_from_config
from .dictionary_index import FingerprintIndex
from .errors import (
    AlreadyApprovedError,
    NotFoundError,
    ValidationError,
)
from .metrics import (
    PropertyRating,
    ablation_report,
    report_to_dict,
    validate_rating,
)
from .pipeline import (
    GenerationJob,
    JobStatus,
    job_config_from_dict,
    job_config_to_dict,
    new_job_id,
    run_job,
    trace_to_dict,
)
from .semantic_node import RefKind, node_to_record
from .store import JobStore

log = logging.getLogger(__name__)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


def create_app(
    config: dict,
    store: JobStore,
    provider,
    index: Optional[FingerprintIndex] = None,
) -> FastAPI:
    workers = int(config.get("service", {}).get("workers", 2))

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.executor = concurrent.futures.ThreadPoolExecutor(
            max_workers=workers, thread_name_prefix="job-worker"
        )
        yield
        # Graceful drain: running jobs finish before the process exits.
        app.state.executor.shutdown(wait=True)

    app = FastAPI(lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store
    app.state.provider = provider
    app.state.index = index
    app.state.config = config

    @app.exception_handler(ApiError)
    async def handle_api_error(_request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(Exception)
    async def handle_unexpected(_request: Request, exc: Exception):
        log.exception("unhandled error: %s", exc)
        return JSONResponse(
            status_code=500, content={"code": "internal", "message": str(exc)}
        )

    @app.get("/api/health")
    async def health():
        return {"status": "ok"}

    @app.get("/api/ui-config")
    async def ui_config():
        return {"apiBase": "/api"}

    @app.post("/api/jobs", status_code=202)
    async def submit_job(request: Request):
        body = await _json_body(request)
        input_text = body.get("inputText", "")
        if not isinstance(input_text, str) or not input_text.strip():
            raise ApiError(400, "empty_input", "inputText must be a non-empty string")
        overrides = body.get("config", {})
        if not isinstance(overrides, dict):
            raise ApiError(400, "bad_config", "config must be an object")
        job_config = _merge_job_config(app.state.config, overrides)
        if job_config.rag_enabled and (
            app.state.index is None or len(app.state.index) == 0
        ):
            raise ApiError(409, "no_dictionary_index", "no dictionary index is loaded")
        if not app.state.provider.healthy():
            raise ApiError(503, "provider_unavailable", "the model provider is unavailable")
        job = GenerationJob(
            job_id=new_job_id(),
            input_text=input_text,
            config=job_config,
            status=JobStatus.PENDING,
            created_at=time.time(),
        )
        store.put_job(job)
        app.state.executor.submit(_run_job_task, app, job.job_id)
        return {"jobId": job.job_id}

    @app.get("/api/jobs")
    async def list_jobs():
        return {
            "jobs": [
                {
                    "jobId": s.job_id,
                    "status": s.status.value,
                    "configId": s.config_id,
                    "createdAt": s.created_at,
                }
                for s in store.list_jobs()
            ]
        }

    @app.get("/api/jobs/{job_id}")
    async def get_job(job_id: str):
        job = _load_job(store, job_id)
        return _job_doc(job)

    @app.get("/api/jobs/{job_id}/aas")
    async def download_environment(job_id: str):
        job = _load_job(store, job_id)
        if job.status is not JobStatus.DONE:
            raise ApiError(409, "not_done", f"job is {job.status.value}")
        payload = store.environment_bytes(job_id)
        return Response(
            content=payload,
            media_type="application/json",
            headers={
                "Content-Disposition": f'attachment; filename="{job_id}.aas.json"'
            },
        )

    @app.get("/api/jobs/{job_id}/trace")
    async def get_trace(job_id: str):
        job = _load_job(store, job_id)
        # Failed jobs keep their partial trace reachable for inspection.
        if job.status not in (JobStatus.DONE, JobStatus.FAILED):
            raise ApiError(409, "not_done", f"job is {job.status.value}")
        return trace_to_dict(job.trace) if job.trace else {"records": []}

    @app.post("/api/jobs/{job_id}/ratings", status_code=201)
    async def post_rating(job_id: str, request: Request):
        job = _load_job(store, job_id)
        body = await _json_body(request)
        rating = _rating_from_body(body, job)
        sample_ids = {
            prop.id_short
            for submodel in (job.environment.submodels if job.environment else ())
            for prop in submodel.properties
        }
        if rating.sample_id not in sample_ids:
            raise ApiError(
                404, "unknown_sample", f"job has no property {rating.sample_id!r}"
            )
        if store.has_rating(rating):
            raise ApiError(409, "duplicate_rating", "identical rating already recorded")
        store.append_rating(rating)
        return {"sampleId": rating.sample_id, "configId": rating.config_id}

    @app.get("/api/metrics")
    async def get_metrics(config: Optional[str] = None):
        ratings = store.read_ratings()
        if config:
            ratings = [r for r in ratings if r.config_id == config]
        durations: dict[str, list[float]] = {}
        for summary in store.list_jobs(JobStatus.DONE):
            job = store.get_job(summary.job_id)
            if job.trace is not None:
                durations.setdefault(summary.config_id, []).append(
                    job.trace.total_latency_ms
                )
        report = ablation_report(ratings, durations_ms=durations)
        return report_to_dict(report)

    @app.get("/api/enrichment")
    async def list_enrichment():
        return {"candidates": store.list_enrichment()}

    @app.post("/api/enrichment/{node_id}/approve")
    async def approve_enrichment(node_id: str):
        try:
            entry = store.approve_enrichment(node_id)
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc)) from exc
        except AlreadyApprovedError as exc:
            raise ApiError(409, "already_approved", str(exc)) from exc
        if app.state.index is not None:
            app.state.index.enrich(entry, app.state.provider.embed)
        return {
            "entryId": entry.entry_id,
            "preferredName": entry.preferred_name,
            "indexed": app.state.index is not None,
        }

    return app


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception as exc:
        raise ApiError(400, "bad_json", f"request body is not valid JSON: {exc}") from exc
    if not isinstance(body, dict):
        raise ApiError(400, "bad_json", "request body must be a JSON object")
    return body


def _load_job(store: JobStore, job_id: str) -> GenerationJob:
    try:
        return store.get_job(job_id)
    except NotFoundError as exc:
        raise ApiError(404, "not_found", str(exc)) from exc


def _merge_job_config(config: dict, overrides: dict):
    base = job_config_to_dict(job_config_from_config(config))
    allowed = {"modelName", "ragEnabled", "topK", "baseIri", "seed", "assetId", "shellIdShort"}
    unknown = set(overrides) - allowed
    if unknown:
        raise ApiError(400, "bad_config", f"unknown config keys: {sorted(unknown)}")
    base.update(overrides)
    try:
        return job_config_from_dict(base)
    except (ValidationError, ValueError, TypeError) as exc:
        raise ApiError(400, "bad_config", str(exc)) from exc


def _job_doc(job: GenerationJob) -> dict[str, Any]:
    return {
        "jobId": job.job_id,
        "status": job.status.value,
        "configId": job.config.config_id,
        "config": job_config_to_dict(job.config),
        "createdAt": job.created_at,
        "error": job.error,
        "nodes": [node_to_record(node) for node in job.nodes],
        "sampleIds": [
            prop.id_short
            for submodel in (job.environment.submodels if job.environment else ())
            for prop in submodel.properties
        ],
    }


def _rating_from_body(body: dict, job: GenerationJob) -> PropertyRating:
    def _require(key: str, kind, optional=False):
        if key not in body or body[key] is None:
            if optional:
                return None
            raise ApiError(400, "bad_rating", f"missing field {key}")
        value = body[key]
        if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
            raise ApiError(400, "bad_rating", f"{key} must be an integer")
        if kind is bool and not isinstance(value, bool):
            raise ApiError(400, "bad_rating", f"{key} must be a boolean")
        if kind is str and not isinstance(value, str):
            raise ApiError(400, "bad_rating", f"{key} must be a string")
        return value

    rating = PropertyRating(
        sample_id=_require("sampleId", str),
        config_id=job.config.config_id,  # server-authoritative
        annotator_id=_require("annotatorId", str),
        comprehended_initially=_require("comprehendedInitially", bool),
        inaccurate_name=_require("inaccurateName", bool),
        inaccurate_value=_require("inaccurateValue", bool),
        inaccurate_definition=_require("inaccurateDefinition", bool),
        inaccurate_affordance=_require("inaccurateAffordance", bool),
        inaccurate_unit=_require("inaccurateUnit", bool),
        definition_rating=_require("definitionRating", int),
        affordance_rating=_require("affordanceRating", int),
        helpfulness_rating=_require("helpfulnessRating", int, optional=True),
        overall_rating=_require("overallRating", int),
    )
    try:
        validate_rating(rating)
    except ValidationError as exc:
        raise ApiError(400, "bad_rating", str(exc)) from exc
    return rating


def _run_job_task(app: FastAPI, job_id: str) -> None:
    store: JobStore = app.state.store
    try:
        job = store.get_job(job_id)
        job.status = JobStatus.RUNNING
        store.put_job(job)
        finished = run_job(
            job.input_text,
            job.config,
            app.state.index,
            app.state.provider,
            job_id=job_id,
        )
        finished.created_at = job.created_at
        store.put_job(finished)
        if finished.status is JobStatus.DONE:
            for node in finished.nodes:
                if node.semantic_ref and node.semantic_ref.kind is RefKind.GENERATED_CONCEPT:
                    store.queue_enrichment(node)
    except Exception:
        log.exception("worker failed for job %s", job_id)

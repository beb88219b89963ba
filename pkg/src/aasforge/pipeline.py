"""Orchestration of the three agents: extraction, retrieval, synthesis.

A job runs in four phases. The extraction agent turns raw input text into
candidate nodes (dropping any candidate whose value cannot be located in
the input). With retrieval enabled, each candidate queries the fingerprint
index and a synthesis agent judges the relevance of every hit; the winning
dictionary entry becomes the node's semantic reference, otherwise a fresh
concept id is minted. Finally the finished nodes are assembled into an AAS
environment. Per-candidate work may run concurrently; assembly merges by
source order so results are deterministic.
"""
from __future__ import annotations

import concurrent.futures
import hashlib
import logging
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from .aas_model import AasEnvironment, AssetMeta, build_environment, mint_concept_iri
from .dictionary_index import FingerprintIndex, SearchHit, entry_semantic_id
from .errors import (
    AgentError,
    ExtractError,
    SchemaError,
    ValidationError,
)
from .llm_gateway import CompletionResult, PromptTemplate, parse_structured_output, render_prompt
from .semantic_node import (
    RefKind,
    SemanticId,
    SemanticNode,
    find_value_span,
    new_semantic_node,
)

log = logging.getLogger(__name__)

_REPAIR_ATTEMPTS = 2

EXTRACTION_TEMPLATE = PromptTemplate(
    role_definition=(
        "You are a meticulous technical documentation analyst for industrial "
        "automation components."
    ),
    task_instruction=(
        "Identify every technical property stated in the input text. For each "
        "property, extract its name, its value exactly as written in the input, "
        "an initial definition of the underlying concept, and a short description "
        "of the surrounding context. Copy values verbatim; never rewrite, convert "
        "or merge them."
    ),
    output_format_spec=(
        'Respond with a JSON array. Each element must be an object with the string '
        'keys "name", "value", "initialDefinition" and "contextDescription".'
    ),
    input_slot="Input text:\n{input}",
)

SYNTHESIS_TEMPLATE = PromptTemplate(
    role_definition="You are a semantics expert for industrial data dictionaries.",
    task_instruction=(
        "Review the candidate property below together with the retrieved dictionary "
        "entries. Judge for every retrieved entry whether it describes the same "
        "concept as the candidate, giving a short reason. Then write the final "
        "description of the candidate: a conceptual definition, the potential usage "
        "of the data (affordance), a value type out of String, Integer, Real or "
        "Boolean, and the measurement unit if one applies. Keep the value exactly "
        "as extracted."
    ),
    context_slot="Retrieved dictionary entries:\n{context}",
    output_format_spec=(
        'Respond with a JSON object with keys "judgments" (array of objects with '
        'keys "entryId", "relevant", "reason") and "node" (object with keys "name", '
        '"conceptualDefinition", "affordance", "value", "valueType", and '
        'optionally "unit").'
    ),
    input_slot="Candidate property:\n{input}",
)

EXTRACTION_SCHEMA = [
    {
        "name": str,
        "value": str,
        "initialDefinition": str,
        "contextDescription": str,
    }
]

SYNTHESIS_SCHEMA = {
    "judgments": [{"entryId": str, "relevant": bool, "reason": str}],
    "node": {
        "name": str,
        "conceptualDefinition": str,
        "affordance": str,
        "value?": str,
        "valueType?": str,
        "unit?": str,
    },
}


class JobStatus(str, Enum):
    PENDING = "Pending"
    RUNNING = "Running"
    DONE = "Done"
    FAILED = "Failed"


@dataclass(frozen=True)
class JobConfig:
    model_name: str
    rag_enabled: bool = False
    top_k: int = 5
    base_iri: str = "https://aasforge.example/ns"
    seed: int = 0
    asset_id: str = ""  # derived from the input text when empty
    shell_id_short: str = "GeneratedAsset"

    def __post_init__(self):
        if self.top_k < 1:
            raise ValidationError("top_k must be >= 1")
        if not self.model_name or not self.model_name.strip():
            raise ValidationError("model_name empty")

    @property
    def config_id(self) -> str:
        return f"{self.model_name}:{'rag' if self.rag_enabled else 'norag'}"


@dataclass(frozen=True)
class CandidateNode:
    name: str
    value: str
    initial_definition: str
    context_description: str
    source_span: tuple[int, int]


@dataclass(frozen=True)
class RelevanceJudgment:
    entry_id: str
    relevant: bool
    reason: str


@dataclass
class StageRecord:
    stage: str  # extraction | drop | retrieval | synthesis
    candidate: Optional[str] = None
    prompt: Optional[str] = None
    raw_output: Optional[str] = None
    detail: dict = field(default_factory=dict)
    latency_ms: float = 0.0


@dataclass
class PipelineTrace:
    rag_enabled: bool
    records: list[StageRecord] = field(default_factory=list)
    total_latency_ms: float = 0.0


@dataclass
class GenerationJob:
    job_id: str
    input_text: str
    config: JobConfig
    status: JobStatus = JobStatus.PENDING
    nodes: list[SemanticNode] = field(default_factory=list)
    environment: Optional[AasEnvironment] = None
    trace: Optional[PipelineTrace] = None
    error: Optional[str] = None
    created_at: float = 0.0


def new_job_id() -> str:
    return uuid.uuid4().hex[:12]


def derive_asset_id(config: JobConfig, input_text: str) -> str:
    if config.asset_id:
        return config.asset_id
    digest = hashlib.sha256(input_text.encode("utf-8")).hexdigest()[:16]
    return f"{config.base_iri.rstrip('/')}/asset/{digest}"


def _structured_call(provider, prompt: str, schema: Any, post_validate=None):
    """complete() + parse + optional semantic validation, with bounded repair.

    On a parse or validation failure the error text is appended to the
    prompt and the call is retried, at most twice; afterwards AgentError.
    Returns (data, result, attempts) where attempts lists (prompt, raw).
    """
    attempts: list[tuple[str, str, float]] = []
    attempt_prompt = prompt
    last_error: Exception | None = None
    for _ in range(1 + _REPAIR_ATTEMPTS):
        result: CompletionResult = provider.complete(attempt_prompt)
        attempts.append((attempt_prompt, result.raw_text, result.latency_ms))
        try:
            data = parse_structured_output(result.raw_text, schema)
            if post_validate is not None:
                post_validate(data)
            return data, attempts
        except (ExtractError, SchemaError, ValidationError) as exc:
            last_error = exc
            attempt_prompt = (
                prompt
                + "\n\nYour previous answer could not be used ("
                + str(exc)
                + "). Answer again and follow the output format exactly."
            )
    raise AgentError(f"unusable agent output after {_REPAIR_ATTEMPTS} repairs: {last_error}")


def extract_candidates(
    input_text: str, provider, config: JobConfig, trace: PipelineTrace
) -> list[CandidateNode]:
    """Run the extraction agent and keep only authentic candidates, in source order."""
    if not input_text or not input_text.strip():
        raise ValidationError("input text empty")
    prompt = render_prompt(EXTRACTION_TEMPLATE, {"input": input_text})
    data, attempts = _structured_call(provider, prompt, EXTRACTION_SCHEMA)
    last_prompt, raw, _ = attempts[-1]
    trace.records.append(
        StageRecord(
            stage="extraction",
            prompt=last_prompt,
            raw_output=raw,
            detail={"itemCount": len(data), "attempts": len(attempts)},
            latency_ms=sum(a[2] for a in attempts),
        )
    )
    candidates: list[CandidateNode] = []
    for item in data:
        span = find_value_span(item["value"], input_text)
        if span is None or not item["value"].strip() or not item["name"].strip():
            trace.records.append(
                StageRecord(
                    stage="drop",
                    candidate=item.get("name"),
                    detail={
                        "value": item.get("value"),
                        "reason": "value not found in input",
                    },
                )
            )
            continue
        candidates.append(
            CandidateNode(
                name=item["name"].strip(),
                value=item["value"].strip(),
                initial_definition=item["initialDefinition"].strip(),
                context_description=item["contextDescription"].strip(),
                source_span=span,
            )
        )
    candidates.sort(key=lambda c: c.source_span[0])
    return candidates


def retrieve_similar(
    candidate: CandidateNode, index: FingerprintIndex, provider, top_k: int
) -> list[SearchHit]:
    """Query the fingerprint index with "name: initial definition"."""
    if index is None or len(index) == 0:
        raise ValidationError("retrieval requires a non-empty dictionary index")
    query = f"{candidate.name}: {candidate.initial_definition}"
    return index.search(query, top_k, provider.embed)


def _render_hits(hits: list[SearchHit]) -> str:
    if not hits:
        return "(none)"
    lines = [
        f"{i + 1}. [{hit.entry.entry_id}] {hit.entry.preferred_name}: {hit.entry.definition}"
        for i, hit in enumerate(hits)
    ]
    return "\n".join(lines)


def _render_candidate(candidate: CandidateNode) -> str:
    return (
        f"name: {candidate.name}\n"
        f"value: {candidate.value}\n"
        f"initial definition: {candidate.initial_definition}\n"
        f"context: {candidate.context_description}"
    )


def _validate_synthesis(data: dict) -> None:
    for judgment in data["judgments"]:
        if not judgment["reason"].strip():
            raise ValidationError("judgment reason empty")
    node = data["node"]
    vt = node.get("valueType")
    if vt is not None and vt not in ("String", "Integer", "Real", "Boolean"):
        raise ValidationError(f"unknown valueType {vt!r}")


def judge_and_synthesize(
    candidate: CandidateNode,
    hits: list[SearchHit],
    provider,
    config: JobConfig,
) -> tuple[SemanticNode, list[RelevanceJudgment], StageRecord]:
    """Produce the finished node and the per-hit relevance judgments.

    The extracted value always wins over whatever the agent answers (value
    rewriting would break authenticity). The semantic reference is the
    highest-scored hit judged relevant, or a freshly minted concept id when
    nothing relevant was retrieved.
    """
    prompt = render_prompt(
        SYNTHESIS_TEMPLATE,
        {"context": _render_hits(hits), "input": _render_candidate(candidate)},
    )
    data, attempts = _structured_call(
        provider, prompt, SYNTHESIS_SCHEMA, post_validate=_validate_synthesis
    )
    last_prompt, raw, _ = attempts[-1]

    hit_scores = {hit.entry.entry_id: hit.score for hit in hits}
    judgments = []
    for j in data["judgments"]:
        if j["entryId"] not in hit_scores:
            log.warning("judgment for unretrieved entry %r ignored", j["entryId"])
            continue
        judgments.append(RelevanceJudgment(j["entryId"], j["relevant"], j["reason"]))

    relevant = [j for j in judgments if j.relevant]
    node_doc = data["node"]
    definition = node_doc["conceptualDefinition"]
    affordance = node_doc["affordance"]
    name = node_doc["name"]
    unit = node_doc.get("unit")
    if relevant:
        winner = min(relevant, key=lambda j: (-hit_scores[j.entry_id], j.entry_id))
        ref = entry_semantic_id(winner.entry_id)
    else:
        ref = SemanticId(
            RefKind.GENERATED_CONCEPT,
            mint_concept_iri(config.base_iri, name, definition, unit),
        )
    node = new_semantic_node(
        name,
        definition,
        affordance,
        candidate.value,
        value_type=node_doc.get("valueType"),
        unit=unit,
        source_description=candidate.context_description,
        semantic_ref=ref,
    )
    record = StageRecord(
        stage="synthesis",
        candidate=candidate.name,
        prompt=last_prompt,
        raw_output=raw,
        detail={
            "judgments": [
                {"entryId": j.entry_id, "relevant": j.relevant, "reason": j.reason}
                for j in judgments
            ],
            "semanticId": {"kind": ref.kind.value, "iri": ref.iri},
            "attempts": len(attempts),
        },
        latency_ms=sum(a[2] for a in attempts),
    )
    return node, judgments, record


def _process_candidate(
    candidate: CandidateNode,
    config: JobConfig,
    index: Optional[FingerprintIndex],
    provider,
) -> tuple[SemanticNode, list[StageRecord]]:
    records: list[StageRecord] = []
    hits: list[SearchHit] = []
    if config.rag_enabled:
        started = time.monotonic()
        hits = retrieve_similar(candidate, index, provider, config.top_k)
        records.append(
            StageRecord(
                stage="retrieval",
                candidate=candidate.name,
                detail={
                    "query": f"{candidate.name}: {candidate.initial_definition}",
                    "hits": [
                        {"entryId": h.entry.entry_id, "score": h.score} for h in hits
                    ],
                },
                latency_ms=(time.monotonic() - started) * 1000.0,
            )
        )
    node, _, synthesis_record = judge_and_synthesize(candidate, hits, provider, config)
    records.append(synthesis_record)
    return node, records


def run_job(
    input_text: str,
    config: JobConfig,
    index: Optional[FingerprintIndex],
    provider,
    *,
    job_id: Optional[str] = None,
) -> GenerationJob:
    """Run the full pipeline; failures land in the job, not in an exception.

    Candidates are processed concurrently (bounded by the provider's
    max_concurrent) and merged back in source order, so output files are
    deterministic for a deterministic provider.
    """
    job = GenerationJob(
        job_id=job_id or new_job_id(),
        input_text=input_text,
        config=config,
        status=JobStatus.RUNNING,
        trace=PipelineTrace(rag_enabled=config.rag_enabled),
        created_at=time.time(),
    )
    started = time.monotonic()
    trace = job.trace
    stage = "setup"
    try:
        if config.rag_enabled and (index is None or len(index) == 0):
            raise ValidationError("rag_enabled requires a non-empty dictionary index")

        stage = "extraction"
        candidates = extract_candidates(input_text, provider, config, trace)

        stage = "synthesis"
        results: list[Optional[tuple[SemanticNode, list[StageRecord]]]] = [None] * len(candidates)
        workers = max(1, getattr(provider, "max_concurrent", 1))
        if candidates:
            with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
                futures = {
                    pool.submit(_process_candidate, candidate, config, index, provider): i
                    for i, candidate in enumerate(candidates)
                }
                for future in concurrent.futures.as_completed(futures):
                    results[futures[future]] = future.result()

        for node, records in results:
            trace.records.extend(records)
            job.nodes.append(node)

        stage = "assembly"
        job.environment = build_environment(
            job.nodes,
            AssetMeta(
                asset_id=derive_asset_id(config, input_text),
                shell_id_short=config.shell_id_short,
            ),
        )
        job.status = JobStatus.DONE
    except Exception as exc:
        job.status = JobStatus.FAILED
        job.error = f"{stage}: {exc}"
        trace.records.append(
            StageRecord(stage="error", detail={"failedStage": stage, "message": str(exc)})
        )
        log.warning("job %s failed at %s: %s", job.job_id, stage, exc)
    trace.total_latency_ms = (time.monotonic() - started) * 1000.0
    return job


def validate_trace(trace: PipelineTrace) -> None:
    """Check the retrieval/judgment bookkeeping matches the configuration."""
    retrievals = [r for r in trace.records if r.stage == "retrieval"]
    judgments = [
        j
        for r in trace.records
        if r.stage == "synthesis"
        for j in r.detail.get("judgments", [])
    ]
    if not trace.rag_enabled and (retrievals or judgments):
        raise ValidationError("retrieval/judgment records present although RAG is off")
    if trace.rag_enabled:
        syntheses = [r for r in trace.records if r.stage == "synthesis"]
        if len(retrievals) != len(syntheses):
            raise ValidationError(
                f"{len(retrievals)} retrieval records for {len(syntheses)} candidates"
            )


# --- trace (de)serialization -------------------------------------------------


def trace_to_dict(trace: PipelineTrace) -> dict[str, Any]:
    return {
        "ragEnabled": trace.rag_enabled,
        "totalLatencyMs": trace.total_latency_ms,
        "records": [
            {
                "stage": r.stage,
                "candidate": r.candidate,
                "prompt": r.prompt,
                "rawOutput": r.raw_output,
                "detail": r.detail,
                "latencyMs": r.latency_ms,
            }
            for r in trace.records
        ],
    }


def trace_from_dict(doc: dict[str, Any]) -> PipelineTrace:
    trace = PipelineTrace(
        rag_enabled=bool(doc.get("ragEnabled", False)),
        total_latency_ms=float(doc.get("totalLatencyMs", 0.0)),
    )
    for r in doc.get("records", []):
        trace.records.append(
            StageRecord(
                stage=r["stage"],
                candidate=r.get("candidate"),
                prompt=r.get("prompt"),
                raw_output=r.get("rawOutput"),
                detail=r.get("detail", {}),
                latency_ms=float(r.get("latencyMs", 0.0)),
            )
        )
    return trace


def job_config_to_dict(config: JobConfig) -> dict[str, Any]:
    return {
        "modelName": config.model_name,
        "ragEnabled": config.rag_enabled,
        "topK": config.top_k,
        "baseIri": config.base_iri,
        "seed": config.seed,
        "assetId": config.asset_id,
        "shellIdShort": config.shell_id_short,
    }


def job_config_from_dict(doc: dict[str, Any]) -> JobConfig:
    return JobConfig(
        model_name=doc["modelName"],
        rag_enabled=bool(doc.get("ragEnabled", False)),
        top_k=int(doc.get("topK", 5)),
        base_iri=doc.get("baseIri", "https://aasforge.example/ns"),
        seed=int(doc.get("seed", 0)),
        asset_id=doc.get("assetId", ""),
        shell_id_short=doc.get("shellIdShort", "GeneratedAsset"),
    )

"""File-backed persistence for jobs, ratings and enrichment proposals.

Everything lives under one data directory::

    <data_dir>/jobs/<job_id>/{input.txt, config.json, nodes.jsonl,
                              environment.aas.json, trace.json, status}
    <data_dir>/ratings/ratings.csv
    <data_dir>/enrichment/<id>.json

Writes are atomic (write to a temp name, then rename), so a reader never
sees a partially written file and a new job directory appears all at once.
The ratings log is append-only and guarded by an advisory file lock.
"""
from __future__ import annotations

import csv
import fcntl
import hashlib
import io
import json
import os
import tempfile
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .aas_model import parse_environment, serialize_environment
from .dictionary_index import DictionaryEntry
from .errors import (
    AlreadyApprovedError,
    CorruptRecordError,
    NotFoundError,
    ValidationError,
)
from .metrics import (
    RATINGS_CSV_HEADER,
    PropertyRating,
    rating_to_row,
    read_ratings_csv,
)
from .pipeline import (
    GenerationJob,
    JobStatus,
    job_config_from_dict,
    job_config_to_dict,
    trace_from_dict,
    trace_to_dict,
)
from .semantic_node import RefKind, SemanticNode, node_from_record, node_to_record

DATA_DIR_ENV = "AASFORGE_DATA_DIR"


@dataclass(frozen=True)
class JobSummary:
    job_id: str
    status: JobStatus
    config_id: str
    created_at: float


def _atomic_write(path: Path, data: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".tmp-{path.name}-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def nodes_to_jsonl(nodes: Iterable[SemanticNode]) -> str:
    return "".join(
        json.dumps(node_to_record(node), ensure_ascii=False, sort_keys=True) + "\n"
        for node in nodes
    )


def nodes_from_jsonl(text: str) -> list[SemanticNode]:
    nodes = []
    for line in text.splitlines():
        if line.strip():
            nodes.append(node_from_record(json.loads(line)))
    return nodes


def write_job_files(job: GenerationJob, directory: Path) -> None:
    """Materialize every job artifact into ``directory`` (which must exist)."""
    _atomic_write(directory / "input.txt", job.input_text)
    _atomic_write(
        directory / "config.json",
        json.dumps(job_config_to_dict(job.config), indent=2, sort_keys=True) + "\n",
    )
    _atomic_write(directory / "nodes.jsonl", nodes_to_jsonl(job.nodes))
    if job.environment is not None:
        _atomic_write(directory / "environment.aas.json", serialize_environment(job.environment))
    if job.trace is not None:
        _atomic_write(
            directory / "trace.json",
            json.dumps(trace_to_dict(job.trace), indent=2, ensure_ascii=False) + "\n",
        )
    _atomic_write(
        directory / "status",
        json.dumps(
            {
                "status": job.status.value,
                "createdAt": job.created_at,
                "configId": job.config.config_id,
                "error": job.error,
            },
            indent=2,
        )
        + "\n",
    )


class JobStore:
    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.jobs_dir = self.data_dir / "jobs"
        self.ratings_dir = self.data_dir / "ratings"
        self.enrichment_dir = self.data_dir / "enrichment"
        for directory in (self.jobs_dir, self.ratings_dir, self.enrichment_dir):
            directory.mkdir(parents=True, exist_ok=True)
        self._ratings_file = self.ratings_dir / "ratings.csv"
        self._ratings_lock = self.ratings_dir / ".lock"

    # --- jobs ---------------------------------------------------------------

    def put_job(self, job: GenerationJob) -> str:
        """Create or update the job directory; creation is all-or-nothing."""
        if job.created_at == 0.0:
            job.created_at = time.time()
        final_dir = self.jobs_dir / job.job_id
        if final_dir.exists():
            write_job_files(job, final_dir)
            return job.job_id
        tmp_dir = self.jobs_dir / f".tmp-{job.job_id}-{uuid.uuid4().hex[:6]}"
        tmp_dir.mkdir()
        try:
            write_job_files(job, tmp_dir)
            os.replace(tmp_dir, final_dir)
        except BaseException:
            for leftover in tmp_dir.glob("*"):
                leftover.unlink()
            if tmp_dir.exists():
                tmp_dir.rmdir()
            raise
        return job.job_id

    def job_dir(self, job_id: str) -> Path:
        return self.jobs_dir / job_id

    def get_job(self, job_id: str) -> GenerationJob:
        directory = self.jobs_dir / job_id
        if not directory.is_dir():
            raise NotFoundError(f"no job {job_id!r}")
        try:
            status_doc = json.loads((directory / "status").read_text(encoding="utf-8"))
            input_text = (directory / "input.txt").read_text(encoding="utf-8")
            config = job_config_from_dict(
                json.loads((directory / "config.json").read_text(encoding="utf-8"))
            )
            nodes = nodes_from_jsonl((directory / "nodes.jsonl").read_text(encoding="utf-8"))
            environment = None
            env_path = directory / "environment.aas.json"
            if env_path.exists():
                environment = parse_environment(env_path.read_text(encoding="utf-8"))
            trace = None
            trace_path = directory / "trace.json"
            if trace_path.exists():
                trace = trace_from_dict(json.loads(trace_path.read_text(encoding="utf-8")))
        except (OSError, ValueError, KeyError, ValidationError) as exc:
            raise CorruptRecordError(f"cannot read job {job_id!r}: {exc}", path=str(directory)) from exc
        return GenerationJob(
            job_id=job_id,
            input_text=input_text,
            config=config,
            status=JobStatus(status_doc["status"]),
            nodes=nodes,
            environment=environment,
            trace=trace,
            error=status_doc.get("error"),
            created_at=float(status_doc.get("createdAt", 0.0)),
        )

    def environment_bytes(self, job_id: str) -> bytes:
        """The stored environment file, verbatim."""
        path = self.jobs_dir / job_id / "environment.aas.json"
        if not (self.jobs_dir / job_id).is_dir():
            raise NotFoundError(f"no job {job_id!r}")
        if not path.exists():
            raise NotFoundError(f"job {job_id!r} has no environment")
        return path.read_bytes()

    def list_jobs(self, status: Optional[JobStatus] = None) -> list[JobSummary]:
        summaries = []
        for directory in self.jobs_dir.iterdir():
            if not directory.is_dir() or directory.name.startswith("."):
                continue
            status_path = directory / "status"
            if not status_path.exists():
                continue
            try:
                doc = json.loads(status_path.read_text(encoding="utf-8"))
                summary = JobSummary(
                    job_id=directory.name,
                    status=JobStatus(doc["status"]),
                    config_id=doc.get("configId", ""),
                    created_at=float(doc.get("createdAt", 0.0)),
                )
            except (ValueError, KeyError) as exc:
                raise CorruptRecordError(
                    f"cannot read job summary: {exc}", path=str(status_path)
                ) from exc
            if status is None or summary.status is status:
                summaries.append(summary)
        summaries.sort(key=lambda s: (s.created_at, s.job_id))
        return summaries

    # --- ratings --------------------------------------------------------------

    def append_rating(self, rating: PropertyRating) -> None:
        row = rating_to_row(rating)  # validates
        with open(self._ratings_lock, "w") as lock:
            fcntl.flock(lock, fcntl.LOCK_EX)
            try:
                new_file = not self._ratings_file.exists()
                with open(self._ratings_file, "a", encoding="utf-8", newline="") as fh:
                    writer = csv.writer(fh, lineterminator="\n")
                    if new_file:
                        writer.writerow(RATINGS_CSV_HEADER)
                    writer.writerow(row)
                    fh.flush()
                    os.fsync(fh.fileno())
            finally:
                fcntl.flock(lock, fcntl.LOCK_UN)

    def read_ratings(self) -> list[PropertyRating]:
        if not self._ratings_file.exists():
            return []
        return read_ratings_csv(self._ratings_file.read_text(encoding="utf-8"))

    def has_rating(self, rating: PropertyRating) -> bool:
        """True when an identical rating row (same payload) is already logged."""
        target = rating_to_row(rating)
        if not self._ratings_file.exists():
            return False
        reader = csv.reader(io.StringIO(self._ratings_file.read_text(encoding="utf-8")))
        next(reader, None)
        return any(row == target for row in reader)

    def export_ratings(self, config_id: Optional[str] = None) -> str:
        """CSV text in the metrics schema, optionally filtered by config."""
        ratings = self.read_ratings()
        if config_id is not None:
            ratings = [r for r in ratings if r.config_id == config_id]
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(RATINGS_CSV_HEADER)
        for rating in ratings:
            writer.writerow(rating_to_row(rating))
        return out.getvalue()

    # --- enrichment -------------------------------------------------------------

    def enrichment_id(self, node: SemanticNode) -> str:
        return hashlib.sha256(node.semantic_ref.iri.encode("utf-8")).hexdigest()[:16]

    def queue_enrichment(self, node: SemanticNode) -> str:
        """Queue a generated-concept node for expert approval; idempotent."""
        if node.semantic_ref is None or node.semantic_ref.kind is not RefKind.GENERATED_CONCEPT:
            raise ValidationError("only nodes with a generated concept can be queued")
        enrichment_id = self.enrichment_id(node)
        path = self.enrichment_dir / f"{enrichment_id}.json"
        if path.exists():
            return enrichment_id
        _atomic_write(
            path,
            json.dumps(
                {"id": enrichment_id, "node": node_to_record(node), "approved": False},
                indent=2,
                ensure_ascii=False,
                sort_keys=True,
            )
            + "\n",
        )
        return enrichment_id

    def list_enrichment(self) -> list[dict]:
        items = []
        for path in sorted(self.enrichment_dir.glob("*.json")):
            items.append(json.loads(path.read_text(encoding="utf-8")))
        return items

    def approve_enrichment(self, enrichment_id: str) -> DictionaryEntry:
        """Mark approved and return the dictionary entry to hand to the index."""
        path = self.enrichment_dir / f"{enrichment_id}.json"
        if not path.exists():
            raise NotFoundError(f"no enrichment candidate {enrichment_id!r}")
        doc = json.loads(path.read_text(encoding="utf-8"))
        if doc.get("approved"):
            raise AlreadyApprovedError(f"enrichment {enrichment_id!r} already approved")
        node = node_from_record(doc["node"])
        doc["approved"] = True
        _atomic_write(path, json.dumps(doc, indent=2, ensure_ascii=False, sort_keys=True) + "\n")
        return DictionaryEntry(
            entry_id=node.semantic_ref.iri,
            preferred_name=node.name,
            definition=node.conceptual_definition,
            unit=node.unit,
        )

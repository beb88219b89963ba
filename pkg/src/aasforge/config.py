"""TOML configuration shared by the CLI and the HTTP service.

One file carries all sections; CLI flags override file values and the
AASFORGE_DATA_DIR environment variable overrides ``store.data_dir``.
"""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Optional

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .errors import ValidationError
from .llm_gateway import HttpProvider, ProviderConfig, StubProvider
from .pipeline import JobConfig
from .store import DATA_DIR_ENV

DEFAULTS: dict[str, dict[str, Any]] = {
    "llm": {
        "provider": "stub",
        "endpoint": "",
        "model": "stub-model",
        "embedding_model": "stub-embedder",
        "api_key_env": "",
        "timeout_s": 30.0,
        "max_retries": 2,
        "temperature": 0.0,
        "max_concurrent": 4,
        "embedding_dimension": 64,
        "stub_script": "",
        "stub_seed": 0,
        "stub_delay_ms": 0.0,
    },
    "aas": {"base_iri": "https://aasforge.example/ns"},
    "store": {"data_dir": "./data"},
    "service": {"bind": "127.0.0.1:8420", "workers": 2},
    "pipeline": {"top_k": 5, "rag": False},
}


def load_config(path: Optional[str] = None) -> dict[str, dict[str, Any]]:
    """Defaults merged with the TOML file (if given) and the env override."""
    merged = {section: dict(values) for section, values in DEFAULTS.items()}
    if path:
        with open(path, "rb") as fh:
            try:
                loaded = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ValidationError(f"bad config file {path}: {exc}") from exc
        for section, values in loaded.items():
            if not isinstance(values, dict):
                raise ValidationError(f"config section {section!r} must be a table")
            merged.setdefault(section, {}).update(values)
    env_data_dir = os.environ.get(DATA_DIR_ENV)
    if env_data_dir:
        merged["store"]["data_dir"] = env_data_dir
    return merged


def provider_from_config(config: dict, *, provider_override: Optional[str] = None):
    """Build the configured provider; ``--provider stub`` style override wins."""
    llm = config["llm"]
    kind = provider_override or llm.get("provider", "stub")
    if kind == "stub":
        script: dict[str, Any] = {}
        script_path = llm.get("stub_script") or ""
        if script_path:
            script = json.loads(Path(script_path).read_text(encoding="utf-8"))
        stub = StubProvider.from_script(script)
        if "dimension" not in script:
            stub.dimension = int(llm.get("embedding_dimension", 64))
        if "seed" not in script:
            stub.seed = int(llm.get("stub_seed", 0))
        if "delayMs" not in script:
            stub.delay_ms = float(llm.get("stub_delay_ms", 0.0))
        stub.max_concurrent = int(llm.get("max_concurrent", 4))
        return stub
    if kind == "http":
        if not llm.get("endpoint"):
            raise ValidationError("llm.endpoint required for the http provider")
        return HttpProvider(
            ProviderConfig(
                endpoint_url=llm["endpoint"],
                model_name=llm.get("model", ""),
                embedding_model=llm.get("embedding_model", ""),
                api_key_ref=llm.get("api_key_env", ""),
                timeout_s=float(llm.get("timeout_s", 30.0)),
                max_retries=int(llm.get("max_retries", 2)),
                temperature=float(llm.get("temperature", 0.0)),
                max_concurrent=int(llm.get("max_concurrent", 4)),
            )
        )
    raise ValidationError(f"unknown provider kind {kind!r}")


def job_config_from_config(
    config: dict,
    *,
    rag: Optional[bool] = None,
    model: Optional[str] = None,
    top_k: Optional[int] = None,
) -> JobConfig:
    llm = config["llm"]
    pipeline = config["pipeline"]
    return JobConfig(
        model_name=model or llm.get("model", "stub-model"),
        rag_enabled=bool(pipeline.get("rag", False)) if rag is None else rag,
        top_k=int(pipeline.get("top_k", 5)) if top_k is None else top_k,
        base_iri=config["aas"].get("base_iri", "https://aasforge.example/ns"),
        seed=int(llm.get("stub_seed", 0)),
    )

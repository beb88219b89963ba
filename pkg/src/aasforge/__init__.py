"""aasforge: raw technical text -> standardized AAS instance models, via LLM agents.

The library is organized along the processing path: semantic nodes
(`semantic_node`) are extracted from raw text by the agent pipeline
(`pipeline`), optionally matched against an embedding index over a concept
dictionary (`dictionary_index`), and assembled into an AAS environment
(`aas_model`). Human ratings of the generated output feed the evaluation
metrics (`metrics`). Persistence (`store`), the HTTP service (`service`)
and the CLI (`cli`) wrap the pipeline for interactive and batch use.
"""

from .aas_model import (
    AasEnvironment,
    AssetMeta,
    ConceptDescription,
    Property,
    Submodel,
    build_environment,
    node_to_aas,
    parse_environment,
    sanitize_id_short,
    serialize_environment,
)
from .dictionary_index import (
    DictionaryEntry,
    FingerprintIndex,
    SearchHit,
    cosine_similarity,
    ingest_dictionary,
    load_dictionary,
)
from .llm_gateway import (
    CompletionResult,
    HttpProvider,
    PromptTemplate,
    ProviderConfig,
    StubProvider,
    parse_structured_output,
    render_prompt,
)
from .metrics import (
    MetricsReport,
    PropertyRating,
    ablation_report,
    helpfulness_score,
    inaccuracy_rates,
    is_passed,
    pass_rate,
    welch_t_test,
)
from .pipeline import (
    CandidateNode,
    GenerationJob,
    JobConfig,
    JobStatus,
    PipelineTrace,
    RelevanceJudgment,
    run_job,
)
from .semantic_node import (
    RefKind,
    SemanticId,
    SemanticNode,
    ValueType,
    check_authenticity,
    new_semantic_node,
)
from .store import JobStore

__version__ = "0.1.0"

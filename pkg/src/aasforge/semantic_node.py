"""The atomic semantic unit passed between all pipeline stages.

A semantic node bundles one technical datum with the texts that pin down its
meaning: a name, a conceptual definition, the potential usage of the data
(affordance) and the extracted value, plus optional value type, unit and
source description. The value is always lifted verbatim from the source
text, which is what :func:`check_authenticity` verifies.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Optional

from .errors import ValidationError

_WS = re.compile(r"\s+")
_IRI = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:\S+$")


class ValueType(str, Enum):
    STRING = "String"
    INTEGER = "Integer"
    REAL = "Real"
    BOOLEAN = "Boolean"


class RefKind(str, Enum):
    EXTERNAL_DICTIONARY = "ExternalDictionary"
    GENERATED_CONCEPT = "GeneratedConcept"


@dataclass(frozen=True)
class SemanticId:
    """Reference tying a data element to a concept definition."""

    kind: RefKind
    iri: str

    def __post_init__(self):
        if not _IRI.match(self.iri):
            raise ValidationError(f"not an absolute IRI: {self.iri!r}")


@dataclass(frozen=True)
class SemanticNode:
    name: str
    conceptual_definition: str
    affordance: str
    value: str
    value_type: ValueType = ValueType.STRING
    unit: Optional[str] = None
    source_description: Optional[str] = None
    semantic_ref: Optional[SemanticId] = None


def is_absolute_iri(text: str) -> bool:
    return bool(_IRI.match(text))


def normalize_for_match(text: str) -> str:
    """Canonical form used for authenticity matching: whitespace removed.

    Whitespace carries no meaning for value matching (copy-paste artifacts
    like "24V DC" vs "24 V DC" must compare equal); case is preserved since
    units are case-sensitive.
    """
    return _WS.sub("", text)


def check_authenticity(node: SemanticNode, source_text: str) -> bool:
    """True iff the node's value occurs verbatim (up to whitespace) in the source."""
    if not source_text.strip():
        raise ValueError("source_text must be non-empty")
    return normalize_for_match(node.value) in normalize_for_match(source_text)


def find_value_span(value: str, source_text: str) -> Optional[tuple[int, int]]:
    """Locate ``value`` in ``source_text``, ignoring whitespace differences.

    Returns (start, end) character offsets of the first match, or None.
    """
    squashed = normalize_for_match(value)
    if not squashed:
        return None
    pattern = r"\s*".join(re.escape(ch) for ch in squashed)
    match = re.search(pattern, source_text)
    if match is None:
        return None
    return match.start(), match.end()


def _clean_optional(value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    value = value.strip()
    return value or None


def new_semantic_node(
    name: str,
    definition: str,
    affordance: str,
    value: str,
    *,
    value_type: ValueType | str | None = None,
    unit: Optional[str] = None,
    source_description: Optional[str] = None,
    semantic_ref: Optional[SemanticId] = None,
    source_text: Optional[str] = None,
) -> SemanticNode:
    """Build a validated node; ``value_type`` defaults to String.

    When ``source_text`` is given the value must be found in it (whitespace
    differences tolerated), otherwise construction fails.
    """
    fields = {
        "name": name,
        "conceptual definition": definition,
        "affordance": affordance,
        "value": value,
    }
    cleaned = {}
    for label, raw in fields.items():
        if not isinstance(raw, str) or not raw.strip():
            raise ValidationError(f"{label} empty")
        cleaned[label] = raw.strip()

    if value_type is None:
        vt = ValueType.STRING
    elif isinstance(value_type, ValueType):
        vt = value_type
    else:
        try:
            vt = ValueType(value_type)
        except ValueError:
            raise ValidationError(f"unknown value type: {value_type!r}") from None

    node = SemanticNode(
        name=cleaned["name"],
        conceptual_definition=cleaned["conceptual definition"],
        affordance=cleaned["affordance"],
        value=cleaned["value"],
        value_type=vt,
        unit=_clean_optional(unit),
        source_description=_clean_optional(source_description),
        semantic_ref=semantic_ref,
    )
    if source_text is not None and not check_authenticity(node, source_text):
        raise ValidationError("value not found in source")
    return node


def validate_node(node: SemanticNode) -> None:
    """Re-check every invariant; raises ValidationError on the first violation."""
    for label, text in (
        ("name", node.name),
        ("conceptual definition", node.conceptual_definition),
        ("affordance", node.affordance),
        ("value", node.value),
    ):
        if not text or not text.strip():
            raise ValidationError(f"{label} empty")
    if not isinstance(node.value_type, ValueType):
        raise ValidationError(f"unknown value type: {node.value_type!r}")
    if node.semantic_ref is not None and not isinstance(node.semantic_ref, SemanticId):
        raise ValidationError("semantic_ref is not a SemanticId")


def node_to_record(node: SemanticNode) -> dict[str, Any]:
    """Canonical flat record form (camelCase keys, absent optionals omitted)."""
    record: dict[str, Any] = {
        "name": node.name,
        "conceptualDefinition": node.conceptual_definition,
        "affordance": node.affordance,
        "value": node.value,
        "valueType": node.value_type.value,
    }
    if node.unit is not None:
        record["unit"] = node.unit
    if node.source_description is not None:
        record["sourceDescription"] = node.source_description
    if node.semantic_ref is not None:
        record["semanticId"] = {
            "kind": node.semantic_ref.kind.value,
            "iri": node.semantic_ref.iri,
        }
    return record


def node_from_record(record: dict[str, Any]) -> SemanticNode:
    """Inverse of :func:`node_to_record`; validates on the way in."""
    if not isinstance(record, dict):
        raise ValidationError("node record must be an object")
    semantic_ref = None
    if "semanticId" in record:
        ref = record["semanticId"]
        if not isinstance(ref, dict) or "kind" not in ref or "iri" not in ref:
            raise ValidationError("semanticId must carry kind and iri")
        try:
            kind = RefKind(ref["kind"])
        except ValueError:
            raise ValidationError(f"unknown semanticId kind: {ref['kind']!r}") from None
        semantic_ref = SemanticId(kind=kind, iri=ref["iri"])
    return new_semantic_node(
        record.get("name", ""),
        record.get("conceptualDefinition", ""),
        record.get("affordance", ""),
        record.get("value", ""),
        value_type=record.get("valueType"),
        unit=record.get("unit"),
        source_description=record.get("sourceDescription"),
        semantic_ref=semantic_ref,
    )


def with_semantic_ref(node: SemanticNode, ref: SemanticId) -> SemanticNode:
    return replace(node, semantic_ref=ref)

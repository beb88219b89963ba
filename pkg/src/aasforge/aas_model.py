"""Typed subset of the AAS meta-model and its JSON serialization.

Covers exactly the elements the generation pipeline populates: one shell,
one "TechnicalData" submodel holding properties, and concept descriptions
for locally minted concepts. Serialization is deterministic (stable key and
array order) so that environment files are byte-stable across runs.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from typing import Any, Iterable, Optional

from .errors import DuplicateIdError, ParseError, SanitizeError, ValidationError
from .semantic_node import RefKind, SemanticId, SemanticNode, ValueType, validate_node

ID_SHORT_PATTERN = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")
_FRAGMENT = re.compile(r"[0-9A-Za-z]+")

# AAS DataTypeDefXsd names for the value types the pipeline emits.
_XSD_BY_TYPE = {
    ValueType.STRING: "xs:string",
    ValueType.INTEGER: "xs:integer",
    ValueType.REAL: "xs:double",
    ValueType.BOOLEAN: "xs:boolean",
}
_TYPE_BY_XSD = {v: k for k, v in _XSD_BY_TYPE.items()}

TECHNICAL_DATA_ID_SHORT = "TechnicalData"


@dataclass(frozen=True)
class Property:
    id_short: str
    value: str
    value_type: ValueType
    semantic_id: SemanticId


@dataclass(frozen=True)
class ConceptDescription:
    id: SemanticId
    preferred_name: str
    definition: str
    affordance_note: str
    unit: Optional[str] = None


@dataclass(frozen=True)
class Submodel:
    id_short: str = TECHNICAL_DATA_ID_SHORT
    properties: tuple[Property, ...] = ()


@dataclass(frozen=True)
class AasEnvironment:
    asset_id: str
    shell_id_short: str
    submodels: tuple[Submodel, ...] = ()
    concept_descriptions: tuple[ConceptDescription, ...] = ()


@dataclass(frozen=True)
class AssetMeta:
    asset_id: str
    shell_id_short: str


def sanitize_id_short(name: str) -> str:
    """Turn free text into a legal idShort.

    Splits on non-alphanumerics, uppercases each fragment's first character,
    concatenates, and prefixes "P_" when the result starts with a digit.
    Collisions are the caller's problem (see :func:`build_environment`).
    """
    if not name or not name.strip():
        raise SanitizeError("name is empty")
    fragments = _FRAGMENT.findall(name)
    if not fragments:
        raise SanitizeError(f"no usable characters in {name!r}")
    out = "".join(f[0].upper() + f[1:] for f in fragments)
    if out[0].isdigit():
        out = "P_" + out
    return out


def mint_concept_iri(base_iri: str, name: str, definition: str, unit: Optional[str]) -> str:
    """Deterministic IRI for a newly generated concept definition."""
    digest = hashlib.sha256(
        "\x1f".join([name, definition, unit or ""]).encode("utf-8")
    ).hexdigest()[:16]
    return f"{base_iri.rstrip('/')}/concept/{digest}"


def node_to_aas(node: SemanticNode) -> tuple[Property, Optional[ConceptDescription]]:
    """Map one semantic node to a Property (and, for minted concepts, its description)."""
    validate_node(node)
    if node.semantic_ref is None:
        raise ValidationError("node has no semantic_ref")
    prop = Property(
        id_short=sanitize_id_short(node.name),
        value=node.value,
        value_type=node.value_type,
        semantic_id=node.semantic_ref,
    )
    if node.semantic_ref.kind is RefKind.GENERATED_CONCEPT:
        concept = ConceptDescription(
            id=node.semantic_ref,
            preferred_name=node.name,
            definition=node.conceptual_definition,
            affordance_note=node.affordance,
            unit=node.unit,
        )
        return prop, concept
    return prop, None


def build_environment(
    nodes: Iterable[SemanticNode],
    asset_meta: AssetMeta,
    *,
    allow_suffixing: bool = True,
) -> AasEnvironment:
    """Assemble the environment: properties in node order, one TechnicalData submodel.

    Colliding idShorts get "_2", "_3", ... suffixes unless suffixing is
    disabled, in which case a collision raises DuplicateIdError.
    """
    properties: list[Property] = []
    concepts: dict[str, ConceptDescription] = {}
    taken: set[str] = set()
    for node in nodes:
        prop, concept = node_to_aas(node)
        id_short = prop.id_short
        if id_short in taken:
            if not allow_suffixing:
                raise DuplicateIdError(f"duplicate idShort {id_short!r}")
            n = 2
            while f"{id_short}_{n}" in taken:
                n += 1
            id_short = f"{id_short}_{n}"
            prop = Property(id_short, prop.value, prop.value_type, prop.semantic_id)
        taken.add(id_short)
        properties.append(prop)
        if concept is not None:
            existing = concepts.get(concept.id.iri)
            if existing is not None and existing != concept:
                raise ValidationError(
                    f"conflicting concept descriptions for {concept.id.iri}"
                )
            concepts[concept.id.iri] = concept
    env = AasEnvironment(
        asset_id=asset_meta.asset_id,
        shell_id_short=asset_meta.shell_id_short,
        submodels=(Submodel(TECHNICAL_DATA_ID_SHORT, tuple(properties)),),
        concept_descriptions=tuple(concepts.values()),
    )
    validate_environment(env)
    return env


def validate_environment(env: AasEnvironment) -> None:
    """Check all structural invariants; raises ValidationError."""
    if not env.asset_id or not env.asset_id.strip():
        raise ValidationError("asset_id empty")
    if not env.shell_id_short or not env.shell_id_short.strip():
        raise ValidationError("shell_id_short empty")
    concept_ids = [c.id.iri for c in env.concept_descriptions]
    if len(concept_ids) != len(set(concept_ids)):
        raise ValidationError("duplicate concept description ids")
    for concept in env.concept_descriptions:
        if concept.id.kind is not RefKind.GENERATED_CONCEPT:
            raise ValidationError(
                f"concept description {concept.id.iri} is not a generated concept"
            )
        if not concept.definition or not concept.definition.strip():
            raise ValidationError(f"empty definition in concept {concept.id.iri}")
    by_iri = set(concept_ids)
    for submodel in env.submodels:
        if not ID_SHORT_PATTERN.match(submodel.id_short):
            raise ValidationError(f"illegal submodel idShort {submodel.id_short!r}")
        seen: set[str] = set()
        for prop in submodel.properties:
            if not ID_SHORT_PATTERN.match(prop.id_short):
                raise ValidationError(f"illegal idShort {prop.id_short!r}")
            if prop.id_short in seen:
                raise ValidationError(f"duplicate idShort {prop.id_short!r}")
            seen.add(prop.id_short)
            if (
                prop.semantic_id.kind is RefKind.GENERATED_CONCEPT
                and prop.semantic_id.iri not in by_iri
            ):
                raise ValidationError(
                    f"unresolved generated concept {prop.semantic_id.iri}"
                )


def _reference_doc(ref: SemanticId) -> dict[str, Any]:
    if ref.kind is RefKind.EXTERNAL_DICTIONARY:
        return {
            "type": "ExternalReference",
            "keys": [{"type": "GlobalReference", "value": ref.iri}],
        }
    return {
        "type": "ModelReference",
        "keys": [{"type": "ConceptDescription", "value": ref.iri}],
    }


def _reference_from_doc(doc: Any) -> SemanticId:
    if not isinstance(doc, dict):
        raise ValidationError("semanticId must be an object")
    keys = doc.get("keys")
    if not isinstance(keys, list) or len(keys) != 1 or not isinstance(keys[0], dict):
        raise ValidationError("semanticId must carry exactly one key")
    ref_type = doc.get("type")
    if ref_type == "ExternalReference":
        kind = RefKind.EXTERNAL_DICTIONARY
    elif ref_type == "ModelReference":
        kind = RefKind.GENERATED_CONCEPT
    else:
        raise ValidationError(f"unknown reference type {ref_type!r}")
    value = keys[0].get("value")
    if not isinstance(value, str):
        raise ValidationError("reference key value must be a string")
    return SemanticId(kind=kind, iri=value)


def serialize_environment(env: AasEnvironment) -> str:
    """Stable UTF-8 JSON for the environment; refuses invalid input."""
    validate_environment(env)
    doc: dict[str, Any] = {
        "assetAdministrationShells": [
            {
                "idShort": env.shell_id_short,
                "assetInformation": {"globalAssetId": env.asset_id},
            }
        ],
        "submodels": [
            {
                "idShort": sm.id_short,
                "submodelElements": [
                    _property_doc(p) for p in sm.properties
                ],
            }
            for sm in env.submodels
        ],
        "conceptDescriptions": [
            _concept_doc(c) for c in env.concept_descriptions
        ],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _property_doc(prop: Property) -> dict[str, Any]:
    return {
        "modelType": "Property",
        "idShort": prop.id_short,
        "valueType": _XSD_BY_TYPE[prop.value_type],
        "value": prop.value,
        "semanticId": _reference_doc(prop.semantic_id),
    }


def _concept_doc(concept: ConceptDescription) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "modelType": "ConceptDescription",
        "id": concept.id.iri,
        "preferredName": concept.preferred_name,
        "definition": concept.definition,
        "affordanceNote": concept.affordance_note,
    }
    if concept.unit is not None:
        doc["unit"] = concept.unit
    return doc


def parse_environment(text: str) -> AasEnvironment:
    """Parse and validate an environment file.

    Malformed JSON raises ParseError; structural or invariant problems
    raise ValidationError.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("environment document must be an object")
    shells = doc.get("assetAdministrationShells")
    if not isinstance(shells, list) or len(shells) != 1 or not isinstance(shells[0], dict):
        raise ValidationError("expected exactly one asset administration shell")
    shell = shells[0]
    asset_info = shell.get("assetInformation")
    if not isinstance(asset_info, dict) or not isinstance(asset_info.get("globalAssetId"), str):
        raise ValidationError("shell is missing assetInformation.globalAssetId")
    if not isinstance(shell.get("idShort"), str):
        raise ValidationError("shell is missing idShort")

    submodels = []
    for sm_doc in _expect_list(doc, "submodels"):
        if not isinstance(sm_doc, dict) or not isinstance(sm_doc.get("idShort"), str):
            raise ValidationError("submodel is missing idShort")
        props = []
        for p_doc in _expect_list(sm_doc, "submodelElements"):
            props.append(_property_from_doc(p_doc))
        submodels.append(Submodel(sm_doc["idShort"], tuple(props)))

    concepts = []
    for c_doc in _expect_list(doc, "conceptDescriptions"):
        concepts.append(_concept_from_doc(c_doc))

    env = AasEnvironment(
        asset_id=asset_info["globalAssetId"],
        shell_id_short=shell["idShort"],
        submodels=tuple(submodels),
        concept_descriptions=tuple(concepts),
    )
    validate_environment(env)
    return env


def _expect_list(doc: dict, key: str) -> list:
    value = doc.get(key)
    if not isinstance(value, list):
        raise ValidationError(f"{key} must be an array")
    return value


def _property_from_doc(doc: Any) -> Property:
    if not isinstance(doc, dict):
        raise ValidationError("property must be an object")
    for key in ("idShort", "value", "valueType", "semanticId"):
        if key not in doc:
            raise ValidationError(f"property is missing {key}")
    value_type = _TYPE_BY_XSD.get(doc["valueType"])
    if value_type is None:
        raise ValidationError(f"unknown valueType {doc['valueType']!r}")
    if not isinstance(doc["idShort"], str) or not isinstance(doc["value"], str):
        raise ValidationError("property idShort and value must be strings")
    return Property(
        id_short=doc["idShort"],
        value=doc["value"],
        value_type=value_type,
        semantic_id=_reference_from_doc(doc["semanticId"]),
    )


def _concept_from_doc(doc: Any) -> ConceptDescription:
    if not isinstance(doc, dict):
        raise ValidationError("concept description must be an object")
    for key in ("id", "preferredName", "definition", "affordanceNote"):
        if key not in doc or not isinstance(doc[key], str):
            raise ValidationError(f"concept description is missing {key}")
    unit = doc.get("unit")
    if unit is not None and not isinstance(unit, str):
        raise ValidationError("concept unit must be a string")
    return ConceptDescription(
        id=SemanticId(RefKind.GENERATED_CONCEPT, doc["id"]),
        preferred_name=doc["preferredName"],
        definition=doc["definition"],
        affordance_note=doc["affordanceNote"],
        unit=unit,
    )

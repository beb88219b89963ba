import random
import string

import pytest

from aasforge.errors import ValidationError
from aasforge.semantic_node import (
    RefKind,
    SemanticId,
    ValueType,
    check_authenticity,
    find_value_span,
    new_semantic_node,
    node_from_record,
    node_to_record,
    normalize_for_match,
    validate_node,
)


def make_node(**overrides):
    kwargs = dict(
        name="Operating voltage",
        definition="Nominal supply voltage of the device.",
        affordance="Used to select a matching power supply.",
        value="24 V DC",
    )
    kwargs.update(overrides)
    return new_semantic_node(
        kwargs.pop("name"), kwargs.pop("definition"),
        kwargs.pop("affordance"), kwargs.pop("value"), **kwargs,
    )


def test_value_type_defaults_to_string():
    node = make_node()
    assert node.value_type is ValueType.STRING


def test_empty_name_rejected():
    with pytest.raises(ValidationError, match="name empty"):
        make_node(name="")


@pytest.mark.parametrize("field", ["definition", "affordance", "value"])
def test_other_empty_fields_rejected(field):
    with pytest.raises(ValidationError, match="empty"):
        make_node(**{field: "   "})


def test_value_not_in_source_rejected():
    with pytest.raises(ValidationError, match="value not found in source"):
        make_node(value="48 V", source_text="Operating voltage: 24 V DC")


def test_value_in_source_accepted():
    node = make_node(value="24 V DC", source_text="Operating voltage: 24 V DC")
    assert node.value == "24 V DC"


def test_authenticity_literal_containment():
    node = make_node(value="24 V DC")
    assert check_authenticity(node, "Operating voltage: 24 V DC") is True


def test_authenticity_tolerates_whitespace_differences():
    node = make_node(value="24V DC")
    assert check_authenticity(node, "voltage is 24 V DC here") is True


def test_authenticity_rejects_different_value():
    node = make_node(value="12 V")
    assert check_authenticity(node, "24 V DC") is False


def test_authenticity_is_case_sensitive():
    node = make_node(value="24 v dc")
    assert check_authenticity(node, "24 V DC") is False


def test_authenticity_requires_source():
    with pytest.raises(ValueError):
        check_authenticity(make_node(), "   ")


def test_authenticity_implies_normalized_containment():
    rng = random.Random(11)
    alphabet = string.ascii_letters + string.digits + "  \t"
    for _ in range(200):
        value = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 8)))
        source = "".join(rng.choice(alphabet) for _ in range(rng.randint(5, 40)))
        if not value.strip() or not source.strip():
            continue
        node = make_node(value=value)
        if check_authenticity(node, source):
            assert normalize_for_match(node.value) in normalize_for_match(source)


def test_construct_then_validate_is_idempotent():
    node = make_node(unit="V", source_description="from the datasheet")
    validate_node(node)  # must not raise
    validate_node(node)


def test_record_round_trip():
    ref = SemanticId(RefKind.EXTERNAL_DICTIONARY, "https://dict.example/def/1")
    node = make_node(unit="V", source_description="supply section", semantic_ref=ref,
                     value_type="Real")
    record = node_to_record(node)
    assert record["valueType"] == "Real"
    assert node_from_record(record) == node


def test_record_omits_absent_optionals():
    record = node_to_record(make_node())
    assert "unit" not in record
    assert "sourceDescription" not in record
    assert "semanticId" not in record
    assert record["valueType"] == "String"  # always populated


def test_round_trip_many_random_nodes():
    rng = random.Random(7)
    kinds = [None, RefKind.EXTERNAL_DICTIONARY, RefKind.GENERATED_CONCEPT]
    for i in range(100):
        kind = rng.choice(kinds)
        ref = None
        if kind is not None:
            ref = SemanticId(kind, f"https://example.org/c/{i}")
        node = make_node(
            name=f"Property {i}",
            value=f"{rng.randint(0, 999)} units",
            value_type=rng.choice(list(ValueType)),
            unit=rng.choice([None, "V", "kg", "°C"]),
            source_description=rng.choice([None, f"row {i}"]),
            semantic_ref=ref,
        )
        assert node_from_record(node_to_record(node)) == node


def test_semantic_id_requires_absolute_iri():
    with pytest.raises(ValidationError):
        SemanticId(RefKind.GENERATED_CONCEPT, "not an iri")
    SemanticId(RefKind.GENERATED_CONCEPT, "urn:dict:0173-1%2302-AAO677")  # ok


def test_fields_are_trimmed():
    node = make_node(name="  Weight  ", unit="  g ")
    assert node.name == "Weight"
    assert node.unit == "g"


def test_empty_optional_becomes_absent():
    node = make_node(unit="   ")
    assert node.unit is None


def test_find_value_span_maps_back_to_source():
    source = "Supply: 24  V DC (typ.)"
    span = find_value_span("24V DC", source)
    assert span is not None
    start, end = span
    assert normalize_for_match(source[start:end]) == "24VDC"
    assert find_value_span("99 X", source) is None

import json
import random

import pytest

from aasforge.aas_model import (
    AasEnvironment,
    AssetMeta,
    Property,
    Submodel,
    build_environment,
    mint_concept_iri,
    node_to_aas,
    parse_environment,
    sanitize_id_short,
    serialize_environment,
    validate_environment,
)
from aasforge.errors import DuplicateIdError, ParseError, SanitizeError, ValidationError
from aasforge.semantic_node import RefKind, SemanticId, ValueType, new_semantic_node

META = AssetMeta("https://assets.example/a1", "TestAsset")


def gen_ref(i=0):
    return SemanticId(RefKind.GENERATED_CONCEPT, f"https://c.example/concept/{i:04x}")


def ext_ref(i=0):
    return SemanticId(RefKind.EXTERNAL_DICTIONARY, f"https://dict.example/def/{i:04x}")


def make_node(name="Operating voltage", value="24 V DC", ref=None, **kw):
    return new_semantic_node(
        name, f"Definition of {name}.", f"Usage of {name}.", value,
        semantic_ref=ref or gen_ref(), **kw,
    )


# --- sanitize_id_short -------------------------------------------------------

def test_sanitize_simple_name():
    assert sanitize_id_short("Operating voltage") == "OperatingVoltage"


def test_sanitize_preserves_inner_case():
    assert sanitize_id_short("IP-Rating (IP67)") == "IPRatingIP67"


def test_sanitize_nothing_survives():
    with pytest.raises(SanitizeError):
        sanitize_id_short("###")


def test_sanitize_digit_prefix():
    assert sanitize_id_short("24V supply").startswith("P_")


def test_sanitize_deterministic_and_pattern():
    import re
    pattern = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")
    rng = random.Random(3)
    pool = "abz AZ09 _-()#käß ."
    for _ in range(200):
        name = "".join(rng.choice(pool) for _ in range(rng.randint(1, 12)))
        try:
            out = sanitize_id_short(name)
        except SanitizeError:
            continue
        assert out == sanitize_id_short(name)
        assert pattern.match(out), (name, out)


# --- node_to_aas -------------------------------------------------------------

def test_node_to_aas_generated_concept():
    node = make_node(ref=gen_ref(1), unit="V")
    prop, concept = node_to_aas(node)
    assert prop.id_short == "OperatingVoltage"
    assert prop.value == "24 V DC"
    assert concept is not None
    assert concept.definition == node.conceptual_definition
    assert concept.affordance_note == node.affordance
    assert concept.unit == "V"


def test_node_to_aas_external_reference_has_no_local_concept():
    prop, concept = node_to_aas(make_node(ref=ext_ref(2)))
    assert concept is None
    assert prop.semantic_id.kind is RefKind.EXTERNAL_DICTIONARY


def test_node_to_aas_requires_semantic_ref():
    node = new_semantic_node("Weight", "def", "use", "2 kg")
    with pytest.raises(ValidationError):
        node_to_aas(node)


# --- build_environment --------------------------------------------------------

def test_empty_environment_is_valid():
    env = build_environment([], META)
    validate_environment(env)
    assert env.submodels[0].id_short == "TechnicalData"
    assert env.submodels[0].properties == ()


def test_property_order_follows_node_order():
    nodes = [make_node(name=f"Prop {c}", ref=gen_ref(i)) for i, c in enumerate("ABC")]
    env = build_environment(nodes, META)
    assert [p.id_short for p in env.submodels[0].properties] == ["PropA", "PropB", "PropC"]


def test_collision_gets_numeric_suffix():
    nodes = [make_node(name="Weight", ref=gen_ref(1)),
             make_node(name="weight!", ref=gen_ref(2))]
    env = build_environment(nodes, META)
    assert [p.id_short for p in env.submodels[0].properties] == ["Weight", "Weight_2"]


def test_collision_without_suffixing_raises():
    nodes = [make_node(name="Weight", ref=gen_ref(1)),
             make_node(name="weight!", ref=gen_ref(2))]
    with pytest.raises(DuplicateIdError):
        build_environment(nodes, META, allow_suffixing=False)


def test_shared_dictionary_reference_yields_no_local_concepts():
    shared = ext_ref(9)
    nodes = [make_node(name="A1", ref=shared), make_node(name="B1", ref=shared)]
    env = build_environment(nodes, META)
    assert len(env.submodels[0].properties) == 2
    assert env.concept_descriptions == ()


def test_shared_generated_concept_described_once():
    node = make_node(name="Weight", value="2 kg", ref=gen_ref(5))
    twin = make_node(name="Weight", value="2 kg", ref=gen_ref(5))
    env = build_environment([node, twin], META)
    assert len(env.concept_descriptions) == 1


# --- serialization -------------------------------------------------------------

def _random_env(rng: random.Random) -> AasEnvironment:
    n_props = rng.randint(0, 6)
    nodes = []
    for i in range(n_props):
        if rng.random() < 0.5:
            ref = ext_ref(rng.randint(0, 3))
        else:
            ref = gen_ref(rng.randint(0, 999999))
        nodes.append(
            make_node(
                name=f"Prop {i} {rng.choice('xyz')}",
                value=f"{rng.randint(0, 99)} {rng.choice(['V', 'g', 'mm'])}",
                ref=ref,
                value_type=rng.choice(list(ValueType)),
                unit=rng.choice([None, "V", "°C"]),
            )
        )
    return build_environment(
        nodes, AssetMeta(f"https://assets.example/{rng.randint(0, 99)}", "RandomAsset")
    )


def test_round_trip_field_equality():
    rng = random.Random(42)
    for _ in range(50):
        env = _random_env(rng)
        assert parse_environment(serialize_environment(env)) == env


def test_serialization_is_stable():
    env = _random_env(random.Random(1))
    assert serialize_environment(env) == serialize_environment(env)


def test_empty_environment_matches_golden(fixtures_dir):
    env = build_environment([], AssetMeta("https://aasforge.example/ns/asset/empty", "EmptyAsset"))
    golden = (fixtures_dir / "empty_environment.aas.json").read_bytes()
    assert serialize_environment(env).encode("utf-8") == golden


def test_serializer_refuses_invalid_environment():
    dangling = AasEnvironment(
        asset_id="https://assets.example/a1",
        shell_id_short="X",
        submodels=(Submodel("TechnicalData", (
            Property("P1", "1", ValueType.STRING, gen_ref(1)),
        )),),
        concept_descriptions=(),
    )
    with pytest.raises(ValidationError):
        serialize_environment(dangling)


def test_parse_errors_are_distinct():
    with pytest.raises(ParseError):
        parse_environment('{"assetAdministrationShells": [')
    with pytest.raises(ValidationError):
        parse_environment('{"assetAdministrationShells": []}')


def test_parse_rejects_duplicate_id_shorts():
    env = build_environment([make_node(name="Weight", ref=gen_ref(1))], META)
    doc = json.loads(serialize_environment(env))
    doc["submodels"][0]["submodelElements"].append(
        doc["submodels"][0]["submodelElements"][0]
    )
    with pytest.raises(ValidationError, match="duplicate idShort"):
        parse_environment(json.dumps(doc))


def test_mint_concept_iri_is_deterministic():
    a = mint_concept_iri("https://b.example/ns", "Weight", "Mass of the device.", "g")
    b = mint_concept_iri("https://b.example/ns/", "Weight", "Mass of the device.", "g")
    assert a == b
    assert a.startswith("https://b.example/ns/concept/")
    c = mint_concept_iri("https://b.example/ns", "Weight", "Mass of the device.", None)
    assert c != a

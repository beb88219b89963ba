"""Acceptance criteria, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v`` to get one pass/fail line
per criterion. Each criterion pins its tolerance inline.
"""
import itertools
import json
import math
import operator
import random
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from aasforge.aas_model import (
    AasEnvironment,
    AssetMeta,
    Property,
    Submodel,
    build_environment,
    parse_environment,
    serialize_environment,
)
from aasforge.config import load_config
from aasforge.dictionary_index import DictionaryEntry, FingerprintIndex
from aasforge.errors import ValidationError
from aasforge.llm_gateway import StubProvider
from aasforge.metrics import (
    helpfulness_score,
    inaccuracy_rates,
    is_passed,
    pass_rate,
    read_ratings_csv,
    welch_t_test,
)
from aasforge.pipeline import JobConfig, JobStatus, run_job, validate_trace
from aasforge.semantic_node import (
    RefKind,
    SemanticId,
    ValueType,
    check_authenticity,
    new_semantic_node,
)
from aasforge.service import create_app
from aasforge.store import JobStore, nodes_to_jsonl
from oracle_ratings import (
    oracle_helpfulness,
    oracle_inaccuracy_rates,
    oracle_pass_rate,
    read_rows,
    rows_for_config,
)
from oracle_welch import oracle_welch
from test_metrics import make_rating
from test_service import full_rating, wait_for_done


def report(name: str) -> None:
    print(f"[PASS] {name}")


# --- 1. pass-formula oracle ---------------------------------------------------

def test_pass_formula_oracle_exhaustive():
    """is_passed agrees with the literal conjunction on all 4000 combinations."""
    started = time.monotonic()
    checked = 0
    for flags in itertools.product([False, True], repeat=5):
        for definition in range(1, 6):
            for affordance in range(1, 6):
                for overall in range(1, 6):
                    rating = make_rating(flags, definition, affordance, overall)
                    conjunction = (
                        (not any(flags))
                        and definition == 5
                        and affordance == 5
                        and overall == 5
                    )
                    assert is_passed(rating) is conjunction
                    checked += 1
    elapsed = time.monotonic() - started
    assert checked == 2**5 * 5**3 == 4000
    assert elapsed < 1.0, f"exhaustive sweep took {elapsed:.2f}s"
    report(f"pass-formula oracle: 4000/4000 combinations in {elapsed * 1000:.0f} ms")


# --- 2. metrics fixture vs spreadsheet oracle ------------------------------------

def test_metrics_fixture_against_oracle(fixtures_dir):
    text = (fixtures_dir / "ratings_synthetic.csv").read_text(encoding="utf-8")
    ratings = read_ratings_csv(text)
    rows = read_rows(text)
    assert len(rows) >= 200
    configs = sorted({r.config_id for r in ratings})
    assert len(configs) == 2
    for config_id in configs:
        group = [r for r in ratings if r.config_id == config_id]
        group_rows = rows_for_config(rows, config_id)
        assert abs(pass_rate(group) - oracle_pass_rate(group_rows)) <= 1e-12
        assert abs(helpfulness_score(group) - oracle_helpfulness(group_rows)) <= 1e-12
        lib = inaccuracy_rates(group)
        for element, expected in oracle_inaccuracy_rates(group_rows).items():
            assert abs(lib[element] - expected) <= 1e-12
    report(f"metrics fixture: {len(rows)} ratings, 2 configs, oracle agreement at 1e-12")


# --- 3. Welch's t-test -------------------------------------------------------------

def test_welch_against_independent_oracle():
    rng = random.Random(20240901)
    for _ in range(50):
        n_a = rng.randint(3, 40)
        n_b = rng.randint(3, 40)
        a = [rng.gauss(rng.uniform(-2, 2), rng.uniform(0.5, 3.0)) for _ in range(n_a)]
        b = [rng.gauss(rng.uniform(-2, 2), rng.uniform(0.5, 3.0)) for _ in range(n_b)]
        t, df, p = welch_t_test(a, b)
        ot, odf, op = oracle_welch(a, b)
        assert abs(t - ot) <= 1e-6
        assert abs(df - odf) <= 1e-6
        assert abs(p - op) <= 1e-6

        # swap invariance
        t_swapped, df_swapped, p_swapped = welch_t_test(b, a)
        assert t_swapped == -t
        assert p_swapped == p

    # identical samples
    sample = [1.0, 2.0, 3.0, 4.0]
    t_same, _, p_same = welch_t_test(sample, sample)
    assert t_same == 0.0
    assert abs(p_same - 1.0) <= 1e-12

    # pooled case: equal sizes, equal variances
    rng = random.Random(7)
    for n in (3, 5, 12, 40):
        base = [rng.gauss(0, 1) for _ in range(n)]
        shifted = [x + 2.5 for x in base]  # identical variance by construction
        _, df_pooled, _ = welch_t_test(base, shifted)
        assert abs(df_pooled - (2 * n - 2)) <= 1e-9
    report("welch t-test: 50 random pairs within 1e-6; symmetry and pooled df hold")


# --- 4. fingerprint search exactness -------------------------------------------------

def test_fingerprint_search_exactness():
    rng = np.random.RandomState(1234)
    n_entries, dimension, k, n_queries = 1000, 64, 5, 100
    vectors = {}
    entries = []
    for i in range(n_entries):
        entry = DictionaryEntry(f"https://d.example/e{i:04d}", f"Concept {i}", f"Def {i}.")
        entries.append(entry)
        vectors[f"Concept {i}: Def {i}."] = rng.normal(size=dimension)

    index = FingerprintIndex.build(entries, lambda text: vectors[text])
    normalized = [list(index._matrix[i]) for i in range(n_entries)]

    queries = []
    for q in range(n_queries):
        text = f"query {q}"
        vectors[text] = rng.normal(size=dimension)
        queries.append(text)

    started = time.monotonic()
    results = [index.search(text, k, lambda t: vectors[t]) for text in queries]
    elapsed = time.monotonic() - started
    assert elapsed < 1.0, f"100 searches took {elapsed:.2f}s"

    for text, hits in zip(queries, results):
        query = list(vectors[text])
        qn = math.sqrt(sum(map(operator.mul, query, query)))
        scored = sorted(
            (
                (sum(map(operator.mul, vec, query)) / qn, entry.entry_id)
                for entry, vec in zip(entries, normalized)
            ),
            key=lambda pair: (-pair[0], pair[1]),
        )
        expected = [entry_id for _, entry_id in scored[:k]]
        assert [h.entry.entry_id for h in hits] == expected
    report(f"fingerprint search: 100 queries x top-5 over 1000 entries match brute force"
           f" ({elapsed * 1000:.0f} ms)")


# --- 5. AAS round-trip -----------------------------------------------------------------

def _random_environment(rng: random.Random) -> AasEnvironment:
    nodes = []
    for i in range(rng.randint(0, 8)):
        if rng.random() < 0.45:
            ref = SemanticId(
                RefKind.EXTERNAL_DICTIONARY, f"https://dict.example/def/{rng.randint(0, 5)}"
            )
        else:
            ref = SemanticId(
                RefKind.GENERATED_CONCEPT,
                f"https://c.example/concept/{rng.randint(0, 10**9):09d}",
            )
        nodes.append(
            new_semantic_node(
                f"Prop {i} {rng.choice('abcdef')}",
                f"Definition {rng.randint(0, 999)}.",
                f"Affordance {rng.randint(0, 999)}.",
                f"{rng.randint(0, 500)} {rng.choice(['V', 'g', 'mm', '°C'])}",
                value_type=rng.choice(["String", "Integer", "Real", "Boolean"]),
                unit=rng.choice([None, "V", "g", "°C"]),
                semantic_ref=ref,
            )
        )
    meta = AssetMeta(f"https://assets.example/{rng.randint(0, 10**6)}", "RandomAsset")
    return build_environment(nodes, meta)


def test_aas_round_trip_and_golden(fixtures_dir):
    rng = random.Random(555)
    for _ in range(500):
        env = _random_environment(rng)
        assert parse_environment(serialize_environment(env)) == env

    # byte-stable golden for the empty environment
    empty = build_environment(
        [], AssetMeta("https://aasforge.example/ns/asset/empty", "EmptyAsset")
    )
    golden = (fixtures_dir / "empty_environment.aas.json").read_bytes()
    for _ in range(3):
        assert serialize_environment(empty).encode("utf-8") == golden

    # referential integrity violations are rejected on both paths
    dangling_ref = SemanticId(RefKind.GENERATED_CONCEPT, "https://c.example/concept/missing")
    broken = AasEnvironment(
        asset_id="https://assets.example/x",
        shell_id_short="X",
        submodels=(Submodel("TechnicalData", (
            Property("P1", "1", ValueType.STRING, dangling_ref),
        )),),
    )
    with pytest.raises(ValidationError):
        serialize_environment(broken)
    doc = json.loads(serialize_environment(_random_environment(random.Random(1))))
    doc["conceptDescriptions"] = []
    doc["submodels"][0]["submodelElements"] = [{
        "modelType": "Property", "idShort": "Ghost", "valueType": "xs:string",
        "value": "1",
        "semanticId": {"type": "ModelReference",
                       "keys": [{"type": "ConceptDescription", "value": "https://c.example/concept/ghost"}]},
    }]
    with pytest.raises(ValidationError):
        parse_environment(json.dumps(doc))
    report("aas round-trip: 500 random environments, byte-stable golden, integrity enforced")


# --- 6. end-to-end determinism --------------------------------------------------------

def _run_fixture_job(datasheet_text, stub_script, dictionary_entries, rag: bool):
    provider = StubProvider.from_script(stub_script)
    index = None
    if rag:
        index = FingerprintIndex.build(dictionary_entries, provider.embed)
    config = JobConfig(model_name="stub-model", rag_enabled=rag, top_k=5)
    job = run_job(datasheet_text, config, index, provider)
    assert job.status is JobStatus.DONE
    return job


def test_end_to_end_determinism(datasheet_text, stub_script, dictionary_entries):
    for rag in (False, True):
        artifacts = set()
        for _ in range(10):
            job = _run_fixture_job(datasheet_text, stub_script, dictionary_entries, rag)
            nodes_bytes = nodes_to_jsonl(job.nodes).encode("utf-8")
            env_bytes = serialize_environment(job.environment).encode("utf-8")
            artifacts.add((nodes_bytes, env_bytes))
        assert len(artifacts) == 1, f"rag={rag} produced {len(artifacts)} distinct outputs"

    norag_job = _run_fixture_job(datasheet_text, stub_script, dictionary_entries, False)
    validate_trace(norag_job.trace)
    assert all(r.stage != "retrieval" for r in norag_job.trace.records)

    rag_job = _run_fixture_job(datasheet_text, stub_script, dictionary_entries, True)
    validate_trace(rag_job.trace)
    by_name = {node.name: node for node in rag_job.nodes}
    voltage = by_name["Operating voltage"]
    assert voltage.semantic_ref == SemanticId(
        RefKind.EXTERNAL_DICTIONARY, "https://dict.example/def/0173-voltage"
    )
    # field-by-field mapping into the environment
    prop = {
        p.id_short: p for p in rag_job.environment.submodels[0].properties
    }["OperatingVoltage"]
    assert prop.id_short == "OperatingVoltage"  # property name fills IdShort
    assert prop.value == voltage.value == "24 V DC"  # extracted value fills value
    assert prop.value_type == voltage.value_type
    assert prop.semantic_id == voltage.semantic_ref
    report("end-to-end determinism: 10/10 byte-identical runs per config;"
           " scripted dictionary id attached under RAG")


# --- 7. authenticity guarantee ------------------------------------------------------------

def test_authenticity_guarantee(datasheet_text, stub_script):
    script = json.loads(json.dumps(stub_script))  # deep copy
    hallucinated = {
        "name": "Bus speed",
        "value": "99 X",
        "initialDefinition": "Made up.",
        "contextDescription": "Nowhere in the input.",
    }
    for rule in script["rules"]:
        if rule["match"][0].startswith("Input text:"):
            items = json.loads(rule["response"])
            items.insert(2, hallucinated)
            rule["response"] = json.dumps(items, ensure_ascii=False)
    provider = StubProvider.from_script(script)
    job = run_job(datasheet_text, JobConfig(model_name="stub-model"), None, provider)
    assert job.status is JobStatus.DONE
    assert all(node.name != "Bus speed" for node in job.nodes)
    drops = [r for r in job.trace.records if r.stage == "drop"]
    assert len(drops) == 1
    assert drops[0].candidate == "Bus speed"
    assert drops[0].detail["value"] == "99 X"
    for node in job.nodes:
        assert check_authenticity(node, datasheet_text)
    report("authenticity: hallucinated candidate dropped and logged; all nodes authentic")


# --- 8. service contract ----------------------------------------------------------------------

def test_service_contract_full_flow(tmp_path, datasheet_text, stub_script):
    config = load_config(None)
    store = JobStore(tmp_path / "data")
    provider = StubProvider.from_script(stub_script)
    app = create_app(config, store, provider, None)
    with TestClient(app) as client:
        # submit
        submitted = client.post("/api/jobs", json={"inputText": datasheet_text})
        assert submitted.status_code == 202
        job_id = submitted.json()["jobId"]
        # poll
        body = wait_for_done(client, job_id)
        assert body["status"] == "Done"
        assert len(body["nodes"]) == 6
        # download: bytes identical to the stored file
        download = client.get(f"/api/jobs/{job_id}/aas")
        assert download.status_code == 200
        assert download.content == store.environment_bytes(job_id)
        # rate
        sample_id = body["sampleIds"][0]
        rated = client.post(f"/api/jobs/{job_id}/ratings", json=full_rating(sample_id))
        assert rated.status_code == 201
        # metrics reflect the rating
        metrics = client.get("/api/metrics").json()
        assert metrics["configs"][0]["sampleCount"] == 1
        assert metrics["configs"][0]["passRate"] == 1.0
        # trace view exists for the finished job
        trace = client.get(f"/api/jobs/{job_id}/trace")
        assert trace.status_code == 200
        assert any(r["stage"] == "extraction" for r in trace.json()["records"])
    report("service contract: submit -> poll -> download -> rate -> metrics flow passes")

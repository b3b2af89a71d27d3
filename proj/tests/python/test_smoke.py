import json
import os
from pathlib import Path

import pytest

import regionqa

FIXTURES = Path(os.environ.get("REGIONQA_FIXTURES", Path(__file__).resolve().parents[2] / "data" / "fixtures"))
NGLY1 = FIXTURES / "ngly1"


def ngly1_query():
    q = json.loads((NGLY1 / "question.json").read_text())
    options = " ".join(f"({o['label']}) {o['text']}" for o in q["options"])
    return q, f"{q['question']}\nOptions: {options}"


def ngly1_config():
    return {
        "graph": str(NGLY1 / "graph.tsv"),
        "aliases": str(FIXTURES / "aliases.json"),
        "provider": {"kind": "mock", "transcript": str(NGLY1 / "transcript.json")},
    }


def test_scalar_helpers():
    assert regionqa.fuzzy_ratio("aceteminophen", "acetaminophen") == pytest.approx(92.31, abs=0.01)
    assert regionqa.mmr_score(0.5, 1.2, 0.5) == pytest.approx(0.27)
    assert regionqa.mmr_score(1.0, 1.0, 0.0, mmr=False) == pytest.approx(1.0)
    assert regionqa.relation_weight("Interacts_with", "GENE_PROTEIN") == 1.5
    assert [regionqa.dispatch_mode(n) for n in (0, 1, 9, 10)] == ["LLM_GUESS", "HYBRID", "HYBRID", "KG_STRICT"]
    assert regionqa.map_option("The answer is (C)", [("A", "x"), ("C", "y")]) == "C"
    assert regionqa.map_option("nothing", [("A", "x")]) is None


def test_ask_ngly1_is_deterministic():
    q, query = ngly1_query()
    first = regionqa.ask(query, ngly1_config())
    second = regionqa.ask(query, ngly1_config())
    assert first == second
    options = [(o["label"], o["text"]) for o in q["options"]]
    assert regionqa.map_option(first["answer"], options) == q["answer"]
    assert [e["stage"] for e in first["trace"]][0] == "classify_domain"


def test_region_inspection():
    _, query = ngly1_query()
    plan = regionqa.region(query, ngly1_config())
    assert plan["hops"][0]["mode"] == "KG_STRICT"


def test_evaluate_synthetic_suite():
    syn = FIXTURES / "synthetic"
    config = {
        "graph": "graph.tsv",
        "aliases": str(FIXTURES / "aliases.json"),
        "provider": {"transcript": "transcript.json"},
    }
    report = regionqa.evaluate("mcq.jsonl", config, base_dir=syn)
    assert report["n"] == 20
    assert report["accuracy"] == 100.0


def test_errors_surface_as_exceptions():
    with pytest.raises(regionqa.RegionQAError):
        regionqa.ask("q", {"graph": "/nonexistent.tsv"})
    with pytest.raises(regionqa.RegionQAError):
        regionqa.relation_weight("treats", "ASTROLOGY")

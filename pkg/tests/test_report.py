import csv
import io
import json

import jsonschema
import pytest
from referencing import Registry, Resource

from nexcv.classifier import BaselineClassifier
from nexcv.evaluation import (
    ConfusionMatrix,
    EvaluationReport,
    NexCvConfig,
    PairExample,
    RetryRecord,
    compare,
    pair_ranking,
    run_nexcv,
)
from nexcv.report import (
    ReportDocument,
    emit_csv,
    load_schema,
    render_json,
    render_markdown,
    strip_volatile,
)

from helpers import AbstainStub, make_dataset, plant_confusion


def validator(kind):
    schemas = [load_schema("evaluation"), load_schema("comparison")]
    registry = Registry().with_resources((s["$id"], Resource.from_contents(s)) for s in schemas)
    schema = load_schema(kind)
    jsonschema.Draft202012Validator.check_schema(schema)
    return jsonschema.Draft202012Validator(schema, registry=registry)


def record(i, acc, careful=None):
    return RetryRecord(i, i, acc, acc, acc, careful, 40, 10, 0)


def hand_report(retries=1, careful=None, confusion=None):
    m = ConfusionMatrix(confusion or {("A", "A"): 10})
    pairs = pair_ranking(m)
    examples = [PairExample(pairs[0][0], "what | is\nthis", "A", "B", 0.75)] if pairs else []
    return EvaluationReport(NexCvConfig(retries=retries), "hand", [record(i, 0.9, careful) for i in range(retries)],
                            m, pairs, examples)


@pytest.fixture(scope="module")
def noisy_report():
    d = plant_confusion(make_dataset({"A": 30, "B": 30, "C": 20, "D": 4, "E": 3}), "A", "B", 0.3, seed=2)
    return run_nexcv(d, NexCvConfig.proportional(0.15, retries=10, seed=4), BaselineClassifier)


@pytest.fixture(scope="module")
def comparison():
    d = make_dataset({"A": 15, "B": 15, "C": 4, "D": 3})
    return compare(d, NexCvConfig(retries=2), [("baseline", BaselineClassifier), ("abstain", AbstainStub)])


def test_minimal_report_valid():
    doc = json.loads(render_json(hand_report()))
    validator("evaluation").validate(doc)
    assert len(doc["retries"]) == 1
    assert doc["schema_version"] == "1.0" and doc["kind"] == "evaluation"


def test_undefined_carefulness_is_null():
    doc = json.loads(render_json(hand_report(careful=None)))
    assert doc["retries"][0]["carefulness"] is None
    assert doc["aggregate"]["carefulness"] == {"mean": None, "std": None, "n": 0}
    assert "carefulness" in render_json(hand_report(careful=0.0))
    assert json.loads(render_json(hand_report(careful=0.0)))["retries"][0]["carefulness"] == 0.0


def test_full_report_validates(noisy_report):
    doc = json.loads(render_json(noisy_report))
    validator("evaluation").validate(doc)
    assert len(doc["retries"]) == 10


def test_schema_rejects_bad_documents(noisy_report):
    doc = json.loads(render_json(noisy_report))
    v = validator("evaluation")
    bad = json.loads(json.dumps(doc))
    bad["retries"][0]["accuracy"] = 1.5
    assert not v.is_valid(bad)
    bad = json.loads(json.dumps(doc))
    bad["config"]["mode"] = {"kind": "cutoff", "P": 0.1}
    assert not v.is_valid(bad)


def test_comparison_validates(comparison):
    validator("comparison").validate(json.loads(render_json(comparison)))


def test_numbers_rounded_to_six_decimals():
    r = hand_report()
    r.retries[0] = RetryRecord(0, 0, 1 / 3, 2 / 3, 0.1234564999, None, 1, 1, 0)
    doc = json.loads(render_json(r))
    assert doc["retries"][0]["accuracy"] == 0.333333
    assert doc["retries"][0]["macro_f1"] == 0.666667


def test_json_round_trip_byte_identical(noisy_report, comparison):
    for r in (noisy_report, comparison):
        text = render_json(r, produced_at="2020-01-01T00:00:00+00:00")
        again = ReportDocument.from_json(text).to_json()
        assert again == text


def test_key_order_deterministic(noisy_report):
    a = render_json(noisy_report, produced_at="x")
    b = render_json(noisy_report, produced_at="x")
    assert a == b
    assert list(json.loads(a))[:4] == ["schema_version", "kind", "produced_at", "dataset_name"]


def test_strip_volatile():
    doc = {"produced_at": "now", "a": [{"fit_ms": 1, "x": 2, "predict_ms": 3}], "b": {"fit_ms": 0}}
    assert strip_volatile(doc) == {"a": [{"x": 2}], "b": {}}


def test_csv_retry_rows(noisy_report):
    rows = list(csv.reader(io.StringIO(emit_csv(noisy_report, "retries"))))
    assert len(rows) == 11
    assert rows[0][:3] == ["retry", "seed", "accuracy"]


def test_csv_confusion_rows():
    r = hand_report(confusion={("A", "A"): 5, ("A", "B"): 2, ("B", "A"): 1})
    rows = list(csv.reader(io.StringIO(emit_csv(r, "confusion"))))
    assert rows == [["gold", "predicted", "count"], ["A", "A", "5"], ["A", "B", "2"], ["B", "A", "1"]]


def test_csv_pairs_rerank_identical(noisy_report):
    rows = list(csv.DictReader(io.StringIO(emit_csv(noisy_report, "pairs"))))
    m = ConfusionMatrix({(r["label_a"], r["label_b"]): int(r["score"]) for r in rows})
    assert pair_ranking(m) == noisy_report.pairs
    assert rows[0]["label_a"] == "A" and rows[0]["label_b"] == "B"


def test_csv_unknown_kind():
    with pytest.raises(ValueError, match="unknown CSV kind"):
        emit_csv(hand_report(), "bogus")
    with pytest.raises(ValueError):
        emit_csv(hand_report(), "ranges")


def test_comparison_csv(comparison):
    ranges = list(csv.reader(io.StringIO(emit_csv(comparison, "ranges"))))
    assert [r[0] for r in ranges[1:]] == ["baseline", "abstain"]
    retries = list(csv.reader(io.StringIO(emit_csv(comparison, "retries"))))
    assert len(retries) == 1 + 2 * 3 * 2


def fmt(x):
    return f"{x:.6f}".rstrip("0").rstrip(".")


def test_cross_format_consistency(noisy_report):
    doc = json.loads(render_json(noisy_report))
    md = render_markdown(noisy_report)
    retries = list(csv.DictReader(io.StringIO(emit_csv(noisy_report, "retries"))))
    for rec, row in zip(doc["retries"], retries):
        for metric in ("accuracy", "macro_f1", "micro_f1", "carefulness"):
            csv_value = float(row[metric]) if row[metric] else None
            assert csv_value == rec[metric]
        assert f"| {rec['retry']} | {fmt(rec['accuracy'])} | {fmt(rec['macro_f1'])} |" in md
    pairs = list(csv.DictReader(io.StringIO(emit_csv(noisy_report, "pairs"))))
    assert [(p["a"], p["b"], p["score"]) for p in doc["pairs"]] == \
        [(p["label_a"], p["label_b"], int(p["score"])) for p in pairs]
    for name, agg in doc["aggregate"].items():
        if agg["mean"] is not None:
            assert f"| {name} | {fmt(agg['mean'])} |" in md


def test_markdown_no_confusions():
    md = render_markdown(hand_report())
    assert "No confusions observed." in md
    assert "## Headline metrics" in md


def test_markdown_pairs_in_ranking_order():
    r = hand_report(confusion={("A", "B"): 5, ("B", "A"): 3, ("A", "C"): 1})
    md = render_markdown(r)
    assert md.index("1. `A` / `B`: 8 confusions") < md.index("2. `A` / `C`: 1 confusions")
    # Example text is escaped for a single markdown line.
    assert 'what \\| is this' in md


def test_markdown_top_limits_pairs():
    r = hand_report(confusion={("A", "B"): 5, ("A", "C"): 1, ("C", "D"): 1})
    md = render_markdown(r, top=1)
    assert "1. `A` / `B`" in md and "2. " not in md.split("## Retries")[0]


def test_markdown_comparison_rows(comparison):
    md = render_markdown(comparison)
    table = md.split("## Accuracy range across settings")[1].split("##")[0]
    assert sum(line.startswith("| baseline ") or line.startswith("| abstain ") for line in table.splitlines()) == 2
    assert md.count("| baseline | K=") == 3

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nexcv.dataset import (
    OUT_OF_SCOPE,
    Dataset,
    DatasetError,
    LabeledExample,
    class_stats,
    dump_dataset,
    generate_synthetic,
    load_dataset,
    save_dataset,
    validate_dataset,
)
from nexcv.classifier import tokenize

from helpers import make_dataset


def write(tmp_path, name, content):
    p = tmp_path / name
    p.write_text(content, encoding="utf-8")
    return p


def test_load_csv_two_rows(tmp_path):
    p = write(tmp_path, "d.csv", "text,label\nhow do I apply,apply\nwhat salary,salary\n")
    d = load_dataset(p)
    assert [(e.text, e.label) for e in d] == [("how do I apply", "apply"), ("what salary", "salary")]
    assert d.labels == ["apply", "salary"]
    assert d.name == "d"


def test_load_csv_quoting_roundtrip(tmp_path):
    p = write(tmp_path, "d.csv", 'text,label\n"hello, ""world""\nsecond line",greet\nplain,other\n')
    d = load_dataset(p)
    assert d.examples[0].text == 'hello, "world"\nsecond line'


def test_jsonl_missing_label_names_line(tmp_path):
    p = write(tmp_path, "d.jsonl", '{"text": "a", "label": "x"}\n{"text": "b"}\n')
    with pytest.raises(DatasetError, match="line 2.*label"):
        load_dataset(p)


def test_jsonl_unknown_keys_ignored(tmp_path):
    p = write(tmp_path, "d.jsonl", '{"text": "a", "label": "x", "id": 4}\n\n{"text": "b", "label": "y"}\n')
    assert len(load_dataset(p)) == 2


@pytest.mark.parametrize(
    "name,content,match",
    [
        ("e.csv", "", "empty"),
        ("e.jsonl", "\n  \n", "empty"),
        ("h.csv", "sentence,intent\na,b\n", "line 1.*header"),
        ("f.csv", "text,label\na,b,c\n", "line 2.*2 fields"),
        ("t.csv", "text,label\n   ,b\n", "line 2.*non-empty"),
        ("j.jsonl", '{"text": "a", "label": "x"}\nnot json\n', "line 2.*invalid JSON"),
        ("n.jsonl", '{"text": 3, "label": "x"}\n', "line 1.*string"),
        ("r.csv", f"text,label\nhello,{OUT_OF_SCOPE}\n", "reserved"),
        ("l.jsonl", '{"text": "a", "label": "x\\ny"}\n', "line break"),
    ],
)
def test_load_errors(tmp_path, name, content, match):
    with pytest.raises(DatasetError, match=match):
        load_dataset(write(tmp_path, name, content))


def test_invalid_utf8(tmp_path):
    p = tmp_path / "b.csv"
    p.write_bytes(b"text,label\n\xff\xfe,a\n")
    with pytest.raises(DatasetError, match="UTF-8"):
        load_dataset(p)


def test_duplicates_are_retained(tmp_path):
    p = write(tmp_path, "d.csv", "text,label\nhi,a\nhi,a\n")
    assert len(load_dataset(p)) == 2


def test_thousand_rows_fifty_labels(tmp_path):
    # Counted while generating the fixture.
    rows, expected = [], {}
    for i in range(1000):
        label = f"L{i % 50:02d}"
        expected[label] = expected.get(label, 0) + 1
        rows.append(f"text number {i},{label}")
    p = write(tmp_path, "big.csv", "text,label\n" + "\n".join(rows) + "\n")
    stats = class_stats(load_dataset(p))
    assert stats.total == 1000
    assert len(stats.labels) == 50
    assert stats.counts == expected


def test_validate_clean():
    assert validate_dataset(make_dataset({"A": 5, "B": 5})) == []


def test_validate_single_label():
    issues = validate_dataset(make_dataset({"A": 5}))
    assert [i.kind for i in issues] == ["too_few_labels"]
    assert "fewer than 2 labels" in str(issues[0])


def test_validate_singleton_and_cross_label_duplicate():
    d = Dataset.from_pairs([("same text", "A"), ("other", "A"), ("same text", "B"), ("x", "C"), ("y", "C")])
    issues = validate_dataset(d)
    dup = [i for i in issues if i.kind == "cross_label_duplicate"]
    assert len(dup) == 1
    assert dup[0].text == "same text" and dup[0].labels == ("A", "B")
    assert [i.labels for i in issues if i.kind == "singleton_class"] == [("B",)]


@pytest.mark.parametrize(
    "counts,order",
    [({"A": 10, "B": 3, "C": 2}, ("C", "B", "A")), ({"A": 6, "B": 6}, ("A", "B")), ({}, ())],
)
def test_class_stats_order(counts, order):
    stats = class_stats(make_dataset(counts))
    assert stats.labels == order
    assert stats.total == sum(counts.values())


@given(st.lists(st.sampled_from("abcdef"), min_size=1, max_size=40), st.randoms())
def test_class_stats_permutation_invariant(labels, rnd):
    examples = [LabeledExample(f"t{i}", lab) for i, lab in enumerate(labels)]
    shuffled = list(examples)
    rnd.shuffle(shuffled)
    assert class_stats(examples).labels == class_stats(shuffled).labels
    assert sum(class_stats(examples).counts.values()) == len(labels)


texts = st.text(min_size=1, max_size=30).filter(lambda s: s.strip() and "\x00" not in s)
labels = st.text(alphabet=st.characters(blacklist_categories=("Cc", "Cs", "Zl", "Zp")), min_size=1, max_size=8).filter(
    lambda s: s != OUT_OF_SCOPE and "\x85" not in s
)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(texts, labels), min_size=1, max_size=15), st.sampled_from(["csv", "jsonl"]))
def test_roundtrip(tmp_path_factory, pairs, fmt):
    try:
        d = Dataset.from_pairs(pairs, name="rt")
    except DatasetError:
        return
    p = tmp_path_factory.mktemp("rt") / f"rt.{fmt}"
    save_dataset(d, p)
    assert load_dataset(p, name="rt") == d


def test_synthetic_counts_and_labels():
    d = generate_synthetic(5, 100, 20, (5, 10), 20, 0.0, seed=7)
    stats = class_stats(d)
    small = [stats[lab] for lab in stats.labels if lab.startswith("small")]
    assert len(small) == 20 and all(5 <= n <= 10 for n in small)
    assert stats.total == 500 + sum(small)
    assert len(stats.labels) == 25


def test_synthetic_disjoint_vocabularies():
    d = generate_synthetic(3, 30, 6, (5, 10), 8, 0.0, seed=1)
    owner: dict[str, str] = {}
    for ex in d:
        for tok in tokenize(ex.text):
            assert owner.setdefault(tok, ex.label) == ex.label


def test_synthetic_overlap_shares_tokens_with_parent():
    d = generate_synthetic(2, 60, 2, (40, 40), 10, 0.5, seed=1)
    vocab: dict[str, set] = {}
    for ex in d:
        vocab.setdefault(ex.label, set()).update(tokenize(ex.text))
    assert vocab["large_00"] & vocab["large_01"]
    assert vocab["small_00"] & vocab["large_00"]
    assert vocab["small_01"] & vocab["large_01"]
    assert not vocab["small_00"] & vocab["small_01"]


def test_synthetic_deterministic():
    a = dump_dataset(generate_synthetic(seed=3), "csv")
    b = dump_dataset(generate_synthetic(seed=3), "csv")
    assert a == b
    assert a != dump_dataset(generate_synthetic(seed=4), "csv")


@pytest.mark.parametrize(
    "kw",
    [dict(vocab_per_class=0), dict(n_large=0), dict(large_size=0), dict(small_size_range=(0, 3)),
     dict(small_size_range=(6, 5)), dict(overlap_fraction=1.5)],
)
def test_synthetic_degenerate(kw):
    with pytest.raises(DatasetError):
        generate_synthetic(**kw)


def test_example_invariants():
    with pytest.raises(DatasetError):
        LabeledExample("  ", "a")
    with pytest.raises(DatasetError):
        LabeledExample("x", "")
    with pytest.raises(DatasetError):
        LabeledExample("x", "a\rb")


def test_jsonl_dump_is_one_object_per_line():
    d = Dataset.from_pairs([("a b", "x"), ("c", "y")])
    lines = dump_dataset(d, "jsonl").split("\n")
    assert [json.loads(x)["label"] for x in lines if x] == ["x", "y"]

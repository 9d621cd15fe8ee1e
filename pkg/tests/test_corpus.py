import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from augmenta.corpus import (
    Dataset,
    DatasetError,
    LabeledExample,
    LabelMapping,
    LabelValidationError,
    UnmappedLabelError,
    load_dataset,
    load_label_mapping,
    load_texts,
    map_labels,
    write_dataset,
)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_load_tsv_rows(tmp_path):
    p = write(tmp_path, "d.tsv", "text\tlabel\nw1 w2\t1\nw3\t0\n")
    ds = load_dataset(p)
    assert len(ds) == 2
    assert ds.labels == [1, 0]
    assert ds.texts == ["w1 w2", "w3"]
    assert [ex.id for ex in ds] == ["0", "1"]
    assert ds.domain == "d"


def test_load_header_only(tmp_path):
    p = write(tmp_path, "d.tsv", "text\tlabel\n")
    assert len(load_dataset(p)) == 0


def test_label_out_of_range_names_line(tmp_path):
    p = write(tmp_path, "d.tsv", "text\tlabel\na\t1\nb\t5\n")
    with pytest.raises(LabelValidationError) as err:
        load_dataset(p)
    assert err.value.line == 3
    assert ":3" in str(err.value)


@pytest.mark.parametrize(
    "body, line",
    [
        ("text\tlabel\nonly-one-field\n", 2),
        ("text\tlabel\na\t1\nb\t1\textra\n", 3),
    ],
)
def test_malformed_row(tmp_path, body, line):
    p = write(tmp_path, "d.tsv", body)
    with pytest.raises(DatasetError) as err:
        load_dataset(p)
    assert err.value.line == line


def test_missing_header(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(write(tmp_path, "d.tsv", "a\t1\n"))


def test_load_jsonl(tmp_path):
    p = write(
        tmp_path,
        "d.jsonl",
        '{"text": "अ", "label": 2}\n\n{"text": "ब", "label": 0, "source": "paraphrase", "params": {"seed": "1"}}\n',
    )
    ds = load_dataset(p)
    assert ds.labels == [2, 0]
    assert ds.examples[1].source == "paraphrase"
    assert ds.examples[1].params == {"seed": "1"}


def test_jsonl_bad_json_line(tmp_path):
    p = write(tmp_path, "d.jsonl", '{"text": "a", "label": 1}\n{oops\n')
    with pytest.raises(DatasetError) as err:
        load_dataset(p)
    assert err.value.line == 2


def test_jsonl_label_validation(tmp_path):
    p = write(tmp_path, "d.jsonl", '{"text": "a", "label": 3}\n')
    with pytest.raises(LabelValidationError):
        load_dataset(p)


def test_round_trip_three(tmp_path):
    ds = Dataset.from_pairs([("एक दोन", 0), ("तीन", 1), ("चार पाच सहा", 2)])
    for fmt in ("tsv", "jsonl"):
        p = tmp_path / f"out.{fmt}"
        write_dataset(ds, p)
        back = load_dataset(p)
        assert [(e.text, e.label) for e in back] == [(e.text, e.label) for e in ds]


def test_tsv_rejects_tab_in_text(tmp_path):
    ds = Dataset.from_pairs([("a\tb", 1)])
    with pytest.raises(ValueError, match="jsonl"):
        write_dataset(ds, tmp_path / "x.tsv")
    # JSONL keeps the tab verbatim
    write_dataset(ds, tmp_path / "x.jsonl")
    assert load_dataset(tmp_path / "x.jsonl").texts == ["a\tb"]


def test_empty_dataset_writes_header(tmp_path):
    write_dataset(Dataset([]), tmp_path / "e.tsv")
    assert (tmp_path / "e.tsv").read_text(encoding="utf-8") == "text\tlabel\n"


def test_source_column_written_for_augmented(tmp_path):
    ds = Dataset([LabeledExample("0", "a", 1), LabeledExample("0/p", "a Z", 1, "paraphrase")])
    write_dataset(ds, tmp_path / "a.tsv")
    assert (tmp_path / "a.tsv").read_text(encoding="utf-8") == "text\tlabel\tsource\na\t1\toriginal\na Z\t1\tparaphrase\n"


def test_write_error_has_path(tmp_path):
    target = tmp_path / "missing-dir" / "x.tsv"
    with pytest.raises(DatasetError, match="missing-dir"):
        write_dataset(Dataset([]), target)


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        Dataset([LabeledExample("a", "x", 0), LabeledExample("a", "y", 1)])


@pytest.mark.parametrize(
    "raw, table, labels",
    [
        ([("t1", "joy")], {"joy": 1}, [1]),
        ([("t1", "anger"), ("t2", "neutral")], {"anger": 0, "neutral": 2}, [0, 2]),
    ],
)
def test_map_labels(raw, table, labels):
    ds = map_labels(raw, LabelMapping(table))
    assert ds.labels == labels
    assert ds.texts == [t for t, _ in raw]


def test_map_labels_lists_all_missing():
    with pytest.raises(UnmappedLabelError) as err:
        map_labels([("t1", "grief"), ("t2", "joy"), ("t3", "awe")], LabelMapping({"joy": 1}))
    assert err.value.missing == ["awe", "grief"]
    assert "grief" in str(err.value)


def test_default_goemotions_mapping_is_total():
    mapping = load_label_mapping()
    assert len(mapping.table) == 28
    assert mapping["joy"] == 1 and mapping["grief"] == 0 and mapping["neutral"] == 2
    assert set(mapping.table.values()) == {0, 1, 2}


def test_custom_mapping_file(tmp_path):
    p = write(tmp_path, "m.tsv", "fine_label\tsentiment_code\njoy\t1\nawe\t2\n")
    assert load_label_mapping(p).table == {"joy": 1, "awe": 2}
    bad = write(tmp_path, "bad.tsv", "joy\t7\n")
    with pytest.raises(LabelValidationError):
        load_label_mapping(bad)


def test_load_texts_plain(tmp_path):
    p = write(tmp_path, "s.txt", "एक\n\nदोन तीन\n")
    assert load_texts(p) == ["एक", "दोन तीन"]


# texts safe for TSV: no tab / newline / carriage return
tsv_text = st.text(
    alphabet=st.characters(blacklist_characters="\t\n\r", blacklist_categories=("Cs",)), min_size=0, max_size=30
)
sources = st.sampled_from(["original", "paraphrase", "random-mask-par", "gpt-completion"])


@given(st.lists(st.tuples(tsv_text, st.sampled_from([0, 1, 2]), sources), max_size=20), st.sampled_from(["tsv", "jsonl"]))
def test_round_trip_property(tmp_path_factory, rows, fmt):
    ds = Dataset([LabeledExample(str(i), t, l, s) for i, (t, l, s) in enumerate(rows)])
    p = tmp_path_factory.mktemp("rt") / f"d.{fmt}"
    write_dataset(ds, p)
    back = load_dataset(p)
    assert [(e.text, e.label, e.source) for e in back] == rows
    assert all(e.label in (0, 1, 2) for e in back)


def test_jsonl_is_utf8_not_escaped(tmp_path):
    write_dataset(Dataset.from_pairs([("मराठी", 1)]), tmp_path / "d.jsonl")
    line = (tmp_path / "d.jsonl").read_text(encoding="utf-8").strip()
    assert "मराठी" in line
    assert json.loads(line)["label"] == 1

"""Data model, dataset file I/O and fine-grained label mapping."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

NEGATIVE, POSITIVE, NEUTRAL = 0, 1, 2
LABELS = (NEGATIVE, POSITIVE, NEUTRAL)
LABEL_NAMES = {NEGATIVE: "neg", POSITIVE: "pos", NEUTRAL: "neu"}

ORIGINAL = "original"
BACK_TRANSLATION = "back-translation"
PARAPHRASE = "paraphrase"
RANDOM_MASK_SEQ = "random-mask-seq"
RANDOM_MASK_PAR = "random-mask-par"
NER_MASK_SEQ = "ner-mask-seq"
NER_MASK_PAR = "ner-mask-par"
BERT_PSEUDO = "bert-pseudo"
GPT_LABEL = "gpt-label"
GPT_COMPLETION = "gpt-completion"

SOURCE_TAGS = frozenset(
    {
        ORIGINAL,
        BACK_TRANSLATION,
        PARAPHRASE,
        RANDOM_MASK_SEQ,
        RANDOM_MASK_PAR,
        NER_MASK_SEQ,
        NER_MASK_PAR,
        BERT_PSEUDO,
        GPT_LABEL,
        GPT_COMPLETION,
    }
)

FORMATS = ("tsv", "jsonl")


class DatasetError(ValueError):
    """Raised for unreadable or malformed dataset files."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        self.path = None if path is None else str(path)
        self.line = line
        where = ""
        if self.path is not None:
            where = self.path
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class LabelValidationError(DatasetError):
    """A label outside {0, 1, 2}."""


class UnmappedLabelError(ValueError):
    def __init__(self, missing: Iterable[str]):
        self.missing = sorted(set(missing))
        super().__init__("unmapped fine-grained labels: " + ", ".join(self.missing))


def validate_label(value) -> int:
    """Coerce ``value`` to a sentiment code, raising ``ValueError`` if it is not one."""
    if isinstance(value, bool):
        raise ValueError(f"invalid sentiment label {value!r}")
    if isinstance(value, str):
        s = value.strip()
        if not s.lstrip("-").isdigit():
            raise ValueError(f"invalid sentiment label {value!r}")
        value = int(s)
    if not isinstance(value, int) or value not in LABELS:
        raise ValueError(f"invalid sentiment label {value!r}; expected one of 0, 1, 2")
    return value


@dataclass(frozen=True)
class LabeledExample:
    id: str
    text: str
    label: int
    source: str = ORIGINAL
    params: dict[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "label", validate_label(self.label))
        if self.source not in SOURCE_TAGS:
            raise ValueError(f"unknown source tag {self.source!r}")


@dataclass
class Dataset:
    examples: list[LabeledExample] = field(default_factory=list)
    domain: str = "user"
    split: str = "train"

    def __post_init__(self):
        self.examples = list(self.examples)
        seen: set[str] = set()
        for ex in self.examples:
            if ex.id in seen:
                raise ValueError(f"duplicate example id {ex.id!r}")
            seen.add(ex.id)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    @property
    def texts(self) -> list[str]:
        return [ex.text for ex in self.examples]

    @property
    def labels(self) -> list[int]:
        return [ex.label for ex in self.examples]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, int]], domain: str = "user", split: str = "train") -> "Dataset":
        examples = [LabeledExample(str(i), text, label) for i, (text, label) in enumerate(pairs)]
        return cls(examples, domain=domain, split=split)


@dataclass
class BatchResult:
    """Output of a dataset-level batch job with its failure tally."""

    dataset: Dataset
    produced: int = 0
    skipped: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)


@dataclass(frozen=True)
class LabelMapping:
    table: dict[str, int]

    def __post_init__(self):
        for name, code in self.table.items():
            try:
                validate_label(code)
            except ValueError as exc:
                raise ValueError(f"mapping entry {name!r}: {exc}") from None

    def __getitem__(self, name: str) -> int:
        return self.table[name]

    def missing(self, names: Iterable[str]) -> list[str]:
        return sorted({n for n in names if n not in self.table})


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is None:
        fmt = "jsonl" if path.suffix.lower() in (".jsonl", ".json") else "tsv"
    if fmt not in FORMATS:
        raise ValueError(f"unsupported dataset format {fmt!r}; expected tsv or jsonl")
    return fmt


def _default_domain(path: Path) -> str:
    return path.stem


def load_dataset(
    path: str | Path,
    format: str | None = None,
    domain: str | None = None,
    split: str = "train",
) -> Dataset:
    """Read a TSV or JSONL dataset file, keeping file order.

    TSV files need a header with ``text`` and ``label`` columns; optional
    ``source`` and ``id`` columns are honoured. Ids default to the 0-based
    row position.
    """
    path = Path(path)
    fmt = _infer_format(path, format)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read dataset: {exc.strerror or exc}", path) from exc
    loader = _parse_tsv if fmt == "tsv" else _parse_jsonl
    examples = loader(raw, path)
    try:
        return Dataset(examples, domain=domain or _default_domain(path), split=split)
    except ValueError as exc:
        raise DatasetError(str(exc), path) from None


def _make_example(path, lineno, idx, ex_id, text, label, source, params) -> LabeledExample:
    try:
        label = validate_label(label)
    except ValueError as exc:
        raise LabelValidationError(str(exc), path, lineno) from None
    if source is None or source == "":
        source = ORIGINAL
    if source not in SOURCE_TAGS:
        raise DatasetError(f"unknown source tag {source!r}", path, lineno)
    if not isinstance(text, str):
        raise DatasetError("text must be a string", path, lineno)
    return LabeledExample(
        id=str(idx) if ex_id in (None, "") else str(ex_id),
        text=text,
        label=label,
        source=source,
        params={str(k): str(v) for k, v in (params or {}).items()},
    )


def _parse_tsv(raw: str, path: Path) -> list[LabeledExample]:
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DatasetError("missing header line (expected 'text<TAB>label')", path, 1)
    header = lines[0].rstrip("\r").split("\t")
    if "text" not in header or "label" not in header:
        raise DatasetError(f"bad header {lines[0]!r}; expected 'text<TAB>label'", path, 1)
    cols = {name: i for i, name in enumerate(header)}
    examples = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.rstrip("\r")
        fields = line.split("\t")
        if len(fields) != len(header):
            raise DatasetError(
                f"expected {len(header)} tab-separated fields, found {len(fields)}", path, lineno
            )
        get = lambda name: fields[cols[name]] if name in cols else None  # noqa: E731
        examples.append(
            _make_example(path, lineno, lineno - 2, get("id"), get("text"), get("label"), get("source"), None)
        )
    return examples


def _parse_jsonl(raw: str, path: Path) -> list[LabeledExample]:
    examples = []
    idx = 0
    for lineno, line in enumerate(raw.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"invalid JSON: {exc.msg}", path, lineno) from None
        if not isinstance(obj, dict) or "text" not in obj or "label" not in obj:
            raise DatasetError("object must have 'text' and 'label' fields", path, lineno)
        params = obj.get("params")
        if params is not None and not isinstance(params, dict):
            raise DatasetError("'params' must be an object", path, lineno)
        examples.append(
            _make_example(path, lineno, idx, obj.get("id"), obj["text"], obj["label"], obj.get("source"), params)
        )
        idx += 1
    return examples


def load_texts(path: str | Path) -> list[str]:
    """Read unlabeled text: one sentence per line, or the text column of a dataset file."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".tsv", ".jsonl", ".json"):
        return load_dataset(path).texts
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read input: {exc.strerror or exc}", path) from exc
    return [line.rstrip("\r") for line in raw.split("\n") if line.strip()]


def dumps_dataset(dataset: Dataset, format: str = "tsv") -> str:
    if format == "tsv":
        with_source = any(ex.source != ORIGINAL for ex in dataset)
        out = ["text\tlabel\tsource" if with_source else "text\tlabel"]
        for ex in dataset:
            if any(c in ex.text for c in "\t\n\r"):
                raise ValueError(
                    f"example {ex.id!r}: text contains a tab or newline, which TSV cannot hold; use jsonl"
                )
            row = f"{ex.text}\t{ex.label}"
            if with_source:
                row += f"\t{ex.source}"
            out.append(row)
        return "\n".join(out) + "\n"
    if format == "jsonl":
        buf = io.StringIO()
        for ex in dataset:
            obj = {"id": ex.id, "text": ex.text, "label": ex.label, "source": ex.source}
            if ex.params:
                obj["params"] = dict(sorted(ex.params.items()))
            buf.write(json.dumps(obj, ensure_ascii=False) + "\n")
        return buf.getvalue()
    raise ValueError(f"unsupported dataset format {format!r}; expected tsv or jsonl")


def write_dataset(dataset: Dataset, path: str | Path, format: str | None = None) -> None:
    """Write ``dataset`` as UTF-8 TSV or JSONL.

    TSV refuses texts containing tab or newline characters rather than
    escaping them.
    """
    path = Path(path)
    text = dumps_dataset(dataset, _infer_format(path, format))
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise DatasetError(f"cannot write dataset: {exc.strerror or exc}", path) from exc


def map_labels(
    raw: Sequence[tuple[str, str]],
    mapping: LabelMapping,
    domain: str = "goemotions",
    split: str = "train",
) -> Dataset:
    missing = mapping.missing(name for _, name in raw)
    if missing:
        raise UnmappedLabelError(missing)
    return Dataset.from_pairs(((text, mapping[name]) for text, name in raw), domain=domain, split=split)


def parse_label_mapping(text: str, origin: str = "<mapping>") -> LabelMapping:
    table: dict[str, int] = {}
    reader = csv.reader(io.StringIO(text), delimiter="\t")
    for lineno, row in enumerate(reader, start=1):
        if not row or not "".join(row).strip() or row[0].startswith("#"):
            continue
        if lineno == 1 and row[0] == "fine_label":
            continue
        if len(row) != 2:
            raise DatasetError("mapping rows need exactly two columns", origin, lineno)
        name, code = row[0].strip(), row[1].strip()
        try:
            table[name] = validate_label(code)
        except ValueError as exc:
            raise LabelValidationError(str(exc), origin, lineno) from None
    return LabelMapping(table)


def load_label_mapping(path: str | Path | None = None) -> LabelMapping:
    """Load a ``fine_label<TAB>sentiment_code`` file; ``None`` gives the bundled GoEmotions default."""
    if path is None:
        text = resources.files("augmenta").joinpath("data/goemotions_mapping.tsv").read_text(encoding="utf-8")
        return parse_label_mapping(text, "goemotions_mapping.tsv")
    path = Path(path)
    return parse_label_mapping(path.read_text(encoding="utf-8"), str(path))

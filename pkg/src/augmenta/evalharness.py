"""Accuracy and confusion-matrix evaluation, cross-domain grids and report rendering."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

from .augmentors import map_examples
from .backends import ClassifierBackend
from .corpus import LABEL_NAMES, LABELS, Dataset, validate_label
from .generative import classify

logger = logging.getLogger(__name__)

MISSING = "-"
SPLIT_ORDER = {"train": 0, "validation": 1, "test": 2}
CSV_KEY_COLUMNS = ("model", "train_domain", "eval_domain", "split", "accuracy")
CELL_COLUMNS = tuple(f"c{g}{p}" for g in LABELS for p in LABELS)
CSV_COLUMNS = (
    CSV_KEY_COLUMNS
    + ("evaluated", "skipped")
    + CELL_COLUMNS
    + tuple(f"{m}_{LABEL_NAMES[c]}" for c in LABELS for m in ("precision", "recall", "f1"))
)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are gold labels, columns predictions, both in code order 0, 1, 2."""

    counts: tuple[tuple[int, ...], ...] = ((0, 0, 0), (0, 0, 0), (0, 0, 0))

    def __post_init__(self):
        counts = tuple(tuple(int(c) for c in row) for row in self.counts)
        if len(counts) != 3 or any(len(r) != 3 for r in counts):
            raise ValueError("confusion matrix must be 3x3")
        if any(c < 0 for r in counts for c in r):
            raise ValueError("confusion counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "ConfusionMatrix":
        grid = [[0] * 3 for _ in LABELS]
        for gold, pred in pairs:
            grid[validate_label(gold)][validate_label(pred)] += 1
        return cls(tuple(map(tuple, grid)))

    @property
    def total(self) -> int:
        return sum(map(sum, self.counts))

    @property
    def trace(self) -> int:
        return sum(self.counts[i][i] for i in LABELS)

    def row_sums(self) -> list[int]:
        return [sum(r) for r in self.counts]

    def col_sums(self) -> list[int]:
        return [sum(self.counts[g][p] for g in LABELS) for p in LABELS]

    def accuracy_fraction(self) -> Fraction | None:
        return Fraction(self.trace, self.total) if self.total else None

    @property
    def accuracy(self) -> float | None:
        frac = self.accuracy_fraction()
        return None if frac is None else float(frac)

    def class_scores(self) -> dict[int, tuple[float, float, float]]:
        out = {}
        rows, cols = self.row_sums(), self.col_sums()
        for c in LABELS:
            tp = self.counts[c][c]
            p = tp / cols[c] if cols[c] else 0.0
            r = tp / rows[c] if rows[c] else 0.0
            f = 2 * p * r / (p + r) if p + r else 0.0
            out[c] = (p, r, f)
        return out


class Evaluation(NamedTuple):
    confusion: ConfusionMatrix
    accuracy: float | None
    skipped: int = 0


def evaluate(clf: ClassifierBackend, dataset: Dataset, jobs: int = 1) -> Evaluation:
    """Score ``clf`` on ``dataset``.

    Items the classifier fails on are left out of the matrix and counted in
    ``skipped``; accuracy is over evaluated items only.
    """
    if len(dataset) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    preds = map_examples(dataset.texts, lambda t: classify(clf, t), clf.concurrency_safe, jobs)
    pairs, skipped = [], 0
    for ex, pred in zip(dataset.examples, preds):
        if isinstance(pred, Exception):
            logger.warning("evaluation skipped %s: %s", ex.id, pred)
            skipped += 1
        else:
            pairs.append((ex.label, pred))
    cm = ConfusionMatrix.from_pairs(pairs)
    return Evaluation(cm, cm.accuracy, skipped)


def evaluate_predictions(dataset: Dataset, predictions: Mapping[str, int]) -> Evaluation:
    """Score precomputed ``{example id: label}`` predictions; missing ids count as skipped."""
    if len(dataset) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    pairs = [(ex.label, predictions[ex.id]) for ex in dataset if ex.id in predictions]
    cm = ConfusionMatrix.from_pairs(pairs)
    return Evaluation(cm, cm.accuracy, len(dataset) - len(pairs))


@dataclass(frozen=True)
class ReportEntry:
    model_tag: str
    train_domain: str
    eval_domain: str
    split: str
    accuracy: float | None = None
    confusion: ConfusionMatrix | None = None
    skipped: int = 0

    def __post_init__(self):
        if self.confusion is not None:
            exact = self.confusion.accuracy
            if self.accuracy is None:
                object.__setattr__(self, "accuracy", exact)
            elif exact is None or self.accuracy != exact:
                raise ValueError(
                    f"accuracy {self.accuracy} disagrees with confusion matrix ({self.confusion.trace}/{self.confusion.total})"
                )

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.model_tag, self.train_domain, self.eval_domain, self.split)

    @property
    def in_domain(self) -> bool:
        return self.train_domain == self.eval_domain


class ReportConflictError(ValueError):
    def __init__(self, conflicts: Sequence[tuple[tuple, object, object]]):
        self.conflicts = list(conflicts)
        lines = [
            f"{'/'.join(key)}: {_fmt(a)} vs {_fmt(b)}" for key, a, b in self.conflicts
        ]
        super().__init__("conflicting report cells:\n  " + "\n  ".join(lines))


@dataclass
class EvaluationReport:
    entries: list[ReportEntry] = field(default_factory=list)

    def __post_init__(self):
        self.entries = list(self.entries)
        seen: dict[tuple, ReportEntry] = {}
        conflicts = []
        for e in self.entries:
            if e.key in seen:
                conflicts.append((e.key, seen[e.key].accuracy, e.accuracy))
            seen[e.key] = e
        if conflicts:
            raise ReportConflictError(conflicts)

    def __len__(self):
        return len(self.entries)

    def get(self, model_tag, train_domain, eval_domain, split) -> ReportEntry | None:
        for e in self.entries:
            if e.key == (model_tag, train_domain, eval_domain, split):
                return e
        return None


def merge_reports(reports: Iterable[EvaluationReport]) -> EvaluationReport:
    """Union of cells; identical duplicates collapse, differing ones raise ``ReportConflictError``."""
    merged: dict[tuple, ReportEntry] = {}
    conflicts = []
    for report in reports:
        for e in report.entries:
            prev = merged.get(e.key)
            if prev is None:
                merged[e.key] = e
            elif _fmt(prev.accuracy) != _fmt(e.accuracy) or (
                prev.confusion and e.confusion and prev.confusion != e.confusion
            ):
                conflicts.append((e.key, prev.accuracy, e.accuracy))
    if conflicts:
        raise ReportConflictError(conflicts)
    return EvaluationReport(list(merged.values()))


def cross_domain_matrix(
    models: Sequence[tuple[str, str, ClassifierBackend]],
    datasets: Sequence[Dataset],
    jobs: int = 1,
) -> EvaluationReport:
    if not models or not datasets:
        raise ValueError("need at least one model and one dataset")
    entries = []
    for tag, train_domain, clf in models:
        for ds in datasets:
            result = evaluate(clf, ds, jobs)
            entries.append(
                ReportEntry(tag, train_domain, ds.domain, ds.split, result.accuracy, result.confusion, result.skipped)
            )
    return EvaluationReport(entries)


def _fmt(acc: float | None) -> str:
    return MISSING if acc is None else f"{acc:.4f}"


def _ordered(values: Iterable[str]) -> list[str]:
    return list(dict.fromkeys(values))


def _render_markdown(report: EvaluationReport) -> str:
    entries = report.entries
    models = _ordered(e.model_tag for e in entries)
    trains = _ordered(e.train_domain for e in entries)
    evals = _ordered(e.eval_domain for e in entries)
    splits = sorted(_ordered(e.split for e in entries), key=lambda s: SPLIT_ORDER.get(s, len(SPLIT_ORDER)))
    columns = [(t, d, s) for t in trains for d in evals for s in splits]
    cells = {e.key: e for e in entries}

    lines = [
        "| Model | " + " | ".join(f"{t} → {d} ({s})" for t, d, s in columns) + " |",
        "|---|" + "---|" * len(columns),
    ]
    for m in models:
        row = [_fmt(cells[(m, *c)].accuracy) if (m, *c) in cells else MISSING for c in columns]
        lines.append(f"| {m} | " + " | ".join(row) + " |")

    with_cm = [e for e in entries if e.confusion is not None]
    if with_cm:
        lines += ["", "## Confusion matrices", ""]
        header = "| gold \\ pred | " + " | ".join(LABEL_NAMES[c] for c in LABELS) + " |"
        for e in with_cm:
            kind = "in-domain" if e.in_domain else "cross-domain"
            lines += [
                f"### {e.model_tag}: {e.train_domain} → {e.eval_domain} ({e.split}, {kind})",
                "",
                f"evaluated={e.confusion.total} skipped={e.skipped} accuracy={_fmt(e.accuracy)}",
                "",
                header,
                "|---|---|---|---|",
            ]
            for g in LABELS:
                lines.append(f"| {LABEL_NAMES[g]} | " + " | ".join(str(c) for c in e.confusion.counts[g]) + " |")
            lines.append("")
        while lines[-1] == "":
            lines.pop()
    return "\n".join(lines) + "\n"


def _render_csv(report: EvaluationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for e in report.entries:
        row = [e.model_tag, e.train_domain, e.eval_domain, e.split, "" if e.accuracy is None else _fmt(e.accuracy)]
        cm = e.confusion
        if cm is None:
            row += [""] * (len(CSV_COLUMNS) - len(row))
        else:
            row += [cm.total, e.skipped]
            row += [cm.counts[g][p] for g in LABELS for p in LABELS]
            scores = cm.class_scores()
            row += [f"{v:.4f}" for c in LABELS for v in scores[c]]
        writer.writerow(row)
    return buf.getvalue()


def render_report(report: EvaluationReport, format: str = "markdown") -> str:
    """Render as a method-by-column accuracy table (markdown) or flat CSV.

    Markdown columns are grouped train domain, then eval domain, then split.
    Domains keep their order of first appearance, splits run validation
    before test, and cells without a value show ``-``.
    """
    if not report.entries:
        raise ValueError("cannot render an empty report")
    if format == "markdown":
        return _render_markdown(report)
    if format == "csv":
        return _render_csv(report)
    raise ValueError(f"unknown report format {format!r}; expected markdown or csv")


def parse_report_csv(text: str, origin: str = "<csv>") -> EvaluationReport:
    """Inverse of the CSV renderer. Only the five key columns are required."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not set(CSV_KEY_COLUMNS) <= set(reader.fieldnames):
        raise ValueError(f"{origin}: CSV header must include {','.join(CSV_KEY_COLUMNS)}")
    entries = []
    for lineno, row in enumerate(reader, start=2):
        raw_acc = (row.get("accuracy") or "").strip()
        cm = None
        if all((row.get(c) or "").strip() for c in CELL_COLUMNS):
            cm = ConfusionMatrix(tuple(tuple(int(row[f"c{g}{p}"]) for p in LABELS) for g in LABELS))
        try:
            accuracy = None if raw_acc in ("", MISSING) else float(raw_acc)
        except ValueError:
            raise ValueError(f"{origin}:{lineno}: bad accuracy {raw_acc!r}") from None
        if cm is not None:
            if accuracy is not None and _fmt(cm.accuracy) != _fmt(accuracy):
                raise ValueError(f"{origin}:{lineno}: accuracy {raw_acc} disagrees with its confusion matrix")
            accuracy = None
        skipped = int(row.get("skipped") or 0)
        entries.append(
            ReportEntry(row["model"], row["train_domain"], row["eval_domain"], row["split"], accuracy, cm, skipped)
        )
    return EvaluationReport(entries)

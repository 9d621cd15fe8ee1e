"""Classifier pseudo-labeling, generative label prediction and halved-sentence completion."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import corpus
from .augmentors import derive_seed, map_examples
from .backends import BackendError, ClassifierBackend, CompleterBackend
from .corpus import BatchResult, Dataset, LabeledExample, validate_label
from .textprep import tokenize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PseudoLabelRecord:
    text: str
    label: int
    confidence: float | None = None
    labeler: str = corpus.BERT_PSEUDO

    def __post_init__(self):
        object.__setattr__(self, "label", validate_label(self.label))
        if self.confidence is not None and not 0 <= self.confidence <= 1:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class CompletionRecord:
    prompt: str
    label: int
    completion: str
    generator: str

    def __post_init__(self):
        if not self.prompt or not self.completion:
            raise ValueError("prompt and completion must be non-empty")


def classify(clf: ClassifierBackend, text: str) -> int:
    try:
        label = clf.predict(text)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"{clf.describe()} failed: {exc}") from exc
    try:
        return validate_label(label)
    except ValueError as exc:
        raise BackendError(f"{clf.describe()} broke the label contract: {exc}") from None


def gpt_label(text: str, clf: ClassifierBackend) -> int:
    if not text or not text.strip():
        raise ValueError("gpt_label needs non-empty text")
    return classify(clf, text)


def pseudo_label_run(
    texts: Sequence[str],
    clf: ClassifierBackend,
    labeler: str = corpus.BERT_PSEUDO,
    domain: str = "pseudo",
    split: str = "train",
    jobs: int = 1,
) -> BatchResult:
    if labeler not in (corpus.BERT_PSEUDO, corpus.GPT_LABEL):
        raise ValueError(f"unknown labeler tag {labeler!r}")
    results = map_examples(list(texts), lambda t: classify(clf, t), clf.concurrency_safe, jobs)
    examples, failures = [], []
    for i, (text, res) in enumerate(zip(texts, results)):
        if isinstance(res, Exception):
            logger.warning("no pseudo-label for item %d: %s", i, res)
            failures.append((str(i), str(res)))
            continue
        examples.append(LabeledExample(str(i), text, res, labeler, {"labeler": labeler, "backend": clf.describe()}))
    return BatchResult(Dataset(examples, domain=domain, split=split), len(examples), len(failures), failures)


def generate_pseudo_labels(texts: Sequence[str], clf: ClassifierBackend, labeler: str = corpus.BERT_PSEUDO) -> Dataset:
    """Label each text with ``clf``; failed items are skipped and logged."""
    return pseudo_label_run(texts, clf, labeler).dataset


def halve_sentence(text: str) -> str:
    words = tokenize(text).words
    if not words:
        raise ValueError("cannot halve an empty sentence")
    return " ".join(words[: math.ceil(len(words) / 2)])


def complete_sentence(prompt: str, label: int, gen: CompleterBackend, seed: int | None = None) -> str:
    if not prompt:
        raise ValueError("completion prompt must be non-empty")
    label = validate_label(label)
    try:
        out = gen.complete(prompt, label, seed=seed)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"{gen.describe()} failed: {exc}") from exc
    if not out or not out.strip():
        raise BackendError(f"{gen.describe()} returned an empty completion")
    return out


def completion_run(dataset: Dataset, gen: CompleterBackend, seed: int = 42, jobs: int = 1) -> BatchResult:
    if len(dataset) == 0:
        raise ValueError("completion augmentation needs a non-empty dataset")

    def work(ex: LabeledExample) -> LabeledExample:
        item_seed = derive_seed(seed, ex.id)
        prompt = halve_sentence(ex.text)
        text = complete_sentence(prompt, ex.label, gen, seed=item_seed)
        params = {"prompt": prompt, "generator": gen.describe(), "seed": str(item_seed)}
        return LabeledExample(f"{ex.id}/{corpus.GPT_COMPLETION}", text, ex.label, corpus.GPT_COMPLETION, params)

    results = map_examples(dataset.examples, work, gen.concurrency_safe, jobs)
    generated, failures = [], []
    for ex, res in zip(dataset.examples, results):
        if isinstance(res, Exception):
            logger.warning("skipping completion for %s: %s", ex.id, res)
            failures.append((ex.id, str(res)))
        else:
            generated.append(res)
    out = Dataset(list(dataset.examples) + generated, domain=dataset.domain, split=dataset.split)
    return BatchResult(out, len(generated), len(failures), failures)


def build_completion_augmented_dataset(dataset: Dataset, gen: CompleterBackend, seed: int = 42) -> Dataset:
    return completion_run(dataset, gen, seed).dataset


def write_training_manifest(path: str | Path, stages: Iterable[tuple[str, str, str]]) -> None:
    """Write the fine-tuning plan as JSONL ``{stage, dataset_path, base_checkpoint_tag}`` lines.

    Training itself happens outside this package.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for stage, dataset_path, base in stages:
            obj = {"stage": stage, "dataset_path": str(dataset_path), "base_checkpoint_tag": base}
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")

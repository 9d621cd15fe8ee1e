"""Back-translation, paraphrasing, random masking and named-entity masking.

Every operation works on whitespace word lists and keeps the sentence
length fixed; ``augment_dataset`` lifts them to whole datasets.
"""

from __future__ import annotations

import hashlib
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, Sequence

from . import corpus
from .backends import (
    BackendError,
    BackendSet,
    ConfigError,
    FillMaskBackend,
    NerBackend,
    ParaphraserBackend,
    TranslatorBackend,
    check_spans,
)
from .corpus import BatchResult, Dataset, LabeledExample
from .textprep import check_word, detokenize, tokenize

logger = logging.getLogger(__name__)

DEFAULT_RATIO = 0.4
OTHER = "Other"

METHODS = (
    corpus.BACK_TRANSLATION,
    corpus.PARAPHRASE,
    corpus.RANDOM_MASK_SEQ,
    corpus.RANDOM_MASK_PAR,
    corpus.NER_MASK_SEQ,
    corpus.NER_MASK_PAR,
)

REQUIRED_ROLES = {
    corpus.BACK_TRANSLATION: ("translator",),
    corpus.PARAPHRASE: ("paraphraser",),
    corpus.RANDOM_MASK_SEQ: ("fillmask",),
    corpus.RANDOM_MASK_PAR: ("fillmask",),
    corpus.NER_MASK_SEQ: ("ner", "fillmask"),
    corpus.NER_MASK_PAR: ("ner", "fillmask"),
}


class AugmentationError(RuntimeError):
    def __init__(self, message: str, example_id: str | None = None):
        self.example_id = example_id
        super().__init__(message if example_id is None else f"example {example_id}: {message}")


def round_half_up(x) -> int:
    return int(Decimal(x).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def mask_count(word_count: int, ratio: float = DEFAULT_RATIO) -> int:
    # str() so that 0.4 means the decimal 0.4, not its binary neighbour
    return round_half_up(Decimal(str(ratio)) * word_count)


@dataclass(frozen=True)
class MaskPlan:
    """Word positions to mask, in sampling order.

    Plans built by hand may hold any distinct indices; ``select_mask_indices``
    is what enforces the mask-count rule.
    """

    indices: tuple[int, ...]
    ratio: float | None = None
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if len(set(self.indices)) != len(self.indices):
            raise ValueError(f"mask plan has repeated indices: {self.indices}")
        if any(i < 0 for i in self.indices):
            raise ValueError(f"mask plan has negative indices: {self.indices}")

    def check(self, word_count: int) -> None:
        if self.indices and max(self.indices) >= word_count:
            raise ValueError(f"mask plan {self.indices} out of range for {word_count} words")


def select_mask_indices(word_count: int, ratio: float = DEFAULT_RATIO, rng: random.Random | int | None = None) -> MaskPlan:
    if not 0 <= ratio <= 1:
        raise ValueError(f"ratio must be within [0, 1], got {ratio}")
    if word_count < 0:
        raise ValueError("word_count must be non-negative")
    seed = None
    if rng is None or isinstance(rng, int):
        seed = rng
        rng = random.Random(rng)
    k = mask_count(word_count, ratio)
    return MaskPlan(tuple(rng.sample(range(word_count), k)), ratio=ratio, seed=seed)


def _predict(fm: FillMaskBackend, words: Sequence[str], index: int) -> str:
    try:
        word = fm.predict(tuple(words), index)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"{fm.describe()} failed at index {index}: {exc}") from exc
    try:
        return check_word(word)
    except (ValueError, TypeError):
        raise BackendError(f"{fm.describe()} returned {word!r}, not a single word") from None


def random_mask_sequential(words: Sequence[str], plan: MaskPlan, fm: FillMaskBackend) -> list[str]:
    plan.check(len(words))
    current = list(words)
    for i in plan.indices:
        current[i] = _predict(fm, current, i)
    return current


def random_mask_parallel(words: Sequence[str], plan: MaskPlan, fm: FillMaskBackend) -> list[str]:
    plan.check(len(words))
    original = tuple(words)
    predicted = {i: _predict(fm, original, i) for i in plan.indices}
    return [predicted.get(i, w) for i, w in enumerate(original)]


def entity_indices(words: Sequence[str], ner: NerBackend) -> list[int]:
    """Word positions covered by non-'Other' entities, in span order."""
    try:
        spans = ner.tag(tuple(words))
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"{ner.describe()} failed: {exc}") from exc
    spans = check_spans(spans, len(words))
    return [i for s in spans if s.category != OTHER for i in range(s.start, s.end)]


def ner_mask_sequential(words: Sequence[str], ner: NerBackend, fm: FillMaskBackend) -> list[str]:
    return random_mask_sequential(words, MaskPlan(entity_indices(words, ner)), fm)


def ner_mask_parallel(words: Sequence[str], ner: NerBackend, fm: FillMaskBackend) -> list[str]:
    return random_mask_parallel(words, MaskPlan(entity_indices(words, ner)), fm)


def back_translate(text: str, tr: TranslatorBackend, pivot: str = "en", source: str = "mr") -> str:
    if not text:
        return ""
    try:
        return tr.translate(tr.translate(text, source, pivot), pivot, source)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"{tr.describe()} failed: {exc}") from exc


def paraphrase(text: str, pp: ParaphraserBackend) -> str:
    if not text:
        raise ValueError("paraphrase needs non-empty text")
    try:
        out = pp.paraphrase(text)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"{pp.describe()} failed: {exc}") from exc
    if not out:
        raise BackendError(f"{pp.describe()} returned an empty paraphrase")
    return out


@dataclass(frozen=True)
class AugmentationConfig:
    method: str
    ratio: float = DEFAULT_RATIO
    seed: int = 42
    pivot_lang: str = "en"
    source_lang: str = "mr"
    keep_original: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}")
        if not 0 <= self.ratio <= 1:
            raise ConfigError(f"ratio must be within [0, 1], got {self.ratio}")


def derive_seed(seed: int, key: str) -> int:
    """Stable per-item seed; independent of process, platform and hash randomisation."""
    digest = hashlib.sha256(f"{seed}\x1f{key}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _augment_text(text: str, config: AugmentationConfig, backends: BackendSet, seed: int) -> str:
    m = config.method
    if m == corpus.BACK_TRANSLATION:
        return back_translate(text, backends.translator, config.pivot_lang, config.source_lang)
    if m == corpus.PARAPHRASE:
        return paraphrase(text, backends.paraphraser)
    words = tokenize(text).words
    if m in (corpus.RANDOM_MASK_SEQ, corpus.RANDOM_MASK_PAR):
        plan = select_mask_indices(len(words), config.ratio, random.Random(seed))
        op = random_mask_sequential if m == corpus.RANDOM_MASK_SEQ else random_mask_parallel
        return detokenize(op(words, plan, backends.fillmask))
    op = ner_mask_sequential if m == corpus.NER_MASK_SEQ else ner_mask_parallel
    return detokenize(op(words, backends.ner, backends.fillmask))


def check_backends(method: str, backends: BackendSet) -> None:
    missing = [r for r in REQUIRED_ROLES[method] if getattr(backends, r) is None]
    if missing:
        raise ConfigError(f"method {method!r} needs backend(s): {', '.join(missing)}")


def map_examples(
    items: Sequence,
    work: Callable,
    concurrent: bool,
    jobs: int = 1,
) -> list:
    """Run ``work`` over ``items`` and return results in input order.

    Each result is either the return value or the exception raised.
    """

    def guarded(item):
        try:
            return work(item)
        except (BackendError, AugmentationError, ValueError) as exc:
            return exc

    if concurrent and jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(guarded, items))
    return [guarded(item) for item in items]


def run_augmentation(dataset: Dataset, config: AugmentationConfig, backends: BackendSet, jobs: int = 1) -> BatchResult:
    check_backends(config.method, backends)
    used = [getattr(backends, r) for r in REQUIRED_ROLES[config.method]]
    backend_tag = "+".join(b.describe() for b in used)

    def work(ex: LabeledExample) -> LabeledExample:
        seed = derive_seed(config.seed, ex.id)
        text = _augment_text(ex.text, config, backends, seed)
        if not text or not text.strip():
            raise AugmentationError("augmented text is empty", ex.id)
        params = {"seed": str(seed), "base_seed": str(config.seed), "backend": backend_tag}
        if config.method in (corpus.RANDOM_MASK_SEQ, corpus.RANDOM_MASK_PAR):
            params["ratio"] = str(config.ratio)
        if config.method == corpus.BACK_TRANSLATION:
            params["pivot"] = config.pivot_lang
        return LabeledExample(f"{ex.id}/{config.method}", text, ex.label, config.method, params)

    results = map_examples(dataset.examples, work, all(b.concurrency_safe for b in used), jobs)
    augmented, failures = [], []
    for ex, res in zip(dataset.examples, results):
        if isinstance(res, Exception):
            logger.warning("skipping example %s: %s", ex.id, res)
            failures.append((ex.id, str(res)))
        else:
            augmented.append(res)
    examples = (list(dataset.examples) if config.keep_original else []) + augmented
    out = Dataset(examples, domain=dataset.domain, split=dataset.split)
    return BatchResult(out, produced=len(augmented), skipped=len(failures), failures=failures)


def augment_dataset(dataset: Dataset, config: AugmentationConfig, backends: BackendSet, jobs: int = 1) -> Dataset:
    """Augment every example with ``config.method``, keeping labels.

    Examples whose backend call fails are skipped and logged; use
    ``run_augmentation`` to get the tally.
    """
    return run_augmentation(dataset, config, backends, jobs).dataset

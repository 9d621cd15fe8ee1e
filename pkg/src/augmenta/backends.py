"""Model-role contracts, deterministic mock backends and config loading.

Six roles are consumed by the augmentation and labeling code: fill-mask,
NER, translation, paraphrasing, classification and completion. Real models
plug in through the ``hf-*`` adapters, which import ``transformers`` lazily.
"""

from __future__ import annotations

import json
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Sequence

from .corpus import validate_label
from .textprep import check_word

START_TOKEN = "∅-token"

DEFAULT_MODELS = {
    "fillmask": "l3cube-pune/marathi-bert-v2",
    "classifier": "l3cube-pune/marathi-bert-v2",
    "ner": "l3cube-pune/marathi-ner",
    "completer": "l3cube-pune/marathi-gpt",
    "paraphraser": "ai4bharat/MultiIndicParaphraseGeneration",
}


class ConfigError(ValueError):
    """Bad or incomplete backend configuration."""


class BackendError(RuntimeError):
    """A backend call failed or broke its contract."""


class BackendUnavailableError(BackendError):
    """An external model could not be loaded or reached."""


@dataclass(frozen=True, order=True)
class EntitySpan:
    start: int
    end: int
    category: str

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad entity span [{self.start}, {self.end})")


class Backend(ABC):
    role: str = ""
    kind: str = ""
    concurrency_safe: bool = True

    def describe(self) -> str:
        return self.kind


class FillMaskBackend(Backend):
    role = "fillmask"

    @abstractmethod
    def predict(self, words: Sequence[str], masked_index: int) -> str:
        """Return one replacement word for ``words[masked_index]``."""


class NerBackend(Backend):
    role = "ner"

    @abstractmethod
    def tag(self, words: Sequence[str]) -> list[EntitySpan]:
        """Return non-overlapping spans sorted by start."""


class TranslatorBackend(Backend):
    role = "translator"

    @abstractmethod
    def translate(self, text: str, source_lang: str, target_lang: str) -> str: ...


class ParaphraserBackend(Backend):
    role = "paraphraser"

    @abstractmethod
    def paraphrase(self, text: str) -> str: ...


class ClassifierBackend(Backend):
    role = "classifier"

    @abstractmethod
    def predict(self, text: str) -> int: ...


class CompleterBackend(Backend):
    role = "completer"

    @abstractmethod
    def complete(self, prompt: str, label: int, seed: int | None = None) -> str:
        """Continue ``prompt`` so that it carries sentiment ``label``.

        ``seed`` is honoured by seedable backends and ignored otherwise.
        """


ROLES = ("fillmask", "ner", "translator", "paraphraser", "classifier", "completer")


def check_spans(spans: Sequence[EntitySpan], word_count: int) -> list[EntitySpan]:
    prev_end = 0
    for span in spans:
        if span.end > word_count:
            raise BackendError(f"entity span {span} exceeds {word_count} words")
        if span.start < prev_end:
            raise BackendError("entity spans overlap or are unsorted")
        prev_end = span.end
    return list(spans)


# --- mocks -----------------------------------------------------------------


class EchoFillMask(FillMaskBackend):
    kind = "echo-fillmask"

    def predict(self, words, masked_index):
        return words[masked_index]


class ConstantFillMask(FillMaskBackend):
    kind = "constant-fillmask"

    def __init__(self, word: str):
        self.word = check_word(word)

    def predict(self, words, masked_index):
        return self.word


class NeighborFillMask(FillMaskBackend):
    """Predicts the word to the left of the mask; context-sensitive on purpose."""

    kind = "neighbor-fillmask"

    def predict(self, words, masked_index):
        return words[masked_index - 1] if masked_index > 0 else START_TOKEN


class TableFillMask(FillMaskBackend):
    """Looks a replacement up in a table, keyed by the masked word or its left neighbour."""

    kind = "table-fillmask"

    def __init__(self, table: Mapping[str, str], key: str = "masked", default: str | None = None):
        if key not in ("masked", "left"):
            raise ConfigError("table-fillmask 'key' must be 'masked' or 'left'")
        self.table = {str(k): check_word(str(v)) for k, v in table.items()}
        self.key = key
        self.default = None if default is None else check_word(default)

    def predict(self, words, masked_index):
        if self.key == "masked":
            probe = words[masked_index]
        else:
            probe = words[masked_index - 1] if masked_index > 0 else START_TOKEN
        if probe in self.table:
            return self.table[probe]
        return self.default if self.default is not None else words[masked_index]


class DictionaryTranslator(TranslatorBackend):
    """Word-by-word translation through an invertible table; unknown words pass through."""

    kind = "dictionary-translator"

    def __init__(self, table: Mapping[str, str], source_lang: str = "mr", target_lang: str = "en"):
        forward = {str(k): str(v) for k, v in table.items()}
        backward = {v: k for k, v in forward.items()}
        if len(backward) != len(forward):
            raise ConfigError("dictionary-translator table must be one-to-one")
        self.source_lang, self.target_lang = source_lang, target_lang
        self.forward, self.backward = forward, backward

    def _table(self, source_lang, target_lang):
        if (source_lang, target_lang) == (self.source_lang, self.target_lang):
            return self.forward
        if (source_lang, target_lang) == (self.target_lang, self.source_lang):
            return self.backward
        raise BackendError(f"{self.kind} cannot translate {source_lang}->{target_lang}")

    def translate(self, text, source_lang, target_lang):
        table = self._table(source_lang, target_lang)
        return " ".join(table.get(w, w) for w in text.split())


class LossyTranslator(DictionaryTranslator):
    """Separate, possibly non-inverse, tables for each direction."""

    kind = "lossy-translator"

    def __init__(
        self,
        forward: Mapping[str, str],
        backward: Mapping[str, str],
        source_lang: str = "mr",
        target_lang: str = "en",
    ):
        self.source_lang, self.target_lang = source_lang, target_lang
        self.forward = {str(k): str(v) for k, v in forward.items()}
        self.backward = {str(k): str(v) for k, v in backward.items()}


class LexiconNer(NerBackend):
    kind = "lexicon-ner"

    def __init__(self, table: Mapping[str, str], merge_adjacent: bool = False):
        self.table = {str(k): str(v) for k, v in table.items()}
        self.merge_adjacent = bool(merge_adjacent)

    def tag(self, words):
        spans: list[EntitySpan] = []
        for i, w in enumerate(words):
            cat = self.table.get(w)
            if cat is None:
                continue
            if self.merge_adjacent and spans and spans[-1].end == i and spans[-1].category == cat:
                spans[-1] = EntitySpan(spans[-1].start, i + 1, cat)
            else:
                spans.append(EntitySpan(i, i + 1, cat))
        return spans


class ConstantClassifier(ClassifierBackend):
    kind = "constant-classifier"

    def __init__(self, label: int):
        try:
            self.label = validate_label(label)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def predict(self, text):
        return self.label


class KeywordClassifier(ClassifierBackend):
    """Returns the label of the first keyword found in the text, else ``default``."""

    kind = "keyword-classifier"

    def __init__(self, keywords: Mapping[str, int], default: int = 2):
        try:
            self.keywords = {str(k): validate_label(v) for k, v in keywords.items()}
            self.default = validate_label(default)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def predict(self, text):
        for w in text.split():
            if w in self.keywords:
                return self.keywords[w]
        return self.default


class TableClassifier(ClassifierBackend):
    """Exact text lookup; useful as an oracle when the table holds gold labels."""

    kind = "table-classifier"

    def __init__(self, table: Mapping[str, int], default: int | None = None):
        try:
            self.table = {str(k): validate_label(v) for k, v in table.items()}
            self.default = None if default is None else validate_label(default)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def predict(self, text):
        if text in self.table:
            return self.table[text]
        if self.default is None:
            raise BackendError(f"{self.kind}: no label for {text!r}")
        return self.default


class IdentityParaphraser(ParaphraserBackend):
    kind = "identity-paraphraser"

    def paraphrase(self, text):
        return text


class SuffixParaphraser(ParaphraserBackend):
    kind = "suffix-paraphraser"

    def __init__(self, word: str):
        self.word = check_word(word)

    def paraphrase(self, text):
        return f"{text} {self.word}"


class SuffixCompleter(CompleterBackend):
    kind = "suffix-completer"

    def __init__(self, suffixes: Mapping[Any, str]):
        try:
            self.suffixes = {validate_label(k): str(v) for k, v in suffixes.items()}
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def complete(self, prompt, label, seed=None):
        return prompt + self.suffixes.get(label, "")


class IdentityCompleter(CompleterBackend):
    kind = "identity-completer"

    def complete(self, prompt, label, seed=None):
        return prompt


class SamplingCompleter(CompleterBackend):
    """Appends ``length`` words drawn from a per-label vocabulary with a seeded RNG."""

    kind = "sampling-completer"

    def __init__(self, vocab: Mapping[Any, Sequence[str]], length: int = 3, seed: int = 0):
        try:
            self.vocab = {validate_label(k): [check_word(w) for w in v] for k, v in vocab.items()}
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if any(not v for v in self.vocab.values()):
            raise ConfigError("sampling-completer vocabularies must be non-empty")
        self.length = int(length)
        self.seed = int(seed)

    def complete(self, prompt, label, seed=None):
        words = self.vocab.get(label)
        if not words:
            return prompt
        rng = random.Random(self.seed if seed is None else seed)
        extra = [rng.choice(words) for _ in range(self.length)]
        return " ".join([prompt, *extra]) if prompt else " ".join(extra)


MOCK_KINDS: dict[str, type[Backend]] = {
    cls.kind: cls
    for cls in (
        EchoFillMask,
        ConstantFillMask,
        NeighborFillMask,
        TableFillMask,
        DictionaryTranslator,
        LossyTranslator,
        LexiconNer,
        ConstantClassifier,
        KeywordClassifier,
        TableClassifier,
        IdentityParaphraser,
        SuffixParaphraser,
        SuffixCompleter,
        IdentityCompleter,
        SamplingCompleter,
    )
}


def make_mock_backend(kind: str, params: Mapping[str, Any] | None = None) -> Backend:
    try:
        cls = MOCK_KINDS[kind]
    except KeyError:
        raise ConfigError(f"unknown mock backend kind {kind!r}") from None
    params = dict(params or {})
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {kind}: {exc}") from None


# --- config ----------------------------------------------------------------

_CONFIG_KEYS = ("kind", "params", "model_id", "device", "concurrency_safe")


def backend_from_config(config: Mapping[str, Any]) -> Backend:
    """Build a backend from an already-parsed config mapping.

    Keys other than the reserved ones are treated as extra parameters, so
    ``{"kind": "constant-classifier", "label": 2}`` works as shorthand.
    """
    if not isinstance(config, Mapping):
        raise ConfigError("backend config must be an object")
    if "kind" not in config:
        raise ConfigError("backend config is missing required field 'kind'")
    kind = config["kind"]
    params = dict(config.get("params") or {})
    params.update({k: v for k, v in config.items() if k not in _CONFIG_KEYS})

    if kind in MOCK_KINDS:
        backend = make_mock_backend(kind, params)
    elif kind in EXTERNAL_KINDS:
        from . import hf

        backend = hf.load(kind, config.get("model_id"), config.get("device"), params)
    else:
        raise ConfigError(f"unknown backend kind {kind!r}")
    if "concurrency_safe" in config:
        backend.concurrency_safe = bool(config["concurrency_safe"])
    return backend


def _read_config(path: str | Path) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read backend config: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


def load_backend_config(path: str | Path) -> Backend:
    return backend_from_config(_read_config(path))


@dataclass
class BackendSet:
    fillmask: FillMaskBackend | None = None
    ner: NerBackend | None = None
    translator: TranslatorBackend | None = None
    paraphraser: ParaphraserBackend | None = None
    classifier: ClassifierBackend | None = None
    completer: CompleterBackend | None = None

    def present(self) -> list[Backend]:
        return [getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None]

    @classmethod
    def of(cls, *backends: Backend) -> "BackendSet":
        out = cls()
        for b in backends:
            setattr(out, b.role, b)
        return out


def backend_set_from_config(config: Any) -> BackendSet:
    """Accept either a single backend config or a ``{role: config}`` mapping."""
    if isinstance(config, Mapping) and "kind" in config:
        return BackendSet.of(backend_from_config(config))
    if not isinstance(config, Mapping):
        raise ConfigError("backend config must be an object")
    section = config.get("backends", config)
    out = BackendSet()
    for role, sub in section.items():
        if role not in ROLES:
            raise ConfigError(f"unknown backend role {role!r}; expected one of {', '.join(ROLES)}")
        backend = backend_from_config(sub)
        if backend.role != role:
            raise ConfigError(f"backend {backend.kind!r} cannot serve role {role!r}")
        setattr(out, role, backend)
    return out


def load_backend_set(path: str | Path) -> BackendSet:
    return backend_set_from_config(_read_config(path))


EXTERNAL_KINDS = {
    "hf-fillmask": "fillmask",
    "hf-ner": "ner",
    "hf-translator": "translator",
    "hf-paraphraser": "paraphraser",
    "hf-classifier": "classifier",
    "hf-completer": "completer",
}

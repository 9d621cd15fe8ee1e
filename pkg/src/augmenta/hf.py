"""Hugging Face ``transformers`` adapters for the backend roles.

Nothing here is imported unless a config names an ``hf-*`` kind. Every
adapter reports ``concurrency_safe = False``; callers serialize their calls.
"""

from __future__ import annotations

import logging
import re
from typing import Any, Mapping

from .backends import (
    DEFAULT_MODELS,
    EXTERNAL_KINDS,
    BackendError,
    BackendUnavailableError,
    ClassifierBackend,
    CompleterBackend,
    ConfigError,
    EntitySpan,
    FillMaskBackend,
    NerBackend,
    ParaphraserBackend,
    TranslatorBackend,
)
from .corpus import validate_label

logger = logging.getLogger(__name__)

_TASKS = {
    "fillmask": "fill-mask",
    "ner": "token-classification",
    "translator": "translation",
    "paraphraser": "text2text-generation",
    "classifier": "text-classification",
    "completer": "text-generation",
}


def _pipeline(role: str, model_id: str, device, **kwargs):
    try:
        from transformers import pipeline
    except ImportError as exc:
        raise BackendUnavailableError(f"transformers is not installed ({exc}); pip install 'augmenta[models]'") from None
    try:
        return pipeline(_TASKS[role], model=model_id, device=device, **kwargs)
    except Exception as exc:  # hub/network/file errors come in many types
        raise BackendUnavailableError(f"cannot load model {model_id!r} for {role}: {exc}") from exc


class _HFBackend:
    concurrency_safe = False

    def __init__(self, kind: str, pipe, model_id: str, params: Mapping[str, Any]):
        self.kind = kind
        self.pipe = pipe
        self.model_id = model_id
        self.params = dict(params)

    def describe(self):
        return f"{self.kind}:{self.model_id}"

    def _call(self, *args, **kwargs):
        try:
            return self.pipe(*args, **kwargs)
        except Exception as exc:
            raise BackendError(f"{self.describe()} failed: {exc}") from exc


class HFFillMask(_HFBackend, FillMaskBackend):
    def predict(self, words, masked_index):
        masked = list(words)
        masked[masked_index] = self.pipe.tokenizer.mask_token
        candidates = self._call(" ".join(masked), top_k=int(self.params.get("top_k", 10)))
        for cand in candidates:
            word = cand["token_str"].replace("##", "").strip()
            if word and not any(c.isspace() for c in word):
                return word
        return words[masked_index]


class HFNer(_HFBackend, NerBackend):
    def tag(self, words):
        text = " ".join(words)
        offsets, pos = [], 0
        for w in words:
            offsets.append((pos, pos + len(w)))
            pos += len(w) + 1
        spans: list[EntitySpan] = []
        for ent in self._call(text):
            cat = ent.get("entity_group") or ent.get("entity", "Other")
            cat = re.sub(r"^[BI]-", "", cat)
            idx = [i for i, (s, e) in enumerate(offsets) if s < ent["end"] and ent["start"] < e]
            if not idx:
                continue
            start, end = idx[0], idx[-1] + 1
            if spans and start < spans[-1].end:
                continue
            spans.append(EntitySpan(start, end, cat))
        return spans


class HFTranslator(_HFBackend, TranslatorBackend):
    def translate(self, text, source_lang, target_lang):
        if not text:
            return ""
        codes = self.params.get("lang_codes", {})
        out = self._call(text, src_lang=codes.get(source_lang, source_lang), tgt_lang=codes.get(target_lang, target_lang))
        return out[0]["translation_text"].strip()


class HFParaphraser(_HFBackend, ParaphraserBackend):
    def paraphrase(self, text):
        out = self._call(text, max_new_tokens=int(self.params.get("max_new_tokens", 64)))
        return out[0]["generated_text"].strip() or text


class HFClassifier(_HFBackend, ClassifierBackend):
    def predict(self, text):
        label = self._call(text)[0]["label"]
        mapping = self.params.get("label_map") or {}
        if label in mapping:
            return validate_label(mapping[label])
        m = re.search(r"(\d+)$", label)
        if not m:
            raise BackendError(f"{self.describe()}: cannot map label {label!r}; set params.label_map")
        return validate_label(int(m.group(1)))


class HFCompleter(_HFBackend, CompleterBackend):
    def complete(self, prompt, label, seed=None):
        prefixes = {int(k): v for k, v in (self.params.get("label_prefixes") or {}).items()}
        prefix = prefixes.get(label, "")
        if seed is not None:
            from transformers import set_seed

            set_seed(seed)
        out = self._call(
            prefix + prompt,
            max_new_tokens=int(self.params.get("max_new_tokens", 32)),
            do_sample=bool(self.params.get("do_sample", seed is not None)),
        )
        text = out[0]["generated_text"]
        if prefix and text.startswith(prefix):
            text = text[len(prefix):]
        return " ".join(text.split())


_CLASSES = {
    "fillmask": HFFillMask,
    "ner": HFNer,
    "translator": HFTranslator,
    "paraphraser": HFParaphraser,
    "classifier": HFClassifier,
    "completer": HFCompleter,
}


def load(kind: str, model_id: str | None, device, params: Mapping[str, Any]):
    role = EXTERNAL_KINDS.get(kind)
    if role is None:
        raise ConfigError(f"unknown external backend kind {kind!r}")
    model_id = model_id or DEFAULT_MODELS.get(role)
    if model_id is None:
        raise ConfigError(f"{kind} needs a 'model_id'; there is no default {role} model")
    extra = {"aggregation_strategy": "simple"} if role == "ner" else {}
    pipe = _pipeline(role, model_id, device, **extra)
    return _CLASSES[role](kind, pipe, model_id, params)

"""Sentence cleaning and whitespace tokenization for Devanagari text."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

DEVANAGARI_START, DEVANAGARI_END = 0x0900, 0x097F

# Punctuation that lives inside the Devanagari block: danda, double danda, abbreviation sign.
_DEVANAGARI_PUNCT = frozenset("।॥॰")

_URL_RE = re.compile(r"(?:https?://|www\.)\S*", re.IGNORECASE)
_HASHTAG_WORD_RE = re.compile(r"#\S*")
_WS_RE = re.compile(r"\s+")


def _keep(ch: str) -> bool:
    cp = ord(ch)
    if DEVANAGARI_START <= cp <= DEVANAGARI_END:
        return ch not in _DEVANAGARI_PUNCT
    return "0" <= ch <= "9"


def clean_text(text: str, drop_hashtag_words: bool = False) -> str:
    """Strip links, hashtags, punctuation and non-Devanagari content.

    The result holds only Devanagari letters and signs, ASCII or Devanagari
    digits, and single spaces. By default only the ``#`` is removed from a
    hashtag and its word is kept if it survives the script filter; with
    ``drop_hashtag_words`` the whole tag goes.
    """
    text = _URL_RE.sub(" ", text)
    if drop_hashtag_words:
        text = _HASHTAG_WORD_RE.sub(" ", text)
    out = []
    for ch in text:
        if _keep(ch):
            out.append(ch)
        elif unicodedata.category(ch) == "Cf":
            # ZWJ/ZWNJ and friends sit inside words; dropping them must not split the word
            continue
        else:
            out.append(" ")
    return _WS_RE.sub(" ", "".join(out)).strip()


@dataclass(frozen=True)
class TokenizedSentence:
    words: tuple[str, ...]

    @property
    def joined(self) -> str:
        return " ".join(self.words)

    def __len__(self) -> int:
        return len(self.words)


def tokenize(text: str) -> TokenizedSentence:
    return TokenizedSentence(tuple(text.split()))


def check_word(word: str) -> str:
    if not word or any(c.isspace() for c in word):
        raise ValueError(f"not a single word: {word!r}")
    return word


def detokenize(words) -> str:
    return " ".join(check_word(w) for w in words)

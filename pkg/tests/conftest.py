import random

import pytest

from augmenta.corpus import Dataset

POSITIVE_WORDS = ["छान", "सुंदर", "आनंद", "उत्तम"]
NEGATIVE_WORDS = ["वाईट", "दुःख", "राग", "खराब"]
FILLER_WORDS = ["आज", "मुंबई", "पुणे", "सरकार", "लोक", "बातमी", "खेळ", "शाळा", "राम", "गाव", "पाऊस", "काम"]
PLACES = {"मुंबई": "Location", "पुणे": "Location", "राम": "Person", "सरकार": "Organization", "आज": "Other"}

# registry filled by test_acceptance and printed at the end of the run
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def synthetic_sentence(rng: random.Random, label: int, min_len=3, max_len=12) -> str:
    n = rng.randint(min_len, max_len)
    words = [rng.choice(FILLER_WORDS) for _ in range(n)]
    if label == 1:
        words[rng.randrange(n)] = rng.choice(POSITIVE_WORDS)
    elif label == 0:
        words[rng.randrange(n)] = rng.choice(NEGATIVE_WORDS)
    return " ".join(words)


def synthetic_corpus(n: int, seed: int = 0, domain="synthetic", split="train") -> Dataset:
    rng = random.Random(seed)
    pairs = []
    for _ in range(n):
        label = rng.choice([0, 1, 2])
        pairs.append((synthetic_sentence(rng, label), label))
    return Dataset.from_pairs(pairs, domain=domain, split=split)


def raw_tweet(rng: random.Random, text: str) -> str:
    """Dirty a clean sentence the way tweets are dirty."""
    words = text.split()
    i = rng.randrange(len(words))
    words[i] = "#" + words[i]
    extras = ["https://t.co/ab12", "!!", "wow", "@user", "...", "।"]
    words.insert(rng.randrange(len(words) + 1), rng.choice(extras))
    return " ".join(words)


@pytest.fixture
def corpus_factory():
    return synthetic_corpus


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")

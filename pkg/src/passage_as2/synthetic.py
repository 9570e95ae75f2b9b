"""Seeded toy corpus with a planted answer signal.

Each question names a marker token drawn from a small pool of rare words;
its correct answer sentences are the ones that mention the same marker.
Some judged negatives mention a *different* marker, so a model cannot win by
spotting any marker: it has to match the question's.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import NEGATIVE, POSITIVE, Document, QAPair, sentence_id, write_jsonl

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w"]
_VOWELS = ["a", "e", "i", "o", "u"]
_TOPICS = ["color", "size", "origin", "weight", "price", "age", "shape", "speed", "height", "owner"]


def _pseudo_words(rng: np.random.Generator, n: int, syllables: int, taken: set[str]) -> list[str]:
    words: list[str] = []
    while len(words) < n:
        w = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(syllables))
        if w not in taken:
            taken.add(w)
            words.append(w)
    return words


# the word inventory is fixed; only the corpus draw depends on the seed
_rng0 = np.random.default_rng(20240101)
_taken: set[str] = set(_TOPICS)
FILLER = _pseudo_words(_rng0, 240, 2, _taken)
MARKERS = [w + "x" for w in _pseudo_words(_rng0, 200, 3, _taken)]


@dataclass(frozen=True)
class SyntheticConfig:
    n_questions: int = 500
    seed: int = 0
    positive_rate: float = 0.38
    labeled_per_question: int = 8
    distractor_rate: float = 0.15
    n_markers: int = 10
    sentences_per_doc: tuple[int, int] = (10, 14)
    words_per_sentence: tuple[int, int] = (5, 5)

    def __post_init__(self):
        if self.n_questions < 1:
            raise ValueError("n_questions must be positive")
        if not 0 < self.positive_rate <= 1:
            raise ValueError("positive_rate must lie in (0, 1]")
        if self.labeled_per_question < 1:
            raise ValueError("labeled_per_question must be positive")
        if not 1 <= self.n_markers <= len(MARKERS):
            raise ValueError(f"n_markers must lie in [1, {len(MARKERS)}]")
        if self.labeled_per_question > 2 * self.sentences_per_doc[0]:
            raise ValueError("labeled_per_question exceeds the sentences available in two documents")


def _sentence(rng, cfg: SyntheticConfig, extra: list[str]) -> str:
    n = int(rng.integers(cfg.words_per_sentence[0], cfg.words_per_sentence[1] + 1))
    words = [str(w) for w in rng.choice(FILLER, size=n)]
    # every sentence carries two planted slots, padded with filler, so kinds share a length profile
    extra = extra + [str(w) for w in rng.choice(FILLER, size=2 - len(extra))]
    for token in extra:
        words.insert(int(rng.integers(0, len(words) + 1)), token)
    words[0] = words[0].capitalize()
    return " ".join(words) + "."


def generate(cfg: SyntheticConfig) -> tuple[list[Document], dict[str, str], list[QAPair]]:
    rng = np.random.default_rng(cfg.seed)
    pool = MARKERS[: cfg.n_markers]
    k = cfg.labeled_per_question
    # one positive is guaranteed; the rest are Bernoulli so the pooled rate hits positive_rate
    extra_p = 0.0 if k == 1 else min(max((cfg.positive_rate * k - 1) / (k - 1), 0.0), 1.0)

    documents: list[Document] = []
    questions: dict[str, str] = {}
    labels: list[QAPair] = []
    width = len(str(cfg.n_questions - 1))
    for qi in range(cfg.n_questions):
        qid = f"q{qi:0{width}d}"
        marker = pool[int(rng.integers(len(pool)))]
        others = [m for m in pool if m != marker] or [marker]
        topic = str(rng.choice(_TOPICS))
        questions[qid] = f"What is the {topic} of {marker.capitalize()}?"

        n_pos = 1 + int(rng.binomial(k - 1, extra_p))
        n_a = int(rng.integers(cfg.sentences_per_doc[0], cfg.sentences_per_doc[1] + 1))
        n_b = int(rng.integers(cfg.sentences_per_doc[0], cfg.sentences_per_doc[1] + 1))
        n_neg = k - n_pos
        # answer document holds every positive plus part of the judged negatives
        neg_in_a = min(int(rng.integers(0, n_neg + 1)), n_a - n_pos)
        neg_in_b = n_neg - neg_in_a
        if neg_in_b > n_b:
            neg_in_a += neg_in_b - n_b
            neg_in_b = n_b
        slots_a = rng.permutation(n_a)[: n_pos + neg_in_a]
        pos_slots = set(int(i) for i in slots_a[:n_pos])
        neg_slots_a = set(int(i) for i in slots_a[n_pos:])
        neg_slots_b = set(int(i) for i in rng.permutation(n_b)[:neg_in_b])

        for d_idx, (n_sent, pos, neg) in enumerate([(n_a, pos_slots, neg_slots_a), (n_b, set(), neg_slots_b)]):
            doc_id = f"{qid}-d{d_idx}"
            texts = []
            for si in range(n_sent):
                if si in pos:
                    extra = [marker, topic]
                elif si in neg and rng.random() < cfg.distractor_rate:
                    extra = [str(rng.choice(others)), topic]
                elif si in neg:
                    extra = [topic]
                else:
                    extra = []
                texts.append(_sentence(rng, cfg, extra))
                if si in pos or si in neg:
                    labels.append(QAPair(qid, doc_id, sentence_id(doc_id, si), texts[-1],
                                         POSITIVE if si in pos else NEGATIVE))
            documents.append(Document(doc_id, f"Notes on {topic} {d_idx}", " ".join(texts)))
    return documents, questions, labels


def gen_synthetic(n_questions: int, seed: int, out_dir: str | Path | None = None,
                  **overrides) -> tuple[list[Document], dict[str, str], list[QAPair]]:
    """Generate a corpus and, if ``out_dir`` is given, write the three raw JSONL files."""
    cfg = SyntheticConfig(n_questions=n_questions, seed=seed, **overrides)
    docs, questions, labels = generate(cfg)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_jsonl(out / "documents.jsonl", ({"doc_id": d.doc_id, "title": d.title, "body": d.body} for d in docs))
        write_jsonl(out / "questions.jsonl", ({"question_id": q, "text": t} for q, t in questions.items()))
        write_jsonl(out / "qa_labels.jsonl", (qa.to_record() for qa in labels))
    return docs, questions, labels

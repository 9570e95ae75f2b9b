"""Tokenization, vocabulary and pair encoding."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

PAD, CLS, SEP, UNK = "[PAD]", "[CLS]", "[SEP]", "[UNK]"
RESERVED = (PAD, CLS, SEP, UNK)
PAD_ID, CLS_ID, SEP_ID, UNK_ID = range(4)

DEFAULT_MAX_SEQ_LEN = 128

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_BOUNDARY_RE = re.compile(r"[.?!]\s+")


class QuestionTooLong(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, emit each punctuation mark as a token.

    >>> tokenize("What is AS2?")
    ['what', 'is', 'as2', '?']
    """
    return _TOKEN_RE.findall(text.lower())


def split_sentences(text: str) -> list[str]:
    """Cut after '.', '?' or '!' when whitespace and then an uppercase letter follow."""
    sentences = []
    start = 0
    for m in _BOUNDARY_RE.finditer(text):
        nxt = m.end()
        if nxt < len(text) and text[nxt].isupper():
            sentences.append(text[start:m.start() + 1])
            start = nxt
    sentences.append(text[start:])
    return [s.strip() for s in sentences if s.strip()]


@dataclass(frozen=True)
class Vocabulary:
    """Immutable token -> id map with the four reserved ids in front."""

    token_to_id: dict[str, int] = field(repr=False)

    def __post_init__(self):
        for i, tok in enumerate(RESERVED):
            if self.token_to_id.get(tok) != i:
                raise ValueError(f"reserved token {tok} must map to id {i}")
        ids = sorted(self.token_to_id.values())
        if ids != list(range(len(ids))):
            raise ValueError("vocabulary ids must be contiguous from 0")
        object.__setattr__(self, "_id_to_token", {i: t for t, i in self.token_to_id.items()})

    @classmethod
    def build(cls, token_lists: Iterable[Sequence[str]], min_freq: int = 1) -> Vocabulary:
        counts = Counter(tok for tokens in token_lists for tok in tokens if tok not in RESERVED)
        kept = sorted((t for t, c in counts.items() if c >= min_freq), key=lambda t: (-counts[t], t))
        mapping = {tok: i for i, tok in enumerate(RESERVED)}
        for tok in kept:
            mapping[tok] = len(mapping)
        return cls(mapping)

    def __len__(self) -> int:
        return len(self.token_to_id)

    @property
    def size(self) -> int:
        return len(self.token_to_id)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def id(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def ids(self, tokens: Iterable[str]) -> list[int]:
        return [self.token_to_id.get(t, UNK_ID) for t in tokens]

    def token(self, idx: int) -> str:
        return self._id_to_token[idx]

    def save(self, path: str | Path) -> None:
        lines = [f"{tok}\t{i}\n" for tok, i in sorted(self.token_to_id.items(), key=lambda kv: kv[1])]
        Path(path).write_text("".join(lines), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> Vocabulary:
        mapping = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line:
                continue
            tok, idx = line.rsplit("\t", 1)
            mapping[tok] = int(idx)
        return cls(mapping)


@dataclass(frozen=True)
class TokenSequence:
    ids: tuple[int, ...]
    segments: tuple[int, ...]

    def __post_init__(self):
        if len(self.ids) != len(self.segments):
            raise ValueError("ids and segments must have equal length")

    @property
    def positions(self) -> tuple[int, ...]:
        return tuple(range(len(self.ids)))

    def __len__(self) -> int:
        return len(self.ids)


def encode_pair(question_tokens: Sequence[str], body_tokens: Sequence[str], vocab: Vocabulary,
                max_seq_len: int = DEFAULT_MAX_SEQ_LEN) -> TokenSequence:
    """Build ``[CLS] q [SEP] body``; the body is cut from the right to fit."""
    if max_seq_len < 4:
        raise ValueError(f"max_seq_len must be at least 4, got {max_seq_len}")
    head = len(question_tokens) + 2
    if head > max_seq_len:
        raise QuestionTooLong(f"question of {len(question_tokens)} tokens does not fit max_seq_len={max_seq_len}")
    body = list(body_tokens[: max_seq_len - head])
    ids = [CLS_ID, *vocab.ids(question_tokens), SEP_ID, *vocab.ids(body)]
    segments = [0] * head + [1] * len(body)
    return TokenSequence(tuple(ids), tuple(segments))


def join_sentences(sentence_tokens: Sequence[Sequence[str]]) -> list[str]:
    """s1 [SEP] s2 ... [SEP] sk, no trailing separator."""
    body: list[str] = []
    for i, toks in enumerate(sentence_tokens):
        if i:
            body.append(SEP)
        body.extend(toks)
    return body


def encode_candidates(question_tokens: Sequence[str], sentence_tokens: Sequence[Sequence[str]],
                      vocab: Vocabulary, max_seq_len: int = DEFAULT_MAX_SEQ_LEN) -> tuple[TokenSequence, int]:
    """Encode a question against a passage's sentence list.

    Returns the sequence and how many sentences kept at least one token
    after truncation.
    """
    seq = encode_pair(question_tokens, join_sentences(sentence_tokens), vocab, max_seq_len)
    body_len = len(seq) - len(question_tokens) - 2
    kept, offset = 0, 0
    for i, toks in enumerate(sentence_tokens):
        first = offset + (1 if i else 0)
        if first >= body_len:
            break
        kept += 1
        offset = first + len(toks)
    return seq, kept

"""Question/passage data model and the dataset-construction steps.

Documents are split into sentences; every judged sentence spawns up to five
sliding windows that contain it (at in-passage positions 1..5), windows are
labeled positive iff they hold a positive sentence, and an optional group
filter (all / center / random) thins the windows per judged sentence.
"""
from __future__ import annotations

import json
import logging
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .text import split_sentences, tokenize

log = logging.getLogger(__name__)

POSITIVE, NEGATIVE, UNLABELED = "positive", "negative", "unlabeled"
SPLITS = ("train", "dev", "test")
GROUPS = ("all", "center", "random")

MAX_PASSAGE_TOKENS = 200
MAX_WINDOWS = 5
K_MAX = 5


class UnknownSentence(KeyError):
    pass


class EmptyGroup(ValueError):
    pass


class PassageTooLong(AssertionError):
    pass


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    body: str


@dataclass(frozen=True)
class LabeledSentence:
    sent_id: str
    text: str
    label: str = UNLABELED

    @property
    def positive(self) -> bool:
        return self.label == POSITIVE


@dataclass(frozen=True)
class Passage:
    passage_id: str
    doc_id: str
    question_id: str
    sentences: tuple[LabeledSentence, ...]
    label: str | None = None
    answer_position: int | None = None

    def __post_init__(self):
        n_tokens = sum(len(tokenize(s.text)) for s in self.sentences)
        if n_tokens > MAX_PASSAGE_TOKENS:
            raise PassageTooLong(f"passage {self.passage_id} has {n_tokens} tokens > {MAX_PASSAGE_TOKENS}")
        if not self.sentences:
            raise ValueError(f"passage {self.passage_id} has no sentences")

    @property
    def positive(self) -> bool:
        return self.label == POSITIVE

    @property
    def sentence_count(self) -> int:
        return len(self.sentences)

    def position_of(self, sent_id: str) -> int | None:
        for i, s in enumerate(self.sentences, 1):
            if s.sent_id == sent_id:
                return i
        return None

    @property
    def text(self) -> str:
        return " ".join(s.text for s in self.sentences)

    def to_record(self) -> dict:
        return {
            "passage_id": self.passage_id,
            "doc_id": self.doc_id,
            "question_id": self.question_id,
            "sentences": [{"sent_id": s.sent_id, "text": s.text, "label": s.label} for s in self.sentences],
            "label": self.label,
            "answer_position": self.answer_position,
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> Passage:
        return cls(
            passage_id=rec["passage_id"],
            doc_id=rec["doc_id"],
            question_id=rec["question_id"],
            sentences=tuple(LabeledSentence(s["sent_id"], s["text"], s.get("label", UNLABELED))
                            for s in rec["sentences"]),
            label=rec.get("label"),
            answer_position=rec.get("answer_position"),
        )


@dataclass(frozen=True)
class QAPair:
    question_id: str
    doc_id: str
    sent_id: str
    text: str
    label: str

    def to_record(self) -> dict:
        return {"question_id": self.question_id, "doc_id": self.doc_id, "sent_id": self.sent_id,
                "text": self.text, "label": self.label}


@dataclass
class DatasetSplit:
    name: str
    questions: dict[str, str] = field(default_factory=dict)
    passages: list[Passage] = field(default_factory=list)
    qa_pairs: list[QAPair] = field(default_factory=list)

    def passages_by_question(self) -> dict[str, list[Passage]]:
        out: dict[str, list[Passage]] = {qid: [] for qid in self.questions}
        for p in self.passages:
            out.setdefault(p.question_id, []).append(p)
        return out

    def sentence_labels(self) -> dict[tuple[str, str], str]:
        return {(qa.question_id, qa.sent_id): qa.label for qa in self.qa_pairs}


# ---------------------------------------------------------------------------
# sentence ids and windows
# ---------------------------------------------------------------------------

def sentence_id(doc_id: str, index: int) -> str:
    return f"{doc_id}#{index}"


def truncate_to_tokens(text: str, max_tokens: int) -> str:
    """Cut ``text`` right after its ``max_tokens``-th token."""
    spans = [m.end() for m in re.finditer(r"\w+|[^\w\s]", text.lower())]
    return text if len(spans) <= max_tokens else text[: spans[max_tokens - 1]]


def document_sentences(doc: Document, max_tokens: int = MAX_PASSAGE_TOKENS) -> list[LabeledSentence]:
    return [LabeledSentence(sentence_id(doc.doc_id, i), truncate_to_tokens(s, max_tokens))
            for i, s in enumerate(split_sentences(doc.body))]


def windows_for_sentence(document_sentences: Sequence[LabeledSentence], target_index: int,
                         max_tokens: int = MAX_PASSAGE_TOKENS, max_windows: int = MAX_WINDOWS,
                         k_max: int = K_MAX, doc_id: str = "", question_id: str = "") -> list[Passage]:
    """Contiguous windows holding the target at positions 1, 2, ... in turn.

    Each window starts ``position - 1`` sentences before the target and then
    grows to the right while the token budget and ``k_max`` allow.
    """
    n = len(document_sentences)
    if not 0 <= target_index < n:
        raise IndexError(f"target_index {target_index} outside document of {n} sentences")
    lengths = [len(tokenize(s.text)) for s in document_sentences]
    if lengths[target_index] > max_tokens:
        raise ValueError(f"target sentence has {lengths[target_index]} tokens > max_tokens={max_tokens}")

    windows = []
    seen = set()
    for position in range(1, min(max_windows, k_max) + 1):
        start = target_index - (position - 1)
        if start < 0:
            break
        used = sum(lengths[start:target_index + 1])
        if used > max_tokens:
            break
        end = target_index
        while end + 1 < n and end + 2 - start <= k_max and used + lengths[end + 1] <= max_tokens:
            end += 1
            used += lengths[end]
        if (start, end) in seen:
            continue
        seen.add((start, end))
        pid = f"{question_id}/{doc_id}:{start}-{end}" if question_id else f"{doc_id}:{start}-{end}"
        windows.append(Passage(pid, doc_id, question_id, tuple(document_sentences[start:end + 1])))
    return windows


# ---------------------------------------------------------------------------
# labels, groups, stats
# ---------------------------------------------------------------------------

def propagate_labels(question_id: str, labeled_sentences: Iterable[LabeledSentence],
                     passages: Iterable[Passage]) -> list[Passage]:
    """Copy sentence judgments into passages; a passage is positive iff it holds a positive sentence.

    ``labeled_sentences`` is the full sentence list of the source document(s)
    with this question's judgments; unjudged sentences count as negative.
    """
    by_id = {s.sent_id: s for s in labeled_sentences}
    out = []
    for p in passages:
        sents = []
        for s in p.sentences:
            if s.sent_id not in by_id:
                raise UnknownSentence(f"passage {p.passage_id} references unknown sentence {s.sent_id}")
            sents.append(by_id[s.sent_id])
        answer = next((i for i, s in enumerate(sents, 1) if s.positive), None)
        out.append(replace(p, question_id=question_id, sentences=tuple(sents),
                           label=POSITIVE if answer else NEGATIVE, answer_position=answer))
    return out


def select_passage_group(passages_per_answer: Mapping[tuple[str, str], Sequence[Passage]], group: str,
                         seed: int = 0, strict: bool = False) -> list[Passage]:
    """Thin each (question_id, sentence_id) group of windows.

    ``center`` keeps windows whose judged sentence sits at ceil(count / 2);
    when none does, the window closest to its center is kept (smaller position
    on ties) unless ``strict`` asks for :class:`EmptyGroup` instead.
    ``random`` keeps one uniformly drawn window per group.
    """
    if group not in GROUPS:
        raise ValueError(f"unknown passage group {group!r}; expected one of {GROUPS}")
    keys = sorted(passages_per_answer)
    if group == "all":
        return [p for k in keys for p in passages_per_answer[k]]
    if group == "random":
        rng = np.random.default_rng(seed)
        out = []
        for k in keys:
            cands = passages_per_answer[k]
            if cands:
                out.append(cands[int(rng.integers(len(cands)))])
        return out

    out = []
    for key in keys:
        cands = passages_per_answer[key]
        if not cands:
            continue
        sent = key[1]
        offsets = []
        for p in cands:
            pos = p.position_of(sent)
            if pos is None:
                raise UnknownSentence(f"passage {p.passage_id} does not contain grouped sentence {sent}")
            offsets.append((abs(pos - math.ceil(p.sentence_count / 2)), pos))
        kept = [p for p, (off, _) in zip(cands, offsets) if off == 0]
        if not kept:
            if strict:
                raise EmptyGroup(f"no window centers sentence {sent} for question {key[0]}")
            kept = [cands[min(range(len(cands)), key=lambda i: offsets[i])]]
        out.extend(kept)
    return out


def split_stats(split: DatasetSplit) -> dict[str, int]:
    qp_pos = sum(1 for p in split.passages if p.positive)
    qa_pos = sum(1 for qa in split.qa_pairs if qa.label == POSITIVE)
    return {
        "split": split.name,
        "questions": len(split.questions),
        "documents": len({p.doc_id for p in split.passages}),
        "qp_pairs": len(split.passages),
        "qp_pos": qp_pos,
        "qp_neg": len(split.passages) - qp_pos,
        "qa_pairs": len(split.qa_pairs),
        "qa_pos": qa_pos,
        "qa_neg": len(split.qa_pairs) - qa_pos,
    }


def assign_splits(question_ids: Iterable[str], seed: int = 0,
                  fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)) -> dict[str, str]:
    qids = sorted(question_ids)
    order = np.random.default_rng(seed).permutation(len(qids))
    n_train = int(round(fractions[0] * len(qids)))
    n_dev = int(round(fractions[1] * len(qids)))
    out = {}
    for rank, i in enumerate(order):
        out[qids[i]] = "train" if rank < n_train else "dev" if rank < n_train + n_dev else "test"
    return out


# ---------------------------------------------------------------------------
# end-to-end build
# ---------------------------------------------------------------------------

def build_question_passages(question_id: str, docs: Mapping[str, Document], labels: Sequence[QAPair],
                            group: str = "all", seed: int = 0, max_tokens: int = MAX_PASSAGE_TOKENS,
                            max_windows: int = MAX_WINDOWS, k_max: int = K_MAX) -> list[Passage]:
    """Windows around every judged sentence of one question, grouped, labeled, deduplicated."""
    by_doc: dict[str, list[QAPair]] = defaultdict(list)
    for qa in labels:
        by_doc[qa.doc_id].append(qa)

    groups: dict[tuple[str, str], list[Passage]] = {}
    judged: dict[str, list[LabeledSentence]] = {}
    for doc_id in sorted(by_doc):
        if doc_id not in docs:
            raise UnknownSentence(f"labels reference unknown document {doc_id}")
        sents = document_sentences(docs[doc_id], max_tokens)
        index = {s.sent_id: i for i, s in enumerate(sents)}
        verdict = {}
        for qa in by_doc[doc_id]:
            if qa.sent_id not in index:
                raise UnknownSentence(f"label references sentence {qa.sent_id} absent from {doc_id}")
            verdict[qa.sent_id] = qa.label
        judged[doc_id] = [replace(s, label=verdict.get(s.sent_id, UNLABELED)) for s in sents]
        for sid in sorted(verdict, key=index.__getitem__):
            groups[(question_id, sid)] = windows_for_sentence(
                sents, index[sid], max_tokens, max_windows, k_max, doc_id=doc_id, question_id=question_id)

    kept = select_passage_group(groups, group, seed=seed)
    seen = set()
    out = []
    for p in kept:
        if p.passage_id in seen:
            continue
        seen.add(p.passage_id)
        out.extend(propagate_labels(question_id, judged[p.doc_id], [p]))
    return out


def build_corpus(documents: Iterable[Document], questions: Mapping[str, str], qa_labels: Iterable[QAPair],
                 group: str = "all", seed: int = 0, fractions=(0.8, 0.1, 0.1),
                 max_tokens: int = MAX_PASSAGE_TOKENS, max_windows: int = MAX_WINDOWS,
                 k_max: int = K_MAX) -> dict[str, DatasetSplit]:
    docs = {d.doc_id: d for d in documents}
    labels_by_q: dict[str, list[QAPair]] = defaultdict(list)
    for qa in qa_labels:
        labels_by_q[qa.question_id].append(qa)
    assignment = assign_splits(questions, seed=seed, fractions=fractions)
    splits = {name: DatasetSplit(name) for name in SPLITS}
    for qid in sorted(questions):
        split = splits[assignment[qid]]
        split.questions[qid] = questions[qid]
        q_labels = labels_by_q.get(qid, [])
        split.qa_pairs.extend(q for q in q_labels if q.label in (POSITIVE, NEGATIVE))
        # group seed is mixed with the question id so a question's draw does not depend on its neighbours
        q_seed = int(np.random.default_rng([seed, *qid.encode()]).integers(2**31))
        split.passages.extend(build_question_passages(qid, docs, q_labels, group, q_seed,
                                                      max_tokens, max_windows, k_max))
    return splits


# ---------------------------------------------------------------------------
# JSON lines
# ---------------------------------------------------------------------------

def write_jsonl(path: str | Path, records: Iterable[Mapping]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None


def load_raw(in_dir: str | Path) -> tuple[list[Document], dict[str, str], list[QAPair]]:
    in_dir = Path(in_dir)
    docs = [Document(r["doc_id"], r.get("title", ""), r["body"]) for r in read_jsonl(in_dir / "documents.jsonl")]
    questions = {r["question_id"]: r["text"] for r in read_jsonl(in_dir / "questions.jsonl")}
    labels = [QAPair(r["question_id"], r["doc_id"], r["sent_id"], r["text"], r["label"])
              for r in read_jsonl(in_dir / "qa_labels.jsonl")]
    return docs, questions, labels


def save_split(split: DatasetSplit, out_dir: str | Path) -> None:
    d = Path(out_dir) / split.name
    d.mkdir(parents=True, exist_ok=True)
    write_jsonl(d / "questions.jsonl", ({"question_id": q, "text": t} for q, t in split.questions.items()))
    write_jsonl(d / "passages.jsonl", (p.to_record() for p in split.passages))
    write_jsonl(d / "qa_labels.jsonl", (qa.to_record() for qa in split.qa_pairs))


def load_split(out_dir: str | Path, name: str) -> DatasetSplit:
    d = Path(out_dir) / name
    if not d.is_dir():
        raise FileNotFoundError(f"split directory {d} not found")
    return DatasetSplit(
        name=name,
        questions={r["question_id"]: r["text"] for r in read_jsonl(d / "questions.jsonl")},
        passages=[Passage.from_record(r) for r in read_jsonl(d / "passages.jsonl")],
        qa_pairs=[QAPair(r["question_id"], r["doc_id"], r["sent_id"], r["text"], r["label"])
                  for r in read_jsonl(d / "qa_labels.jsonl")],
    )

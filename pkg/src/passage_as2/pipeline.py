"""Inference pipelines and per-question prediction accounting.

Three ways to answer a question from its candidate passages:

* ``as2``            score every sentence of every passage point-wise;
* ``peasi_top1``     rank passages, run the extractor once on the best one;
* ``peasi_all_as2``  rank passages, extract one candidate from each of the
                     top ``top_n``, rerank those candidates point-wise.

A *prediction* is one model forward pass over one input; the counts are what
the cost report multiplies by a per-prediction cost.
"""
from __future__ import annotations

import json
import math
import time
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Sequence

from .corpus import POSITIVE, DatasetSplit, Passage, select_passage_group
from .metrics import JudgedRanking, evaluate
from .text import tokenize

MODES = ("as2", "peasi_top1", "peasi_all_as2")
DEFAULT_COSTS_MS = {"as2": 11.7, "pr": 10.9, "easi": 10.0}
DEFAULT_TOP_N = 5


class NoCandidates(ValueError):
    pass


class UnknownMode(ValueError):
    pass


@dataclass(frozen=True)
class RankedList:
    """(item_id, score) pairs by descending score, ties by ascending id."""

    items: tuple[tuple, ...]

    @classmethod
    def from_scores(cls, ids: Sequence, scores: Sequence[float]) -> RankedList:
        if len(ids) != len(scores):
            raise ValueError("ids and scores must have equal length")
        pairs = sorted(zip(ids, (float(s) for s in scores)), key=lambda it: (-it[1], it[0]))
        return cls(tuple(pairs))

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def ids(self) -> list:
        return [i for i, _ in self.items]

    def top(self, n: int) -> RankedList:
        return RankedList(self.items[:n])


@dataclass
class AnswerResult:
    question_id: str
    mode: str
    sentence_id: str
    answer_text: str
    passage_id: str
    prediction_count: int
    component_counts: dict[str, int]
    candidates: list[tuple[str, str, float]] = field(default_factory=list)  # (passage_id, sent_id, score)
    measured_ms: dict[str, float] = field(default_factory=dict)

    def to_record(self) -> dict:
        return {"question_id": self.question_id, "mode": self.mode, "answer_text": self.answer_text,
                "passage_id": self.passage_id, "predictions": self.prediction_count}

    def to_log(self) -> dict:
        return {"question_id": self.question_id, "mode": self.mode, "predictions": self.prediction_count,
                "components": dict(self.component_counts), "measured_ms": dict(self.measured_ms)}


# ---------------------------------------------------------------------------
# toy lexical retriever
# ---------------------------------------------------------------------------

def idf_table(token_sets: Sequence[set[str]]) -> dict[str, float]:
    """BM25-style idf, strictly positive for every token in the pool."""
    n = len(token_sets)
    df = Counter(t for ts in token_sets for t in ts)
    return {t: math.log(1.0 + (n - c + 0.5) / (c + 0.5)) for t, c in df.items()}


def retrieve(question: str, passage_pool: Sequence[Passage], top_n: int) -> RankedList:
    """Rank passages by idf-weighted overlap of distinct question tokens."""
    if not passage_pool:
        raise NoCandidates("empty passage pool")
    token_sets = [set(tokenize(p.text)) for p in passage_pool]
    idf = idf_table(token_sets)
    q = set(tokenize(question))
    scores = [sum(idf[t] for t in q & ts) for ts in token_sets]
    return RankedList.from_scores([p.passage_id for p in passage_pool], scores).top(top_n)


# ---------------------------------------------------------------------------
# pipeline modes
# ---------------------------------------------------------------------------

def _require(passages: Sequence[Passage]) -> None:
    if not passages:
        raise NoCandidates("no candidate passages")


def _timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, (time.perf_counter() - t0) * 1000.0


def run_as2(question: str, passages: Sequence[Passage], sentence_model, question_id: str = "") -> AnswerResult:
    """Point-wise baseline: every sentence occurrence is one prediction."""
    _require(passages)
    items = [(p.passage_id, pos, s) for p in passages for pos, s in enumerate(p.sentences)]
    if not items:
        raise NoCandidates("passages hold no sentences")
    unique = sorted({s.text for _, _, s in items})
    scores, ms = _timed(sentence_model.score_sentences, question, unique)
    by_text = dict(zip(unique, scores))
    ranked = RankedList.from_scores([(pid, pos) for pid, pos, _ in items], [by_text[s.text] for _, _, s in items])
    lookup = {(pid, pos): s for pid, pos, s in items}
    best_pid, best_pos = ranked.items[0][0]
    best = lookup[(best_pid, best_pos)]
    return AnswerResult(
        question_id, "as2", best.sent_id, best.text, best_pid, len(items), {"as2": len(items)},
        candidates=[(pid, lookup[(pid, pos)].sent_id, sc) for (pid, pos), sc in ranked],
        measured_ms={"as2": ms},
    )


def _rank_passages(question, passages, pr_model):
    scores, ms = _timed(pr_model.score_passages, question, passages)
    ranked = RankedList.from_scores([p.passage_id for p in passages], scores)
    by_id = {p.passage_id: p for p in passages}
    return [by_id[i] for i in ranked.ids], ms


def run_peasi_top1(question: str, passages: Sequence[Passage], pr_model, easi_model,
                   question_id: str = "") -> AnswerResult:
    _require(passages)
    ordered, pr_ms = _rank_passages(question, passages, pr_model)
    top = ordered[0]
    (probs, idx), easi_ms = _timed(easi_model.extract, question, top)
    chosen = top.sentences[idx]
    return AnswerResult(
        question_id, "peasi_top1", chosen.sent_id, chosen.text, top.passage_id, len(passages) + 1,
        {"pr": len(passages), "easi": 1},
        candidates=[(top.passage_id, chosen.sent_id, float(probs[idx]))],
        measured_ms={"pr": pr_ms, "easi": easi_ms},
    )


def run_peasi_all_as2(question: str, passages: Sequence[Passage], pr_model, easi_model, sentence_model,
                      top_n: int = DEFAULT_TOP_N, question_id: str = "") -> AnswerResult:
    """Extract one candidate from each top passage, then rerank the candidates point-wise.

    When fewer than ``top_n`` passages exist, all of them are used and the
    count uses the number actually processed.
    """
    _require(passages)
    if top_n < 1:
        raise ValueError("top_n must be at least 1")
    ordered, pr_ms = _rank_passages(question, passages, pr_model)
    chosen = ordered[:top_n]
    (_, idx), easi_ms = _timed(easi_model.extract_many, question, chosen)
    cands = [(p.passage_id, p.sentences[int(i)]) for p, i in zip(chosen, idx)]
    scores, s_ms = _timed(sentence_model.score_sentences, question, [s.text for _, s in cands])
    # candidate order (PR rank) is the tie-break key
    ranked = RankedList.from_scores(list(range(len(cands))), scores)
    best_pid, best = cands[ranked.items[0][0]]
    n = len(chosen)
    return AnswerResult(
        question_id, "peasi_all_as2", best.sent_id, best.text, best_pid, len(passages) + 2 * n,
        {"pr": len(passages), "easi": n, "as2": n},
        candidates=[(cands[i][0], cands[i][1].sent_id, sc) for i, sc in ranked],
        measured_ms={"pr": pr_ms, "easi": easi_ms, "as2": s_ms},
    )


def run_mode(mode: str, question: str, passages: Sequence[Passage], models: Mapping[str, object],
             top_n: int = DEFAULT_TOP_N, question_id: str = "") -> AnswerResult:
    """``models`` maps role ('pr', 'easi', 'sentence') to a trained model."""
    if mode == "as2":
        return run_as2(question, passages, models["sentence"], question_id)
    if mode == "peasi_top1":
        return run_peasi_top1(question, passages, models["pr"], models["easi"], question_id)
    if mode == "peasi_all_as2":
        return run_peasi_all_as2(question, passages, models["pr"], models["easi"], models["sentence"],
                                 top_n, question_id)
    raise UnknownMode(f"unknown pipeline mode {mode!r}; expected one of {MODES}")


# ---------------------------------------------------------------------------
# evaluation over a split
# ---------------------------------------------------------------------------

def group_filter(split: DatasetSplit, group: str, seed: int = 0) -> list[Passage]:
    """Apply a passage group per (question, judged sentence) to an already built split."""
    if group == "all":
        return list(split.passages)
    groups: dict[tuple[str, str], list[Passage]] = defaultdict(list)
    judged = {(qa.question_id, qa.sent_id) for qa in split.qa_pairs}
    for p in split.passages:
        for s in p.sentences:
            if (p.question_id, s.sent_id) in judged:
                groups[(p.question_id, s.sent_id)].append(p)
    kept = select_passage_group(groups, group, seed=seed)
    ids = {p.passage_id for p in kept}
    return [p for p in split.passages if p.passage_id in ids]


def evaluate_pipeline(mode: str, split: DatasetSplit, models: Mapping[str, object], top_n: int = DEFAULT_TOP_N,
                      passages: Sequence[Passage] | None = None,
                      retrieve_top_n: int | None = None) -> tuple[dict, list[AnswerResult]]:
    """Answer every question of ``split``; return metrics and per-question results.

    An answer is correct when its sentence is judged positive for the question.
    """
    if mode not in MODES:
        raise UnknownMode(f"unknown pipeline mode {mode!r}; expected one of {MODES}")
    pool = list(split.passages if passages is None else passages)
    by_q: dict[str, list[Passage]] = defaultdict(list)
    for p in pool:
        by_q[p.question_id].append(p)
    sent_label = {}
    for p in pool:
        for s in p.sentences:
            sent_label[(p.question_id, s.sent_id)] = int(s.label == POSITIVE)

    results, rankings = [], []
    for qid in sorted(split.questions):
        cands = by_q.get(qid, [])
        if retrieve_top_n is not None and pool:
            ranked = retrieve(split.questions[qid], pool, retrieve_top_n)
            by_id = {p.passage_id: p for p in pool}
            cands = [by_id[i] for i in ranked.ids]
        if not cands:
            rankings.append(None)
            continue
        res = run_mode(mode, split.questions[qid], cands, models, top_n, question_id=qid)
        results.append(res)
        labels = [sent_label.get((qid, sid), 0) for _, sid, _ in res.candidates]
        rankings.append(JudgedRanking(tuple(range(len(labels))), tuple(labels)))

    # questions without candidates stay in the denominator as misses
    scored = [r if r is not None else JudgedRanking((0,), (0,)) for r in rankings]
    m = evaluate(scored) if scored else {"p_at_1": 0.0, "map": 0.0, "mrr": 0.0, "n_questions": 0}
    if mode == "peasi_top1":
        m["map"] = None
        m["mrr"] = None
    return m, results


# ---------------------------------------------------------------------------
# cost accounting
# ---------------------------------------------------------------------------

_MODE_ROWS = {
    "as2": [("AS2", "as2")],
    "peasi_top1": [("PEASI:PR", "pr"), ("PEASI:EASI", "easi")],
    "peasi_all_as2": [("PEASI-AS2:PR", "pr"), ("PEASI-AS2:EASI", "easi"), ("PEASI-AS2:AS2", "as2")],
}
_TOTAL_ROW = {"peasi_top1": "PEASI:ALL", "peasi_all_as2": "PEASI-AS2:ALL"}


def round_half_up(x) -> int:
    return int(Decimal(str(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def _fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.1f}"


@dataclass
class CostRow:
    mode: str
    predictions: float
    cost_per_prediction_ms: float
    latency_ms: float
    measured_ms_per_prediction: float | None = None

    @property
    def latency_display(self) -> int:
        return round_half_up(self.latency_ms)


@dataclass
class CostReport:
    rows: list[CostRow]
    reductions: dict[str, float]

    def row(self, mode: str) -> CostRow:
        for r in self.rows:
            if r.mode == mode:
                return r
        raise KeyError(mode)

    def to_dict(self) -> dict:
        return {
            "rows": [dict(asdict(r), latency_display_ms=r.latency_display) for r in self.rows],
            "reductions": self.reductions,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def render(self) -> str:
        header = ["Model", "#Predictions", "Cost (ms)", "Latency (ms)", "Measured (ms/pred)"]
        body = [[r.mode, _fmt_num(r.predictions), f"{r.cost_per_prediction_ms:.1f}", f"{r.latency_display:,}",
                 "-" if r.measured_ms_per_prediction is None else f"{r.measured_ms_per_prediction:.3f}"]
                for r in self.rows]
        widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
        lines = ["  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(header, widths)))]
        lines.append("  ".join("-" * w for w in widths))
        for row in body:
            lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))))
        for mode, red in self.reductions.items():
            lines.append(f"prediction reduction {mode} vs as2: {red * 100:.1f}%")
        return "\n".join(lines)


def cost_report(run_logs: Iterable, cost_per_prediction: Mapping[str, float] | None = None) -> CostReport:
    """Per-question mean prediction counts times per-prediction cost, by pipeline component.

    ``run_logs`` holds :class:`AnswerResult` objects or their ``to_log()`` dicts.
    """
    costs = dict(DEFAULT_COSTS_MS if cost_per_prediction is None else cost_per_prediction)
    counts: dict[str, list[dict]] = defaultdict(list)
    measured: dict[tuple[str, str], list[float]] = defaultdict(list)
    for rec in run_logs:
        rec = rec.to_log() if isinstance(rec, AnswerResult) else rec
        mode = rec.get("mode")
        if mode not in _MODE_ROWS:
            raise UnknownMode(f"run log has unknown mode {mode!r}")
        comps = rec.get("components") or {_MODE_ROWS[mode][0][1]: rec["predictions"]}
        counts[mode].append(comps)
        for comp, ms in (rec.get("measured_ms") or {}).items():
            if comps.get(comp):
                measured[(mode, comp)].append(ms / comps[comp])

    rows: list[CostRow] = []
    totals: dict[str, float] = {}
    for mode in MODES:
        if mode not in counts:
            continue
        logs = counts[mode]
        total_pred, total_lat = Decimal(0), Decimal(0)
        for label, comp in _MODE_ROWS[mode]:
            if comp not in costs:
                raise UnknownMode(f"no per-prediction cost configured for {comp!r}")
            mean_pred = Decimal(sum(c.get(comp, 0) for c in logs)) / Decimal(len(logs))
            latency = mean_pred * Decimal(str(costs[comp]))
            m = measured.get((mode, comp))
            rows.append(CostRow(label, float(mean_pred), float(costs[comp]), float(latency),
                                sum(m) / len(m) if m else None))
            total_pred += mean_pred
            total_lat += latency
        if mode in _TOTAL_ROW:
            rows.append(CostRow(_TOTAL_ROW[mode], float(total_pred), float(total_lat / total_pred),
                                float(total_lat)))
        totals[mode] = float(total_pred)

    reductions = {}
    if "as2" in totals:
        for mode in ("peasi_top1", "peasi_all_as2"):
            if mode in totals:
                reductions[mode] = 1.0 - totals[mode] / totals["as2"]
    return CostReport(rows, reductions)

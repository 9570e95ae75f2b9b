"""Binary-relevance ranking metrics: P@1, MAP and MRR.

A ranking is the relevance labels of the candidates in rank order, e.g.
``[0, 1, 0]`` means the second-ranked candidate is the only relevant one.
Questions without any relevant candidate stay in the denominator and score 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class JudgedRanking:
    ids: tuple
    labels: tuple[int, ...]

    def __post_init__(self):
        if not self.labels:
            raise ValueError("a judged ranking needs at least one candidate")
        if len(self.ids) != len(self.labels):
            raise ValueError("ids and labels must have equal length")
        if any(label not in (0, 1) for label in self.labels):
            raise ValueError("labels must be binary")

    @classmethod
    def from_scores(cls, ids: Sequence, scores: Sequence[float], labels: Sequence[int]) -> JudgedRanking:
        """Order by descending score, ties by ascending id."""
        order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
        return cls(tuple(ids[i] for i in order), tuple(int(labels[i]) for i in order))


def _as_label_arrays(rankings) -> list[np.ndarray]:
    out = [np.asarray(r.labels if isinstance(r, JudgedRanking) else r) != 0 for r in rankings]
    if not out:
        raise EmptyInput("no rankings to evaluate")
    return out


def average_precision(labels: Iterable[int]) -> float:
    """
    >>> average_precision([1, 0, 1])
    0.8333333333333333
    """
    rel = np.asarray(list(labels)) != 0
    if not rel.any():
        return 0.0
    hits = np.cumsum(rel)
    ranks = np.arange(1, rel.size + 1)
    return float(np.mean(hits[rel] / ranks[rel]))


def reciprocal_rank(labels: Iterable[int]) -> float:
    rel = np.flatnonzero(np.asarray(list(labels)) != 0)
    return 1.0 / (rel[0] + 1) if rel.size else 0.0


def p_at_1(rankings) -> float:
    rels = _as_label_arrays(rankings)
    return float(np.mean([bool(r.size) and bool(r[0]) for r in rels]))


def mean_average_precision(rankings) -> float:
    return float(np.mean([average_precision(r) for r in _as_label_arrays(rankings)]))


def mean_reciprocal_rank(rankings) -> float:
    return float(np.mean([reciprocal_rank(r) for r in _as_label_arrays(rankings)]))


def evaluate(rankings) -> dict[str, float]:
    rankings = list(rankings)
    return {
        "p_at_1": p_at_1(rankings),
        "map": mean_average_precision(rankings),
        "mrr": mean_reciprocal_rank(rankings),
        "n_questions": len(rankings),
    }

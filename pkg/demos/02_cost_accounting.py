"""Prediction counts and latency for the three answering modes.

A question with 43 retrieved passages of 5 sentences each: sentence-level AS2
scores all 215 sentences, PEASI scores 43 passages and runs one extraction.
The models here are constant stubs; counting does not depend on what they say.

Run: python demos/02_cost_accounting.py
"""
import numpy as np

from passage_as2.corpus import LabeledSentence, Passage
from passage_as2.pipeline import cost_report, run_as2, run_peasi_all_as2, run_peasi_top1


class Constant:
    def score_sentences(self, question, sentences):
        return np.zeros(len(sentences))

    def score_passages(self, question, passages):
        return np.zeros(len(passages))

    def extract(self, question, passage):
        return np.array([1.0]), 0

    def extract_many(self, question, passages):
        return np.ones((len(passages), 1)), np.zeros(len(passages), dtype=int)


pool = [Passage(f"p{i:02d}", "d", "q", tuple(LabeledSentence(f"p{i:02d}#{j}", f"Fact {i} {j}.") for j in range(5)))
        for i in range(43)]
m = Constant()
results = [run_as2("q?", pool, m), run_peasi_top1("q?", pool, m, m), run_peasi_all_as2("q?", pool, m, m, m, top_n=5)]
for r in results:
    print(f"{r.mode:15s} predictions={r.prediction_count} components={r.component_counts}")

report = cost_report(results, {"as2": 11.7, "pr": 10.9, "easi": 10.0})
print()
print(report.render())

"""Windows, label propagation and passage groups on a twelve-sentence document.

Run: python demos/01_windows_and_labels.py
"""
from passage_as2.corpus import (NEGATIVE, POSITIVE, UNLABELED, LabeledSentence, propagate_labels,
                                select_passage_group, windows_for_sentence)

# twelve short sentences; sentence 6 answers the question, 5 was judged wrong
labels = [UNLABELED] * 12
labels[5], labels[6] = NEGATIVE, POSITIVE
doc = [LabeledSentence(f"d#{i}", f"Sentence number {i} says little.", lab) for i, lab in enumerate(labels)]

# every window holds sentence 6 at a different position (1..5), right-filled greedily
windows = propagate_labels("q", doc, windows_for_sentence(doc, 6, doc_id="d", question_id="q"))
for w in windows:
    span = [s.sent_id for s in w.sentences]
    print(f"{w.passage_id:10s} pos={w.position_of('d#6')} label={w.label:8s} answer_at={w.answer_position} {span}")

# a passage is positive exactly when it holds a positive sentence
assert all(w.positive == any(s.label == POSITIVE for s in w.sentences) for w in windows)

groups = {("q", "d#6"): windows}
for name in ("all", "center", "random"):
    kept = select_passage_group(groups, name, seed=0)
    print(f"group {name:6s}: {[w.passage_id for w in kept]}")

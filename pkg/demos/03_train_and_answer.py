"""Train tiny PR and EASI models on a planted corpus and answer dev questions.

Takes a few minutes on one CPU. The models are deliberately small; the
acceptance suite trains larger ones.

Run: python demos/03_train_and_answer.py
"""
from passage_as2.corpus import build_corpus
from passage_as2.pipeline import cost_report, evaluate_pipeline
from passage_as2.synthetic import gen_synthetic
from passage_as2.training import EncoderSettings, TrainConfig, train_easi, train_pr

docs, questions, labels = gen_synthetic(300, seed=0)
splits = build_corpus(docs, questions, labels, group="all", seed=0)
print({name: len(s.passages) for name, s in splits.items()}, "passages per split")

enc = EncoderSettings(d_model=16, n_heads=2, n_layers=1, d_ff=32)
pr = train_pr(splits["train"], TrainConfig(mode="pr", seed=0, epochs=15, lr=1e-3, max_seq_len=96, encoder=enc),
              dev=splits["dev"])
easi = train_easi(splits["train"], TrainConfig(mode="easi", seed=0, easi_epochs=20, lr=2e-3, max_seq_len=96,
                                               encoder=enc), dev=splits["dev"])
print("PR dev:", {k: round(v, 3) for k, v in pr.metrics.items() if k.startswith("dev")})
print("EASI dev accuracy:", round(easi.metrics["dev_acc"], 3))

metrics, results = evaluate_pipeline("peasi_top1", splits["dev"], {"pr": pr, "easi": easi})
print("peasi_top1 dev P@1:", metrics["p_at_1"], "over", metrics["n_questions"], "questions")

r = results[0]
print("\nQ:", splits["dev"].questions[r.question_id])
print("A:", r.answer_text)

print()
print(cost_report(results).render())

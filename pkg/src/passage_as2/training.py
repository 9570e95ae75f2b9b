"""Trainers for the passage reranker, the in-place extractor, the point-wise
sentence scorer, and the three multi-task variants.

Modes
-----
``pr``         one encoder + binary head on (question, passage) pairs
``easi``       one encoder + k-way head on positive passages
``sentence``   one encoder + binary head on (question, sentence) pairs
``mtl0``       one shared encoder, both heads, weighted joint loss
``mtl1``       two encoders, both heads, both losses in the same loop
``mtl1_fuse``  ``mtl1``-style stage 1 trained separately, then a stage 2 that
               freezes the extractor encoder and trains the PR encoder with a
               fusion head over the concatenated embeddings
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import ndcore as nd
from .corpus import POSITIVE, DatasetSplit, Passage
from .encoder import Batch, Encoder, EncoderConfig
from .heads import (BinaryHead, EasiHead, FusionHead, easi_extract, easi_loss, fusion_loss, fusion_score,
                    pr_loss, pr_score)
from .metrics import JudgedRanking, evaluate
from .text import Vocabulary, encode_candidates, encode_pair, tokenize

log = logging.getLogger(__name__)

MODES = ("pr", "easi", "sentence", "mtl0", "mtl1", "mtl1_fuse")
PR_ENCODER, EASI_ENCODER = "enc", "enc_easi"


class EmptyDataset(ValueError):
    pass


class NoPositivePassages(ValueError):
    pass


class ModeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class EncoderSettings:
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 256


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters.

    ``epochs`` drives the PR / sentence trainers and stage 1 of ``mtl1_fuse``;
    ``easi_epochs`` drives the extractor trainer and the joint loops of
    ``mtl0``/``mtl1``; ``fuse_epochs`` drives stage 2 of ``mtl1_fuse``.
    """

    mode: str = "pr"
    batch_size: int = 16
    lr: float = 1e-3
    epochs: int = 30
    easi_epochs: int = 50
    fuse_epochs: int = 50
    seed: int = 0
    max_seq_len: int = 128
    k_max: int = 5
    lambda_pr: float = 1.0
    lambda_easi: float = 1.0
    eval_every: int = 1
    encoder: EncoderSettings = field(default_factory=EncoderSettings)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ModeMismatch(f"unknown mode {self.mode!r}; expected one of {MODES}")
        for name in ("batch_size", "max_seq_len", "k_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("lr", "epochs", "easi_epochs", "fuse_epochs", "lambda_pr", "lambda_easi", "eval_every"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if isinstance(self.encoder, dict):
            object.__setattr__(self, "encoder", EncoderSettings(**self.encoder))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> TrainConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


# ---------------------------------------------------------------------------
# model container
# ---------------------------------------------------------------------------

class TrainedModel:
    """Encoders + heads + vocabulary + the config that produced them."""

    def __init__(self, mode: str, vocab: Vocabulary, config: TrainConfig):
        if mode not in MODES:
            raise ModeMismatch(f"unknown mode {mode!r}")
        self.mode = mode
        self.vocab = vocab
        self.config = config
        s = config.encoder
        self.encoder_config = EncoderConfig(vocab_size=vocab.size, d_model=s.d_model, n_heads=s.n_heads,
                                            n_layers=s.n_layers, d_ff=s.d_ff, max_seq_len=config.max_seq_len)
        d, seed = s.d_model, config.seed
        self.encoders: dict[str, Encoder] = {PR_ENCODER: Encoder(self.encoder_config, seed, PR_ENCODER)}
        if mode in ("mtl1", "mtl1_fuse"):
            self.encoders[EASI_ENCODER] = Encoder(self.encoder_config, seed, EASI_ENCODER)
        self.pr_head = BinaryHead(d, seed) if mode != "easi" else None
        self.easi_head = EasiHead(d, config.k_max, seed) if mode in ("easi", "mtl0", "mtl1", "mtl1_fuse") else None
        self.fusion_head = FusionHead(d, seed) if mode == "mtl1_fuse" else None
        self.stage = 1
        self.metrics: dict = {}
        self.history: list[dict] = []

    # -- parameter bookkeeping ----------------------------------------------
    @property
    def pr_encoder(self) -> Encoder:
        return self.encoders[PR_ENCODER]

    @property
    def easi_encoder(self) -> Encoder:
        return self.encoders.get(EASI_ENCODER, self.encoders[PR_ENCODER])

    def named_parameters(self) -> dict[str, nd.Parameter]:
        out: dict[str, nd.Parameter] = {}
        for enc in self.encoders.values():
            out.update(enc.params)
        for head in (self.pr_head, self.easi_head, self.fusion_head):
            if head is not None:
                out.update(head.params)
        return out

    # -- encoding helpers ----------------------------------------------------
    def pr_inputs(self, question: str, bodies: Sequence[str]):
        q = tokenize(question)
        return [encode_pair(q, tokenize(b), self.vocab, self.config.max_seq_len) for b in bodies]

    def easi_inputs(self, question: str, passages: Sequence[Passage]):
        q = tokenize(question)
        seqs, counts = [], []
        for p in passages:
            seq, kept = encode_candidates(q, [tokenize(s.text) for s in p.sentences[: self.config.k_max]],
                                          self.vocab, self.config.max_seq_len)
            seqs.append(seq)
            counts.append(max(kept, 1))
        return seqs, np.asarray(counts)

    # -- inference -----------------------------------------------------------
    def score_passages(self, question: str, passages: Sequence[Passage]) -> np.ndarray:
        """p(q, p) per passage (fusion head when trained in ``mtl1_fuse``)."""
        if self.pr_head is None:
            raise ModeMismatch(f"a {self.mode} model has no passage scorer")
        E = self.pr_encoder.embed(self.pr_inputs(question, [p.text for p in passages]))
        if self.fusion_head is not None and self.stage == 2:
            seqs, _ = self.easi_inputs(question, passages)
            return fusion_score(self.fusion_head, E, self.easi_encoder.embed(seqs))
        return pr_score(self.pr_head, E)

    def extract(self, question: str, passage: Passage) -> tuple[np.ndarray, int]:
        """Slot probabilities and chosen sentence index within ``passage``."""
        if self.easi_head is None:
            raise ModeMismatch(f"a {self.mode} model has no extractor")
        seqs, counts = self.easi_inputs(question, [passage])
        probs, idx = easi_extract(self.easi_head, self.easi_encoder.embed(seqs), counts)
        return probs[0], int(idx[0])

    def extract_many(self, question: str, passages: Sequence[Passage]) -> tuple[np.ndarray, np.ndarray]:
        seqs, counts = self.easi_inputs(question, passages)
        return easi_extract(self.easi_head, self.easi_encoder.embed(seqs), counts)

    def score_sentences(self, question: str, sentences: Sequence[str]) -> np.ndarray:
        if self.pr_head is None:
            raise ModeMismatch(f"a {self.mode} model has no pair scorer")
        return pr_score(self.pr_head, self.pr_encoder.embed(self.pr_inputs(question, sentences)))

    # -- persistence ---------------------------------------------------------
    def checkpoint_text(self) -> str:
        meta = {"mode": self.mode, "stage": self.stage, "config": self.config.to_dict(),
                "encoder": self.encoder_config.to_dict(), "metrics": self.metrics}
        return nd.dumps_checkpoint(self.named_parameters(), meta)

    def save(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "checkpoint.json").write_text(self.checkpoint_text(), encoding="utf-8")
        self.vocab.save(out / "vocab.tsv")
        with open(out / "train_log.jsonl", "w", encoding="utf-8") as fh:
            for rec in self.history:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        return out

    @classmethod
    def load(cls, model_dir: str | Path) -> TrainedModel:
        model_dir = Path(model_dir)
        ckpt = model_dir / "checkpoint.json"
        if not ckpt.exists():
            raise FileNotFoundError(f"missing checkpoint {ckpt}")
        arrays, meta = nd.loads_checkpoint(ckpt.read_text(encoding="utf-8"))
        model = cls(meta["mode"], Vocabulary.load(model_dir / "vocab.tsv"), TrainConfig.from_dict(meta["config"]))
        params = model.named_parameters()
        if set(params) != set(arrays):
            raise ValueError(f"checkpoint parameters do not match a {meta['mode']} model")
        for name, arr in arrays.items():
            if params[name].shape != arr.shape:
                raise ValueError(f"shape mismatch for {name}: {arr.shape} vs {params[name].shape}")
            params[name].data = arr
        model.stage = meta.get("stage", 1)
        model.metrics = meta.get("metrics", {})
        if model.mode == "mtl1_fuse" and model.stage == 2:
            model.encoders[EASI_ENCODER].freeze()
            for p in model.easi_head.parameters():
                p.frozen = True
        return model


# ---------------------------------------------------------------------------
# data preparation
# ---------------------------------------------------------------------------

def build_vocab(split: DatasetSplit) -> Vocabulary:
    def token_lists():
        for text in split.questions.values():
            yield tokenize(text)
        for p in split.passages:
            for s in p.sentences:
                yield tokenize(s.text)
        for qa in split.qa_pairs:
            yield tokenize(qa.text)
    return Vocabulary.build(token_lists())


def _pr_examples(model: TrainedModel, split: DatasetSplit):
    seqs, labels = [], []
    for p in split.passages:
        seqs.extend(model.pr_inputs(split.questions[p.question_id], [p.text]))
        labels.append(int(p.label == POSITIVE))
    return seqs, np.asarray(labels, dtype=np.int64)


def _easi_examples(model: TrainedModel, split: DatasetSplit, with_hits: bool = False):
    """Positive passages whose answer survives truncation.

    ``with_hits`` also returns, per passage, a boolean row marking every
    positive slot (a passage may hold more than one correct sentence).
    """
    seqs, counts, gold, hits = [], [], [], []
    k = model.config.k_max
    for p in split.passages:
        if p.label != POSITIVE or p.answer_position is None or p.answer_position > k:
            continue
        s, c = model.easi_inputs(split.questions[p.question_id], [p])
        if p.answer_position > c[0]:
            continue
        seqs.append(s[0])
        counts.append(int(c[0]))
        gold.append(p.answer_position - 1)
        hits.append([i < c[0] and i < len(p.sentences) and p.sentences[i].positive for i in range(k)])
    out = (seqs, np.asarray(counts, dtype=np.int64), np.asarray(gold, dtype=np.int64))
    return (*out, np.asarray(hits, dtype=bool).reshape(-1, k)) if with_hits else out


def _sentence_examples(model: TrainedModel, split: DatasetSplit):
    seqs, labels = [], []
    for qa in split.qa_pairs:
        seqs.extend(model.pr_inputs(split.questions[qa.question_id], [qa.text]))
        labels.append(int(qa.label == POSITIVE))
    return seqs, np.asarray(labels, dtype=np.int64)


def _batches(n: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    order = rng.permutation(n)
    return [order[i:i + batch_size] for i in range(0, n, batch_size)]


def _batch(seqs, idx) -> Batch:
    return Batch.from_sequences([seqs[i] for i in idx])


# ---------------------------------------------------------------------------
# evaluation on a split
# ---------------------------------------------------------------------------

def evaluate_passage_ranking(model: TrainedModel, split: DatasetSplit) -> dict:
    rankings = []
    for qid, passages in split.passages_by_question().items():
        if not passages:
            continue
        scores = model.score_passages(split.questions[qid], passages)
        rankings.append(JudgedRanking.from_scores([p.passage_id for p in passages], list(scores),
                                                  [int(p.positive) for p in passages]))
    return evaluate(rankings) if rankings else {"p_at_1": 0.0, "map": 0.0, "mrr": 0.0, "n_questions": 0}


def evaluate_sentence_ranking(model: TrainedModel, split: DatasetSplit) -> dict:
    by_q: dict[str, list] = {}
    for qa in split.qa_pairs:
        by_q.setdefault(qa.question_id, []).append(qa)
    rankings = []
    for qid in sorted(by_q):
        pairs = by_q[qid]
        scores = model.score_sentences(split.questions[qid], [qa.text for qa in pairs])
        rankings.append(JudgedRanking.from_scores([qa.sent_id for qa in pairs], list(scores),
                                                  [int(qa.label == POSITIVE) for qa in pairs]))
    return evaluate(rankings) if rankings else {"p_at_1": 0.0, "map": 0.0, "mrr": 0.0, "n_questions": 0}


def easi_accuracy(model: TrainedModel, split: DatasetSplit, exact: bool = False) -> float:
    """Share of positive passages where the extractor picks a correct sentence.

    With ``exact`` the pick must be the first correct sentence (the training target).
    """
    seqs, counts, gold, hits = _easi_examples(model, split, with_hits=True)
    if not seqs:
        return 0.0
    _, pred = easi_extract(model.easi_head, model.easi_encoder.embed(seqs), counts)
    if exact:
        return float(np.mean(pred == gold))
    return float(np.mean(hits[np.arange(len(pred)), pred]))


# ---------------------------------------------------------------------------
# optimisation loops
# ---------------------------------------------------------------------------

def _log_epoch(model: TrainedModel, epoch: int, loss: float, dev_metrics: dict | None, **extra) -> None:
    rec = {"epoch": epoch, "loss": loss}
    if dev_metrics is not None:
        rec.update(dev_p1=dev_metrics.get("p_at_1"), dev_map=dev_metrics.get("map"), dev_mrr=dev_metrics.get("mrr"))
    rec.update(extra)
    model.history.append(rec)
    log.info("%s", json.dumps(rec, sort_keys=True))


def _should_eval(cfg: TrainConfig, epoch: int, total: int) -> bool:
    return epoch == total or (cfg.eval_every > 0 and epoch % cfg.eval_every == 0)


def _binary_loop(model: TrainedModel, seqs, labels, params, epochs: int, cfg: TrainConfig,
                 loss_fn: Callable[[np.ndarray], nd.Tensor], dev_fn, stage: str) -> None:
    rng = np.random.default_rng(cfg.seed)
    for epoch in range(1, epochs + 1):
        total, count = 0.0, 0
        for idx in _batches(len(seqs), cfg.batch_size, rng):
            loss = loss_fn(idx)
            loss.backward()
            nd.adam_step(params, cfg.lr)
            total += loss.item() * len(idx)
            count += len(idx)
        dev = dev_fn() if dev_fn is not None and _should_eval(cfg, epoch, epochs) else None
        _log_epoch(model, epoch, total / max(count, 1), dev, stage=stage)


def _pr_stage(model: TrainedModel, split: DatasetSplit, cfg: TrainConfig, dev: DatasetSplit | None,
              epochs: int) -> None:
    seqs, labels = _pr_examples(model, split)
    if not seqs:
        raise EmptyDataset("no (question, passage) pairs to train on")
    enc, head = model.pr_encoder, model.pr_head

    def loss_fn(idx):
        return pr_loss(head, enc(_batch(seqs, idx)), labels[idx])

    dev_fn = (lambda: evaluate_passage_ranking(model, dev)) if dev is not None else None
    _binary_loop(model, seqs, labels, enc.parameters() + head.parameters(), epochs, cfg, loss_fn, dev_fn, "pr")


def _easi_stage(model: TrainedModel, split: DatasetSplit, cfg: TrainConfig, dev: DatasetSplit | None,
                epochs: int) -> None:
    seqs, counts, gold = _easi_examples(model, split)
    if not seqs:
        raise NoPositivePassages("no positive passages with a known answer position")
    enc, head = model.easi_encoder, model.easi_head
    params = enc.parameters() + head.parameters()
    rng = np.random.default_rng(cfg.seed)
    for epoch in range(1, epochs + 1):
        total = 0.0
        for idx in _batches(len(seqs), cfg.batch_size, rng):
            loss = easi_loss(head, enc(_batch(seqs, idx)), counts[idx], gold[idx])
            loss.backward()
            nd.adam_step(params, cfg.lr)
            total += loss.item() * len(idx)
        extra = {}
        if _should_eval(cfg, epoch, epochs):
            extra["train_acc"] = easi_accuracy(model, split)
            if dev is not None:
                extra["dev_acc"] = easi_accuracy(model, dev)
                extra["dev_acc_exact"] = easi_accuracy(model, dev, exact=True)
        _log_epoch(model, epoch, total / len(seqs), None, stage="easi", **extra)


def _joint_loop(model: TrainedModel, split: DatasetSplit, cfg: TrainConfig, dev: DatasetSplit | None) -> None:
    """PR and extractor losses stepped together; each step pairs one PR batch with one extractor batch."""
    pr_seqs, pr_labels = _pr_examples(model, split)
    e_seqs, e_counts, e_gold = _easi_examples(model, split)
    if not pr_seqs:
        raise EmptyDataset("no (question, passage) pairs to train on")
    if not e_seqs:
        raise NoPositivePassages("no positive passages with a known answer position")
    params = list(model.named_parameters().values())
    pr_rng = np.random.default_rng(cfg.seed)
    e_rng = np.random.default_rng(cfg.seed + 1)
    e_queue: list[np.ndarray] = []
    epochs = cfg.easi_epochs
    for epoch in range(1, epochs + 1):
        total = 0.0
        for idx in _batches(len(pr_seqs), cfg.batch_size, pr_rng):
            if not e_queue:
                e_queue = _batches(len(e_seqs), cfg.batch_size, e_rng)
            e_idx = e_queue.pop(0)
            l_pr = pr_loss(model.pr_head, model.pr_encoder(_batch(pr_seqs, idx)), pr_labels[idx])
            l_e = easi_loss(model.easi_head, model.easi_encoder(_batch(e_seqs, e_idx)), e_counts[e_idx], e_gold[e_idx])
            loss = nd.add(nd.scale(l_pr, cfg.lambda_pr), nd.scale(l_e, cfg.lambda_easi))
            loss.backward()
            nd.adam_step(params, cfg.lr)
            total += loss.item() * len(idx)
        dev_m, extra = None, {}
        if dev is not None and _should_eval(cfg, epoch, epochs):
            dev_m = evaluate_passage_ranking(model, dev)
            extra["dev_acc"] = easi_accuracy(model, dev)
        _log_epoch(model, epoch, total / len(pr_seqs), dev_m, stage=model.mode, **extra)


def fuse_stage(model: TrainedModel, split: DatasetSplit, cfg: TrainConfig, dev: DatasetSplit | None = None,
               easi_features: Callable[[str, Sequence[Passage]], np.ndarray] | None = None) -> None:
    """Stage 2: freeze the extractor side, cache its embeddings, train PR encoder + fusion head.

    ``easi_features(question, passages)`` overrides the frozen extractor
    encoder as the source of the second embedding (used for ablations).
    """
    if model.mode != "mtl1_fuse":
        raise ModeMismatch(f"fusion stage needs an mtl1_fuse model, got {model.mode}")
    model.easi_encoder.freeze()
    for p in model.easi_head.parameters():
        p.frozen = True
    model.stage = 2

    if easi_features is None:
        def easi_features(question, passages):
            seqs, _ = model.easi_inputs(question, passages)
            return model.easi_encoder.embed(seqs)

    seqs, labels = _pr_examples(model, split)
    if not seqs:
        raise EmptyDataset("no (question, passage) pairs to train on")
    cache = np.zeros((len(seqs), model.encoder_config.d_model))
    by_q: dict[str, list[int]] = {}
    for i, p in enumerate(split.passages):
        by_q.setdefault(p.question_id, []).append(i)
    for qid, rows in by_q.items():
        cache[rows] = easi_features(split.questions[qid], [split.passages[i] for i in rows])

    enc, head = model.pr_encoder, model.fusion_head

    def loss_fn(idx):
        return fusion_loss(head, enc(_batch(seqs, idx)), nd.Tensor(cache[idx]), labels[idx])

    def fused_dev_metrics():
        rankings = []
        for qid, passages in dev.passages_by_question().items():
            if not passages:
                continue
            E = enc.embed(model.pr_inputs(dev.questions[qid], [p.text for p in passages]))
            scores = fusion_score(head, E, easi_features(dev.questions[qid], passages))
            rankings.append(JudgedRanking.from_scores([p.passage_id for p in passages], list(scores),
                                                      [int(p.positive) for p in passages]))
        return evaluate(rankings)

    dev_fn = fused_dev_metrics if dev is not None else None
    _binary_loop(model, seqs, labels, enc.parameters() + head.parameters(), cfg.fuse_epochs,
                 replace(cfg, seed=cfg.seed + 2), loss_fn, dev_fn, "fuse")


# ---------------------------------------------------------------------------
# public trainers
# ---------------------------------------------------------------------------

def _new_model(split: DatasetSplit, cfg: TrainConfig, mode: str, vocab: Vocabulary | None) -> TrainedModel:
    return TrainedModel(mode, vocab if vocab is not None else build_vocab(split), replace(cfg, mode=mode))


def _finish(model: TrainedModel, started: float) -> TrainedModel:
    for rec in reversed(model.history):
        if rec.get("dev_p1") is not None or rec.get("dev_acc") is not None:
            model.metrics.update({k: rec[k] for k in ("dev_p1", "dev_map", "dev_mrr", "dev_acc", "train_acc")
                                  if rec.get(k) is not None})
            break
    log.info("trained %s in %.1fs", model.mode, time.perf_counter() - started)
    return model


def train_pr(split: DatasetSplit, cfg: TrainConfig, dev: DatasetSplit | None = None,
             vocab: Vocabulary | None = None) -> TrainedModel:
    started = time.perf_counter()
    model = _new_model(split, cfg, "pr", vocab)
    _pr_stage(model, split, model.config, dev, model.config.epochs)
    return _finish(model, started)


def train_easi(split: DatasetSplit, cfg: TrainConfig, dev: DatasetSplit | None = None,
               vocab: Vocabulary | None = None) -> TrainedModel:
    started = time.perf_counter()
    model = _new_model(split, cfg, "easi", vocab)
    _easi_stage(model, split, model.config, dev, model.config.easi_epochs)
    return _finish(model, started)


def train_sentence_baseline(split: DatasetSplit, cfg: TrainConfig, dev: DatasetSplit | None = None,
                            vocab: Vocabulary | None = None) -> TrainedModel:
    started = time.perf_counter()
    model = _new_model(split, cfg, "sentence", vocab)
    seqs, labels = _sentence_examples(model, split)
    if not seqs:
        raise EmptyDataset("no (question, sentence) pairs to train on")
    enc, head = model.pr_encoder, model.pr_head

    def loss_fn(idx):
        return pr_loss(head, enc(_batch(seqs, idx)), labels[idx])

    dev_fn = (lambda: evaluate_sentence_ranking(model, dev)) if dev is not None else None
    _binary_loop(model, seqs, labels, enc.parameters() + head.parameters(), model.config.epochs, model.config,
                 loss_fn, dev_fn, "sentence")
    return _finish(model, started)


def train_mtl(split: DatasetSplit, cfg: TrainConfig, dev: DatasetSplit | None = None,
              vocab: Vocabulary | None = None,
              easi_features: Callable[[str, Sequence[Passage]], np.ndarray] | None = None) -> TrainedModel:
    if cfg.mode not in ("mtl0", "mtl1", "mtl1_fuse"):
        raise ModeMismatch(f"train_mtl expects an mtl mode, got {cfg.mode!r}")
    started = time.perf_counter()
    model = _new_model(split, cfg, cfg.mode, vocab)
    if cfg.mode in ("mtl0", "mtl1"):
        _joint_loop(model, split, model.config, dev)
    else:
        _pr_stage(model, split, model.config, dev, model.config.epochs)
        _easi_stage(model, split, model.config, dev, model.config.easi_epochs)
        fuse_stage(model, split, model.config, dev, easi_features)
    return _finish(model, started)


def train(split: DatasetSplit, cfg: TrainConfig, dev: DatasetSplit | None = None,
          vocab: Vocabulary | None = None) -> TrainedModel:
    """Dispatch on ``cfg.mode``."""
    if cfg.mode == "pr":
        return train_pr(split, cfg, dev, vocab)
    if cfg.mode == "easi":
        return train_easi(split, cfg, dev, vocab)
    if cfg.mode == "sentence":
        return train_sentence_baseline(split, cfg, dev, vocab)
    return train_mtl(split, cfg, dev, vocab)

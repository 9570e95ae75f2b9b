"""Small post-norm transformer encoder returning the first-token embedding."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import ndcore as nd
from .text import PAD_ID, TokenSequence


class SequenceTooLong(ValueError):
    pass


class IdOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 256
    max_seq_len: int = 128
    dropout: float = 0.0

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model={self.d_model} is not divisible by n_heads={self.n_heads}")
        if self.dropout != 0.0:
            raise ValueError("dropout is not supported; keep it at 0")
        for name in ("vocab_size", "d_model", "n_heads", "n_layers", "d_ff", "max_seq_len"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Batch:
    """Right-padded id/segment arrays plus the key mask (True = real token)."""

    ids: np.ndarray
    segments: np.ndarray
    mask: np.ndarray

    @classmethod
    def from_sequences(cls, seqs: Sequence[TokenSequence], pad_to: int | None = None) -> Batch:
        width = max(len(s) for s in seqs)
        if pad_to is not None:
            width = max(width, pad_to)
        ids = np.full((len(seqs), width), PAD_ID, dtype=np.int64)
        segments = np.zeros((len(seqs), width), dtype=np.int64)
        mask = np.zeros((len(seqs), width), dtype=bool)
        for row, s in enumerate(seqs):
            ids[row, : len(s)] = s.ids
            segments[row, : len(s)] = s.segments
            mask[row, : len(s)] = True
        return cls(ids, segments, mask)


class Encoder:
    def __init__(self, config: EncoderConfig, seed: int = 0, prefix: str = "enc"):
        self.config = config
        self.prefix = prefix
        self.use_positions = True
        c = config
        self.params: dict[str, nd.Parameter] = {}

        def p(name, shape, kind="normal"):
            full = f"{prefix}/{name}"
            self.params[full] = nd.init_parameter(full, shape, seed, kind=kind)
            return self.params[full]

        self.tok_emb = p("emb/token", (c.vocab_size, c.d_model))
        self.seg_emb = p("emb/segment", (2, c.d_model))
        self.pos_emb = p("emb/position", (c.max_seq_len, c.d_model))
        self.emb_ln = (p("emb/ln_gamma", (c.d_model,), "ones"), p("emb/ln_beta", (c.d_model,), "zeros"))
        self.layers = []
        for i in range(c.n_layers):
            self.layers.append({
                "wq": p(f"{i}/wq", (c.d_model, c.d_model)), "bq": p(f"{i}/bq", (c.d_model,), "zeros"),
                "wk": p(f"{i}/wk", (c.d_model, c.d_model)), "bk": p(f"{i}/bk", (c.d_model,), "zeros"),
                "wv": p(f"{i}/wv", (c.d_model, c.d_model)), "bv": p(f"{i}/bv", (c.d_model,), "zeros"),
                "wo": p(f"{i}/wo", (c.d_model, c.d_model)), "bo": p(f"{i}/bo", (c.d_model,), "zeros"),
                "ln1_g": p(f"{i}/ln1_gamma", (c.d_model,), "ones"), "ln1_b": p(f"{i}/ln1_beta", (c.d_model,), "zeros"),
                "w1": p(f"{i}/ff_w1", (c.d_model, c.d_ff)), "b1": p(f"{i}/ff_b1", (c.d_ff,), "zeros"),
                "w2": p(f"{i}/ff_w2", (c.d_ff, c.d_model)), "b2": p(f"{i}/ff_b2", (c.d_model,), "zeros"),
                "ln2_g": p(f"{i}/ln2_gamma", (c.d_model,), "ones"), "ln2_b": p(f"{i}/ln2_beta", (c.d_model,), "zeros"),
            })

    def parameters(self) -> list[nd.Parameter]:
        return list(self.params.values())

    def freeze(self) -> None:
        for prm in self.params.values():
            prm.frozen = True

    def _check(self, batch: Batch) -> None:
        if batch.ids.shape[1] > self.config.max_seq_len:
            raise SequenceTooLong(f"sequence of length {batch.ids.shape[1]} exceeds max_seq_len={self.config.max_seq_len}")
        if batch.ids.size and (batch.ids.min() < 0 or batch.ids.max() >= self.config.vocab_size):
            raise IdOutOfRange(f"token id outside [0, {self.config.vocab_size})")

    def forward(self, batch: Batch | Sequence[TokenSequence]) -> nd.Tensor:
        """Encode a batch; returns the (batch, d_model) first-token states."""
        if not isinstance(batch, Batch):
            if any(len(s) > self.config.max_seq_len for s in batch):
                raise SequenceTooLong(f"a sequence exceeds max_seq_len={self.config.max_seq_len}")
            batch = Batch.from_sequences(batch)
        self._check(batch)
        c = self.config
        n, t = batch.ids.shape
        h = nd.add(nd.embedding_lookup(self.tok_emb, batch.ids), nd.embedding_lookup(self.seg_emb, batch.segments))
        if self.use_positions:
            h = nd.add(h, self.pos_emb[:t])
        h = nd.layer_norm(h, *self.emb_ln)

        heads, dh = c.n_heads, c.d_model // c.n_heads
        key_mask = batch.mask[:, None, None, :]
        inv_sqrt = 1.0 / math.sqrt(dh)

        def split(x):
            return nd.transpose(nd.reshape(x, (n, t, heads, dh)), (0, 2, 1, 3))

        for lyr in self.layers:
            q = split(nd.add(nd.matmul(h, lyr["wq"]), lyr["bq"]))
            k = split(nd.add(nd.matmul(h, lyr["wk"]), lyr["bk"]))
            v = split(nd.add(nd.matmul(h, lyr["wv"]), lyr["bv"]))
            scores = nd.scale(nd.matmul(q, nd.transpose(k, (0, 1, 3, 2))), inv_sqrt)
            att = nd.softmax(scores, mask=key_mask)
            ctx = nd.reshape(nd.transpose(nd.matmul(att, v), (0, 2, 1, 3)), (n, t, c.d_model))
            h = nd.layer_norm(nd.add(h, nd.add(nd.matmul(ctx, lyr["wo"]), lyr["bo"])), lyr["ln1_g"], lyr["ln1_b"])
            ff = nd.add(nd.matmul(nd.gelu(nd.add(nd.matmul(h, lyr["w1"]), lyr["b1"])), lyr["w2"]), lyr["b2"])
            h = nd.layer_norm(nd.add(h, ff), lyr["ln2_g"], lyr["ln2_b"])
        return h[:, 0, :]

    __call__ = forward

    def encode(self, seq: TokenSequence) -> np.ndarray:
        """Single-sequence convenience: the embedding E as a plain array."""
        return self.forward([seq]).data[0].copy()

    def embed(self, seqs: Sequence[TokenSequence], batch_size: int = 64) -> np.ndarray:
        """Forward-only embedding of many sequences, batched by length."""
        out = np.zeros((len(seqs), self.config.d_model))
        order = sorted(range(len(seqs)), key=lambda i: len(seqs[i]))
        for start in range(0, len(order), batch_size):
            idx = order[start:start + batch_size]
            out[idx] = self.forward([seqs[i] for i in idx]).data
        return out

"""Classification heads on top of the pooled embedding.

``BinaryHead`` scores (question, passage) or (question, sentence) pairs,
``EasiHead`` picks one sentence out of a passage in a single pass, and
``FusionHead`` scores a passage from the PR and extractor embeddings together.
All functions take batched (batch, d_model) embeddings.
"""
from __future__ import annotations

import numpy as np

from . import ndcore as nd


class InvalidCount(ValueError):
    pass


class GoldOutOfRange(ValueError):
    pass


class WidthMismatch(ValueError):
    pass


class BinaryHead:
    def __init__(self, d_model: int, seed: int = 0, prefix: str = "head/pr"):
        self.d_model = d_model
        self.W = nd.init_parameter(f"{prefix}/W", (d_model, 2), seed)
        self.B = nd.init_parameter(f"{prefix}/B", (2,), seed, kind="zeros")
        self.params = {self.W.name: self.W, self.B.name: self.B}

    def parameters(self):
        return list(self.params.values())

    def logits(self, E: nd.Tensor) -> nd.Tensor:
        return nd.add(nd.matmul(E, self.W), self.B)


class EasiHead:
    """k x d weight matrix, no bias: logits = E W^T."""

    def __init__(self, d_model: int, k_max: int = 5, seed: int = 0, prefix: str = "head/easi"):
        self.d_model = d_model
        self.k_max = k_max
        self.W = nd.init_parameter(f"{prefix}/W", (k_max, d_model), seed)
        self.params = {self.W.name: self.W}

    def parameters(self):
        return list(self.params.values())

    def logits(self, E: nd.Tensor) -> nd.Tensor:
        return nd.matmul(E, nd.transpose(self.W, (1, 0)))

    def support(self, counts) -> np.ndarray:
        counts = np.atleast_1d(np.asarray(counts))
        if counts.size and (counts.min() < 1 or counts.max() > self.k_max):
            raise InvalidCount(f"sentence counts must lie in [1, {self.k_max}], got {counts.tolist()}")
        return np.arange(self.k_max)[None, :] < counts[:, None]


class FusionHead:
    def __init__(self, d_model: int, seed: int = 0, prefix: str = "head/fusion"):
        self.d_model = d_model
        self.W = nd.init_parameter(f"{prefix}/W", (2, 2 * d_model), seed)
        self.B = nd.init_parameter(f"{prefix}/B", (2,), seed, kind="zeros")
        self.params = {self.W.name: self.W, self.B.name: self.B}

    def parameters(self):
        return list(self.params.values())

    def logits(self, E_pr: nd.Tensor, E_easi: nd.Tensor) -> nd.Tensor:
        E_pr, E_easi = nd.as_tensor(E_pr), nd.as_tensor(E_easi)
        if E_pr.shape[-1] != self.d_model or E_easi.shape[-1] != self.d_model:
            raise WidthMismatch(
                f"fusion expects two width-{self.d_model} embeddings, got {E_pr.shape} and {E_easi.shape}")
        joint = nd.tanh(nd.concat([E_pr, E_easi], axis=-1))
        return nd.add(nd.matmul(joint, nd.transpose(self.W, (1, 0))), self.B)


def _positive_prob(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e[:, 1] / e.sum(axis=-1)


def pr_score(head: BinaryHead, E) -> np.ndarray:
    """p(q, p): probability of the positive class for each row."""
    return _positive_prob(head.logits(nd.as_tensor(np.atleast_2d(_data(E)))).data)


def pr_loss(head: BinaryHead, E: nd.Tensor, labels) -> nd.Tensor:
    """Binary cross-entropy, averaged over the batch."""
    return nd.cross_entropy(head.logits(E), labels)


def easi_extract(head: EasiHead, E, m) -> tuple[np.ndarray, np.ndarray]:
    """Masked softmax over the first ``m`` slots and the argmax slot per row.

    ``np.argmax`` returns the first maximum, so ties resolve to the earlier sentence.
    """
    E = np.atleast_2d(_data(E))
    mask = head.support(np.broadcast_to(np.asarray(m), (E.shape[0],)))
    probs = nd.softmax(head.logits(nd.Tensor(E)), mask=mask).data
    return probs, np.argmax(np.where(mask, probs, -1.0), axis=-1)


def easi_loss(head: EasiHead, E: nd.Tensor, m, gold) -> nd.Tensor:
    """Multi-class cross-entropy of the gold slot under the masked softmax."""
    m = np.broadcast_to(np.asarray(m), (E.shape[0],))
    gold = np.broadcast_to(np.asarray(gold), (E.shape[0],))
    mask = head.support(m)
    if np.any(gold < 0) or np.any(gold >= m):
        raise GoldOutOfRange(f"gold index must be below the sentence count, got gold={gold.tolist()} m={m.tolist()}")
    return nd.cross_entropy(head.logits(E), gold, mask=mask)


def fusion_score(head: FusionHead, E_pr, E_easi) -> np.ndarray:
    E_pr, E_easi = np.atleast_2d(_data(E_pr)), np.atleast_2d(_data(E_easi))
    return _positive_prob(head.logits(nd.Tensor(E_pr), nd.Tensor(E_easi)).data)


def fusion_loss(head: FusionHead, E_pr: nd.Tensor, E_easi, labels) -> nd.Tensor:
    return nd.cross_entropy(head.logits(E_pr, E_easi), labels)


def _data(x) -> np.ndarray:
    return x.data if isinstance(x, nd.Tensor) else np.asarray(x, dtype=np.float64)

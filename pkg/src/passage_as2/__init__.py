"""Passage reranking (PR) and in-place answer sentence extraction (EASI) on a
from-scratch numpy transformer, with the data pipeline, trainers, inference
modes and cost accounting around them."""

__version__ = "0.1.0"

"""Inference backend: turn embedding pairs into trial scores.

Cosine similarity is accumulated in double precision and clamped to [-1, 1]
after computation; overshoot beyond that range is always a rounding artifact
at machine-epsilon scale, so clamping is safe and an error would be noise.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, MissingEmbedding, ZeroNormVector
from .ingest import EmbeddingTable
from .model import ScoredTrial, Trial


def cosine_similarity(a, b) -> float:
    """(a.b) / (|a||b|), clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatch(a.shape[0] if a.ndim == 1 else -1, b.shape[0] if b.ndim == 1 else -1)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("cosine_similarity requires finite components")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroNormVector()
    value = float(np.dot(a, b) / (na * nb))
    return min(1.0, max(-1.0, value))


def score_trials(
    trials: list[Trial], table: EmbeddingTable, threads: int = 1
) -> list[ScoredTrial]:
    """Score every trial with the cosine of its two embeddings, in input order.

    Each output slot is independent and written in input order, so results
    are identical for any ``threads`` value.
    """
    if not trials:
        return []
    ids = list(table.entries.keys())
    index = {u: i for i, u in enumerate(ids)}

    ia = np.empty(len(trials), dtype=np.int64)
    ib = np.empty(len(trials), dtype=np.int64)
    for k, t in enumerate(trials):
        try:
            ia[k] = index[t.enroll_utt]
        except KeyError:
            raise MissingEmbedding(t.enroll_utt) from None
        try:
            ib[k] = index[t.test_utt]
        except KeyError:
            raise MissingEmbedding(t.test_utt) from None

    emb = np.ascontiguousarray(np.stack([table.entries[u] for u in ids]), dtype=np.float64)
    norms = np.linalg.norm(emb, axis=1)

    if threads <= 1 or len(trials) < 2 * threads:
        scores = _kernels.cosine_scores(emb, norms, ia, ib)
    else:
        scores = np.empty(len(trials), dtype=np.float64)
        bounds = np.linspace(0, len(trials), threads + 1, dtype=np.int64)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_kernels.cosine_scores, emb, norms, ia[lo:hi], ib[lo:hi])
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            offset = 0
            for fut in futures:
                chunk = fut.result()
                scores[offset : offset + len(chunk)] = chunk
                offset += len(chunk)

    return [ScoredTrial(t, float(s)) for t, s in zip(trials, scores)]

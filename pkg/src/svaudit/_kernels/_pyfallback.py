"""Numpy implementations of the hot kernels.

Selected automatically when the compiled extension is unavailable (or when
SVAUDIT_PURE_PYTHON=1). Integer-valued kernels agree with the compiled core
bit for bit; cosine scores agree to a few ulps (summation order differs).
"""

from __future__ import annotations

import numpy as np


def cosine_scores(
    emb: np.ndarray, norms: np.ndarray, ia: np.ndarray, ib: np.ndarray
) -> np.ndarray:
    """Cosine similarity for each row pair (emb[ia[k]], emb[ib[k]]).

    ``norms`` must hold the Euclidean norm of each row of ``emb``; callers
    guarantee all norms are > 0. Output is clamped to [-1, 1].
    """
    dots = np.einsum("ij,ij->i", emb[ia], emb[ib])
    scores = dots / (norms[ia] * norms[ib])
    np.clip(scores, -1.0, 1.0, out=scores)
    return scores


def confusion_counts(
    decisions: np.ndarray, labels: np.ndarray, groups: np.ndarray
) -> np.ndarray:
    """Count tp/fp/tn/fn per group plus excluded trials.

    ``groups`` codes: 0 = unprotected, 1 = protected, 2 = excluded.
    Returns int64 [tp_p, fp_p, tn_p, fn_p, tp_u, fp_u, tn_u, fn_u, excluded].
    """
    out = np.zeros(9, dtype=np.int64)
    d = decisions.astype(bool)
    y = labels.astype(bool)
    for base, mask in ((0, groups == 1), (4, groups == 0)):
        out[base + 0] = np.count_nonzero(mask & y & d)
        out[base + 1] = np.count_nonzero(mask & ~y & d)
        out[base + 2] = np.count_nonzero(mask & ~y & ~d)
        out[base + 3] = np.count_nonzero(mask & y & ~d)
    out[8] = np.count_nonzero(groups == 2)
    return out


def roc_counts(
    scores: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Error counts at every distinct score value, ascending.

    With the decision rule d = 1 iff score >= threshold, returns
    (thresholds, n_neg_ge, n_pos_lt) where n_neg_ge[k] is the number of
    different-speaker trials scoring >= thresholds[k] (false accepts) and
    n_pos_lt[k] the number of same-speaker trials scoring < thresholds[k]
    (false rejects).
    """
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    y = labels[order].astype(np.int64)

    first = np.empty(s.shape[0], dtype=bool)
    first[0] = True
    np.not_equal(s[1:], s[:-1], out=first[1:])
    idx = np.flatnonzero(first)

    cum_pos = np.concatenate(([0], np.cumsum(y)))
    cum_neg = np.concatenate(([0], np.cumsum(1 - y)))
    n_neg = cum_neg[-1]

    thresholds = s[idx]
    n_pos_lt = cum_pos[idx]
    n_neg_ge = n_neg - cum_neg[idx]
    return thresholds, n_neg_ge, n_pos_lt

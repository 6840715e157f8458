"""The five training losses, with analytic gradients.

Classification family: plain softmax cross-entropy, additive-margin softmax
(target logit s*(cos - m)) and additive-angular-margin softmax (target logit
s*cos(theta + m)), the margin losses operating on length-normalized
embeddings and classifier rows. Metric family: triplet loss on squared
Euclidean distances and prototypical episodes whose logits are negated
squared distances to per-speaker prototypes.

Every gradient here is derived by hand and verified against central finite
differences (see grad_check); no autodiff framework is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidMargin, LabelOutOfRange, SupportSizeMismatch, ZeroNormVector
from .errors import DimensionMismatch

SOFTMAX = "softmax"
AM_SOFTMAX = "am_softmax"
AAM_SOFTMAX = "aam_softmax"
TRIPLET = "triplet"
PROTOTYPICAL = "prototypical"
LOSS_KINDS = (SOFTMAX, AM_SOFTMAX, AAM_SOFTMAX, TRIPLET, PROTOTYPICAL)

CLASSIFICATION_KINDS = (SOFTMAX, AM_SOFTMAX, AAM_SOFTMAX)

#: Clamp bounds for the target cosine inside the angular-margin loss.
_COS_EPS = 1e-7


@dataclass
class LossOutput:
    value: float
    grad_embeddings: np.ndarray
    grad_classifier: np.ndarray | None = None
    grad_prototypes: np.ndarray | None = None


def _as_batch(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DimensionMismatch(2, arr.ndim)
    return arr


def _check_labels(labels, n_classes: int, batch: int) -> np.ndarray:
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if y.shape[0] != batch:
        raise DimensionMismatch(batch, y.shape[0])
    for label in y:
        if not 0 <= label < n_classes:
            raise LabelOutOfRange(int(label), n_classes)
    return y


def _cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean -log softmax(logits)[label] and its gradient w.r.t. the logits."""
    b = logits.shape[0]
    zmax = logits.max(axis=1, keepdims=True)
    shifted = logits - zmax
    exp = np.exp(shifted)
    denom = exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(denom)
    value = float(-log_probs[np.arange(b), labels].mean())
    dlogits = exp / denom
    dlogits[np.arange(b), labels] -= 1.0
    dlogits /= b
    return value, dlogits


def _normalize_rows(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        raise ZeroNormVector()
    return x / norms[:, None], norms


def _backprop_normalization(grad_hat: np.ndarray, x_hat: np.ndarray, norms: np.ndarray) -> np.ndarray:
    # gradient through x_hat = x / |x|: project out the radial component
    radial = np.einsum("ij,ij->i", grad_hat, x_hat)
    return (grad_hat - radial[:, None] * x_hat) / norms[:, None]


def softmax_ce(embeddings, labels, classifier) -> LossOutput:
    """Cross-entropy over logits = classifier . embedding."""
    emb = _as_batch(embeddings)
    cls = _as_batch(classifier)
    if cls.shape[0] < 2:
        raise ValueError("classifier needs at least 2 classes")
    if cls.shape[1] != emb.shape[1]:
        raise DimensionMismatch(emb.shape[1], cls.shape[1])
    y = _check_labels(labels, cls.shape[0], emb.shape[0])

    logits = emb @ cls.T
    value, dlogits = _cross_entropy(logits, y)
    return LossOutput(value, dlogits @ cls, dlogits.T @ emb)


def am_softmax(embeddings, labels, classifier, margin: float = 0.2, scale: float = 30.0) -> LossOutput:
    """Additive-margin softmax: target logit s*(cos - m) on normalized rows."""
    if margin < 0:
        raise InvalidMargin("margin must be >= 0")
    if scale <= 0:
        raise InvalidMargin("scale must be > 0")
    emb = _as_batch(embeddings)
    cls = _as_batch(classifier)
    if cls.shape[0] < 2:
        raise ValueError("classifier needs at least 2 classes")
    if cls.shape[1] != emb.shape[1]:
        raise DimensionMismatch(emb.shape[1], cls.shape[1])
    y = _check_labels(labels, cls.shape[0], emb.shape[0])

    e_hat, e_norm = _normalize_rows(emb)
    w_hat, w_norm = _normalize_rows(cls)
    cos = e_hat @ w_hat.T
    logits = scale * cos
    logits[np.arange(emb.shape[0]), y] -= scale * margin
    value, dlogits = _cross_entropy(logits, y)

    dcos = scale * dlogits
    grad_emb = _backprop_normalization(dcos @ w_hat, e_hat, e_norm)
    grad_cls = _backprop_normalization(dcos.T @ e_hat, w_hat, w_norm)
    return LossOutput(value, grad_emb, grad_cls)


def aam_softmax(embeddings, labels, classifier, margin: float = 0.2, scale: float = 30.0) -> LossOutput:
    """Additive-angular-margin softmax: target logit s*cos(theta + m).

    cos(theta + m) is expanded as cos*cos(m) - sin*sin(m) with
    sin = sqrt(1 - cos^2); the target cosine is clamped away from +-1 and the
    clamped region backpropagates a zero gradient.
    """
    if not 0 <= margin < math.pi / 2:
        raise InvalidMargin(f"angular margin must lie in [0, pi/2), got {margin}")
    if scale <= 0:
        raise InvalidMargin("scale must be > 0")
    emb = _as_batch(embeddings)
    cls = _as_batch(classifier)
    if cls.shape[0] < 2:
        raise ValueError("classifier needs at least 2 classes")
    if cls.shape[1] != emb.shape[1]:
        raise DimensionMismatch(emb.shape[1], cls.shape[1])
    y = _check_labels(labels, cls.shape[0], emb.shape[0])
    rows = np.arange(emb.shape[0])

    e_hat, e_norm = _normalize_rows(emb)
    w_hat, w_norm = _normalize_rows(cls)
    cos = e_hat @ w_hat.T
    logits = scale * cos

    cos_m, sin_m = math.cos(margin), math.sin(margin)
    target_cos = cos[rows, y]
    if sin_m == 0.0:
        # cos(theta + 0) == cos(theta) exactly; skip the clamp so the m = 0
        # case reduces to am_softmax(m=0) bit for bit
        dphi = np.ones_like(target_cos)
    else:
        lo, hi = -1.0 + _COS_EPS, 1.0 - _COS_EPS
        clamped = np.clip(target_cos, lo, hi)
        sin_t = np.sqrt(1.0 - clamped * clamped)
        phi = clamped * cos_m - sin_t * sin_m
        inside = (target_cos > lo) & (target_cos < hi)
        dphi = np.where(inside, cos_m + clamped / sin_t * sin_m, 0.0)
        logits[rows, y] = scale * phi

    value, dlogits = _cross_entropy(logits, y)
    dcos = scale * dlogits
    dcos[rows, y] *= dphi
    grad_emb = _backprop_normalization(dcos @ w_hat, e_hat, e_norm)
    grad_cls = _backprop_normalization(dcos.T @ e_hat, w_hat, w_norm)
    return LossOutput(value, grad_emb, grad_cls)


def triplet_loss(x_a, x_p, x_n, margin: float = 0.0) -> LossOutput:
    """max(0, |a-p|^2 - |a-n|^2 + margin), averaged over triples.

    Subgradient convention: the zero branch (including the kink itself)
    backpropagates zeros. grad_embeddings rows follow the batch layout
    anchor, positive, negative per triple.
    """
    if margin < 0:
        raise InvalidMargin("triplet margin must be >= 0")
    a, p, n = _as_batch(x_a), _as_batch(x_p), _as_batch(x_n)
    if not (a.shape == p.shape == n.shape):
        raise DimensionMismatch(a.shape[1], p.shape[1] if a.shape[0] == p.shape[0] else -1)

    t = a.shape[0]
    dp = a - p
    dn = a - n
    gap = np.einsum("ij,ij->i", dp, dp) - np.einsum("ij,ij->i", dn, dn) + margin
    active = gap > 0.0
    value = float(np.where(active, gap, 0.0).mean())

    w = active.astype(np.float64)[:, None] / t
    grad = np.zeros((3 * t, a.shape[1]))
    grad[0::3] = w * 2.0 * (n - p)
    grad[1::3] = w * -2.0 * dp
    grad[2::3] = w * 2.0 * dn
    return LossOutput(value, grad)


def compute_prototypes(support_embeddings, m_utts: int) -> np.ndarray:
    """Per-speaker prototype: the mean of its m_utts - 1 support embeddings."""
    supports = np.asarray(support_embeddings, dtype=np.float64)
    if supports.ndim != 3:
        raise SupportSizeMismatch("support embeddings must be (speakers, m-1, dim)")
    if m_utts < 2:
        raise SupportSizeMismatch("m_utts must be >= 2")
    if supports.shape[1] != m_utts - 1:
        raise SupportSizeMismatch(
            f"expected {m_utts - 1} support embeddings per speaker, got {supports.shape[1]}"
        )
    return supports.mean(axis=1)


def prototypical_loss(query_embeddings, prototypes) -> LossOutput:
    """Episodic softmax over negated squared distances to the prototypes.

    Speaker i's query should be closest to prototype i; logits[i, k] =
    -|q_i - c_k|^2 and the loss is mean cross-entropy with target i.
    """
    q = _as_batch(query_embeddings)
    c = _as_batch(prototypes)
    if q.shape != c.shape:
        raise DimensionMismatch(q.shape[1], c.shape[1] if q.shape[0] == c.shape[0] else -1)
    n = q.shape[0]

    diff = q[:, None, :] - c[None, :, :]
    sq_dist = np.einsum("ikd,ikd->ik", diff, diff)
    value, dlogits = _cross_entropy(-sq_dist, np.arange(n))
    d_sq = -dlogits
    grad_q = 2.0 * np.einsum("ik,ikd->id", d_sq, diff)
    grad_c = -2.0 * np.einsum("ik,ikd->kd", d_sq, diff)
    return LossOutput(value, grad_q, grad_prototypes=grad_c)


def prototypical_episode(embeddings, n_speakers: int, m_utts: int) -> LossOutput:
    """Prototypical loss over a speaker-major batch of n_speakers * m_utts rows.

    Each speaker's first m_utts - 1 rows are supports, the last is the query.
    grad_embeddings follows the batch layout, with prototype gradients
    distributed over the supports (chain rule through the mean).
    """
    emb = _as_batch(embeddings)
    if emb.shape[0] != n_speakers * m_utts:
        raise SupportSizeMismatch(
            f"expected {n_speakers * m_utts} rows, got {emb.shape[0]}"
        )
    grouped = emb.reshape(n_speakers, m_utts, -1)
    supports = grouped[:, : m_utts - 1, :]
    queries = grouped[:, m_utts - 1, :]

    prototypes = compute_prototypes(supports, m_utts)
    out = prototypical_loss(queries, prototypes)

    grad = np.empty_like(grouped)
    grad[:, : m_utts - 1, :] = out.grad_prototypes[:, None, :] / (m_utts - 1)
    grad[:, m_utts - 1, :] = out.grad_embeddings
    return LossOutput(out.value, grad.reshape(emb.shape), grad_prototypes=out.grad_prototypes)


# --- finite-difference verification ------------------------------------------


def _numeric_grad(f, x: np.ndarray, step: float) -> np.ndarray:
    grad = np.zeros_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        f_plus = f()
        flat[i] = orig - step
        f_minus = f()
        flat[i] = orig
        gflat[i] = (f_plus - f_minus) / (2.0 * step)
    return grad


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denom))


def grad_check(loss_kind: str, seed: int, step: float = 1e-4) -> float:
    """Max relative error between analytic and central-difference gradients.

    Random configurations are rejection-resampled away from the triplet kink
    and the angular-margin clamp, where the subgradient convention would make
    the comparison meaningless. Scales are kept moderate so the cross-entropy
    does not saturate into the finite-difference noise floor.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    errors: list[float] = []

    if loss_kind in CLASSIFICATION_KINDS:
        b, dim, m_classes = 6, 5, 4
        margin = float(rng.uniform(0.05, 0.5))
        scale = float(rng.uniform(1.0, 8.0))
        while True:
            emb = rng.normal(size=(b, dim))
            cls = rng.normal(size=(m_classes, dim))
            labels = rng.integers(0, m_classes, size=b)
            e_hat, _ = _normalize_rows(emb)
            w_hat, _ = _normalize_rows(cls)
            if np.all(np.abs(e_hat @ w_hat.T) < 0.95):
                break

        if loss_kind == SOFTMAX:
            fn = lambda: softmax_ce(emb, labels, cls)
        elif loss_kind == AM_SOFTMAX:
            fn = lambda: am_softmax(emb, labels, cls, margin, scale)
        else:
            fn = lambda: aam_softmax(emb, labels, cls, margin, scale)
        out = fn()
        errors.append(_relative_error(out.grad_embeddings, _numeric_grad(lambda: fn().value, emb, step)))
        errors.append(_relative_error(out.grad_classifier, _numeric_grad(lambda: fn().value, cls, step)))

    elif loss_kind == TRIPLET:
        t, dim = 4, 5
        margin = 0.3
        while True:
            a = rng.normal(size=(t, dim))
            p = rng.normal(size=(t, dim))
            n = rng.normal(size=(t, dim))
            gap = (
                np.einsum("ij,ij->i", a - p, a - p)
                - np.einsum("ij,ij->i", a - n, a - n)
                + margin
            )
            if np.all(np.abs(gap) > 0.05) and np.any(gap > 0):
                break
        fn = lambda: triplet_loss(a, p, n, margin)
        out = fn()
        for block, grad in ((a, out.grad_embeddings[0::3]), (p, out.grad_embeddings[1::3]), (n, out.grad_embeddings[2::3])):
            errors.append(_relative_error(grad, _numeric_grad(lambda: fn().value, block, step)))

    elif loss_kind == PROTOTYPICAL:
        n_spk, m_utts, dim = 3, 3, 4
        batch = rng.normal(size=(n_spk * m_utts, dim))
        fn = lambda: prototypical_episode(batch, n_spk, m_utts)
        out = fn()
        errors.append(_relative_error(out.grad_embeddings, _numeric_grad(lambda: fn().value, batch, step)))

    else:
        raise ValueError(f"unknown loss kind {loss_kind!r}")

    return max(errors)

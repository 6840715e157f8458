"""Toy linear-encoder trainer for the loss lab.

The encoder is a single linear map (no nonlinearity): enough to exercise
every loss, its gradients, and the downstream audit pipeline. Optimization
is plain gradient descent with a multiplicative step decay (x0.5 every 10
epochs). Everything is driven by one seeded PCG64 stream, so runs are bit
reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, InvalidMargin, NonFiniteLoss
from .ingest import EmbeddingTable
from .losses import (
    AAM_SOFTMAX,
    AM_SOFTMAX,
    CLASSIFICATION_KINDS,
    LOSS_KINDS,
    PROTOTYPICAL,
    SOFTMAX,
    TRIPLET,
    aam_softmax,
    am_softmax,
    prototypical_episode,
    softmax_ce,
    triplet_loss,
)
from .synth import Cohort


@dataclass(frozen=True)
class LossConfig:
    """Hyperparameters for one training run.

    ``batch_speakers`` is the batch-size knob: utterances per batch for the
    classification losses, triples per batch for triplet, and speakers per
    episode for prototypical.
    """

    loss_kind: str = SOFTMAX
    margin: float = 0.2
    scale: float = 30.0
    triplet_margin: float = 0.0
    support_size: int = 3
    batch_speakers: int = 16

    def __post_init__(self) -> None:
        if self.loss_kind not in LOSS_KINDS:
            raise InvalidConfig(f"unknown loss kind {self.loss_kind!r}")
        if self.margin < 0 or self.scale <= 0 or self.triplet_margin < 0:
            raise InvalidMargin("margin and triplet_margin must be >= 0, scale > 0")
        if self.loss_kind == AAM_SOFTMAX and not self.margin < math.pi / 2:
            raise InvalidMargin("angular margin must be < pi/2")
        if self.support_size < 2:
            raise InvalidConfig("support_size must be >= 2 (prototype needs a support set)")
        if self.batch_speakers < 1:
            raise InvalidConfig("batch_speakers must be >= 1")


@dataclass
class EncoderParams:
    weight: np.ndarray  # (embedding_dim, input_dim)
    classifier: np.ndarray | None = None  # (n_speakers, embedding_dim)

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            self.weight.copy(), None if self.classifier is None else self.classifier.copy()
        )


@dataclass
class ToyBatch:
    inputs: np.ndarray
    speaker_labels: np.ndarray
    group_labels: np.ndarray | None = None


def encode_batch(params: EncoderParams, batch: ToyBatch) -> np.ndarray:
    """Apply the linear encoder to every row of the batch."""
    if batch.inputs.shape[1] != params.weight.shape[1]:
        raise DimensionMismatch(params.weight.shape[1], batch.inputs.shape[1])
    return batch.inputs @ params.weight.T


@dataclass
class ToyDataset:
    inputs: np.ndarray  # (n_utterances, input_dim)
    speaker_labels: np.ndarray  # (n_utterances,)
    utterance_ids: list[str]
    speaker_ids: list[str] = field(default_factory=list)

    @property
    def n_speakers(self) -> int:
        return len(self.speaker_ids)


def dataset_from_cohort(cohort: Cohort, utterances: list[str] | None = None) -> ToyDataset:
    """Flatten a cohort into training arrays, sorted for determinism."""
    utts = sorted(cohort.features.entries) if utterances is None else sorted(utterances)
    speakers = sorted(cohort.metadata)
    spk_index = {s: i for i, s in enumerate(speakers)}
    inputs = np.stack([cohort.features.entries[u] for u in utts])
    labels = np.array([spk_index[u.split("/", 1)[0]] for u in utts], dtype=np.int64)
    return ToyDataset(inputs, labels, utts, speakers)


@dataclass
class TrainResult:
    params: EncoderParams
    history: list[float]  # per-epoch mean loss


def _classification_batches(rng, dataset, batch_size):
    perm = rng.permutation(dataset.inputs.shape[0])
    size = min(batch_size, perm.shape[0])
    n_batches = max(1, perm.shape[0] // size)
    for b in range(n_batches):
        yield perm[b * size : (b + 1) * size]


def _triplet_batches(rng, by_speaker, eligible, n_speakers_total, n_batches, batch_size):
    for _ in range(n_batches):
        anchors, positives, negatives = [], [], []
        for _ in range(batch_size):
            spk = eligible[rng.integers(0, len(eligible))]
            utt_pair = rng.choice(by_speaker[spk], size=2, replace=False)
            while True:
                other = int(rng.integers(0, n_speakers_total))
                if other != spk and len(by_speaker[other]) > 0:
                    break
            anchors.append(utt_pair[0])
            positives.append(utt_pair[1])
            negatives.append(by_speaker[other][rng.integers(0, len(by_speaker[other]))])
        yield np.array(anchors), np.array(positives), np.array(negatives)


def _episode_batches(rng, by_speaker, eligible, n_batches, n_way, m_utts):
    for _ in range(n_batches):
        speakers = rng.choice(eligible, size=n_way, replace=False)
        rows = []
        for spk in speakers:
            rows.extend(rng.choice(by_speaker[spk], size=m_utts, replace=False))
        yield np.array(rows)


def train_toy(
    dataset: ToyDataset,
    config: LossConfig,
    epochs: int,
    learning_rate: float,
    seed: int,
    embedding_dim: int = 16,
) -> TrainResult:
    """Train the linear encoder with the configured loss.

    Deterministic for a fixed seed: initialization, batch order, and the
    sequential gradient accumulation all come from one PCG64 stream. Raises
    NonFiniteLoss (carrying the last finite parameters) if a batch loss
    leaves the reals.
    """
    n = dataset.inputs.shape[0]
    m_speakers = dataset.n_speakers
    if m_speakers < 2:
        raise InvalidConfig("training needs at least 2 speakers")
    input_dim = dataset.inputs.shape[1]

    rng = np.random.Generator(np.random.PCG64(seed))
    weight = rng.normal(size=(embedding_dim, input_dim)) / math.sqrt(input_dim)
    classifier = None
    if config.loss_kind in CLASSIFICATION_KINDS:
        classifier = rng.normal(size=(m_speakers, embedding_dim)) / math.sqrt(embedding_dim)
    params = EncoderParams(weight, classifier)

    by_speaker = [
        np.flatnonzero(dataset.speaker_labels == s) for s in range(m_speakers)
    ]
    min_utts = config.support_size if config.loss_kind == PROTOTYPICAL else 2
    eligible = np.array([s for s in range(m_speakers) if len(by_speaker[s]) >= min_utts])
    populated = sum(1 for s in range(m_speakers) if len(by_speaker[s]) > 0)
    if config.loss_kind == TRIPLET and (eligible.size == 0 or populated < 2):
        raise InvalidConfig(
            "triplet batches need a speaker with >= 2 utterances and a second "
            "speaker to draw negatives from"
        )
    if config.loss_kind == PROTOTYPICAL and eligible.size < config.batch_speakers:
        raise InvalidConfig(
            f"prototypical episodes need {config.batch_speakers} speakers with "
            f">= {config.support_size} utterances each"
        )

    history: list[float] = []
    for epoch in range(epochs):
        lr = learning_rate * 0.5 ** (epoch // 10)
        batch_losses: list[float] = []

        if config.loss_kind in CLASSIFICATION_KINDS:
            for idx in _classification_batches(rng, dataset, config.batch_speakers):
                x = dataset.inputs[idx]
                y = dataset.speaker_labels[idx]
                emb = x @ params.weight.T
                if config.loss_kind == SOFTMAX:
                    out = softmax_ce(emb, y, params.classifier)
                elif config.loss_kind == AM_SOFTMAX:
                    out = am_softmax(emb, y, params.classifier, config.margin, config.scale)
                else:
                    out = aam_softmax(emb, y, params.classifier, config.margin, config.scale)
                if not math.isfinite(out.value):
                    raise NonFiniteLoss(epoch, params.copy())
                params.weight -= lr * (out.grad_embeddings.T @ x)
                params.classifier -= lr * out.grad_classifier
                batch_losses.append(out.value)

        elif config.loss_kind == TRIPLET:
            n_batches = max(1, n // (3 * config.batch_speakers))
            for ia, ip, in_ in _triplet_batches(
                rng, by_speaker, eligible, m_speakers, n_batches, config.batch_speakers
            ):
                rows = np.empty(3 * ia.shape[0], dtype=np.int64)
                rows[0::3], rows[1::3], rows[2::3] = ia, ip, in_
                x = dataset.inputs[rows]
                emb = x @ params.weight.T
                out = triplet_loss(emb[0::3], emb[1::3], emb[2::3], config.triplet_margin)
                if not math.isfinite(out.value):
                    raise NonFiniteLoss(epoch, params.copy())
                params.weight -= lr * (out.grad_embeddings.T @ x)
                batch_losses.append(out.value)

        else:  # prototypical
            n_way = config.batch_speakers
            n_batches = max(1, n // (n_way * config.support_size))
            for rows in _episode_batches(
                rng, by_speaker, eligible, n_batches, n_way, config.support_size
            ):
                x = dataset.inputs[rows]
                emb = x @ params.weight.T
                out = prototypical_episode(emb, n_way, config.support_size)
                if not math.isfinite(out.value):
                    raise NonFiniteLoss(epoch, params.copy())
                params.weight -= lr * (out.grad_embeddings.T @ x)
                batch_losses.append(out.value)

        history.append(float(np.mean(batch_losses)))
    return TrainResult(params, history)


def export_embeddings(
    params: EncoderParams, features: EmbeddingTable, utterances: list[str] | None = None
) -> EmbeddingTable:
    """Embed utterance features through the trained encoder.

    The result uses the same text format as any other embedding table, so
    the audit pipeline consumes loss-lab output with no special path.
    """
    utts = sorted(features.entries) if utterances is None else sorted(utterances)
    entries = {}
    for utt in utts:
        entries[utt] = params.weight @ features.entries[utt]
    return EmbeddingTable(params.weight.shape[0], entries)

"""Synthetic cohorts and trial lists with a controllable group-bias knob.

Speakers get Gaussian centroids; utterances are centroid plus spherical
noise. The bias knob inflates within-speaker noise for the protected group
by (1 + beta), so beta = 0 makes the groups statistically identical and
beta > 0 degrades both the false-accept and false-reject behavior of the
protected group. All randomness comes from numpy's PCG64 keyed by the
config seed, so outputs are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientUtterances, InvalidConfig
from .ingest import EmbeddingTable
from .model import Gender, Label, SpeakerMeta, Trial


@dataclass(frozen=True)
class SynthConfig:
    n_speakers: int = 40
    utterances_per_speaker: int = 40
    input_dim: int = 16
    protected_fraction: float = 0.5
    bias: float = 0.0
    base_separation: float = 1.0
    noise_sigma: float = 0.5
    nationality_palette: tuple[tuple[str, float], ...] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_speakers < 2:
            raise InvalidConfig("n_speakers must be >= 2")
        if self.utterances_per_speaker < 2:
            raise InvalidConfig("utterances_per_speaker must be >= 2")
        if self.input_dim < 2:
            raise InvalidConfig("input_dim must be >= 2")
        if not 0.0 < self.protected_fraction < 1.0:
            raise InvalidConfig("protected_fraction must lie in (0, 1)")
        if not 0.0 <= self.bias <= 1.0:
            raise InvalidConfig("bias must lie in [0, 1]")
        if self.base_separation <= 0 or self.noise_sigma <= 0:
            raise InvalidConfig("base_separation and noise_sigma must be > 0")
        if not 1 <= self.n_protected < self.n_speakers:
            raise InvalidConfig(
                "protected_fraction must yield at least one protected and one "
                "unprotected speaker"
            )
        if self.nationality_palette is not None:
            if not self.nationality_palette:
                raise InvalidConfig("nationality_palette must not be empty")
            for code, weight in self.nationality_palette:
                if not code:
                    raise InvalidConfig("nationality codes must be nonempty")
                if weight <= 0:
                    raise InvalidConfig(f"nationality weight for {code!r} must be > 0")

    @property
    def n_protected(self) -> int:
        return round(self.protected_fraction * self.n_speakers)


@dataclass(frozen=True)
class Cohort:
    metadata: dict[str, SpeakerMeta]
    features: EmbeddingTable


def _speaker_id(i: int) -> str:
    return f"spk{i:05d}"


def gen_cohort(config: SynthConfig) -> Cohort:
    """Generate speaker metadata and per-utterance feature vectors."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    n, u, d = config.n_speakers, config.utterances_per_speaker, config.input_dim

    centroids = rng.normal(size=(n, d)) * config.base_separation
    protected = np.zeros(n, dtype=bool)
    protected[rng.permutation(n)[: config.n_protected]] = True

    if config.nationality_palette is not None:
        codes = [code.upper() for code, _ in config.nationality_palette]
        weights = np.array([w for _, w in config.nationality_palette], dtype=np.float64)
        nationalities = rng.choice(codes, size=n, p=weights / weights.sum())
    else:
        nationalities = ["UNK"] * n

    noise = rng.normal(size=(n, u, d))
    scale = np.where(protected, config.noise_sigma * (1.0 + config.bias), config.noise_sigma)
    features = centroids[:, None, :] + noise * scale[:, None, None]

    metadata: dict[str, SpeakerMeta] = {}
    entries: dict[str, np.ndarray] = {}
    for i in range(n):
        sid = _speaker_id(i)
        metadata[sid] = SpeakerMeta(
            speaker_id=sid,
            gender=Gender.FEMALE if protected[i] else Gender.MALE,
            nationality=str(nationalities[i]),
            utterance_count=u,
        )
        for j in range(u):
            entries[f"{sid}/{j:05d}"] = features[i, j].copy()
    return Cohort(metadata, EmbeddingTable(d, entries))


def _rejection_sample(
    rng: np.random.Generator, n_utts: int, n_needed: int, accept, p_estimate: float
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ordered index pairs uniformly over the pairs satisfying ``accept``."""
    got_a: list[np.ndarray] = []
    got_b: list[np.ndarray] = []
    remaining = n_needed
    while remaining > 0:
        chunk = max(1024, int(1.5 * remaining / max(p_estimate, 1e-6)))
        chunk = min(chunk, 4_000_000)
        a = rng.integers(0, n_utts, size=chunk)
        b = rng.integers(0, n_utts, size=chunk)
        ok = accept(a, b)
        a, b = a[ok][:remaining], b[ok][:remaining]
        got_a.append(a)
        got_b.append(b)
        remaining -= a.shape[0]
    return np.concatenate(got_a), np.concatenate(got_b)


def gen_trials(
    cohort: Cohort,
    n_target: int,
    n_nontarget: int,
    same_group_only: bool = False,
    seed: int = 0,
) -> list[Trial]:
    """Sample verification trials uniformly over eligible utterance pairs.

    Target trials pair two distinct utterances of one speaker; nontarget
    trials pair utterances of two distinct speakers (within one gender group
    when ``same_group_only`` is set, mirroring verification lists that only
    pair same-gender speakers).
    """
    if n_target < 0 or n_nontarget < 0:
        raise ValueError("trial counts must be nonnegative")
    utts = sorted(cohort.features.entries)
    speakers = sorted(cohort.metadata)
    spk_index = {s: i for i, s in enumerate(speakers)}
    utt_spk = np.array([spk_index[utt.split("/", 1)[0]] for utt in utts], dtype=np.int64)
    genders = np.array(
        [cohort.metadata[s].gender is Gender.FEMALE for s in speakers], dtype=np.int8
    )
    utt_gender = genders[utt_spk]
    n_utts = len(utts)

    rng = np.random.Generator(np.random.PCG64(seed))
    trials: list[Trial] = []

    if n_target > 0:
        per_spk = np.bincount(utt_spk, minlength=len(speakers))
        n_same_pairs = int(np.sum(per_spk * (per_spk - 1)))
        if n_same_pairs == 0:
            raise InsufficientUtterances("no speaker has two utterances to pair")
        p = n_same_pairs / (n_utts * (n_utts - 1))
        a, b = _rejection_sample(
            rng,
            n_utts,
            n_target,
            lambda x, y: (utt_spk[x] == utt_spk[y]) & (x != y),
            p,
        )
        trials.extend(Trial(utts[i], utts[j], Label.SAME) for i, j in zip(a, b))

    if n_nontarget > 0:
        if same_group_only:
            group_sizes = np.bincount(utt_gender, minlength=2)
            cross = 0
            for g in (0, 1):
                members = utt_spk[utt_gender == g]
                counts = np.bincount(members, minlength=len(speakers))
                cross += group_sizes[g] ** 2 - int(np.sum(counts**2))
            if cross == 0:
                raise InsufficientUtterances(
                    "no same-gender pair of distinct speakers exists"
                )
            p = cross / (n_utts * n_utts)
            accept = lambda x, y: (utt_spk[x] != utt_spk[y]) & (utt_gender[x] == utt_gender[y])
        else:
            if len(speakers) < 2:
                raise InsufficientUtterances("need two distinct speakers")
            p = 1.0 - 1.0 / len(speakers)
            accept = lambda x, y: utt_spk[x] != utt_spk[y]
        a, b = _rejection_sample(rng, n_utts, n_nontarget, accept, p)
        trials.extend(Trial(utts[i], utts[j], Label.DIFFERENT) for i, j in zip(a, b))

    return trials

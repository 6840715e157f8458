"""Group-fairness metrics over thresholded verification decisions.

All probabilities are plug-in frequency estimates (integer counts, one
division, no smoothing); smoothing would silently shrink the reported bias.
Headline metrics are absolute differences; the signed differences are kept
alongside them. Sign convention: protected minus unprotected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import InsufficientData, LengthMismatch, SingleNationalityCohort
from .model import (
    AssignmentPolicy,
    Attribute,
    Decision,
    GroupAssignment,
    GroupScheme,
    GroupValue,
    SchemeKind,
    SpeakerMeta,
    Trial,
    UNKNOWN_NATIONALITY,
    UttToSpeaker,
    assign_group,
    default_utt_to_speaker,
)
from .thresholding import eer_from_arrays

MEAN = "mean"
MAX = "max"

_GROUP_CODE = {GroupValue.UNPROTECTED: 0, GroupValue.PROTECTED: 1, GroupValue.EXCLUDED: 2}


@dataclass(frozen=True)
class ConfusionCells:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def n_positive(self) -> int:
        return self.tp + self.fn

    @property
    def n_negative(self) -> int:
        return self.fp + self.tn

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class GroupConfusion:
    protected: ConfusionCells
    unprotected: ConfusionCells
    excluded: int = 0


@dataclass(frozen=True)
class FairnessReport:
    scheme: GroupScheme
    threshold: float
    statistical_parity: float | None
    equalized_odds: float | None
    equal_opportunity: float | None
    statistical_parity_signed: float | None
    tpr_gap_signed: float | None
    fpr_gap_signed: float | None
    equal_opportunity_signed: float | None
    confusion: GroupConfusion
    excluded_trials: int
    eo_aggregation: str = MEAN


def group_confusion(
    decisions: Sequence[Decision],
    trials: Sequence[Trial],
    assignments: Sequence[GroupAssignment],
) -> GroupConfusion:
    """Tally per-group confusion cells; excluded trials are counted apart."""
    if not (len(decisions) == len(trials) == len(assignments)):
        raise LengthMismatch(
            f"got {len(decisions)} decisions, {len(trials)} trials, "
            f"{len(assignments)} assignments"
        )
    n = len(trials)
    d = np.fromiter((int(x.value) for x in decisions), dtype=np.uint8, count=n)
    y = np.fromiter((int(t.label) for t in trials), dtype=np.uint8, count=n)
    g = np.fromiter((_GROUP_CODE[a.value] for a in assignments), dtype=np.int8, count=n)
    return _confusion_from_arrays(d, y, g)


def _confusion_from_arrays(d: np.ndarray, y: np.ndarray, g: np.ndarray) -> GroupConfusion:
    c = _kernels.confusion_counts(d, y, g)
    return GroupConfusion(
        protected=ConfusionCells(int(c[0]), int(c[1]), int(c[2]), int(c[3])),
        unprotected=ConfusionCells(int(c[4]), int(c[5]), int(c[6]), int(c[7])),
        excluded=int(c[8]),
    )


def statistical_parity(confusion: GroupConfusion) -> float:
    """Signed difference of positive-decision rates, protected minus unprotected."""
    rates = []
    for name, cells in (("protected", confusion.protected), ("unprotected", confusion.unprotected)):
        if cells.total == 0:
            raise InsufficientData(name)
        rates.append((cells.tp + cells.fp) / cells.total)
    return rates[0] - rates[1]


def equalized_odds_gaps(confusion: GroupConfusion) -> tuple[float, float]:
    """Signed (TPR gap, FPR gap), protected minus unprotected."""
    p, u = confusion.protected, confusion.unprotected
    for name, cells in (("protected", p), ("unprotected", u)):
        if cells.n_positive == 0:
            raise InsufficientData(name, "Y=1")
        if cells.n_negative == 0:
            raise InsufficientData(name, "Y=0")
    tpr_gap = p.tp / p.n_positive - u.tp / u.n_positive
    fpr_gap = p.fp / p.n_negative - u.fp / u.n_negative
    return tpr_gap, fpr_gap


def equalized_odds(confusion: GroupConfusion, aggregation: str = MEAN) -> float:
    """Aggregate of the absolute TPR and FPR gaps (mean by default)."""
    if aggregation not in (MEAN, MAX):
        raise ValueError(f"aggregation must be {MEAN!r} or {MAX!r}, got {aggregation!r}")
    tpr_gap, fpr_gap = equalized_odds_gaps(confusion)
    gaps = (abs(tpr_gap), abs(fpr_gap))
    return sum(gaps) / 2 if aggregation == MEAN else max(gaps)


def equal_opportunity(confusion: GroupConfusion) -> float:
    """Signed difference of false-negative rates, protected minus unprotected."""
    p, u = confusion.protected, confusion.unprotected
    for name, cells in (("protected", p), ("unprotected", u)):
        if cells.n_positive == 0:
            raise InsufficientData(name, "Y=1")
    return p.fn / p.n_positive - u.fn / u.n_positive


EER_ON_ALL_TRIALS = "eer"


def _resolve_threshold(scores, labels, threshold) -> float:
    if threshold == EER_ON_ALL_TRIALS:
        return eer_from_arrays(scores, labels).threshold
    value = float(threshold)
    if not np.isfinite(value):
        raise ValueError("threshold must be finite")
    return value


def _assignment_codes(
    trials: Sequence[Trial],
    scheme: GroupScheme,
    cohort: Mapping[str, SpeakerMeta],
    utt_to_speaker: UttToSpeaker,
) -> np.ndarray:
    codes = np.empty(len(trials), dtype=np.int8)
    memo: dict[tuple[str, str], int] = {}
    for i, trial in enumerate(trials):
        key = (utt_to_speaker(trial.enroll_utt), utt_to_speaker(trial.test_utt))
        code = memo.get(key)
        if code is None:
            code = _GROUP_CODE[assign_group(trial, scheme, cohort, utt_to_speaker).value]
            memo[key] = code
        codes[i] = code
    return codes


def audit(
    scored,
    cohort: Mapping[str, SpeakerMeta],
    scheme: GroupScheme,
    threshold: float | str = EER_ON_ALL_TRIALS,
    *,
    eo_aggregation: str = MEAN,
    utt_to_speaker: UttToSpeaker = default_utt_to_speaker,
    mark_inestimable: bool = False,
) -> FairnessReport:
    """Run the full fairness audit on scored trials.

    The operating threshold is computed once over ALL supplied trials (both
    groups pooled) when ``threshold`` is "eer", mirroring how the system
    would actually be deployed; pass a float to pin it instead. With
    ``mark_inestimable`` a metric whose conditional probability has no
    supporting trials becomes None instead of raising.
    """
    if eo_aggregation not in (MEAN, MAX):
        raise ValueError(f"aggregation must be {MEAN!r} or {MAX!r}, got {eo_aggregation!r}")
    n = len(scored)
    scores = np.fromiter((st.score for st in scored), dtype=np.float64, count=n)
    labels = np.fromiter((int(st.trial.label) for st in scored), dtype=np.uint8, count=n)
    thr = _resolve_threshold(scores, labels, threshold)

    decisions = (scores >= thr).astype(np.uint8)
    trials = [st.trial for st in scored]
    groups = _assignment_codes(trials, scheme, cohort, utt_to_speaker)
    confusion = _confusion_from_arrays(decisions, labels, groups)

    def maybe(fn):
        try:
            return fn()
        except InsufficientData:
            if mark_inestimable:
                return None
            raise

    sp = maybe(lambda: statistical_parity(confusion))
    gaps = maybe(lambda: equalized_odds_gaps(confusion))
    eo = maybe(lambda: equal_opportunity(confusion))

    if gaps is None:
        eodds = tpr_gap = fpr_gap = None
    else:
        tpr_gap, fpr_gap = gaps
        pair = (abs(tpr_gap), abs(fpr_gap))
        eodds = sum(pair) / 2 if eo_aggregation == MEAN else max(pair)

    return FairnessReport(
        scheme=scheme,
        threshold=thr,
        statistical_parity=None if sp is None else abs(sp),
        equalized_odds=eodds,
        equal_opportunity=None if eo is None else abs(eo),
        statistical_parity_signed=sp,
        tpr_gap_signed=tpr_gap,
        fpr_gap_signed=fpr_gap,
        equal_opportunity_signed=eo,
        confusion=confusion,
        excluded_trials=confusion.excluded,
        eo_aggregation=eo_aggregation,
    )


@dataclass(frozen=True)
class SweepEntry:
    nationality: str
    speaker_count: int
    report: FairnessReport


def nationality_sweep(
    scored,
    cohort: Mapping[str, SpeakerMeta],
    policy: AssignmentPolicy = AssignmentPolicy.BY_ENROLLMENT_SPEAKER,
    threshold: float | str = EER_ON_ALL_TRIALS,
    *,
    eo_aggregation: str = MEAN,
    utt_to_speaker: UttToSpeaker = default_utt_to_speaker,
) -> list[SweepEntry]:
    """One one-vs-rest audit per nationality, sorted by speaker count.

    Every nationality present in the cohort (other than the UNK sentinel)
    gets an entry, ordered by speaker count descending with lexicographic
    tie-break. Metrics that cannot be estimated for a nationality are None
    rather than the entry being dropped. The threshold is shared by all
    entries (it does not depend on the scheme).
    """
    counts: dict[str, int] = {}
    for meta in cohort.values():
        if meta.nationality != UNKNOWN_NATIONALITY:
            counts[meta.nationality] = counts.get(meta.nationality, 0) + 1
    if len(counts) < 2:
        raise SingleNationalityCohort()

    n = len(scored)
    scores = np.fromiter((st.score for st in scored), dtype=np.float64, count=n)
    labels = np.fromiter((int(st.trial.label) for st in scored), dtype=np.uint8, count=n)
    thr = _resolve_threshold(scores, labels, threshold)

    entries = []
    for nationality in sorted(counts, key=lambda c: (-counts[c], c)):
        scheme = GroupScheme(SchemeKind.ONE_VS_REST, Attribute.NATIONALITY, nationality, policy)
        report = audit(
            scored,
            cohort,
            scheme,
            threshold=thr,
            eo_aggregation=eo_aggregation,
            utt_to_speaker=utt_to_speaker,
            mark_inestimable=True,
        )
        entries.append(SweepEntry(nationality, counts[nationality], report))
    return entries


def bootstrap_intervals(
    scored,
    cohort: Mapping[str, SpeakerMeta],
    scheme: GroupScheme,
    threshold: float,
    n_resamples: int = 1000,
    seed: int = 0,
    *,
    eo_aggregation: str = MEAN,
    utt_to_speaker: UttToSpeaker = default_utt_to_speaker,
    level: float = 0.95,
) -> dict[str, tuple[float, float]]:
    """Nonparametric bootstrap CIs over trials at a fixed threshold.

    Resamples trials with replacement; resamples where a metric is
    inestimable are dropped for that metric. Off the default audit path on
    purpose: point estimates are the primary product.
    """
    n = len(scored)
    scores = np.fromiter((st.score for st in scored), dtype=np.float64, count=n)
    labels = np.fromiter((int(st.trial.label) for st in scored), dtype=np.uint8, count=n)
    decisions = (scores >= threshold).astype(np.uint8)
    groups = _assignment_codes([st.trial for st in scored], scheme, cohort, utt_to_speaker)

    rng = np.random.Generator(np.random.PCG64(seed))
    samples: dict[str, list[float]] = {
        "statistical_parity": [],
        "equalized_odds": [],
        "equal_opportunity": [],
    }
    for _ in range(n_resamples):
        idx = rng.integers(0, n, size=n)
        confusion = _confusion_from_arrays(decisions[idx], labels[idx], groups[idx])
        try:
            samples["statistical_parity"].append(abs(statistical_parity(confusion)))
        except InsufficientData:
            pass
        try:
            samples["equalized_odds"].append(equalized_odds(confusion, eo_aggregation))
        except InsufficientData:
            pass
        try:
            samples["equal_opportunity"].append(abs(equal_opportunity(confusion)))
        except InsufficientData:
            pass

    lo_q, hi_q = 100 * (1 - level) / 2, 100 * (1 + level) / 2
    out = {}
    for name, values in samples.items():
        if values:
            arr = np.asarray(values)
            out[name] = (float(np.percentile(arr, lo_q)), float(np.percentile(arr, hi_q)))
        else:
            out[name] = (float("nan"), float("nan"))
    return out

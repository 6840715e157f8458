"""ROC construction, EER computation, and threshold application.

The decision rule is fixed once, here: d = 1 iff score >= threshold. The EER
crossing is found by locating the adjacent ROC points where far - frr changes
sign and interpolating both rates (and the threshold) linearly; an exact tie
at a point short-circuits interpolation. Results are bit-identical under any
permutation of the input because all counting happens per distinct score
value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateTrialSet
from .model import Decision, DecisionValue, ScoredTrial


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    far: float  # false-accept rate, P(d=1 | Y=0)
    frr: float  # false-reject rate, P(d=0 | Y=1)


@dataclass(frozen=True)
class EerResult:
    eer: float
    threshold: float
    #: True when all scores were equal and the result is the defined fallback
    #: (threshold = that score, eer = max(far, frr) there) rather than a crossing.
    degenerate: bool = False


def _score_label_arrays(scored: list[ScoredTrial]) -> tuple[np.ndarray, np.ndarray]:
    scores = np.fromiter((st.score for st in scored), dtype=np.float64, count=len(scored))
    labels = np.fromiter((int(st.trial.label) for st in scored), dtype=np.uint8, count=len(scored))
    return scores, labels


def _check_both_classes(labels: np.ndarray) -> tuple[int, int]:
    n_pos = int(labels.sum())
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateTrialSet()
    return n_pos, n_neg


def roc_curve(scored: list[ScoredTrial]) -> list[RocPoint]:
    """One RocPoint per distinct score, ascending, after a sentinel point.

    The sentinel sits one unit below the minimum score with far = 1, frr = 0
    (the accept-everything operating point).
    """
    if not scored:
        raise DegenerateTrialSet("empty trial set")
    scores, labels = _score_label_arrays(scored)
    n_pos, n_neg = _check_both_classes(labels)
    thresholds, n_neg_ge, n_pos_lt = _kernels.roc_counts(scores, labels)

    points = [RocPoint(float(thresholds[0]) - 1.0, 1.0, 0.0)]
    for t, fa, fr in zip(thresholds, n_neg_ge, n_pos_lt):
        points.append(RocPoint(float(t), float(fa / n_neg), float(fr / n_pos)))
    return points


def eer_from_arrays(scores: np.ndarray, labels: np.ndarray) -> EerResult:
    """EER over raw score/label arrays (labels 1 = same-speaker)."""
    if scores.shape[0] == 0:
        raise DegenerateTrialSet("empty trial set")
    n_pos, n_neg = _check_both_classes(labels)
    thresholds, n_neg_ge, n_pos_lt = _kernels.roc_counts(scores, labels)

    far = n_neg_ge / n_neg
    frr = n_pos_lt / n_pos

    if thresholds.shape[0] == 1:
        # all scores equal: refuse silent garbage but return a defined value
        return EerResult(float(max(far[0], frr[0])), float(thresholds[0]), degenerate=True)

    diff = far - frr
    ties = np.flatnonzero(diff == 0.0)
    if ties.size:
        k = int(ties[0])
        return EerResult(float(far[k]), float(thresholds[k]))

    # diff is nonincreasing in the threshold and starts positive; append the
    # reject-everything endpoint (far 0, frr 1) so a crossing always exists.
    thresholds = np.append(thresholds, thresholds[-1] + 1.0)
    far = np.append(far, 0.0)
    frr = np.append(frr, 1.0)
    diff = np.append(diff, -1.0)

    after = np.flatnonzero(diff < 0.0)[0]
    i = after - 1
    lam = diff[i] / (diff[i] - diff[after])
    eer = far[i] + lam * (far[after] - far[i])
    threshold = thresholds[i] + lam * (thresholds[after] - thresholds[i])
    return EerResult(float(eer), float(threshold))


def compute_eer(scored: list[ScoredTrial]) -> EerResult:
    """EER and the threshold where the false-accept and false-reject rates meet."""
    scores, labels = _score_label_arrays(scored)
    return eer_from_arrays(scores, labels)


def apply_threshold(scored: list[ScoredTrial], threshold: float) -> list[Decision]:
    """Positive decision iff score >= threshold, in input order."""
    if not np.isfinite(threshold):
        raise ValueError("threshold must be finite")
    return [
        Decision(DecisionValue.POSITIVE if st.score >= threshold else DecisionValue.NEGATIVE)
        for st in scored
    ]

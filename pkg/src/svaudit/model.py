"""Core domain types: speakers, trials, decisions, and group assignment.

All types are immutable after construction; :func:`assign_group` is a pure
function, so everything here is safe to share across threads.

Scores are always stored as *similarity* (strictly higher means more likely
same-speaker). Inputs declared as distances are negated at ingestion time so
no other module ever has to reason about polarity.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Mapping

from .errors import InvalidScheme, UnknownSpeaker

#: Sentinel for a speaker whose nationality is not known.
UNKNOWN_NATIONALITY = "UNK"


class Gender(enum.Enum):
    FEMALE = "female"
    MALE = "male"
    UNKNOWN = "unknown"


class Label(enum.IntEnum):
    """Ground truth of a trial: do both utterances come from one speaker?"""

    DIFFERENT = 0
    SAME = 1


class DecisionValue(enum.IntEnum):
    NEGATIVE = 0
    POSITIVE = 1


class SchemeKind(enum.Enum):
    BINARY = "binary"
    ONE_VS_REST = "one_vs_rest"


class Attribute(enum.Enum):
    GENDER = "gender"
    NATIONALITY = "nationality"


class AssignmentPolicy(enum.Enum):
    #: The enrollment speaker's attribute alone decides the trial's group.
    BY_ENROLLMENT_SPEAKER = "by_enrollment_speaker"
    #: Protected only if both speakers match; unprotected only if neither does.
    BOTH_SPEAKERS_REQUIRED = "both_speakers_required"


class GroupValue(enum.Enum):
    PROTECTED = "protected"
    UNPROTECTED = "unprotected"
    EXCLUDED = "excluded"


@dataclass(frozen=True)
class SpeakerMeta:
    speaker_id: str
    gender: Gender
    nationality: str
    utterance_count: int | None = None

    def __post_init__(self) -> None:
        if not self.speaker_id:
            raise ValueError("speaker_id must be nonempty")
        if not self.nationality:
            object.__setattr__(self, "nationality", UNKNOWN_NATIONALITY)
        if self.utterance_count is not None and self.utterance_count < 0:
            raise ValueError("utterance_count must be nonnegative")


@dataclass(frozen=True)
class Trial:
    enroll_utt: str
    test_utt: str
    label: Label

    def __post_init__(self) -> None:
        if not self.enroll_utt or not self.test_utt:
            raise ValueError("utterance ids must be nonempty")


@dataclass(frozen=True)
class ScoredTrial:
    trial: Trial
    score: float

    def __post_init__(self) -> None:
        if self.score != self.score or self.score in (float("inf"), float("-inf")):
            raise ValueError(f"score must be finite, got {self.score!r}")


@dataclass(frozen=True)
class Decision:
    value: DecisionValue


@dataclass(frozen=True)
class GroupScheme:
    """How trials map onto the protected / unprotected partition."""

    kind: SchemeKind
    attribute: Attribute
    protected_value: str
    assignment_policy: AssignmentPolicy = AssignmentPolicy.BY_ENROLLMENT_SPEAKER

    def __post_init__(self) -> None:
        if self.attribute is Attribute.GENDER:
            legal = {Gender.FEMALE.value, Gender.MALE.value}
            if self.protected_value not in legal:
                raise InvalidScheme(
                    f"protected_value {self.protected_value!r} is not a legal gender "
                    f"(expected one of {sorted(legal)})"
                )
        else:
            if not self.protected_value or self.protected_value == UNKNOWN_NATIONALITY:
                raise InvalidScheme(
                    f"protected_value {self.protected_value!r} is not a legal nationality"
                )

    def complement(self) -> "GroupScheme":
        """Swap which binary-attribute value is protected (gender only)."""
        if self.attribute is not Attribute.GENDER or self.kind is not SchemeKind.BINARY:
            raise InvalidScheme("complement is only defined for binary gender schemes")
        other = Gender.MALE.value if self.protected_value == Gender.FEMALE.value else Gender.FEMALE.value
        return GroupScheme(self.kind, self.attribute, other, self.assignment_policy)


@dataclass(frozen=True)
class GroupAssignment:
    value: GroupValue


def default_utt_to_speaker(utterance_id: str) -> str:
    """Map an utterance id to its speaker id.

    The speaker id is the path segment before the first '/' (the usual
    layout of verification trial lists). An id without '/' is its own
    speaker id.
    """
    return utterance_id.split("/", 1)[0]


UttToSpeaker = Callable[[str], str]


def _attribute_value(meta: SpeakerMeta, attribute: Attribute) -> str | None:
    """Attribute value used for matching, or None when it is unknown."""
    if attribute is Attribute.GENDER:
        if meta.gender is Gender.UNKNOWN:
            return None
        return meta.gender.value
    if meta.nationality == UNKNOWN_NATIONALITY:
        return None
    return meta.nationality


def _resolve(
    utterance_id: str,
    cohort: Mapping[str, SpeakerMeta],
    utt_to_speaker: UttToSpeaker,
) -> SpeakerMeta:
    speaker_id = utt_to_speaker(utterance_id)
    meta = cohort.get(speaker_id)
    if meta is None:
        raise UnknownSpeaker(speaker_id)
    return meta


def assign_group(
    trial: Trial,
    scheme: GroupScheme,
    cohort: Mapping[str, SpeakerMeta],
    utt_to_speaker: UttToSpeaker = default_utt_to_speaker,
) -> GroupAssignment:
    """Decide whether a trial belongs to the protected or unprotected group.

    Under BY_ENROLLMENT_SPEAKER the enrollment speaker's attribute alone
    decides; under BOTH_SPEAKERS_REQUIRED the trial is protected only when
    both speakers match the protected value, unprotected only when neither
    does, and excluded otherwise. Speakers whose attribute is unknown always
    exclude the trial (silent misassignment would corrupt the probability
    estimates downstream).
    """
    enroll = _resolve(trial.enroll_utt, cohort, utt_to_speaker)
    enroll_value = _attribute_value(enroll, scheme.attribute)

    if scheme.assignment_policy is AssignmentPolicy.BY_ENROLLMENT_SPEAKER:
        if enroll_value is None:
            return GroupAssignment(GroupValue.EXCLUDED)
        if enroll_value == scheme.protected_value:
            return GroupAssignment(GroupValue.PROTECTED)
        return GroupAssignment(GroupValue.UNPROTECTED)

    test = _resolve(trial.test_utt, cohort, utt_to_speaker)
    test_value = _attribute_value(test, scheme.attribute)
    if enroll_value is None or test_value is None:
        return GroupAssignment(GroupValue.EXCLUDED)
    enroll_match = enroll_value == scheme.protected_value
    test_match = test_value == scheme.protected_value
    if enroll_match and test_match:
        return GroupAssignment(GroupValue.PROTECTED)
    if not enroll_match and not test_match:
        return GroupAssignment(GroupValue.UNPROTECTED)
    return GroupAssignment(GroupValue.EXCLUDED)

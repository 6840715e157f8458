"""Exception hierarchy.

Every error raised by this package derives from :class:`SvauditError` so
callers (notably the CLI) can distinguish data problems from bugs. Parse
errors carry a 1-based line number.
"""

from __future__ import annotations


class SvauditError(Exception):
    """Base class for all svaudit errors."""


# --- ingest ---------------------------------------------------------------


class MalformedRow(SvauditError):
    def __init__(self, line_number: int, line: str, reason: str = ""):
        self.line_number = line_number
        self.line = line
        self.reason = reason
        detail = f": {reason}" if reason else ""
        super().__init__(f"malformed row at line {line_number}{detail}: {line!r}")


class DuplicateSpeaker(SvauditError):
    def __init__(self, speaker_id: str):
        self.speaker_id = speaker_id
        super().__init__(f"duplicate speaker id {speaker_id!r}")


class DuplicateUtterance(SvauditError):
    def __init__(self, utterance_id: str):
        self.utterance_id = utterance_id
        super().__init__(f"duplicate utterance id {utterance_id!r}")


class EmptyTrialList(SvauditError):
    def __init__(self) -> None:
        super().__init__("trial list contains no trials")


class UnmatchedTrial(SvauditError):
    def __init__(self, enroll_utt: str, test_utt: str):
        self.enroll_utt = enroll_utt
        self.test_utt = test_utt
        super().__init__(f"scored pair ({enroll_utt!r}, {test_utt!r}) not in the trial list")


class DimensionMismatch(SvauditError):
    def __init__(self, expected: int, found: int, line_number: int | None = None):
        self.expected = expected
        self.found = found
        self.line_number = line_number
        where = f" at line {line_number}" if line_number is not None else ""
        super().__init__(f"dimension mismatch{where}: expected {expected}, found {found}")


class ZeroNormVector(SvauditError):
    def __init__(self, utterance_id: str = ""):
        self.utterance_id = utterance_id
        what = f"embedding {utterance_id!r}" if utterance_id else "vector"
        super().__init__(f"{what} has zero Euclidean norm; cosine similarity is undefined")


# --- grouping -------------------------------------------------------------


class UnknownSpeaker(SvauditError):
    def __init__(self, speaker_id: str):
        self.speaker_id = speaker_id
        super().__init__(f"speaker {speaker_id!r} has no metadata in the cohort")


class InvalidScheme(SvauditError):
    pass


# --- scoring / thresholding ------------------------------------------------


class MissingEmbedding(SvauditError):
    def __init__(self, utterance_id: str):
        self.utterance_id = utterance_id
        super().__init__(f"no embedding for utterance {utterance_id!r}")


class DegenerateTrialSet(SvauditError):
    def __init__(self, reason: str = "need at least one same-speaker and one different-speaker trial"):
        super().__init__(reason)


# --- fairness ---------------------------------------------------------------


class LengthMismatch(SvauditError):
    pass


class InsufficientData(SvauditError):
    """A group-conditional probability cannot be estimated from zero trials."""

    def __init__(self, group: str, condition: str = ""):
        self.group = group
        self.condition = condition
        cond = f" with {condition}" if condition else ""
        super().__init__(f"{group} group has no trials{cond}; probability is inestimable")


class SingleNationalityCohort(SvauditError):
    def __init__(self) -> None:
        super().__init__("nationality sweep needs at least two distinct nationalities")


# --- loss lab ---------------------------------------------------------------


class LabelOutOfRange(SvauditError):
    def __init__(self, label: int, n_classes: int):
        self.label = label
        self.n_classes = n_classes
        super().__init__(f"label {label} outside [0, {n_classes})")


class InvalidMargin(SvauditError):
    pass


class SupportSizeMismatch(SvauditError):
    pass


class NonFiniteLoss(SvauditError):
    """Training hit a non-finite loss; carries the last finite parameters."""

    def __init__(self, epoch: int, params=None):
        self.epoch = epoch
        self.params = params
        super().__init__(f"non-finite loss at epoch {epoch}")


# --- synth ------------------------------------------------------------------


class InvalidConfig(SvauditError):
    pass


class InsufficientUtterances(SvauditError):
    pass


# --- reporting --------------------------------------------------------------


class EmptyGrid(SvauditError):
    def __init__(self) -> None:
        super().__init__("experiment grid has no rows or no columns")


class EmptySweep(SvauditError):
    def __init__(self) -> None:
        super().__init__("nationality sweep is empty")

"""Parsers and writers for the text interchange formats.

Formats (UTF-8, LF or CRLF, blank lines ignored, scientific notation ok):

* metadata: delimited table, header names at least id, gender, nationality
  (comma or tab, auto-detected from the header row; extra columns ignored)
* trials: one per line, ``<0|1> <enroll_utt> <test_utt>``
* scores: ``<enroll_utt> <test_utt> <score> [<0|1>]``
* embeddings: ``<utterance_id> <v1> ... <vd>``

Every parse error carries a 1-based line number. Writers emit files that
re-parse to identical structures (floats are written with repr, which
round-trips float64 exactly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, TextIO

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateSpeaker,
    DuplicateUtterance,
    EmptyTrialList,
    MalformedRow,
    UnmatchedTrial,
    ZeroNormVector,
)
from .model import Gender, Label, ScoredTrial, SpeakerMeta, Trial

_GENDER_ALIASES = {
    "f": Gender.FEMALE,
    "female": Gender.FEMALE,
    "m": Gender.MALE,
    "male": Gender.MALE,
}

SIMILARITY = "similarity"
DISTANCE = "distance"


@dataclass(frozen=True)
class EmbeddingTable:
    """Fixed-dimension embeddings keyed by utterance id."""

    dim: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        for utt, vec in self.entries.items():
            if vec.shape != (self.dim,):
                raise DimensionMismatch(self.dim, vec.shape[0] if vec.ndim == 1 else -1)
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"embedding {utt!r} has non-finite components")
            if not np.any(vec):
                raise ZeroNormVector(utt)


def _numbered_lines(stream: Iterable[str]) -> Iterator[tuple[int, str]]:
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if line.strip():
            yield lineno, line


def parse_metadata(stream: Iterable[str]) -> dict[str, SpeakerMeta]:
    """Parse a speaker metadata table into a cohort map."""
    lines = _numbered_lines(stream)
    try:
        header_no, header = next(lines)
    except StopIteration:
        raise MalformedRow(1, "", "empty metadata file") from None

    delim = "\t" if "\t" in header else ","
    columns = [c.strip().lower() for c in header.split(delim)]
    try:
        col = {name: columns.index(name) for name in ("id", "gender", "nationality")}
    except ValueError:
        raise MalformedRow(
            header_no, header, "header must name columns id, gender, nationality"
        ) from None
    count_col = columns.index("utterance_count") if "utterance_count" in columns else None

    cohort: dict[str, SpeakerMeta] = {}
    for lineno, line in lines:
        cells = [c.strip() for c in line.split(delim)]
        if len(cells) < len(columns):
            raise MalformedRow(lineno, line, f"expected {len(columns)} fields")
        speaker_id = cells[col["id"]]
        if not speaker_id:
            raise MalformedRow(lineno, line, "empty speaker id")
        if speaker_id in cohort:
            raise DuplicateSpeaker(speaker_id)

        gender = _GENDER_ALIASES.get(cells[col["gender"]].lower(), Gender.UNKNOWN)
        nationality = cells[col["nationality"]].upper()
        utterance_count = None
        if count_col is not None and cells[count_col]:
            try:
                utterance_count = int(cells[count_col])
            except ValueError:
                raise MalformedRow(lineno, line, "utterance_count is not an integer") from None
        cohort[speaker_id] = SpeakerMeta(speaker_id, gender, nationality, utterance_count)
    return cohort


def parse_trials(stream: Iterable[str]) -> list[Trial]:
    """Parse a trial list, preserving file order."""
    trials: list[Trial] = []
    for lineno, line in _numbered_lines(stream):
        fields = line.split()
        if len(fields) != 3:
            raise MalformedRow(lineno, line, "expected exactly 3 fields")
        label_text, enroll, test = fields
        if label_text not in ("0", "1"):
            raise MalformedRow(lineno, line, "label must be 0 or 1")
        trials.append(Trial(enroll, test, Label(int(label_text))))
    if not trials:
        raise EmptyTrialList()
    return trials


def _parse_real(text: str, lineno: int, line: str, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedRow(lineno, line, f"{what} is not a number") from None
    if not math.isfinite(value):
        raise MalformedRow(lineno, line, f"{what} must be finite")
    return value


def parse_scores(
    stream: Iterable[str],
    polarity: str = SIMILARITY,
    trials: list[Trial] | None = None,
) -> list[ScoredTrial]:
    """Parse a score file into scored trials, preserving file order.

    Scores declared as distances are negated on load so that internally
    higher always means more-likely-same. The label column may be omitted
    when ``trials`` is supplied for joining; joined pairs absent from the
    trial list raise UnmatchedTrial.
    """
    if polarity not in (SIMILARITY, DISTANCE):
        raise ValueError(f"polarity must be {SIMILARITY!r} or {DISTANCE!r}, got {polarity!r}")
    pair_label: dict[tuple[str, str], Label] | None = None
    if trials is not None:
        pair_label = {}
        for t in trials:
            pair_label.setdefault((t.enroll_utt, t.test_utt), t.label)

    scored: list[ScoredTrial] = []
    for lineno, line in _numbered_lines(stream):
        fields = line.split()
        if len(fields) not in (3, 4):
            raise MalformedRow(lineno, line, "expected 3 or 4 fields")
        enroll, test = fields[0], fields[1]
        score = _parse_real(fields[2], lineno, line, "score")
        if polarity == DISTANCE:
            score = -score

        label: Label | None = None
        if len(fields) == 4:
            if fields[3] not in ("0", "1"):
                raise MalformedRow(lineno, line, "label must be 0 or 1")
            label = Label(int(fields[3]))
        if pair_label is not None:
            joined = pair_label.get((enroll, test))
            if joined is None:
                raise UnmatchedTrial(enroll, test)
            if label is not None and label is not joined:
                raise MalformedRow(lineno, line, "label disagrees with the trial list")
            label = joined
        if label is None:
            raise MalformedRow(
                lineno, line, "no label column and no trial list to join against"
            )
        scored.append(ScoredTrial(Trial(enroll, test, label), score))
    return scored


def parse_embeddings(stream: Iterable[str]) -> EmbeddingTable:
    """Parse an embedding file; all lines must share one dimension."""
    dim: int | None = None
    entries: dict[str, np.ndarray] = {}
    for lineno, line in _numbered_lines(stream):
        fields = line.split()
        if len(fields) < 2:
            raise MalformedRow(lineno, line, "expected an utterance id and at least 1 value")
        utt = fields[0]
        if utt in entries:
            raise DuplicateUtterance(utt)
        values = [_parse_real(f, lineno, line, "component") for f in fields[1:]]
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise DimensionMismatch(dim, len(values), lineno)
        vec = np.array(values, dtype=np.float64)
        if not np.any(vec):
            raise ZeroNormVector(utt)
        entries[utt] = vec
    if dim is None:
        raise MalformedRow(1, "", "empty embedding file")
    return EmbeddingTable(dim, entries)


def parse_utt_map(stream: Iterable[str]) -> dict[str, str]:
    """Parse an explicit utterance-to-speaker map (``<utt> <speaker>`` lines)."""
    mapping: dict[str, str] = {}
    for lineno, line in _numbered_lines(stream):
        fields = line.split()
        if len(fields) != 2:
            raise MalformedRow(lineno, line, "expected exactly 2 fields")
        if fields[0] in mapping:
            raise DuplicateUtterance(fields[0])
        mapping[fields[0]] = fields[1]
    return mapping


# --- writers ----------------------------------------------------------------


def write_metadata(cohort: Mapping[str, SpeakerMeta], stream: TextIO) -> None:
    with_counts = any(m.utterance_count is not None for m in cohort.values())
    header = "id,gender,nationality" + (",utterance_count" if with_counts else "")
    stream.write(header + "\n")
    for speaker_id in sorted(cohort):
        meta = cohort[speaker_id]
        row = f"{meta.speaker_id},{meta.gender.value},{meta.nationality}"
        if with_counts:
            row += "," + ("" if meta.utterance_count is None else str(meta.utterance_count))
        stream.write(row + "\n")


def write_trials(trials: Iterable[Trial], stream: TextIO) -> None:
    for t in trials:
        stream.write(f"{int(t.label)} {t.enroll_utt} {t.test_utt}\n")


def write_scores(scored: Iterable[ScoredTrial], stream: TextIO) -> None:
    for st in scored:
        stream.write(f"{st.trial.enroll_utt} {st.trial.test_utt} {st.score!r} {int(st.trial.label)}\n")


def write_embeddings(table: EmbeddingTable, stream: TextIO) -> None:
    for utt, vec in table.entries.items():
        stream.write(utt + " " + " ".join(repr(float(v)) for v in vec) + "\n")


# --- path-based convenience --------------------------------------------------


def load_metadata(path: str | Path) -> dict[str, SpeakerMeta]:
    with open(path, encoding="utf-8") as fh:
        return parse_metadata(fh)


def load_trials(path: str | Path) -> list[Trial]:
    with open(path, encoding="utf-8") as fh:
        return parse_trials(fh)


def load_scores(
    path: str | Path, polarity: str = SIMILARITY, trials: list[Trial] | None = None
) -> list[ScoredTrial]:
    with open(path, encoding="utf-8") as fh:
        return parse_scores(fh, polarity=polarity, trials=trials)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    with open(path, encoding="utf-8") as fh:
        return parse_embeddings(fh)

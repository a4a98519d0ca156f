"""Readers and writers for the on-disk formats the pipelines exchange.

Everything is UTF-8 text except the feature archive (npz). Seconds are
written with up to 3 decimal places, so round trips are exact for times
on the millisecond grid. The literal ``<sc>`` is reserved for separator
tokens and rejected inside any text field.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .core import (
    SC,
    AttributedEntry,
    AttributedTranscript,
    DiarizationTrack,
    Meeting,
    Segment,
    Token,
    TokenMode,
    Utterance,
    tokenize,
)
from .sot import SotStream
from .wdsot.types import FeatureSequence

logger = logging.getLogger(__name__)


class ParseError(ValueError):
    """A malformed input file, positioned by path and line number."""

    def __init__(self, path: Path | str, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


def format_seconds(value: float) -> str:
    """Seconds with up to 3 decimal places, trailing zeros trimmed."""
    text = f"{value:.3f}".rstrip("0").rstrip(".")
    return text if text else "0"


def _split_fields(line: str) -> list[str]:
    return line.rstrip("\n").split("\t")


def _parse_seconds(path: Path, lineno: int, raw: str, what: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ParseError(path, lineno, f"bad {what}: {raw!r}") from None


# ── reference transcripts ───────────────────────────────────────────

def write_reference(meetings: Iterable[Meeting], path: Path | str, mode: TokenMode = "char") -> None:
    """Write `meeting_id<TAB>speaker<TAB>start<TAB>end<TAB>text` lines."""
    sep = "" if mode == "char" else " "
    with open(path, "w", encoding="utf-8") as fh:
        for meeting in meetings:
            for utt in meeting.utterances:
                text = sep.join(t.text for t in utt.tokens)
                fh.write(
                    f"{meeting.meeting_id}\t{utt.speaker}\t"
                    f"{format_seconds(utt.start)}\t{format_seconds(utt.end)}\t{text}\n"
                )


def read_reference(
    path: Path | str,
    mode: TokenMode = "char",
    segments: Mapping[str, list[Segment]] | None = None,
    max_speakers: int = 4,
) -> dict[str, Meeting]:
    """Parse a reference file into meetings keyed by id.

    Speaker inventories are built in order of first appearance. Oracle
    segments, when supplied, are attached to the matching meeting.
    """
    path = Path(path)
    utts: dict[str, list[Utterance]] = {}
    speakers: dict[str, dict[str, None]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            fields = _split_fields(line)
            if len(fields) != 5:
                raise ParseError(path, lineno, f"expected 5 tab-separated fields, got {len(fields)}")
            meeting_id, speaker, raw_start, raw_end, text = fields
            if SC in text:
                raise ParseError(path, lineno, f"reserved literal {SC!r} inside reference text")
            start = _parse_seconds(path, lineno, raw_start, "start time")
            end = _parse_seconds(path, lineno, raw_end, "end time")
            try:
                utt = Utterance(speaker, start, end, tokenize(text, mode))
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            utts.setdefault(meeting_id, []).append(utt)
            speakers.setdefault(meeting_id, {}).setdefault(speaker, None)
    meetings = {}
    for meeting_id, utterances in utts.items():
        segs = tuple((segments or {}).get(meeting_id, ()))
        meetings[meeting_id] = Meeting(
            meeting_id, tuple(speakers[meeting_id]), tuple(utterances), segs, max_speakers
        )
    return meetings


# ── oracle segments ─────────────────────────────────────────────────

def write_segments(segments: Mapping[str, Iterable[Segment]], path: Path | str) -> None:
    """Write `meeting_id<TAB>start<TAB>end`; line order defines segment_index."""
    with open(path, "w", encoding="utf-8") as fh:
        for meeting_id, segs in segments.items():
            for seg in segs:
                fh.write(f"{meeting_id}\t{format_seconds(seg.start)}\t{format_seconds(seg.end)}\n")


def read_segments(path: Path | str) -> dict[str, list[Segment]]:
    path = Path(path)
    out: dict[str, list[Segment]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            fields = _split_fields(line)
            if len(fields) != 3:
                raise ParseError(path, lineno, f"expected 3 tab-separated fields, got {len(fields)}")
            meeting_id, raw_start, raw_end = fields
            start = _parse_seconds(path, lineno, raw_start, "start time")
            end = _parse_seconds(path, lineno, raw_end, "end time")
            try:
                out.setdefault(meeting_id, []).append(Segment(meeting_id, start, end))
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
    return out


# ── RTTM diarization ────────────────────────────────────────────────

def write_rttm(tracks: Iterable[DiarizationTrack], path: Path | str, channel: int = 1) -> None:
    """NIST 10-column RTTM, one SPEAKER record per activity interval."""
    with open(path, "w", encoding="utf-8") as fh:
        for track in tracks:
            for speaker in track.speakers:
                for start, end in track.intervals[speaker]:
                    fh.write(
                        f"SPEAKER {track.meeting_id} {channel} "
                        f"{format_seconds(start)} {format_seconds(end - start)} "
                        f"<NA> <NA> {speaker} <NA> <NA>\n"
                    )


def read_rttm(path: Path | str) -> dict[str, DiarizationTrack]:
    """Parse RTTM into per-meeting tracks.

    Overlapping intervals of the same speaker merge; record types other
    than SPEAKER are skipped with a warning.
    """
    path = Path(path)
    raw: dict[str, dict[str, list[tuple[float, float]]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            fields = line.split()
            if fields[0] != "SPEAKER":
                logger.warning("%s:%d: skipping %r record", path, lineno, fields[0])
                continue
            if len(fields) < 8:
                raise ParseError(path, lineno, f"expected >= 8 whitespace fields, got {len(fields)}")
            meeting_id = fields[1]
            onset = _parse_seconds(path, lineno, fields[3], "onset")
            duration = _parse_seconds(path, lineno, fields[4], "duration")
            if duration <= 0:
                raise ParseError(path, lineno, f"duration must be positive, got {fields[4]}")
            speaker = fields[7]
            raw.setdefault(meeting_id, {}).setdefault(speaker, []).append((onset, onset + duration))
    return {
        meeting_id: DiarizationTrack.from_raw(meeting_id, by_speaker)
        for meeting_id, by_speaker in raw.items()
    }


# ── SOT hypotheses ──────────────────────────────────────────────────

def write_hypotheses(hyps: Mapping[str, list[SotStream]], path: Path | str) -> None:
    """Write `meeting_id<TAB>segment_index<TAB>sot_text` (space-joined tokens)."""
    with open(path, "w", encoding="utf-8") as fh:
        for meeting_id, streams in hyps.items():
            for index, stream in enumerate(streams):
                fh.write(f"{meeting_id}\t{index}\t{stream.text}\n")


def read_hypotheses(path: Path | str, mode: TokenMode = "char") -> dict[str, list[SotStream]]:
    """Parse a hypothesis file; segment indexes must be dense from 0."""
    path = Path(path)
    rows: dict[str, dict[int, SotStream]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            fields = _split_fields(line)
            if len(fields) != 3:
                raise ParseError(path, lineno, f"expected 3 tab-separated fields, got {len(fields)}")
            meeting_id, raw_index, sot_text = fields
            try:
                index = int(raw_index)
            except ValueError:
                raise ParseError(path, lineno, f"bad segment index: {raw_index!r}") from None
            if index < 0:
                raise ParseError(path, lineno, f"segment index must be >= 0, got {index}")
            tokens: list[Token] = []
            for piece in sot_text.split():
                if piece == SC:
                    tokens.append(Token(SC, is_separator=True))
                else:
                    tokens.extend(tokenize(piece, mode))
            per_meeting = rows.setdefault(meeting_id, {})
            if index in per_meeting:
                raise ParseError(path, lineno, f"duplicate segment index {index} for {meeting_id}")
            per_meeting[index] = SotStream(tuple(tokens))
    out = {}
    for meeting_id, by_index in rows.items():
        expected = set(range(len(by_index)))
        if set(by_index) != expected:
            missing = sorted(expected - set(by_index))
            raise ParseError(path, 0, f"{meeting_id}: segment indexes not dense, missing {missing}")
        out[meeting_id] = [by_index[i] for i in range(len(by_index))]
    return out


# ── attributed transcripts ──────────────────────────────────────────

def write_attributed(transcripts: Mapping[str, AttributedTranscript], path: Path | str) -> None:
    """Write `meeting_id<TAB>segment_index<TAB>speaker<TAB>token` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for meeting_id, transcript in transcripts.items():
            for entry in transcript.entries:
                fh.write(f"{meeting_id}\t{entry.segment_index}\t{entry.speaker}\t{entry.token.text}\n")


def read_attributed(path: Path | str) -> dict[str, AttributedTranscript]:
    path = Path(path)
    entries: dict[str, list[AttributedEntry]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            fields = _split_fields(line)
            if len(fields) != 4:
                raise ParseError(path, lineno, f"expected 4 tab-separated fields, got {len(fields)}")
            meeting_id, raw_index, speaker, token_text = fields
            try:
                index = int(raw_index)
            except ValueError:
                raise ParseError(path, lineno, f"bad segment index: {raw_index!r}") from None
            try:
                entry = AttributedEntry(Token(token_text), speaker, index)
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            entries.setdefault(meeting_id, []).append(entry)
    out = {}
    for meeting_id, meeting_entries in entries.items():
        try:
            out[meeting_id] = AttributedTranscript(tuple(meeting_entries))
        except ValueError as exc:
            raise ParseError(path, 0, f"{meeting_id}: {exc}") from None
    return out


# ── speaker embeddings ──────────────────────────────────────────────

def write_embeddings(profiles: Mapping[str, Mapping[str, np.ndarray]], path: Path | str) -> None:
    """Write `meeting_id<TAB>speaker<TAB>dim<TAB>v1 v2 ...` with full precision."""
    with open(path, "w", encoding="utf-8") as fh:
        for meeting_id, by_speaker in profiles.items():
            for speaker, vec in by_speaker.items():
                vec = np.asarray(vec, dtype=np.float64)
                values = " ".join(repr(float(v)) for v in vec)
                fh.write(f"{meeting_id}\t{speaker}\t{vec.shape[0]}\t{values}\n")


def read_embeddings(path: Path | str) -> dict[str, dict[str, np.ndarray]]:
    path = Path(path)
    out: dict[str, dict[str, np.ndarray]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            fields = _split_fields(line)
            if len(fields) != 4:
                raise ParseError(path, lineno, f"expected 4 tab-separated fields, got {len(fields)}")
            meeting_id, speaker, raw_dim, raw_values = fields
            try:
                dim = int(raw_dim)
                vec = np.array([float(v) for v in raw_values.split()], dtype=np.float64)
            except ValueError:
                raise ParseError(path, lineno, "bad embedding values") from None
            if vec.shape[0] != dim:
                raise ParseError(path, lineno, f"declared dim {dim} but found {vec.shape[0]} values")
            out.setdefault(meeting_id, {})[speaker] = vec
    return out


# ── feature archives ────────────────────────────────────────────────

def write_features(
    features: Mapping[str, list[FeatureSequence]], path: Path | str
) -> None:
    """Store per-segment frame matrices in one npz archive (bit-exact)."""
    arrays: dict[str, np.ndarray] = {}
    for meeting_id, sequences in features.items():
        for index, seq in enumerate(sequences):
            arrays[f"{meeting_id}/{index}/frames"] = seq.frames
            arrays[f"{meeting_id}/{index}/frame_step"] = np.float64(seq.frame_step)
    np.savez(path, **arrays)


def read_features(path: Path | str) -> dict[str, list[FeatureSequence]]:
    with np.load(path) as archive:
        grouped: dict[str, dict[int, FeatureSequence]] = {}
        for key in archive.files:
            if not key.endswith("/frames"):
                continue
            meeting_id, raw_index, _ = key.rsplit("/", 2)
            index = int(raw_index)
            step = float(archive[f"{meeting_id}/{index}/frame_step"])
            grouped.setdefault(meeting_id, {})[index] = FeatureSequence(archive[key], step)
    return {
        meeting_id: [by_index[i] for i in range(len(by_index))]
        for meeting_id, by_index in grouped.items()
    }

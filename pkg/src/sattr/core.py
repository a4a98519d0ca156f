"""Domain types shared by every pipeline, plus canonical FIFO ordering.

Times are seconds stored as exact floats read from input files; nothing
here rounds them. All types are immutable values and safe to share
across concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, Sequence

from .intervals import Interval, merge_intervals

SC = "<sc>"

FifoMode = Literal["utterance", "speaker"]
TokenMode = Literal["char", "word"]


@dataclass(frozen=True)
class Token:
    """One grapheme-level unit, or the reserved speaker-change separator."""

    text: str
    is_separator: bool = False

    def __post_init__(self) -> None:
        if self.is_separator:
            if self.text != SC:
                raise ValueError(f"separator token must carry {SC!r}, got {self.text!r}")
        else:
            if not self.text:
                raise ValueError("token text must be non-empty")
            if any(c.isspace() for c in self.text):
                raise ValueError(f"token text may not contain whitespace: {self.text!r}")
            if self.text == SC:
                raise ValueError(f"{SC!r} is reserved for separator tokens")


SC_TOKEN = Token(SC, is_separator=True)


def tokenize(text: str, mode: TokenMode = "char") -> tuple[Token, ...]:
    """Split raw text into tokens.

    Character mode emits one token per non-whitespace Unicode scalar;
    word mode splits on whitespace.
    """
    if mode == "char":
        return tuple(Token(c) for c in text if not c.isspace())
    if mode == "word":
        return tuple(Token(w) for w in text.split())
    raise ValueError(f"unknown token mode {mode!r}")


def detokenize(tokens: Iterable[Token], mode: TokenMode = "char") -> str:
    sep = "" if mode == "char" else " "
    return sep.join(t.text for t in tokens)


@dataclass(frozen=True)
class Utterance:
    """One speaker's contiguous turn with timestamps.

    ``tokens`` may be empty only for pure diarization segments that carry
    no transcription.
    """

    speaker: str
    start: float
    end: float
    tokens: tuple[Token, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not (0.0 <= self.start < self.end):
            raise ValueError(f"need 0 <= start < end, got [{self.start}, {self.end})")
        if any(t.is_separator for t in self.tokens):
            raise ValueError("utterance tokens may not contain separators")

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def text(self) -> str:
        return detokenize(self.tokens)


@dataclass(frozen=True)
class Segment:
    """An oracle sentence-segmentation boundary within a meeting."""

    meeting_id: str
    start: float
    end: float

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise ValueError(f"segment needs start < end, got [{self.start}, {self.end})")


@dataclass(frozen=True)
class Meeting:
    """A meeting: speaker inventory, reference utterances, oracle segments."""

    meeting_id: str
    speakers: tuple[str, ...]
    utterances: tuple[Utterance, ...] = ()
    segments: tuple[Segment, ...] = ()
    max_speakers: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, "speakers", tuple(self.speakers))
        object.__setattr__(self, "utterances", tuple(self.utterances))
        object.__setattr__(self, "segments", tuple(self.segments))
        if len(set(self.speakers)) != len(self.speakers):
            raise ValueError("duplicate speaker ids")
        if not 2 <= len(self.speakers) <= self.max_speakers:
            raise ValueError(
                f"meeting needs 2..{self.max_speakers} speakers, got {len(self.speakers)}"
            )
        known = set(self.speakers)
        for utt in self.utterances:
            if utt.speaker not in known:
                raise ValueError(f"utterance speaker {utt.speaker!r} not in inventory")

    def segment_utterances(self, index: int) -> tuple[Utterance, ...]:
        """Reference utterances belonging to segment ``index`` (by start time)."""
        seg = self.segments[index]
        return tuple(u for u in self.utterances if seg.start <= u.start < seg.end)


@dataclass(frozen=True)
class AttributedEntry:
    token: Token
    speaker: str
    segment_index: int


@dataclass(frozen=True)
class AttributedTranscript:
    """Per-token speaker assignments — the common output of every approach."""

    entries: tuple[AttributedEntry, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        prev = -1
        for e in self.entries:
            if e.token.is_separator:
                raise ValueError("attributed entries may not contain separators")
            if e.segment_index < prev:
                raise ValueError("segment_index must be nondecreasing")
            prev = e.segment_index

    def speaker_tokens(self, speaker: str) -> tuple[Token, ...]:
        """Tokens attributed to ``speaker`` in (segment_index, position) order."""
        return tuple(e.token for e in self.entries if e.speaker == speaker)

    @property
    def speakers(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for e in self.entries:
            seen.setdefault(e.speaker, None)
        return tuple(seen)


@dataclass(frozen=True)
class DiarUtterance:
    """One merged activity island of a speaker inside a segment."""

    speaker: str
    start: float
    end: float

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise ValueError(f"diar utterance needs start < end, got [{self.start}, {self.end})")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class DiarizationTrack:
    """Frame-level per-speaker activity for one meeting, as intervals.

    ``intervals`` maps speaker id to a sorted tuple of disjoint
    (start, end) pairs. ``frame_step`` records the granularity when the
    track was derived from frame posteriors (0.0 when interval-native).
    """

    meeting_id: str
    intervals: Mapping[str, tuple[Interval, ...]]
    frame_step: float = 0.0

    def __post_init__(self) -> None:
        frozen = {}
        for speaker, ivs in self.intervals.items():
            ivs = tuple((float(s), float(e)) for s, e in ivs)
            for (s, e) in ivs:
                if not s < e:
                    raise ValueError(f"bad interval [{s}, {e}) for {speaker!r}")
            for (_, e0), (s1, _) in zip(ivs, ivs[1:]):
                if s1 < e0:
                    raise ValueError(f"intervals for {speaker!r} must be disjoint and sorted")
            frozen[speaker] = ivs
        object.__setattr__(self, "intervals", frozen)

    @classmethod
    def from_raw(
        cls, meeting_id: str, raw: Mapping[str, Sequence[Interval]], frame_step: float = 0.0
    ) -> "DiarizationTrack":
        """Build a track from unsorted, possibly overlapping per-speaker intervals."""
        merged = {
            spk: tuple(merge_intervals(list(ivs)))
            for spk, ivs in raw.items()
            if ivs
        }
        return cls(meeting_id, merged, frame_step)

    @property
    def speakers(self) -> tuple[str, ...]:
        return tuple(sorted(self.intervals))


def sort_fifo(utterances: Sequence[Utterance], mode: FifoMode = "utterance") -> list[Utterance]:
    """Order utterances first-in-first-out by start time.

    Utterance mode sorts individual utterances by start; speaker mode
    groups each speaker's utterances contiguously, groups ordered by the
    speaker's earliest start. Start-time ties break by (speaker id, end).
    The result is always a permutation of the input.
    """
    if mode == "utterance":
        return sorted(utterances, key=lambda u: (u.start, u.speaker, u.end))
    if mode == "speaker":
        groups: dict[str, list[Utterance]] = {}
        for u in utterances:
            groups.setdefault(u.speaker, []).append(u)
        order = sorted(groups, key=lambda s: (min(u.start for u in groups[s]), s))
        out: list[Utterance] = []
        for speaker in order:
            out.extend(sorted(groups[speaker], key=lambda u: (u.start, u.end)))
        return out
    raise ValueError(f"unknown FIFO mode {mode!r}")

"""Speaker selection for the target-speaker recognition front-end.

Decides which speakers to run target-speaker ASR for in each oracle
segment, dropping speakers whose diarized speech is too short (the
minimum-duration filter; 0.5 s is the default operating point).
"""

from __future__ import annotations

from typing import Literal, Mapping, Sequence

from .core import (
    AttributedEntry,
    AttributedTranscript,
    DiarizationTrack,
    Segment,
    Token,
)
from .fdsot import DEFAULT_GAP_TOL
from .intervals import clip_intervals, merge_intervals, total_duration

DEFAULT_MIN_DUR = 0.5

DurationSemantics = Literal["island", "total"]


def select_speakers(
    track: DiarizationTrack,
    segment: Segment,
    min_dur: float = DEFAULT_MIN_DUR,
    gap_tol: float = DEFAULT_GAP_TOL,
    semantics: DurationSemantics = "island",
) -> list[tuple[str, float]]:
    """Speakers worth running target-speaker recognition for.

    A speaker passes when, after the same gap-merging as utterance
    counting, its longest merged island in the segment lasts at least
    ``min_dur`` ("island" semantics) or its summed activity does
    ("total" semantics). min_dur 0 keeps every speaker with any
    activity. Returned as (speaker, summed activity) sorted by first
    onset.
    """
    if min_dur < 0:
        raise ValueError(f"min_dur must be >= 0, got {min_dur}")
    selected: list[tuple[float, str, float]] = []
    for speaker, intervals in track.intervals.items():
        islands = merge_intervals(
            clip_intervals(list(intervals), segment.start, segment.end), gap_tol
        )
        if not islands:
            continue
        total = total_duration(islands)
        key = max(e - s for s, e in islands) if semantics == "island" else total
        if key >= min_dur:
            selected.append((islands[0][0], speaker, total))
    selected.sort(key=lambda item: (item[0], item[1]))
    return [(speaker, total) for _, speaker, total in selected]


def assemble_segment(
    runs: Mapping[str, Sequence[Token]],
    selected: Sequence[tuple[str, float]] | Sequence[str],
    segment_index: int,
) -> list[AttributedEntry]:
    """Entries for one segment: each selected speaker's recognized run.

    ``selected`` must already be in onset order (as produced by
    :func:`select_speakers`); a run for a non-selected speaker is an
    error, and non-selected speakers contribute nothing.
    """
    order = [s[0] if isinstance(s, tuple) else s for s in selected]
    extra = set(runs) - set(order)
    if extra:
        raise ValueError(f"runs provided for non-selected speakers: {sorted(extra)}")
    entries = []
    for speaker in order:
        for token in runs.get(speaker, ()):
            entries.append(AttributedEntry(token, speaker, segment_index))
    return entries


def assemble_ts_transcript(
    per_segment_runs: Sequence[Mapping[str, Sequence[Token]]],
    per_segment_selected: Sequence[Sequence[tuple[str, float]] | Sequence[str]],
    segments: Sequence[Segment],
) -> AttributedTranscript:
    """Meeting-level assembly of per-speaker target recognition outputs."""
    if not len(per_segment_runs) == len(per_segment_selected) == len(segments):
        raise ValueError("runs, selections, and segments must align one-to-one")
    entries: list[AttributedEntry] = []
    for index in range(len(segments)):
        entries.extend(
            assemble_segment(per_segment_runs[index], per_segment_selected[index], index)
        )
    return AttributedTranscript(tuple(entries))

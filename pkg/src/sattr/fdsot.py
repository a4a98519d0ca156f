"""Timestamp-based assembly: reconcile diarization utterance counts with
SOT token runs and match them chronologically.

Per segment the pipeline is: count merged activity islands per speaker
(N_hat), split the recognizer stream into runs (N), then reconcile —
equal counts pair index-wise; surplus diarization utterances are pruned
to the longest durations; surplus runs are pruned to the longest text
lengths. Kept items are matched in chronological / emission order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .core import (
    AttributedEntry,
    AttributedTranscript,
    DiarizationTrack,
    DiarUtterance,
    Segment,
    Token,
)
from .intervals import clip_intervals, merge_intervals
from .sot import SotStream, deserialize

DEFAULT_GAP_TOL = 0.3


def count_utterances(
    track: DiarizationTrack, segment: Segment, gap_tol: float = DEFAULT_GAP_TOL
) -> list[DiarUtterance]:
    """Estimate the segment's utterances from frame-level diarization.

    Per speaker, activity is intersected with the segment and gaps
    shorter than ``gap_tol`` are bridged; each maximal island becomes one
    utterance. The result is sorted by start (ties by speaker id).
    """
    found: list[DiarUtterance] = []
    for speaker, intervals in track.intervals.items():
        clipped = clip_intervals(list(intervals), segment.start, segment.end)
        for start, end in merge_intervals(clipped, gap_tol):
            found.append(DiarUtterance(speaker, start, end))
    return sorted(found, key=lambda u: (u.start, u.speaker, u.end))


@dataclass
class AlignStats:
    """Diagnostics for one segment's count reconciliation."""

    n_diar: int = 0
    n_runs: int = 0
    dropped_diar: int = 0
    dropped_runs: int = 0

    def __add__(self, other: "AlignStats") -> "AlignStats":
        return AlignStats(
            self.n_diar + other.n_diar,
            self.n_runs + other.n_runs,
            self.dropped_diar + other.dropped_diar,
            self.dropped_runs + other.dropped_runs,
        )


def align(
    diar_utts: Sequence[DiarUtterance], sot_runs: Sequence[Sequence[Token]]
) -> tuple[list[tuple[str, list[Token]]], AlignStats]:
    """Match diarization utterances to SOT runs chronologically.

    With N_hat > N, only the N longest-duration diarization utterances
    survive (start order restored before pairing); with N_hat < N, only
    the N_hat longest runs survive (emission order preserved). Ties keep
    the earlier item, so the selection is stable.
    """
    n_hat, n = len(diar_utts), len(sot_runs)
    stats = AlignStats(n_diar=n_hat, n_runs=n)
    kept_diar = list(enumerate(diar_utts))
    kept_runs = list(enumerate(sot_runs))
    if n_hat > n:
        by_duration = sorted(kept_diar, key=lambda iu: (-iu[1].duration, iu[0]))
        kept_diar = sorted(by_duration[:n], key=lambda iu: iu[0])
        stats.dropped_diar = n_hat - n
    elif n_hat < n:
        by_length = sorted(kept_runs, key=lambda ir: (-len(ir[1]), ir[0]))
        kept_runs = sorted(by_length[:n_hat], key=lambda ir: ir[0])
        stats.dropped_runs = n - n_hat
    return (
        [(utt.speaker, list(run)) for (_, utt), (_, run) in zip(kept_diar, kept_runs)],
        stats,
    )


def assemble(
    track: DiarizationTrack,
    hyps: Sequence[SotStream],
    segments: Sequence[Segment],
    gap_tol: float = DEFAULT_GAP_TOL,
) -> tuple[AttributedTranscript, AlignStats]:
    """Run FD-SOT over a meeting: one hypothesis stream per oracle segment."""
    if len(hyps) != len(segments):
        raise ValueError(f"need one hypothesis per segment: got {len(hyps)} for {len(segments)}")
    entries: list[AttributedEntry] = []
    totals = AlignStats()
    for index, (stream, segment) in enumerate(zip(hyps, segments)):
        diar_utts = count_utterances(track, segment, gap_tol)
        runs, _ = deserialize(stream)
        pairs, stats = align(diar_utts, runs)
        totals = totals + stats
        for speaker, run in pairs:
            entries.extend(AttributedEntry(tok, speaker, index) for tok in run)
    return AttributedTranscript(tuple(entries)), totals

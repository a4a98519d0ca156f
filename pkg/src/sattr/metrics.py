"""Scoring: Levenshtein edit counts, SI-CER, SD-CER, and DER.

SD-CER compares each global speaker's hypothesis stream against that
speaker's reference stream directly (no permutation search) and pools
total errors over total reference length for the whole meeting.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Literal, Sequence

from scipy.optimize import linear_sum_assignment

from .core import AttributedTranscript, DiarizationTrack, Meeting, Token, sort_fifo
from .intervals import Interval, merge_intervals
from .sot import SotStream, deserialize

EXHAUSTIVE_PERM_LIMIT = 6
EXHAUSTIVE_DER_LIMIT = 8


@dataclass(frozen=True)
class EditCounts:
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    ref_length: int = 0

    def __post_init__(self) -> None:
        if min(self.substitutions, self.deletions, self.insertions, self.ref_length) < 0:
            raise ValueError("edit counts must be nonnegative")
        if self.ref_length < self.substitutions + self.deletions:
            raise ValueError("ref_length must cover substitutions + deletions")

    @property
    def total_errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def rate(self) -> float:
        if self.ref_length > 0:
            return self.total_errors / self.ref_length
        return 0.0 if self.total_errors == 0 else math.inf

    def __add__(self, other: "EditCounts") -> "EditCounts":
        return EditCounts(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.ref_length + other.ref_length,
        )


AlignOp = Literal["match", "sub", "del", "ins"]


def _texts(tokens: Sequence[Token | str]) -> list[str]:
    return [t if isinstance(t, str) else t.text for t in tokens]


def edit_alignment(hyp: Sequence[Token | str], ref: Sequence[Token | str]) -> list[tuple[AlignOp, int | None, int | None]]:
    """Minimal-cost alignment as (op, ref_index, hyp_index) steps.

    Unit costs; among minimal alignments substitution is preferred over
    delete+insert, then deletion over insertion, so the backtrace is
    deterministic.
    """
    h, r = _texts(hyp), _texts(ref)
    R, H = len(r), len(h)
    # cost[i][j]: aligning ref[:i] with hyp[:j]; op[i][j]: best last step.
    cost = [[0] * (H + 1) for _ in range(R + 1)]
    op = [[b""] * (H + 1) for _ in range(R + 1)]
    for i in range(1, R + 1):
        cost[i][0] = i
        op[i][0] = b"d"
    for j in range(1, H + 1):
        cost[0][j] = j
        op[0][j] = b"i"
    for i in range(1, R + 1):
        prev, cur = cost[i - 1], cost[i]
        ri = r[i - 1]
        opi = op[i]
        for j in range(1, H + 1):
            diag = prev[j - 1] + (0 if ri == h[j - 1] else 1)
            dele = prev[j] + 1
            ins = cur[j - 1] + 1
            if diag <= dele and diag <= ins:
                cur[j] = diag
                opi[j] = b"m" if ri == h[j - 1] else b"s"
            elif dele <= ins:
                cur[j] = dele
                opi[j] = b"d"
            else:
                cur[j] = ins
                opi[j] = b"i"
    steps: list[tuple[AlignOp, int | None, int | None]] = []
    i, j = R, H
    while i > 0 or j > 0:
        step = op[i][j]
        if step == b"m":
            i, j = i - 1, j - 1
            steps.append(("match", i, j))
        elif step == b"s":
            i, j = i - 1, j - 1
            steps.append(("sub", i, j))
        elif step == b"d":
            i -= 1
            steps.append(("del", i, None))
        else:
            j -= 1
            steps.append(("ins", None, j))
    steps.reverse()
    return steps


def edit_distance(hyp: Sequence[Token | str], ref: Sequence[Token | str]) -> EditCounts:
    """Levenshtein edit counts between token sequences (unit costs)."""
    subs = dels = ins = 0
    for kind, _, _ in edit_alignment(hyp, ref):
        if kind == "sub":
            subs += 1
        elif kind == "del":
            dels += 1
        elif kind == "ins":
            ins += 1
    return EditCounts(subs, dels, ins, len(ref))


# ── SD-CER ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SdCerResult:
    per_speaker: dict[str, EditCounts]
    total: EditCounts

    @property
    def rate(self) -> float:
        return self.total.rate


def reference_speaker_stream(reference: Meeting, speaker: str) -> list[Token]:
    """Concatenation of a speaker's reference utterances in start order."""
    utts = sorted(
        (u for u in reference.utterances if u.speaker == speaker),
        key=lambda u: (u.start, u.end),
    )
    return [t for u in utts for t in u.tokens]


def sd_cer(system: AttributedTranscript, reference: Meeting) -> SdCerResult:
    """Speaker-dependent CER with identity speaker mapping.

    Hypothesis speakers absent from the reference inventory score as
    pure insertions against an empty reference stream; reference
    speakers with no attributed tokens score as pure deletions.
    """
    speakers = list(reference.speakers)
    for s in system.speakers:
        if s not in speakers:
            speakers.append(s)
    per_speaker = {}
    total = EditCounts()
    for speaker in speakers:
        ref_stream = reference_speaker_stream(reference, speaker)
        hyp_stream = list(system.speaker_tokens(speaker))
        counts = edit_distance(hyp_stream, ref_stream)
        per_speaker[speaker] = counts
        total = total + counts
    return SdCerResult(per_speaker, total)


# ── SI-CER ──────────────────────────────────────────────────────────

SiCerMode = Literal["fifo", "minperm"]


@dataclass(frozen=True)
class SiCerResult:
    per_segment: tuple[EditCounts, ...]
    total: EditCounts
    mode: SiCerMode

    @property
    def rate(self) -> float:
        return self.total.rate


def _min_perm_counts(runs: list[list[Token]], refs: list[list[Token]]) -> EditCounts:
    """Assign hypothesis runs to reference utterances minimizing total errors."""
    if not runs and not refs:
        return EditCounts()
    pair = [[edit_distance(run, ref) for ref in refs] for run in runs]
    n, m = len(runs), len(refs)
    if max(n, m) <= EXHAUSTIVE_PERM_LIMIT:
        best_cost, pairs = None, []
        for perm in itertools.permutations(range(max(n, m)), min(n, m)):
            cand = list(enumerate(perm)) if n <= m else [(i, j) for j, i in enumerate(perm)]
            cost = sum(pair[i][j].total_errors for i, j in cand)
            cost += sum(len(runs[i]) for i in set(range(n)) - {i for i, _ in cand})
            cost += sum(len(refs[j]) for j in set(range(m)) - {j for _, j in cand})
            if best_cost is None or cost < best_cost:
                best_cost, pairs = cost, cand
    else:
        # Square matrix with dummy rows/cols: unmatched runs count as
        # insertions, unmatched refs as deletions.
        size = n + m
        big = [[0] * size for _ in range(size)]
        for i in range(n):
            for j in range(m):
                big[i][j] = pair[i][j].total_errors
            for j in range(m, size):
                big[i][j] = len(runs[i])
        for i in range(n, size):
            for j in range(m):
                big[i][j] = len(refs[j])
        rows, cols = linear_sum_assignment(big)
        pairs = [(i, j) for i, j in zip(rows, cols) if i < n and j < m]
    total = EditCounts()
    matched_runs, matched_refs = {i for i, _ in pairs}, {j for _, j in pairs}
    for i, j in pairs:
        total = total + pair[i][j]
    for i in range(n):
        if i not in matched_runs:
            total = total + EditCounts(insertions=len(runs[i]))
    for j in range(m):
        if j not in matched_refs:
            total = total + EditCounts(deletions=len(refs[j]), ref_length=len(refs[j]))
    return total


def si_cer(
    hyps: Sequence[SotStream], reference: Meeting, mode: SiCerMode = "minperm"
) -> SiCerResult:
    """Speaker-independent CER over one meeting, pooled globally.

    fifo mode compares each hypothesis stream (separators stripped)
    against the utterance-FIFO serialization of the segment's reference.
    minperm mode splits the hypothesis into runs and assigns them to
    reference utterances by the error-minimizing permutation.
    """
    if len(hyps) != len(reference.segments):
        raise ValueError(
            f"need one hypothesis per segment: got {len(hyps)} for {len(reference.segments)}"
        )
    per_segment = []
    total = EditCounts()
    for index, stream in enumerate(hyps):
        ref_utts = sort_fifo(reference.segment_utterances(index), "utterance")
        if mode == "fifo":
            ref_tokens = [t for u in ref_utts for t in u.tokens]
            hyp_tokens = [t for t in stream.tokens if not t.is_separator]
            counts = edit_distance(hyp_tokens, ref_tokens)
        elif mode == "minperm":
            runs, _ = deserialize(stream)
            counts = _min_perm_counts(runs, [list(u.tokens) for u in ref_utts])
        else:
            raise ValueError(f"unknown SI-CER mode {mode!r}")
        per_segment.append(counts)
        total = total + counts
    return SiCerResult(tuple(per_segment), total, mode)


# ── DER ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class DerResult:
    missed_speech: float
    false_alarm: float
    speaker_error: float
    scored_speech: float
    collar: float
    overlap_scored: bool = True

    @property
    def rate(self) -> float:
        return (self.missed_speech + self.false_alarm + self.speaker_error) / self.scored_speech


def _collar_zones(reference: DiarizationTrack, collar: float) -> list[Interval]:
    if collar <= 0:
        return []
    zones = []
    for ivs in reference.intervals.values():
        for start, end in ivs:
            zones.append((start - collar, start + collar))
            zones.append((end - collar, end + collar))
    return merge_intervals(zones)


def der(
    system: DiarizationTrack, reference: DiarizationTrack, collar: float = 0.25
) -> DerResult:
    """Diarization error rate with optimal speaker mapping.

    Regions within ``collar`` of a reference boundary are excluded from
    scoring; overlap regions are scored. The speaker mapping maximizes
    mapped overlap on the scored timeline (exhaustive up to
    ``EXHAUSTIVE_DER_LIMIT`` speakers, Hungarian assignment above).
    """
    if system.meeting_id != reference.meeting_id:
        raise ValueError(
            f"meeting id mismatch: {system.meeting_id!r} vs {reference.meeting_id!r}"
        )
    if not any(reference.intervals.values()):
        raise ValueError(f"empty reference track for {reference.meeting_id!r}: DER undefined")

    ref_speakers = list(reference.speakers)
    sys_speakers = list(system.speakers)
    zones = _collar_zones(reference, collar)

    # Elementary decomposition of the timeline by every boundary point.
    points = {0.0}
    for track in (reference, system):
        for ivs in track.intervals.values():
            for s, e in ivs:
                points.update((s, e))
    for s, e in zones:
        points.update((s, e))
    order = sorted(points)

    cells: list[tuple[float, set[str], set[str]]] = []
    for a, b in zip(order, order[1:]):
        if b <= a:
            continue
        mid = (a + b) / 2
        if any(zs <= mid < ze for zs, ze in zones):
            continue
        ref_active = {
            spk for spk, ivs in reference.intervals.items() if any(s <= mid < e for s, e in ivs)
        }
        sys_active = {
            spk for spk, ivs in system.intervals.items() if any(s <= mid < e for s, e in ivs)
        }
        if ref_active or sys_active:
            cells.append((b - a, ref_active, sys_active))

    overlap = {
        (r, s): sum(dur for dur, ra, sa in cells if r in ra and s in sa)
        for r in ref_speakers
        for s in sys_speakers
    }
    mapping = _best_speaker_mapping(ref_speakers, sys_speakers, overlap)

    miss = fa = conf = speech = 0.0
    for dur, ref_active, sys_active in cells:
        nr, ns = len(ref_active), len(sys_active)
        correct = sum(1 for r in ref_active if mapping.get(r) in sys_active)
        miss += max(0, nr - ns) * dur
        fa += max(0, ns - nr) * dur
        conf += (min(nr, ns) - correct) * dur
        speech += nr * dur
    if speech <= 0:
        raise ValueError(
            f"no scored reference speech for {reference.meeting_id!r} (collar too wide?)"
        )
    return DerResult(miss, fa, conf, speech, collar)


def _best_speaker_mapping(
    ref_speakers: list[str], sys_speakers: list[str], overlap: dict[tuple[str, str], float]
) -> dict[str, str]:
    """Injective ref->sys mapping maximizing total mapped overlap."""
    if not ref_speakers or not sys_speakers:
        return {}
    if max(len(ref_speakers), len(sys_speakers)) <= EXHAUSTIVE_DER_LIMIT:
        best_value, best_map = -1.0, {}
        if len(ref_speakers) <= len(sys_speakers):
            for perm in itertools.permutations(sys_speakers, len(ref_speakers)):
                value = sum(overlap[r, s] for r, s in zip(ref_speakers, perm))
                if value > best_value:
                    best_value = value
                    best_map = dict(zip(ref_speakers, perm))
        else:
            for perm in itertools.permutations(ref_speakers, len(sys_speakers)):
                value = sum(overlap[r, s] for r, s in zip(perm, sys_speakers))
                if value > best_value:
                    best_value = value
                    best_map = dict(zip(perm, sys_speakers))
        return best_map
    matrix = [[-overlap[r, s] for s in sys_speakers] for r in ref_speakers]
    rows, cols = linear_sum_assignment(matrix)
    return {ref_speakers[i]: sys_speakers[j] for i, j in zip(rows, cols)}

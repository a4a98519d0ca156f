"""Desk-scale data: synthetic meetings with controllable overlap,
corrupted SOT hypotheses, jittered diarization, and clustered speaker
embeddings/features that give the word-level scorer learnable signal.

Every generator is a pure function of (config, seed). All times land on
the millisecond grid so files round-trip exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .core import (
    DiarizationTrack,
    FifoMode,
    Meeting,
    SC_TOKEN,
    Segment,
    Token,
    Utterance,
)
from .sot import SotStream, serialize
from .wdsot.types import FeatureSequence, SpeakerProfiles

# Cap on per-pair overlap so chained overlaps stay disjoint two-speaker
# regions and the measured ratio matches the plan exactly.
PAIR_OVERLAP_FRACTION = 0.45

# Same-speaker activity islands are kept at least this far apart so
# oracle diarization never merges two utterances under the default
# counting tolerance.
MIN_SAME_SPEAKER_GAP = 0.4


@dataclass(frozen=True)
class SynthConfig:
    n_speakers: int = 3
    n_segments: int = 8
    utterances_per_segment: tuple[int, int] = (2, 3)
    tokens_per_utterance: tuple[int, int] = (4, 12)
    repeat_speaker_prob: float = 0.0
    repeat_gap: tuple[float, float] = (MIN_SAME_SPEAKER_GAP, 1.0)
    target_overlap_ratio: float = 0.2
    vocab_size: int = 200
    char_error_rates: tuple[float, float, float] = (0.0, 0.0, 0.0)
    separator_error_rate: float = 0.0
    timestamp_jitter_std: float = 0.0
    embedding_dim: int = 16
    cluster_separation: float = 4.0
    noise_std: float = 1.0
    profile_noise: float = 0.05
    token_duration: float = 0.25
    frame_step: float = 0.08
    segment_margin: float = 0.25
    segment_gap: float = 0.5
    ts_bleed_threshold: float = 1.0
    ts_bleed_rate: float = 0.6
    seed: int = 0

    def __post_init__(self) -> None:
        if not 2 <= self.n_speakers <= 4:
            raise ValueError(f"n_speakers must be in [2, 4], got {self.n_speakers}")
        rates = (
            *self.char_error_rates,
            self.separator_error_rate,
            self.ts_bleed_rate,
            self.repeat_speaker_prob,
        )
        if any(not 0.0 <= r < 1.0 for r in rates):
            raise ValueError("error rates must lie in [0, 1)")
        if not 0.0 <= self.target_overlap_ratio < 1.0:
            raise ValueError("target_overlap_ratio must lie in [0, 1)")
        if self.embedding_dim < self.n_speakers:
            raise ValueError("embedding_dim must be >= n_speakers for separable clusters")
        if self.repeat_gap[0] < MIN_SAME_SPEAKER_GAP or self.repeat_gap[1] < self.repeat_gap[0]:
            raise ValueError(
                f"repeat_gap must be an increasing range starting >= {MIN_SAME_SPEAKER_GAP}"
            )
        if self.vocab_size < 2:
            raise ValueError("vocab_size must be >= 2")


def vocabulary(config: SynthConfig) -> tuple[str, ...]:
    """Single-character tokens drawn from the CJK unified block."""
    if config.vocab_size > 20000:
        raise ValueError("vocab_size capped at 20000")
    return tuple(chr(0x4E00 + i) for i in range(config.vocab_size))


@dataclass(frozen=True)
class GeneratedMeeting:
    meeting: Meeting
    diarization: DiarizationTrack
    features: tuple[FeatureSequence, ...]
    profiles: SpeakerProfiles
    centroids: np.ndarray


def _round_ms(value: float) -> float:
    return round(value, 3)


def _speaker_centroids(config: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal cluster centers at distance ~ separation * noise_std."""
    basis = np.linalg.qr(rng.normal(size=(config.embedding_dim, config.n_speakers)))[0]
    return basis.T * (config.cluster_separation * config.noise_std)


def gen_meeting(
    config: SynthConfig, meeting_id: str = "m000", seed: int | None = None
) -> GeneratedMeeting:
    """Generate one meeting: utterances with planned overlap, oracle
    diarization equal to the reference intervals, per-segment frame
    features (active centroids summed plus isotropic noise), and noisy
    profile embeddings.

    Raises when the overlap target cannot be met by the drawn utterance
    layout (too few adjacent pairs / too short utterances).
    """
    rng = np.random.default_rng(config.seed if seed is None else seed)
    vocab = vocabulary(config)
    speakers = tuple(f"spk{i}" for i in range(config.n_speakers))
    centroids = _speaker_centroids(config, rng)

    # Draw the layout first so overlap can be planned globally. A
    # repeated speaker gives the segment two separate runs by the same
    # voice, the case that breaks timestamp counting under jitter.
    lo_u, hi_u = config.utterances_per_segment
    lo_t, hi_t = config.tokens_per_utterance
    plan = []
    for _ in range(config.n_segments):
        count = int(rng.integers(lo_u, hi_u + 1))
        count = max(1, min(count, config.n_speakers))
        who = rng.choice(config.n_speakers, size=count, replace=False)
        seg_plan = [(speakers[w], int(n)) for w, n in zip(who, rng.integers(lo_t, hi_t + 1, size=count))]
        if config.repeat_speaker_prob and rng.random() < config.repeat_speaker_prob:
            repeat = seg_plan[int(rng.integers(0, len(seg_plan)))][0]
            position = int(rng.integers(0, len(seg_plan) + 1))
            seg_plan.insert(position, (repeat, int(rng.integers(lo_t, hi_t + 1))))
        plan.append(seg_plan)

    durations = [[n * config.token_duration for _, n in seg] for seg in plan]
    total_speech = sum(sum(d) for d in durations)
    capacities = [
        [
            0.0 if seg[i][0] == seg[i + 1][0] else PAIR_OVERLAP_FRACTION * min(a, b)
            for i, (a, b) in enumerate(zip(dur, dur[1:]))
        ]
        for seg, dur in zip(plan, durations)
    ]
    capacity = sum(sum(c) for c in capacities)
    required = config.target_overlap_ratio / (1.0 + config.target_overlap_ratio) * total_speech
    if required > capacity + 1e-9:
        raise ValueError(
            f"overlap target {config.target_overlap_ratio} infeasible: "
            f"needs {required:.2f}s of overlap but adjacent pairs allow {capacity:.2f}s; "
            "raise utterances_per_segment or tokens_per_utterance"
        )
    scale = 0.0 if capacity == 0 else required / capacity

    utterances: list[Utterance] = []
    segments: list[Segment] = []
    cursor = 0.0
    for seg_index, seg_plan in enumerate(plan):
        content_start = cursor + config.segment_margin
        starts: list[float] = []
        for i, (speaker, _) in enumerate(seg_plan):
            dur = durations[seg_index][i]
            if i == 0:
                starts.append(content_start)
                continue
            prev_end = starts[-1] + durations[seg_index][i - 1]
            overlap = capacities[seg_index][i - 1] * scale
            if overlap > 0:
                starts.append(prev_end - overlap)
            elif speaker == seg_plan[i - 1][0]:
                starts.append(prev_end + rng.uniform(*config.repeat_gap))
            else:
                starts.append(prev_end + rng.uniform(0.15, 0.45))
        # keep every same-speaker island pair clearly apart; shifting an
        # utterance drags the rest of the chain with it
        for i in range(1, len(seg_plan)):
            last_end = max(
                starts[j] + durations[seg_index][j]
                for j in range(i)
                if seg_plan[j][0] == seg_plan[i][0]
            ) if any(seg_plan[j][0] == seg_plan[i][0] for j in range(i)) else None
            if last_end is None:
                continue
            deficit = MIN_SAME_SPEAKER_GAP - (starts[i] - last_end)
            if deficit > 0:
                for j in range(i, len(seg_plan)):
                    starts[j] += deficit
        for i, (speaker, n_tokens) in enumerate(seg_plan):
            start = _round_ms(starts[i])
            end = _round_ms(starts[i] + durations[seg_index][i])
            tokens = tuple(Token(vocab[j]) for j in rng.integers(0, len(vocab), size=n_tokens))
            utterances.append(Utterance(speaker, start, end, tokens))
        seg_start = _round_ms(content_start - config.segment_margin)
        seg_end = _round_ms(max(u.end for u in utterances[-len(seg_plan):]) + config.segment_margin)
        segments.append(Segment(meeting_id, seg_start, seg_end))
        cursor = seg_end + config.segment_gap

    meeting = Meeting(meeting_id, speakers, tuple(utterances), tuple(segments))
    diarization = DiarizationTrack.from_raw(
        meeting_id,
        {
            spk: [(u.start, u.end) for u in utterances if u.speaker == spk]
            for spk in speakers
            if any(u.speaker == spk for u in utterances)
        },
    )

    features = tuple(
        _segment_features(meeting, i, centroids, config, rng) for i in range(len(segments))
    )
    # Profile vectors sit inside their own cluster: the noise scale
    # follows the cluster geometry so separability is scale-free.
    profile_scale = config.profile_noise * config.cluster_separation * config.noise_std
    profiles = SpeakerProfiles(
        speakers,
        centroids + rng.normal(scale=profile_scale, size=centroids.shape),
    )
    return GeneratedMeeting(meeting, diarization, features, profiles, centroids)


def _segment_features(
    meeting: Meeting,
    seg_index: int,
    centroids: np.ndarray,
    config: SynthConfig,
    rng: np.random.Generator,
) -> FeatureSequence:
    seg = meeting.segments[seg_index]
    n_frames = max(1, int(round((seg.end - seg.start) / config.frame_step)))
    by_speaker = {spk: i for i, spk in enumerate(meeting.speakers)}
    frames = rng.normal(scale=config.noise_std, size=(n_frames, config.embedding_dim))
    for utt in meeting.segment_utterances(seg_index):
        centroid = centroids[by_speaker[utt.speaker]]
        first = int(np.ceil((utt.start - seg.start) / config.frame_step - 0.5))
        last = int(np.floor((utt.end - seg.start) / config.frame_step - 0.5))
        first, last = max(0, first), min(n_frames - 1, last)
        if last >= first:
            frames[first : last + 1] += centroid
    return FeatureSequence(frames, config.frame_step)


def measured_overlap_ratio(meeting: Meeting) -> float:
    """Overlapped speech time over total (union) speech time."""
    points = sorted({t for u in meeting.utterances for t in (u.start, u.end)})
    speech = overlapped = 0.0
    for a, b in zip(points, points[1:]):
        mid = (a + b) / 2
        active = sum(1 for u in meeting.utterances if u.start <= mid < u.end)
        if active >= 1:
            speech += b - a
        if active >= 2:
            overlapped += b - a
    return 0.0 if speech == 0 else overlapped / speech


# ── hypothesis corruption ───────────────────────────────────────────

def _corrupt_tokens(
    tokens: Sequence[Token],
    rates: tuple[float, float, float],
    vocab: tuple[str, ...],
    rng: np.random.Generator,
) -> list[Token]:
    p_sub, p_del, p_ins = rates
    out: list[Token] = []
    for tok in tokens:
        u = rng.random()
        if u < p_del:
            pass
        elif u < p_del + p_sub:
            while True:
                alt = vocab[int(rng.integers(0, len(vocab)))]
                if alt != tok.text:
                    break
            out.append(Token(alt))
        else:
            out.append(tok)
        if rng.random() < p_ins:
            out.append(Token(vocab[int(rng.integers(0, len(vocab)))]))
    return out


def corrupt_hypothesis(
    meeting: Meeting,
    config: SynthConfig,
    oracle_separator: bool = False,
    seed: int | None = None,
    fifo_mode: FifoMode = "utterance",
) -> list[SotStream]:
    """Serialize each segment's reference FIFO and corrupt it.

    Character substitutions/deletions/insertions hit non-separator
    tokens i.i.d. at the configured rates; separator positions are exact
    when ``oracle_separator`` is set and otherwise each separator is
    moved one token or dropped at ``separator_error_rate``.
    """
    rng = np.random.default_rng(config.seed + 1 if seed is None else seed)
    vocab = vocabulary(config)
    streams = []
    for index, segment in enumerate(meeting.segments):
        utts = meeting.segment_utterances(index)
        ordered = serialize(utts, fifo_mode).tokens if utts else ()
        runs: list[list[Token]] = [[]]
        for tok in ordered:
            if tok.is_separator:
                runs.append([])
            else:
                runs[-1].append(tok)
        runs = [
            _corrupt_tokens(run, config.char_error_rates, vocab, rng) for run in runs
        ]
        tokens: list[Token] = []
        for i, run in enumerate(runs):
            if i == 0:
                tokens.extend(run)
                continue
            action = "keep"
            if not oracle_separator and rng.random() < config.separator_error_rate:
                action = ("drop", "left", "right")[int(rng.integers(0, 3))]
            if action == "left" and tokens and not tokens[-1].is_separator:
                moved = tokens.pop()
                tokens.append(SC_TOKEN)
                tokens.append(moved)
            elif action == "right" and run:
                tokens.append(run.pop(0))
                tokens.append(SC_TOKEN)
            elif action != "drop":
                tokens.append(SC_TOKEN)
            tokens.extend(run)
        streams.append(SotStream(tuple(tokens), segment))
    return streams


# ── diarization jitter ──────────────────────────────────────────────

def jitter_diarization(
    track: DiarizationTrack, std: float, seed: int = 0
) -> DiarizationTrack:
    """Shift every interval boundary by truncated Gaussian noise.

    Noise is clipped at 2.5 std; intervals keep start < end (minimum
    duration 20 ms) and never go negative. std = 0 returns the track
    unchanged.
    """
    if std < 0:
        raise ValueError(f"std must be >= 0, got {std}")
    if std == 0:
        return track
    rng = np.random.default_rng(seed)
    raw: dict[str, list[tuple[float, float]]] = {}
    for speaker in track.speakers:
        jittered = []
        for start, end in track.intervals[speaker]:
            d_start, d_end = np.clip(rng.normal(0.0, std, size=2), -2.5 * std, 2.5 * std)
            new_start = max(0.0, start + d_start)
            new_end = end + d_end
            if new_end - new_start < 0.02:
                center = max(0.01, (new_start + new_end) / 2)
                new_start, new_end = center - 0.01, center + 0.01
            jittered.append((_round_ms(new_start), _round_ms(new_end)))
        raw[speaker] = jittered
    return DiarizationTrack.from_raw(track.meeting_id, raw, track.frame_step)


# ── simulated target-speaker recognition ────────────────────────────

def simulate_ts_runs(
    meeting: Meeting,
    seg_index: int,
    selected: Sequence[tuple[str, float]],
    config: SynthConfig,
    rng: np.random.Generator,
) -> dict[str, list[Token]]:
    """Per-speaker recognition output for one segment.

    Models the failure mode of target separation on short targets: when
    a selected speaker's diarized activity is below the bleed threshold,
    other speakers' utterances leak into that speaker's output with
    probability ``ts_bleed_rate`` each, producing insertion errors.
    Recognition noise applies the configured character error rates.
    """
    vocab = vocabulary(config)
    utts = sorted(meeting.segment_utterances(seg_index), key=lambda u: (u.start, u.speaker))
    runs: dict[str, list[Token]] = {}
    for speaker, active_dur in selected:
        pieces = [(u.start, list(u.tokens)) for u in utts if u.speaker == speaker]
        if active_dur < config.ts_bleed_threshold:
            for u in utts:
                if u.speaker != speaker and rng.random() < config.ts_bleed_rate:
                    pieces.append((u.start, list(u.tokens)))
        pieces.sort(key=lambda p: p[0])
        merged = [tok for _, toks in pieces for tok in toks]
        runs[speaker] = _corrupt_tokens(merged, config.char_error_rates, vocab, rng)
    return runs

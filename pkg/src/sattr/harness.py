"""End-to-end pipelines and the benchmark/ablation drivers.

`run_pipeline` wires one meeting's inputs through a chosen assembly
approach and scores it; `bench` repeats synth + all approaches over a
seed list and aggregates; `ablation` exposes the scorer training and
evaluation variants as named modes.
"""

from __future__ import annotations

import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, Mapping, Sequence

import numpy as np

from .core import (
    AttributedEntry,
    AttributedTranscript,
    DiarizationTrack,
    FifoMode,
    Meeting,
    SC_TOKEN,
    Token,
)
from .fdsot import DEFAULT_GAP_TOL, AlignStats, assemble
from .metrics import SdCerResult, SiCerResult, sd_cer, si_cer
from .sot import SotStream, serialize
from .synth import GeneratedMeeting, SynthConfig, corrupt_hypothesis, gen_meeting, jitter_diarization, simulate_ts_runs
from .tsfilter import assemble_ts_transcript, select_speakers
from .wdsot import (
    OptimizerConfig,
    ScorerConfig,
    ScorerModel,
    TrainExample,
    label_tokens,
    predict,
    train,
)
from .wdsot.types import FeatureSequence, SpeakerProfiles

Approach = Literal["fd-sot", "wd-sot", "ts-oracle"]
APPROACHES: tuple[Approach, ...] = ("fd-sot", "wd-sot", "ts-oracle")


class UsageError(ValueError):
    """An approach was invoked without the inputs it needs."""


@dataclass(frozen=True)
class PipelineInputs:
    """Everything one meeting can offer; approaches take what they need."""

    meeting: Meeting
    hypotheses: tuple[SotStream, ...] = ()
    diarization: DiarizationTrack | None = None
    features: tuple[FeatureSequence, ...] = ()
    profiles: SpeakerProfiles | None = None
    model: ScorerModel | None = None
    ts_synth: SynthConfig | None = None
    ts_seed: int = 0


@dataclass(frozen=True)
class PipelineConfig:
    approach: Approach = "fd-sot"
    fifo_mode: FifoMode = "utterance"
    gap_tol: float = DEFAULT_GAP_TOL
    min_dur: float = 0.0
    oracle_separator: bool = False
    wdsot_mode: Literal["model", "oracle-labels"] = "model"

    def __post_init__(self) -> None:
        if self.approach not in APPROACHES:
            raise UsageError(f"unknown approach {self.approach!r}, expected one of {APPROACHES}")


@dataclass(frozen=True)
class PipelineResult:
    approach: Approach
    transcript: AttributedTranscript
    sd: SdCerResult
    si: SiCerResult | None
    align_stats: AlignStats | None = None


def oracle_separators(
    hyp: SotStream, meeting: Meeting, segment_index: int, fifo_mode: FifoMode = "utterance"
) -> SotStream:
    """Rebuild a hypothesis stream with reference separator positions.

    Hypothesis content tokens are aligned against the reference
    serialization by edit distance; a separator goes wherever the
    aligned reference position crosses an utterance boundary. With
    uncorrupted content this reproduces the reference separators
    exactly.
    """
    from .metrics import edit_alignment

    reference = meeting.segment_utterances(segment_index)
    content = [t for t in hyp.tokens if not t.is_separator]
    if not reference or not content:
        return SotStream(tuple(content), hyp.segment)
    ordered = serialize(reference, fifo_mode).tokens
    ref_content = [t for t in ordered if not t.is_separator]
    # boundaries[i]: a new reference run starts at ref content index i
    boundaries = []
    position = 0
    for token in ordered:
        if token.is_separator:
            boundaries.append(position)
        else:
            position += 1

    # where each hypothesis token lands on the reference axis; pure
    # insertions inherit the last matched position
    aligned_ref = [0] * len(content)
    last_ref = -1
    for op, ref_idx, hyp_idx in edit_alignment(content, ref_content):
        if op == "del":
            last_ref = ref_idx
        elif op == "ins":
            aligned_ref[hyp_idx] = last_ref
        else:
            aligned_ref[hyp_idx] = ref_idx
            last_ref = ref_idx

    tokens: list[Token] = []
    pending = sorted(boundaries)
    for i, token in enumerate(content):
        while pending and aligned_ref[i] >= pending[0]:
            if tokens and not tokens[-1].is_separator:
                tokens.append(SC_TOKEN)
            pending.pop(0)
        tokens.append(token)
    return SotStream(tuple(tokens), hyp.segment)


def _wdsot_transcript(
    inputs: PipelineInputs, config: PipelineConfig
) -> AttributedTranscript:
    meeting = inputs.meeting
    if len(inputs.hypotheses) != len(meeting.segments):
        raise UsageError("wd-sot needs one hypothesis stream per segment")
    if config.wdsot_mode == "model":
        if inputs.model is None:
            raise UsageError("wd-sot in model mode needs a trained scorer")
        if len(inputs.features) != len(meeting.segments) or inputs.profiles is None:
            raise UsageError("wd-sot needs frame features and speaker profiles")
    entries: list[AttributedEntry] = []
    for index, hyp in enumerate(inputs.hypotheses):
        if config.oracle_separator:
            hyp = oracle_separators(hyp, meeting, index, config.fifo_mode)
        content = [t for t in hyp.tokens if not t.is_separator]
        if not content:
            continue
        if config.wdsot_mode == "oracle-labels":
            speakers = label_tokens(hyp, meeting.segment_utterances(index), config.fifo_mode)
        else:
            assert inputs.model is not None and inputs.profiles is not None
            speakers = predict(
                inputs.model, hyp, inputs.features[index], inputs.profiles
            ).speakers
        entries.extend(
            AttributedEntry(token, speaker, index)
            for token, speaker in zip(content, speakers)
        )
    return AttributedTranscript(tuple(entries))


def _ts_transcript(inputs: PipelineInputs, config: PipelineConfig) -> AttributedTranscript:
    if inputs.diarization is None:
        raise UsageError("ts-oracle needs a diarization track")
    meeting = inputs.meeting
    rng = np.random.default_rng(inputs.ts_seed)
    per_selected, per_runs = [], []
    for index in range(len(meeting.segments)):
        selected = select_speakers(
            inputs.diarization, meeting.segments[index], config.min_dur, config.gap_tol
        )
        if inputs.ts_synth is not None:
            runs: Mapping[str, Sequence[Token]] = simulate_ts_runs(
                meeting, index, selected, inputs.ts_synth, rng
            )
        else:
            utts = sorted(meeting.segment_utterances(index), key=lambda u: (u.start, u.speaker))
            runs = {
                speaker: [t for u in utts if u.speaker == speaker for t in u.tokens]
                for speaker, _ in selected
            }
        per_selected.append(selected)
        per_runs.append(runs)
    return assemble_ts_transcript(per_runs, per_selected, meeting.segments)


def run_pipeline(inputs: PipelineInputs, config: PipelineConfig) -> PipelineResult:
    """Assemble one meeting with the configured approach and score it.

    SD-CER always; SI-CER of the raw hypothesis stream whenever the
    approach consumes one (it is assembly-independent).
    """
    meeting = inputs.meeting
    stats: AlignStats | None = None
    if config.approach == "fd-sot":
        if inputs.diarization is None:
            raise UsageError("fd-sot needs a diarization track")
        if len(inputs.hypotheses) != len(meeting.segments):
            raise UsageError("fd-sot needs one hypothesis stream per segment")
        transcript, stats = assemble(
            inputs.diarization, inputs.hypotheses, meeting.segments, config.gap_tol
        )
    elif config.approach == "wd-sot":
        transcript = _wdsot_transcript(inputs, config)
    else:
        transcript = _ts_transcript(inputs, config)
    si = (
        si_cer(list(inputs.hypotheses), meeting, mode="minperm")
        if inputs.hypotheses
        else None
    )
    return PipelineResult(config.approach, transcript, sd_cer(transcript, meeting), si)


def report_table(results: Sequence[PipelineResult]) -> str:
    """Tab-separated comparison: SI-CER topline, one SD-CER row per approach."""
    lines = ["metric\tapproach\trate\tsub\tdel\tins\tref"]
    topline = next((r.si for r in results if r.si is not None), None)
    if topline is not None:
        c = topline.total
        lines.append(f"SI-CER\t-\t{c.rate:.4f}\t{c.substitutions}\t{c.deletions}\t{c.insertions}\t{c.ref_length}")
    for result in results:
        c = result.sd.total
        lines.append(
            f"SD-CER\t{result.approach}\t{c.rate:.4f}\t{c.substitutions}\t{c.deletions}\t{c.insertions}\t{c.ref_length}"
        )
    return "\n".join(lines) + "\n"


# ── benchmark over seeds ────────────────────────────────────────────

def worker_count(n_tasks: int) -> int:
    """Honor the SATTR_THREADS cap; default is sequential."""
    env = os.environ.get("SATTR_THREADS", "").strip()
    cap = int(env) if env else 1
    if cap < 1:
        raise ValueError(f"SATTR_THREADS must be >= 1, got {env!r}")
    return max(1, min(cap, n_tasks))


@dataclass(frozen=True)
class BenchConfig:
    synth: SynthConfig = field(default_factory=SynthConfig)
    seeds: tuple[int, ...] = (0,)
    approaches: tuple[Approach, ...] = APPROACHES
    fifo_mode: FifoMode = "utterance"
    gap_tol: float = DEFAULT_GAP_TOL
    min_dur: float = 0.0
    train_synth: SynthConfig | None = None
    train_meetings: int = 20
    train_seed: int = 10_000
    train_on_corrupted: bool = True
    use_context: bool = True
    oracle_separator: bool = False
    scorer: ScorerConfig | None = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self) -> None:
        if not self.seeds:
            raise ValueError("bench needs at least one seed")
        unknown = set(self.approaches) - set(APPROACHES)
        if unknown:
            raise UsageError(f"unknown approaches: {sorted(unknown)}")


@dataclass(frozen=True)
class BenchReport:
    seeds: tuple[int, ...]
    si_rates: tuple[float, ...]
    sd_rates: dict[Approach, tuple[float, ...]]

    def mean(self, approach: Approach) -> float:
        return statistics.fmean(self.sd_rates[approach])

    def std(self, approach: Approach) -> float:
        rates = self.sd_rates[approach]
        return statistics.pstdev(rates) if len(rates) > 1 else 0.0

    def render(self) -> str:
        lines = ["approach\tmean_sd_cer\tstd\tseeds"]
        si = statistics.fmean(self.si_rates)
        lines.append(f"si-cer\t{si:.4f}\t{statistics.pstdev(self.si_rates) if len(self.si_rates) > 1 else 0.0:.4f}\t{len(self.seeds)}")
        for approach, rates in self.sd_rates.items():
            lines.append(
                f"{approach}\t{self.mean(approach):.4f}\t{self.std(approach):.4f}\t{len(rates)}"
            )
        return "\n".join(lines) + "\n"


def default_scorer_config(synth: SynthConfig, use_context: bool = True, seed: int = 0) -> ScorerConfig:
    """The model shape the benchmark trains when none is supplied."""
    from .synth import vocabulary

    return ScorerConfig(
        vocab=vocabulary(synth),
        d_feat=synth.embedding_dim,
        d_emb=synth.embedding_dim,
        d_model=64,
        text_layers=4,
        text_heads=4,
        scaled_attention=True,
        use_context=use_context,
        seed=seed,
    )


def build_train_set(
    synth: SynthConfig,
    n_meetings: int,
    seed0: int,
    corrupted: bool,
    fifo_mode: FifoMode = "utterance",
) -> list[TrainExample]:
    """Scorer training data from synthetic meetings.

    Ground-truth-only mode serializes the reference; the corrupted mode
    adds recognition-like noise and labels tokens by edit alignment
    against the reference (so training matches what inference sees).
    """
    examples: list[TrainExample] = []
    for k in range(n_meetings):
        gm = gen_meeting(synth, f"train{k:03d}", seed=seed0 + k)
        meeting = gm.meeting
        if corrupted:
            hyps = corrupt_hypothesis(
                meeting, synth, oracle_separator=False, seed=seed0 + 7919 + k, fifo_mode=fifo_mode
            )
        else:
            clean = replace(
                synth, char_error_rates=(0.0, 0.0, 0.0), separator_error_rate=0.0
            )
            hyps = corrupt_hypothesis(
                meeting, clean, oracle_separator=True, seed=seed0 + 7919 + k, fifo_mode=fifo_mode
            )
        for index in range(len(meeting.segments)):
            reference = meeting.segment_utterances(index)
            if not reference or all(t.is_separator for t in hyps[index].tokens):
                continue
            labels = label_tokens(hyps[index], reference, fifo_mode)
            examples.append(
                TrainExample.from_stream(hyps[index], gm.features[index], gm.profiles, labels)
            )
    return examples


def train_bench_model(config: BenchConfig) -> ScorerModel:
    train_synth = config.train_synth or config.synth
    scorer = config.scorer or default_scorer_config(train_synth, config.use_context)
    dataset = build_train_set(
        train_synth,
        config.train_meetings,
        config.train_seed,
        config.train_on_corrupted,
        config.fifo_mode,
    )
    return train(scorer, dataset, config.optimizer, seed=scorer.seed).model


def bench_one_seed(
    config: BenchConfig, seed: int, model: ScorerModel | None
) -> tuple[float, dict[Approach, float]]:
    """Synth one meeting at this seed and score every approach on it."""
    gm = gen_meeting(config.synth, f"bench{seed:05d}", seed=seed)
    meeting = gm.meeting
    hyps = tuple(
        corrupt_hypothesis(meeting, config.synth, seed=seed + 104729, fifo_mode=config.fifo_mode)
    )
    diar = jitter_diarization(
        gm.diarization, config.synth.timestamp_jitter_std, seed=seed + 15485863
    )
    inputs = PipelineInputs(
        meeting=meeting,
        hypotheses=hyps,
        diarization=diar,
        features=gm.features,
        profiles=gm.profiles,
        model=model,
        ts_synth=config.synth,
        ts_seed=seed + 32452843,
    )
    sd_rates: dict[Approach, float] = {}
    si_rate = 0.0
    for approach in config.approaches:
        result = run_pipeline(
            inputs,
            PipelineConfig(
                approach=approach,
                fifo_mode=config.fifo_mode,
                gap_tol=config.gap_tol,
                min_dur=config.min_dur,
                oracle_separator=config.oracle_separator,
            ),
        )
        sd_rates[approach] = result.sd.rate
        if result.si is not None:
            si_rate = result.si.rate
    return si_rate, sd_rates


def bench(config: BenchConfig) -> BenchReport:
    """Per-seed synth + assembly + scoring, reduced in seed order."""
    model = train_bench_model(config) if "wd-sot" in config.approaches else None
    workers = worker_count(len(config.seeds))
    if workers == 1:
        rows = [bench_one_seed(config, seed, model) for seed in config.seeds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda s: bench_one_seed(config, s, model), config.seeds))
    si_rates = tuple(si for si, _ in rows)
    sd_rates = {
        approach: tuple(row[approach] for _, row in rows) for approach in config.approaches
    }
    return BenchReport(tuple(config.seeds), si_rates, sd_rates)


# ── scorer ablation modes ───────────────────────────────────────────

ABLATION_MODES = (
    "ground-truth",
    "hyp-transcriptions",
    "no-context",
    "oracle-separator",
)


@dataclass(frozen=True)
class AblationRow:
    mode: str
    mean_sd_cer: float
    per_seed: tuple[float, ...]


def ablation(config: BenchConfig) -> list[AblationRow]:
    """The four scorer variants, evaluated over the bench seeds.

    Rows: scorer trained on ground-truth serializations only; trained
    with corrupted (recognition-like) streams; the latter without the
    context branch; and the corrupted-trained scorer evaluated with
    separator positions restored from the reference.
    """
    rows: list[AblationRow] = []
    variants: list[tuple[str, BenchConfig]] = [
        ("ground-truth", replace(config, train_on_corrupted=False, oracle_separator=False)),
        ("hyp-transcriptions", replace(config, train_on_corrupted=True, oracle_separator=False)),
        ("no-context", replace(config, train_on_corrupted=True, use_context=False, oracle_separator=False)),
        ("oracle-separator", replace(config, train_on_corrupted=True, oracle_separator=True)),
    ]
    cache: dict[tuple[bool, bool], ScorerModel] = {}
    for mode, variant in variants:
        key = (variant.train_on_corrupted, variant.use_context)
        if key not in cache:
            cache[key] = train_bench_model(variant)
        model = cache[key]
        rates = []
        for seed in variant.seeds:
            wd_only = replace(variant, approaches=("wd-sot",))
            _, sd_rates = bench_one_seed(wd_only, seed, model)
            rates.append(sd_rates["wd-sot"])
        rows.append(AblationRow(mode, statistics.fmean(rates), tuple(rates)))
    return rows


def render_ablation(rows: Sequence[AblationRow]) -> str:
    lines = ["mode\tmean_sd_cer\tseeds"]
    lines.extend(f"{r.mode}\t{r.mean_sd_cer:.4f}\t{len(r.per_seed)}" for r in rows)
    return "\n".join(lines) + "\n"

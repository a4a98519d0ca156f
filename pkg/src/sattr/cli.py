"""Command-line surface: one binary exposing generation, serialization,
assembly, scoring, and the benchmark drivers.

Option precedence is CLI flag > config file > built-in default. The
config file is flat `key = value` text; keys are the long option names
with underscores, values use the same syntax as the flags (tuples
comma-separated). Lines starting with `#` are comments.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import fields as dataclass_fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .core import DiarizationTrack, Meeting, Token
from .fdsot import DEFAULT_GAP_TOL, AlignStats, assemble
from .formats import (
    ParseError,
    read_attributed,
    read_embeddings,
    read_features,
    read_hypotheses,
    read_reference,
    read_rttm,
    read_segments,
    write_attributed,
    write_embeddings,
    write_features,
    write_hypotheses,
    write_reference,
    write_rttm,
    write_segments,
)
from .harness import (
    APPROACHES,
    BenchConfig,
    PipelineConfig,
    PipelineInputs,
    UsageError,
    ablation,
    bench,
    render_ablation,
    report_table,
    run_pipeline,
)
from .metrics import EditCounts, der, sd_cer, si_cer
from .sot import SotStream, deserialize, serialize
from .synth import SynthConfig, corrupt_hypothesis, gen_meeting, jitter_diarization
from .tsfilter import DEFAULT_MIN_DUR, select_speakers
from .wdsot import (
    OptimizerConfig,
    ScorerConfig,
    ScorerModel,
    TrainExample,
    grad_check,
    label_tokens,
    load_model,
    predict,
    save_model,
    train,
)
from .wdsot.types import SpeakerProfiles

CONFIG_EPILOG = (
    "config file: flat `key = value` lines using these option names with "
    "underscores; `#` starts a comment; CLI flags win over file values."
)


def read_config_file(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ParseError(path, lineno, f"expected key = value, got {text!r}")
            key, value = text.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _coerce(raw: str, like: Any) -> Any:
    """Parse a config-file string into the type of the default value."""
    if isinstance(like, bool):
        lowered = raw.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(like, int) and not isinstance(like, bool):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    if isinstance(like, tuple):
        parts = [p for p in raw.replace(",", " ").split() if p]
        if like and isinstance(like[0], float):
            return tuple(float(p) for p in parts)
        if like and isinstance(like[0], int):
            return tuple(int(p) for p in parts)
        return tuple(parts)
    return raw


def build_synth_config(args: argparse.Namespace, file_values: dict[str, str]) -> SynthConfig:
    """Merge CLI flags, config file entries, and dataclass defaults."""
    config = SynthConfig()
    updates: dict[str, Any] = {}
    names = {f.name for f in dataclass_fields(SynthConfig)}
    for key, raw in file_values.items():
        if key in names:
            updates[key] = _coerce(raw, getattr(config, key))
    for key in names:
        flag = getattr(args, key, None)
        if flag is not None:
            updates[key] = flag
    return replace(config, **updates)


def add_synth_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-speakers", dest="n_speakers", type=int)
    parser.add_argument("--n-segments", dest="n_segments", type=int)
    parser.add_argument("--vocab-size", dest="vocab_size", type=int)
    parser.add_argument("--target-overlap-ratio", dest="target_overlap_ratio", type=float)
    parser.add_argument("--repeat-speaker-prob", dest="repeat_speaker_prob", type=float)
    parser.add_argument(
        "--char-error-rates",
        dest="char_error_rates",
        type=lambda s: tuple(float(p) for p in s.split(",")),
        metavar="SUB,DEL,INS",
    )
    parser.add_argument("--separator-error-rate", dest="separator_error_rate", type=float)
    parser.add_argument("--timestamp-jitter-std", dest="timestamp_jitter_std", type=float)
    parser.add_argument("--embedding-dim", dest="embedding_dim", type=int)
    parser.add_argument("--cluster-separation", dest="cluster_separation", type=float)
    parser.add_argument("--seed", dest="seed", type=int)


# ── subcommand implementations ──────────────────────────────────────

def cmd_synth(args: argparse.Namespace, file_values: dict[str, str]) -> int:
    config = build_synth_config(args, file_values)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meetings, segments, tracks = [], {}, []
    hyps, profiles, features = {}, {}, {}
    for k in range(args.meetings):
        meeting_id = f"m{k:03d}"
        gm = gen_meeting(config, meeting_id, seed=config.seed + k)
        meetings.append(gm.meeting)
        segments[meeting_id] = list(gm.meeting.segments)
        track = gm.diarization
        if config.timestamp_jitter_std > 0:
            track = jitter_diarization(track, config.timestamp_jitter_std, seed=config.seed + k + 5000)
        tracks.append(track)
        hyps[meeting_id] = corrupt_hypothesis(
            gm.meeting, config, oracle_separator=args.oracle_separator, seed=config.seed + k + 9000
        )
        profiles[meeting_id] = {
            spk: gm.profiles.vectors[i] for i, spk in enumerate(gm.profiles.speakers)
        }
        features[meeting_id] = list(gm.features)
    write_reference(meetings, out / "reference.tsv")
    write_segments(segments, out / "segments.tsv")
    write_rttm(tracks, out / "diarization.rttm")
    write_hypotheses(hyps, out / "hypotheses.tsv")
    write_embeddings(profiles, out / "embeddings.tsv")
    write_features(features, out / "features.npz")
    print(f"wrote {args.meetings} meetings to {out}")
    return 0


def _load_meetings(args: argparse.Namespace) -> dict[str, Meeting]:
    segments = read_segments(args.segments) if getattr(args, "segments", None) else None
    return read_reference(args.reference, segments=segments)


def cmd_sot_serialize(args: argparse.Namespace, _: dict[str, str]) -> int:
    meetings = _load_meetings(args)
    out: dict[str, list[SotStream]] = {}
    for meeting_id, meeting in meetings.items():
        if not meeting.segments:
            raise UsageError(f"{meeting_id}: serialization needs oracle segments")
        out[meeting_id] = [
            serialize(meeting.segment_utterances(i), args.fifo_mode, meeting.segments[i])
            for i in range(len(meeting.segments))
        ]
    write_hypotheses(out, args.out)
    print(f"wrote {sum(len(v) for v in out.values())} streams to {args.out}")
    return 0


def cmd_sot_deserialize(args: argparse.Namespace, _: dict[str, str]) -> int:
    hyps = read_hypotheses(args.hyps)
    total_fixes = 0
    for meeting_id, streams in hyps.items():
        for index, stream in enumerate(streams):
            runs, stats = deserialize(stream)
            total_fixes += stats.total_fixes
            for run_index, run in enumerate(runs):
                text = " ".join(t.text for t in run)
                print(f"{meeting_id}\t{index}\t{run_index}\t{text}")
    print(f"normalization fixes: {total_fixes}", file=sys.stderr)
    return 0


def cmd_align_fdsot(args: argparse.Namespace, _: dict[str, str]) -> int:
    meetings_segments = read_segments(args.segments)
    hyps = read_hypotheses(args.hyps)
    tracks = read_rttm(args.rttm)
    transcripts = {}
    totals = AlignStats()
    for meeting_id, streams in hyps.items():
        if meeting_id not in tracks:
            raise UsageError(f"no diarization for meeting {meeting_id}")
        if meeting_id not in meetings_segments:
            raise UsageError(f"no segments for meeting {meeting_id}")
        transcript, stats = assemble(
            tracks[meeting_id], streams, meetings_segments[meeting_id], args.gap_tol
        )
        transcripts[meeting_id] = transcript
        totals = totals + stats
    write_attributed(transcripts, args.out)
    print(
        f"aligned {len(transcripts)} meetings: {totals.n_diar} diarized utterances, "
        f"{totals.n_runs} runs, dropped {totals.dropped_diar}/{totals.dropped_runs}"
    )
    return 0


def _profiles_for(meeting_id: str, embeddings: dict[str, dict[str, np.ndarray]]) -> SpeakerProfiles:
    if meeting_id not in embeddings:
        raise UsageError(f"no embeddings for meeting {meeting_id}")
    by_speaker = embeddings[meeting_id]
    speakers = tuple(by_speaker)
    return SpeakerProfiles(speakers, np.stack([by_speaker[s] for s in speakers]))


def cmd_wdsot_train(args: argparse.Namespace, _: dict[str, str]) -> int:
    meetings = _load_meetings(args)
    hyps = read_hypotheses(args.hyps)
    features = read_features(args.features)
    embeddings = read_embeddings(args.embeddings)
    examples: list[TrainExample] = []
    vocab: set[str] = set()
    for meeting_id, meeting in meetings.items():
        if meeting_id not in hyps or meeting_id not in features:
            raise UsageError(f"missing hypotheses or features for meeting {meeting_id}")
        profiles = _profiles_for(meeting_id, embeddings)
        for index, stream in enumerate(hyps[meeting_id]):
            reference = meeting.segment_utterances(index)
            if not reference or all(t.is_separator for t in stream.tokens):
                continue
            labels = label_tokens(stream, reference, args.fifo_mode)
            examples.append(
                TrainExample.from_stream(stream, features[meeting_id][index], profiles, labels)
            )
            vocab.update(t.text for t in stream.tokens if not t.is_separator)
            vocab.update(t.text for u in reference for t in u.tokens)
    if not examples:
        raise UsageError("no trainable segments found")
    d_feat = examples[0].features.dim
    d_emb = examples[0].profiles.vectors.shape[1]
    scorer = ScorerConfig(
        vocab=tuple(sorted(vocab)),
        d_feat=d_feat,
        d_emb=d_emb,
        d_model=args.d_model,
        text_layers=args.text_layers,
        text_heads=args.text_heads,
        attn_heads=args.attn_heads,
        pe_scale=args.pe_scale,
        scaled_attention=args.scaled_attention,
        use_context=not args.no_context,
        seed=args.seed,
    )
    optimizer = OptimizerConfig(
        lr=args.lr, momentum=args.momentum, epochs=args.epochs, grad_clip=args.grad_clip
    )
    result = train(scorer, examples, optimizer, seed=args.seed)
    save_model(result.model, args.out)
    print(
        f"trained on {len(examples)} segments for {args.epochs} epochs: "
        f"loss {result.epoch_losses[0]:.4f} -> {result.epoch_losses[-1]:.4f}, saved {args.out}"
    )
    return 0


def cmd_wdsot_predict(args: argparse.Namespace, _: dict[str, str]) -> int:
    model = load_model(args.model)
    hyps = read_hypotheses(args.hyps)
    features = read_features(args.features)
    embeddings = read_embeddings(args.embeddings)
    transcripts = {}
    for meeting_id, streams in hyps.items():
        if meeting_id not in features:
            raise UsageError(f"no features for meeting {meeting_id}")
        profiles = _profiles_for(meeting_id, embeddings)
        from .core import AttributedEntry, AttributedTranscript

        entries = []
        for index, stream in enumerate(streams):
            content = [t for t in stream.tokens if not t.is_separator]
            if not content:
                continue
            prediction = predict(model, stream, features[meeting_id][index], profiles)
            entries.extend(
                AttributedEntry(token, speaker, index)
                for token, speaker in zip(content, prediction.speakers)
            )
        transcripts[meeting_id] = AttributedTranscript(tuple(entries))
    write_attributed(transcripts, args.out)
    print(f"attributed {len(transcripts)} meetings to {args.out}")
    return 0


def cmd_wdsot_gradcheck(args: argparse.Namespace, _: dict[str, str]) -> int:
    rng = np.random.default_rng(args.seed)
    vocab = tuple(chr(0x4E00 + i) for i in range(20))
    config = ScorerConfig(
        vocab=vocab,
        d_feat=args.d_feat,
        d_emb=args.d_emb,
        d_model=args.d_model,
        text_layers=1,
        text_heads=2,
        seed=args.seed,
    )
    model = ScorerModel(config)
    from .core import SC_TOKEN
    from .wdsot.types import FeatureSequence

    tokens = [Token(vocab[i]) for i in rng.integers(0, len(vocab), size=4)]
    tokens.insert(2, SC_TOKEN)
    features = FeatureSequence(rng.normal(size=(6, args.d_feat)), 0.08)
    profiles = SpeakerProfiles(
        ("a", "b", "c"), rng.normal(size=(3, args.d_emb))
    )
    example = TrainExample(tuple(tokens), features, profiles, (0, 1, 2, 1))
    error = grad_check(model, example, epsilon=args.epsilon, min_coords=args.min_coords, seed=args.seed)
    print(f"gradcheck max_rel_error={error:.3e} tol={args.tol:.1e}")
    return 0 if error < args.tol else 1


def cmd_tsfilter(args: argparse.Namespace, _: dict[str, str]) -> int:
    tracks = read_rttm(args.rttm)
    segments = read_segments(args.segments)
    lines = []
    for meeting_id, segs in segments.items():
        if meeting_id not in tracks:
            raise UsageError(f"no diarization for meeting {meeting_id}")
        for index, segment in enumerate(segs):
            for speaker, duration in select_speakers(
                tracks[meeting_id], segment, args.min_dur, args.gap_tol, args.semantics
            ):
                lines.append(f"{meeting_id}\t{index}\t{speaker}\t{duration:.3f}")
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _print_counts_report(rows: list[tuple[str, EditCounts]]) -> None:
    total = EditCounts()
    for _, counts in rows:
        total = total + counts
    for meeting_id, counts in rows:
        print(
            f"{meeting_id}\t{counts.substitutions}\t{counts.deletions}\t"
            f"{counts.insertions}\t{counts.ref_length}\t{counts.rate:.4f}"
        )
    print(
        f"TOTAL\t{total.substitutions}\t{total.deletions}\t"
        f"{total.insertions}\t{total.ref_length}\t{total.rate:.4f}"
    )


def cmd_score_sd_cer(args: argparse.Namespace, _: dict[str, str]) -> int:
    meetings = _load_meetings(args)
    transcripts = read_attributed(args.system)
    rows = []
    for meeting_id in transcripts:
        if meeting_id not in meetings:
            raise UsageError(f"system meeting {meeting_id} absent from reference")
        rows.append((meeting_id, sd_cer(transcripts[meeting_id], meetings[meeting_id]).total))
    _print_counts_report(rows)
    return 0


def cmd_score_si_cer(args: argparse.Namespace, _: dict[str, str]) -> int:
    meetings = _load_meetings(args)
    hyps = read_hypotheses(args.hyps)
    rows = []
    for meeting_id, streams in hyps.items():
        if meeting_id not in meetings:
            raise UsageError(f"hypothesis meeting {meeting_id} absent from reference")
        rows.append((meeting_id, si_cer(streams, meetings[meeting_id], args.mode).total))
    _print_counts_report(rows)
    return 0


def cmd_score_der(args: argparse.Namespace, _: dict[str, str]) -> int:
    system = read_rttm(args.system)
    reference = read_rttm(args.reference)
    miss = fa = conf = scored = 0.0
    for meeting_id, ref_track in reference.items():
        sys_track = system.get(
            meeting_id, DiarizationTrack(meeting_id, {})
        )
        result = der(sys_track, ref_track, collar=args.collar)
        miss += result.missed_speech
        fa += result.false_alarm
        conf += result.speaker_error
        scored += result.scored_speech
        print(
            f"{meeting_id}\t{result.missed_speech:.3f}\t{result.false_alarm:.3f}\t"
            f"{result.speaker_error:.3f}\t{result.scored_speech:.3f}\t{result.rate:.4f}"
        )
    rate = (miss + fa + conf) / scored if scored else float("inf")
    print(f"TOTAL\t{miss:.3f}\t{fa:.3f}\t{conf:.3f}\t{scored:.3f}\t{rate:.4f}")
    return 0


def cmd_pipeline(args: argparse.Namespace, _: dict[str, str]) -> int:
    meetings = _load_meetings(args)
    hyps = read_hypotheses(args.hyps) if args.hyps else {}
    tracks = read_rttm(args.rttm) if args.rttm else {}
    features = read_features(args.features) if args.features else {}
    embeddings = read_embeddings(args.embeddings) if args.embeddings else {}
    model = load_model(args.model) if args.model else None
    approaches = [a.strip() for a in args.approach.split(",")]
    for approach in approaches:
        if approach not in APPROACHES:
            raise UsageError(f"unknown approach {approach!r}, expected one of {APPROACHES}")

    pooled: dict[str, tuple[EditCounts, EditCounts]] = {}
    transcripts: dict[str, dict[str, object]] = {a: {} for a in approaches}
    for meeting_id, meeting in meetings.items():
        if not meeting.segments:
            raise UsageError(f"{meeting_id}: pipeline needs oracle segments")
        profiles = _profiles_for(meeting_id, embeddings) if meeting_id in embeddings else None
        inputs = PipelineInputs(
            meeting=meeting,
            hypotheses=tuple(hyps.get(meeting_id, ())),
            diarization=tracks.get(meeting_id),
            features=tuple(features.get(meeting_id, ())),
            profiles=profiles,
            model=model,
        )
        for approach in approaches:
            config = PipelineConfig(
                approach=approach,
                fifo_mode=args.fifo_mode,
                gap_tol=args.gap_tol,
                min_dur=args.min_dur,
                oracle_separator=args.oracle_separator,
                wdsot_mode=args.wdsot_mode,
            )
            result = run_pipeline(inputs, config)
            transcripts[approach][meeting_id] = result.transcript
            sd_total, si_total = pooled.get(approach, (EditCounts(), EditCounts()))
            pooled[approach] = (
                sd_total + result.sd.total,
                si_total + (result.si.total if result.si else EditCounts()),
            )

    lines = ["metric\tapproach\trate\tsub\tdel\tins\tref"]
    first_si = pooled[approaches[0]][1]
    if first_si.ref_length or first_si.total_errors:
        lines.append(
            f"SI-CER\t-\t{first_si.rate:.4f}\t{first_si.substitutions}\t"
            f"{first_si.deletions}\t{first_si.insertions}\t{first_si.ref_length}"
        )
    for approach in approaches:
        counts = pooled[approach][0]
        lines.append(
            f"SD-CER\t{approach}\t{counts.rate:.4f}\t{counts.substitutions}\t"
            f"{counts.deletions}\t{counts.insertions}\t{counts.ref_length}"
        )
    report = "\n".join(lines) + "\n"
    if args.report:
        Path(args.report).write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    if args.out:
        if len(approaches) != 1:
            raise UsageError("--out needs exactly one approach")
        write_attributed(transcripts[approaches[0]], args.out)
    return 0


def _parse_seeds(raw: str) -> tuple[int, ...]:
    seeds: list[int] = []
    for piece in raw.split(","):
        piece = piece.strip()
        if ":" in piece:
            lo, hi = piece.split(":", 1)
            seeds.extend(range(int(lo), int(hi)))
        elif piece:
            seeds.append(int(piece))
    if not seeds:
        raise UsageError(f"no seeds in {raw!r}")
    return tuple(seeds)


def _bench_config(args: argparse.Namespace, file_values: dict[str, str]) -> BenchConfig:
    synth = build_synth_config(args, file_values)
    approaches = tuple(a.strip() for a in args.approaches.split(","))
    optimizer = OptimizerConfig(lr=args.lr, momentum=args.momentum, epochs=args.epochs)
    return BenchConfig(
        synth=synth,
        seeds=_parse_seeds(args.seeds),
        approaches=approaches,  # type: ignore[arg-type]
        gap_tol=args.gap_tol,
        min_dur=args.min_dur,
        train_meetings=args.train_meetings,
        train_seed=args.train_seed,
        train_on_corrupted=not args.train_ground_truth_only,
        use_context=not args.no_context,
        oracle_separator=args.oracle_separator,
        optimizer=optimizer,
    )


def cmd_bench(args: argparse.Namespace, file_values: dict[str, str]) -> int:
    report = bench(_bench_config(args, file_values))
    text = report.render()
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_ablation(args: argparse.Namespace, file_values: dict[str, str]) -> int:
    rows = ablation(_bench_config(args, file_values))
    text = render_ablation(rows)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


# ── parser wiring ───────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sattr",
        description="Speaker-attributed transcription toolkit at desk scale.",
        epilog=CONFIG_EPILOG,
    )
    parser.add_argument("--config", help="flat key = value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic meetings", epilog=CONFIG_EPILOG)
    p.add_argument("--out", required=True)
    p.add_argument("--meetings", type=int, default=1)
    p.add_argument("--oracle-separator", action="store_true")
    add_synth_flags(p)
    p.set_defaults(func=cmd_synth)

    p_sot = sub.add_parser("sot", help="serialize or deserialize token streams")
    sot_sub = p_sot.add_subparsers(dest="sot_command", required=True)
    p = sot_sub.add_parser("serialize")
    p.add_argument("--reference", required=True)
    p.add_argument("--segments", required=True)
    p.add_argument("--fifo-mode", choices=("utterance", "speaker"), default="utterance")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sot_serialize)
    p = sot_sub.add_parser("deserialize")
    p.add_argument("--hyps", required=True)
    p.set_defaults(func=cmd_sot_deserialize)

    p_align = sub.add_parser("align", help="assemble attribution from diarization")
    align_sub = p_align.add_subparsers(dest="align_command", required=True)
    p = align_sub.add_parser("fd-sot")
    p.add_argument("--hyps", required=True)
    p.add_argument("--rttm", required=True)
    p.add_argument("--segments", required=True)
    p.add_argument("--gap-tol", type=float, default=DEFAULT_GAP_TOL)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align_fdsot)

    p_wd = sub.add_parser("wdsot", help="train or apply the word-level scorer")
    wd_sub = p_wd.add_subparsers(dest="wdsot_command", required=True)
    p = wd_sub.add_parser("train")
    p.add_argument("--reference", required=True)
    p.add_argument("--segments", required=True)
    p.add_argument("--hyps", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fifo-mode", choices=("utterance", "speaker"), default="utterance")
    p.add_argument("--d-model", type=int, default=64)
    p.add_argument("--text-layers", type=int, default=4)
    p.add_argument("--text-heads", type=int, default=4)
    p.add_argument("--attn-heads", type=int, default=1)
    p.add_argument("--pe-scale", type=float, default=100.0)
    p.add_argument("--scaled-attention", action="store_true", default=True)
    p.add_argument("--unscaled-attention", dest="scaled_attention", action="store_false")
    p.add_argument("--no-context", action="store_true")
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--grad-clip", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_wdsot_train)
    p = wd_sub.add_parser("predict")
    p.add_argument("--model", required=True)
    p.add_argument("--hyps", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_wdsot_predict)
    p = wd_sub.add_parser("gradcheck")
    p.add_argument("--d-model", type=int, default=16)
    p.add_argument("--d-feat", type=int, default=6)
    p.add_argument("--d-emb", type=int, default=5)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--min-coords", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_wdsot_gradcheck)

    p = sub.add_parser("tsfilter", help="select target speakers per segment")
    p.add_argument("--rttm", required=True)
    p.add_argument("--segments", required=True)
    p.add_argument("--min-dur", type=float, default=DEFAULT_MIN_DUR)
    p.add_argument("--gap-tol", type=float, default=DEFAULT_GAP_TOL)
    p.add_argument("--semantics", choices=("island", "total"), default="island")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tsfilter)

    p_score = sub.add_parser("score", help="error metrics")
    score_sub = p_score.add_subparsers(dest="score_command", required=True)
    p = score_sub.add_parser("sd-cer")
    p.add_argument("--system", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--segments")
    p.set_defaults(func=cmd_score_sd_cer)
    p = score_sub.add_parser("si-cer")
    p.add_argument("--hyps", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--segments", required=True)
    p.add_argument("--mode", choices=("fifo", "minperm"), default="minperm")
    p.set_defaults(func=cmd_score_si_cer)
    p = score_sub.add_parser("der")
    p.add_argument("--system", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--collar", type=float, default=0.25)
    p.set_defaults(func=cmd_score_der)

    p = sub.add_parser("pipeline", help="assemble and score one or more approaches")
    p.add_argument("--approach", required=True, help="comma-separated subset of " + ",".join(APPROACHES))
    p.add_argument("--reference", required=True)
    p.add_argument("--segments", required=True)
    p.add_argument("--hyps")
    p.add_argument("--rttm")
    p.add_argument("--features")
    p.add_argument("--embeddings")
    p.add_argument("--model")
    p.add_argument("--fifo-mode", choices=("utterance", "speaker"), default="utterance")
    p.add_argument("--gap-tol", type=float, default=DEFAULT_GAP_TOL)
    p.add_argument("--min-dur", type=float, default=0.0)
    p.add_argument("--oracle-separator", action="store_true")
    p.add_argument("--wdsot-mode", choices=("model", "oracle-labels"), default="model")
    p.add_argument("--out", help="write the attributed transcript (single approach)")
    p.add_argument("--report", help="write the comparison table")
    p.set_defaults(func=cmd_pipeline)

    for name, func in (("bench", cmd_bench), ("ablation", cmd_ablation)):
        p = sub.add_parser(name, epilog=CONFIG_EPILOG, help=f"run the {name} driver on synthetic data")
        p.add_argument("--seeds", required=True, help="comma list and/or lo:hi ranges")
        p.add_argument("--approaches", default=",".join(APPROACHES))
        p.add_argument("--gap-tol", type=float, default=DEFAULT_GAP_TOL)
        p.add_argument("--min-dur", type=float, default=0.0)
        p.add_argument("--train-meetings", type=int, default=20)
        p.add_argument("--train-seed", type=int, default=10_000)
        p.add_argument("--train-ground-truth-only", action="store_true")
        p.add_argument("--no-context", action="store_true")
        p.add_argument("--oracle-separator", action="store_true")
        p.add_argument("--lr", type=float, default=0.01)
        p.add_argument("--momentum", type=float, default=0.9)
        p.add_argument("--epochs", type=int, default=20)
        p.add_argument("--report")
        add_synth_flags(p)
        p.set_defaults(func=func)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    threads = os.environ.get("SATTR_THREADS", "").strip()
    if threads:
        import torch

        torch.set_num_threads(max(1, int(threads)))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_values = read_config_file(args.config) if args.config else {}
        return args.func(args, file_values)
    except (ParseError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Speaker-attributed transcription toolkit: SOT serialization,
diarization-based and scorer-based speaker assignment, target-speaker
filtering, and the matching error metrics, at desk scale."""

from .core import (
    SC,
    SC_TOKEN,
    AttributedEntry,
    AttributedTranscript,
    DiarUtterance,
    DiarizationTrack,
    Meeting,
    Segment,
    Token,
    Utterance,
    detokenize,
    sort_fifo,
    tokenize,
)
from .sot import NormalizationStats, SotStream, deserialize, serialize
from .metrics import (
    DerResult,
    EditCounts,
    SdCerResult,
    SiCerResult,
    der,
    edit_alignment,
    edit_distance,
    sd_cer,
    si_cer,
)
from .fdsot import AlignStats, align, assemble, count_utterances
from .harness import (
    BenchConfig,
    BenchReport,
    PipelineConfig,
    PipelineInputs,
    PipelineResult,
    UsageError,
    ablation,
    bench,
    oracle_separators,
    report_table,
    run_pipeline,
)
from .tsfilter import assemble_segment, assemble_ts_transcript, select_speakers
from .synth import (
    GeneratedMeeting,
    SynthConfig,
    corrupt_hypothesis,
    gen_meeting,
    jitter_diarization,
    measured_overlap_ratio,
    simulate_ts_runs,
    vocabulary,
)

__version__ = "0.1.0"

__all__ = [
    "SC",
    "SC_TOKEN",
    "AttributedEntry",
    "AttributedTranscript",
    "DiarUtterance",
    "DiarizationTrack",
    "Meeting",
    "Segment",
    "Token",
    "Utterance",
    "detokenize",
    "sort_fifo",
    "tokenize",
    "NormalizationStats",
    "SotStream",
    "deserialize",
    "serialize",
    "DerResult",
    "EditCounts",
    "SdCerResult",
    "SiCerResult",
    "der",
    "edit_alignment",
    "edit_distance",
    "sd_cer",
    "si_cer",
    "AlignStats",
    "align",
    "assemble",
    "count_utterances",
    "BenchConfig",
    "BenchReport",
    "PipelineConfig",
    "PipelineInputs",
    "PipelineResult",
    "UsageError",
    "ablation",
    "bench",
    "oracle_separators",
    "report_table",
    "run_pipeline",
    "assemble_segment",
    "assemble_ts_transcript",
    "select_speakers",
    "GeneratedMeeting",
    "SynthConfig",
    "corrupt_hypothesis",
    "gen_meeting",
    "jitter_diarization",
    "measured_overlap_ratio",
    "simulate_ts_runs",
    "vocabulary",
    "__version__",
]

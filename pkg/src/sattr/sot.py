"""Serialized-output-training streams: multi-speaker text as one token
sequence with `<sc>` speaker-change separators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .core import SC_TOKEN, FifoMode, Segment, Token, Utterance, sort_fifo


@dataclass(frozen=True)
class SotStream:
    """A flat token sequence that may contain separator tokens.

    Streams produced by :func:`serialize` satisfy the canonical form (no
    adjacent, leading, or trailing separators); streams ingested from
    real recognizers may not, and :func:`deserialize` normalizes them.
    """

    tokens: tuple[Token, ...]
    segment: Segment | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def text(self) -> str:
        return " ".join(t.text for t in self.tokens)

    def is_canonical(self) -> bool:
        toks = self.tokens
        if toks and (toks[0].is_separator or toks[-1].is_separator):
            return False
        return not any(a.is_separator and b.is_separator for a, b in zip(toks, toks[1:]))


@dataclass
class NormalizationStats:
    """Counts of repairs applied while splitting a malformed stream."""

    collapsed_separators: int = 0
    stripped_edge_separators: int = 0

    @property
    def total_fixes(self) -> int:
        return self.collapsed_separators + self.stripped_edge_separators


def serialize(
    utterances: Sequence[Utterance],
    mode: FifoMode = "utterance",
    segment: Segment | None = None,
) -> SotStream:
    """Serialize utterances into one FIFO-ordered stream.

    Token runs are joined by single separators, so the output carries
    exactly ``len(utterances) - 1`` separators (none for one utterance).
    """
    ordered = sort_fifo(utterances, mode)
    tokens: list[Token] = []
    for i, utt in enumerate(ordered):
        if not utt.tokens:
            raise ValueError(f"cannot serialize empty utterance ({utt.speaker} @ {utt.start})")
        if i:
            tokens.append(SC_TOKEN)
        tokens.extend(utt.tokens)
    return SotStream(tuple(tokens), segment)


def deserialize(stream: SotStream) -> tuple[list[list[Token]], NormalizationStats]:
    """Split a stream on separators into per-utterance token runs.

    Malformed streams never crash: adjacent separators collapse, edge
    separators are stripped, and runs left empty by normalization are
    dropped. Each repair is counted in the returned stats.
    """
    stats = NormalizationStats()
    runs: list[list[Token]] = []
    current: list[Token] = []
    for tok in stream.tokens:
        if not tok.is_separator:
            current.append(tok)
            continue
        if not runs and not current:
            stats.stripped_edge_separators += 1
        elif not current:
            stats.collapsed_separators += 1
        else:
            runs.append(current)
            current = []
    if current:
        runs.append(current)
    elif stream.tokens and stream.tokens[-1].is_separator and runs:
        stats.stripped_edge_separators += 1
    return runs, stats

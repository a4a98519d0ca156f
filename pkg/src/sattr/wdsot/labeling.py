"""Speaker labels for hypothesis tokens via edit alignment against the
FIFO-serialized reference — the training-target generator for noisy
hypothesis transcripts."""

from __future__ import annotations

from typing import Sequence

from ..core import FifoMode, Token, Utterance
from ..metrics import edit_alignment
from ..sot import SotStream, serialize
from ..core import sort_fifo


def label_tokens(
    hyp: SotStream | Sequence[Token],
    reference: Sequence[Utterance],
    mode: FifoMode = "utterance",
) -> list[str]:
    """One speaker id per non-separator hypothesis token.

    The hypothesis is aligned to the serialized reference by minimum
    edit distance (separators participate in the alignment). Matched and
    substituted tokens inherit the aligned reference token's speaker;
    inserted tokens inherit the nearest preceding labeled token's
    speaker, or the nearest following one at stream start.
    """
    tokens = tuple(hyp.tokens if isinstance(hyp, SotStream) else hyp)
    ordered = sort_fifo(reference, mode)
    ref_stream = serialize(ordered, mode)
    # Parallel speaker track for the serialized reference; separator
    # positions carry no speaker.
    ref_speakers: list[str | None] = []
    for i, utt in enumerate(ordered):
        if i:
            ref_speakers.append(None)
        ref_speakers.extend([utt.speaker] * len(utt.tokens))

    aligned: list[str | None] = [None] * len(tokens)
    for kind, ref_idx, hyp_idx in edit_alignment(tokens, ref_stream.tokens):
        if kind in ("match", "sub") and hyp_idx is not None and ref_idx is not None:
            aligned[hyp_idx] = ref_speakers[ref_idx]

    content = [i for i, t in enumerate(tokens) if not t.is_separator]
    labels: list[str | None] = [aligned[i] for i in content]
    # Fill unlabeled positions from the nearest preceding label, then
    # sweep backwards for a leading gap.
    last: str | None = None
    for i, lab in enumerate(labels):
        if lab is None:
            labels[i] = last
        else:
            last = lab
    nxt: str | None = None
    for i in range(len(labels) - 1, -1, -1):
        if labels[i] is None:
            labels[i] = nxt
        else:
            nxt = labels[i]
    if any(lab is None for lab in labels):
        raise ValueError("reference produced no speaker labels (empty reference?)")
    return [lab for lab in labels if lab is not None]

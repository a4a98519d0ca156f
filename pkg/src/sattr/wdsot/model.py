"""Word-level diarization scorer: encode hypothesis tokens, frame
features, and speaker embeddings; aggregate frames per token by
cross-attention; score speakers context-independently (dot product) and
context-dependently (self-attention over the aggregated sequence); map
both scores to a per-token speaker posterior.

All tensors are float64 so the forward path can be checked against
naive loop oracles at 1e-10 and central finite differences stay sharp.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn

from ..core import SC, Token
from ..sot import SotStream
from .types import FeatureSequence, SpeakerProfiles

UNK = "<unk>"


def _as_f64(value, name: str) -> torch.Tensor:
    tensor = torch.as_tensor(value, dtype=torch.float64)
    if not torch.isfinite(tensor).all():
        raise ValueError(f"{name} contains non-finite values")
    return tensor


def positional_encoding(
    n: int, d_model: int, pe_scale: float = 100.0, dtype=torch.float64
) -> torch.Tensor:
    """Sinusoidal encoding of n positions normalized to [0, 1].

    Normalizing by sequence length puts token index and frame index on a
    common axis, so a token a third of the way into the stream and a
    frame a third of the way into the segment carry nearby encodings.
    """
    pos = torch.arange(n, dtype=dtype) / max(n - 1, 1) * pe_scale
    div = torch.pow(10000.0, torch.arange(0, d_model, 2, dtype=dtype) / d_model)
    pe = torch.zeros(n, d_model, dtype=dtype)
    pe[:, 0::2] = torch.sin(pos[:, None] / div)
    pe[:, 1::2] = torch.cos(pos[:, None] / div)
    return pe


# ── the scored attention primitives ─────────────────────────────────

def cross_attend(
    tokens_enc: torch.Tensor | np.ndarray,
    frames_enc: torch.Tensor | np.ndarray,
    w_q: torch.Tensor | np.ndarray,
    w_k: torch.Tensor | np.ndarray,
    w_v: torch.Tensor | np.ndarray,
    scaled: bool = False,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Aggregate frame features per token.

    For token l and frame t: score = dot(W_q h_l, W_k x_t); each row of
    scores is softmax-normalized; the aggregate is the attention-weighted
    sum of W_v x_t. Returns (aggregated L x d_v, attention L x T).
    """
    h = _as_f64(tokens_enc, "token encodings")
    x = _as_f64(frames_enc, "frame features")
    w_q, w_k, w_v = (_as_f64(w, n) for w, n in ((w_q, "w_q"), (w_k, "w_k"), (w_v, "w_v")))
    scores = (h @ w_q.T) @ (x @ w_k.T).T
    if scaled:
        scores = scores / math.sqrt(w_q.shape[0])
    attention = torch.softmax(scores, dim=-1)
    aggregated = attention @ (x @ w_v.T)
    return aggregated, attention


def ci_scores(
    aggregated: torch.Tensor | np.ndarray, speakers_enc: torch.Tensor | np.ndarray
) -> torch.Tensor:
    """Context-independent score: dot(r_l, v_n) for every token/speaker pair."""
    r = _as_f64(aggregated, "aggregated representations")
    v = _as_f64(speakers_enc, "speaker encodings")
    if r.shape[-1] != v.shape[-1]:
        raise ValueError(f"dimension mismatch: {r.shape[-1]} vs {v.shape[-1]}")
    return r @ v.T


class ContextAttention(nn.Module):
    """One residual self-attention block over the aggregated sequence.

    Output position l mixes every aggregated representation, so the
    downstream score sees the other speakers' evidence as context.
    """

    def __init__(self, d_model: int, heads: int = 1, scaled: bool = False):
        super().__init__()
        if d_model % heads:
            raise ValueError(f"d_model {d_model} not divisible by {heads} heads")
        self.d_model = d_model
        self.heads = heads
        self.scaled = scaled
        kw = dict(bias=False, dtype=torch.float64)
        self.w_q = nn.Linear(d_model, d_model, **kw)
        self.w_k = nn.Linear(d_model, d_model, **kw)
        self.w_v = nn.Linear(d_model, d_model, **kw)
        self.w_o = nn.Linear(d_model, d_model, **kw)

    def forward(self, aggregated: torch.Tensor) -> torch.Tensor:
        L = aggregated.shape[0]
        d_k = self.d_model // self.heads
        q = self.w_q(aggregated).view(L, self.heads, d_k).transpose(0, 1)
        k = self.w_k(aggregated).view(L, self.heads, d_k).transpose(0, 1)
        v = self.w_v(aggregated).view(L, self.heads, d_k).transpose(0, 1)
        scores = q @ k.transpose(-2, -1)
        if self.scaled:
            scores = scores / math.sqrt(d_k)
        mixed = torch.softmax(scores, dim=-1) @ v
        mixed = mixed.transpose(0, 1).reshape(L, self.d_model)
        out = aggregated + self.w_o(mixed)
        if not torch.isfinite(out).all():
            raise ValueError("context attention produced non-finite values")
        return out


def cd_scores(
    aggregated: torch.Tensor | np.ndarray,
    speakers_enc: torch.Tensor | np.ndarray,
    context: ContextAttention,
) -> torch.Tensor:
    """Context-dependent score: dot(c_l, v_n) after the context block."""
    r = _as_f64(aggregated, "aggregated representations")
    v = _as_f64(speakers_enc, "speaker encodings")
    if r.shape[-1] != v.shape[-1]:
        raise ValueError(f"dimension mismatch: {r.shape[-1]} vs {v.shape[-1]}")
    return context(r) @ v.T


# ── model ───────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ScorerConfig:
    vocab: tuple[str, ...]
    d_feat: int
    d_emb: int
    d_model: int = 256
    text_layers: int = 4
    text_heads: int = 8
    attn_heads: int = 1
    post_hidden: int = 16
    pe_scale: float = 100.0
    scaled_attention: bool = False
    use_context: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "vocab", tuple(self.vocab))
        if self.d_model % 2:
            raise ValueError("d_model must be even")
        for heads in (self.text_heads, self.attn_heads):
            if self.d_model % heads:
                raise ValueError(f"d_model {self.d_model} not divisible by {heads} heads")


class CrossAttentionBlock(nn.Module):
    """Token-to-frame attention; single head applies the projections
    verbatim, multiple heads split the model dim and reconcat through an
    output projection."""

    def __init__(self, d_model: int, heads: int = 1, scaled: bool = False):
        super().__init__()
        self.d_model = d_model
        self.heads = heads
        self.scaled = scaled
        kw = dict(bias=False, dtype=torch.float64)
        self.w_q = nn.Linear(d_model, d_model, **kw)
        self.w_k = nn.Linear(d_model, d_model, **kw)
        self.w_v = nn.Linear(d_model, d_model, **kw)
        self.w_o = nn.Linear(d_model, d_model, **kw) if heads > 1 else None

    def forward(self, tokens_enc: torch.Tensor, frames_enc: torch.Tensor):
        if self.heads == 1:
            return cross_attend(
                tokens_enc, frames_enc, self.w_q.weight, self.w_k.weight, self.w_v.weight,
                scaled=self.scaled,
            )
        d_k = self.d_model // self.heads
        per_head = []
        attentions = []
        for head in range(self.heads):
            rows = slice(head * d_k, (head + 1) * d_k)
            agg, attn = cross_attend(
                tokens_enc, frames_enc,
                self.w_q.weight[rows], self.w_k.weight[rows], self.w_v.weight[rows],
                scaled=self.scaled,
            )
            per_head.append(agg)
            attentions.append(attn)
        assert self.w_o is not None
        return self.w_o(torch.cat(per_head, dim=-1)), torch.stack(attentions).mean(0)


class TextEncoder(nn.Module):
    """Embedding table plus a stack of self-attention layers."""

    def __init__(self, config: ScorerConfig):
        super().__init__()
        self.config = config
        vocab = [UNK, SC]
        for entry in config.vocab:
            if entry not in (UNK, SC):
                vocab.append(entry)
        self.token_to_id = {text: i for i, text in enumerate(vocab)}
        self.embedding = nn.Embedding(len(vocab), config.d_model, dtype=torch.float64)
        self.layers = nn.ModuleList(
            nn.TransformerEncoderLayer(
                d_model=config.d_model,
                nhead=config.text_heads,
                dim_feedforward=4 * config.d_model,
                dropout=0.0,
                activation="gelu",
                batch_first=True,
                dtype=torch.float64,
            )
            for _ in range(config.text_layers)
        )

    def encode_ids(self, tokens: Sequence[Token]) -> torch.Tensor:
        ids = [
            self.token_to_id[SC] if t.is_separator else self.token_to_id.get(t.text, 0)
            for t in tokens
        ]
        return torch.tensor(ids, dtype=torch.long)

    def forward(self, token_ids: torch.Tensor) -> torch.Tensor:
        h = self.embedding(token_ids)
        h = h + positional_encoding(h.shape[0], self.config.d_model, self.config.pe_scale)
        h = h.unsqueeze(0)
        for layer in self.layers:
            h = layer(h)
        return h.squeeze(0)


class ScorerModel(nn.Module):
    """The full WD-SOT scorer; construction is deterministic per seed."""

    def __init__(self, config: ScorerConfig):
        super().__init__()
        torch.manual_seed(config.seed)
        self.config = config
        self.text_encoder = TextEncoder(config)
        self.feature_encoder = nn.Linear(config.d_feat, config.d_model, dtype=torch.float64)
        self.speaker_encoder = nn.Linear(config.d_emb, config.d_model, dtype=torch.float64)
        self.cross = CrossAttentionBlock(
            config.d_model, config.attn_heads, config.scaled_attention
        )
        self.context = ContextAttention(
            config.d_model, config.attn_heads, config.scaled_attention
        )
        self.postnet = nn.Sequential(
            nn.Linear(2, config.post_hidden, dtype=torch.float64),
            nn.Tanh(),
            nn.Linear(config.post_hidden, 1, dtype=torch.float64),
        )

    def encode_frames(self, frames: torch.Tensor) -> torch.Tensor:
        x = self.feature_encoder(frames)
        return x + positional_encoding(x.shape[0], self.config.d_model, self.config.pe_scale)

    def forward(
        self, token_ids: torch.Tensor, frames: torch.Tensor, profiles: torch.Tensor
    ) -> dict[str, torch.Tensor]:
        """Logits and intermediates for one serialized hypothesis."""
        h = self.text_encoder(token_ids)
        x = self.encode_frames(frames)
        v = self.speaker_encoder(profiles)
        r, attention = self.cross(h, x)
        s_ci = ci_scores(r, v)
        if self.config.use_context:
            s_cd = cd_scores(r, v, self.context)
        else:
            s_cd = torch.zeros_like(s_ci)
        logits = self.postnet(torch.stack([s_ci, s_cd], dim=-1)).squeeze(-1)
        return {
            "logits": logits,
            "ci": s_ci,
            "cd": s_cd,
            "attention": attention,
            "aggregated": r,
        }


@dataclass(frozen=True)
class Prediction:
    """Per-token speaker decisions for the non-separator tokens."""

    speakers: tuple[str, ...]
    posteriors: np.ndarray
    token_positions: tuple[int, ...]
    attention: np.ndarray


def predict(
    model: ScorerModel,
    hyp: SotStream | Sequence[Token],
    features: FeatureSequence,
    profiles: SpeakerProfiles,
) -> Prediction:
    """Assign a speaker to every non-separator hypothesis token.

    Separators take part in encoding (they carry the speaker-change
    structure) but receive no speaker and are excluded from the output.
    """
    tokens = tuple(hyp.tokens if isinstance(hyp, SotStream) else hyp)
    positions = tuple(i for i, t in enumerate(tokens) if not t.is_separator)
    if not positions:
        raise ValueError("hypothesis has no non-separator tokens")
    with torch.no_grad():
        outputs = model(
            model.text_encoder.encode_ids(tokens),
            _as_f64(features.frames, "frames"),
            _as_f64(profiles.vectors, "profiles"),
        )
        posteriors = torch.softmax(outputs["logits"], dim=-1)
    keep = torch.tensor(positions, dtype=torch.long)
    posteriors = posteriors[keep].numpy()
    winners = tuple(profiles.speakers[i] for i in posteriors.argmax(axis=1))
    return Prediction(winners, posteriors, positions, outputs["attention"].numpy())


# ── checkpointing ───────────────────────────────────────────────────

def save_model(model: ScorerModel, path: Path | str) -> None:
    torch.save({"config": asdict(model.config), "state": model.state_dict()}, path)


def load_model(path: Path | str) -> ScorerModel:
    payload = torch.load(path, weights_only=False)
    config = ScorerConfig(**payload["config"])
    model = ScorerModel(config)
    model.load_state_dict(payload["state"])
    return model


def models_equal(a: ScorerModel, b: ScorerModel) -> bool:
    if a.config != b.config:
        return False
    sa, sb = a.state_dict(), b.state_dict()
    return set(sa) == set(sb) and all(torch.equal(sa[k], sb[k]) for k in sa)

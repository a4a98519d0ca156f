"""Gradient training of the scorer and finite-difference verification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch

from ..core import Token
from ..sot import SotStream
from .model import ScorerConfig, ScorerModel
from .types import FeatureSequence, SpeakerProfiles


class TrainingDiverged(RuntimeError):
    def __init__(self, step: int):
        super().__init__(f"non-finite loss at step {step}")
        self.step = step


@dataclass(frozen=True)
class TrainExample:
    """One segment: hypothesis stream, frame features, candidate
    profiles, and a speaker index per non-separator token."""

    tokens: tuple[Token, ...]
    features: FeatureSequence
    profiles: SpeakerProfiles
    labels: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "labels", tuple(self.labels))
        n_content = sum(1 for t in self.tokens if not t.is_separator)
        if n_content != len(self.labels):
            raise ValueError(
                f"need one label per non-separator token: {len(self.labels)} for {n_content}"
            )
        n_spk = len(self.profiles.speakers)
        if any(not 0 <= lab < n_spk for lab in self.labels):
            raise ValueError("label index out of candidate range")

    @classmethod
    def from_stream(
        cls, stream: SotStream, features: FeatureSequence,
        profiles: SpeakerProfiles, speakers: Sequence[str],
    ) -> "TrainExample":
        labels = tuple(profiles.index_of(s) for s in speakers)
        return cls(tuple(stream.tokens), features, profiles, labels)


@dataclass(frozen=True)
class OptimizerConfig:
    """SGD with momentum; one segment per step."""

    lr: float = 0.01
    momentum: float = 0.9
    epochs: int = 20
    grad_clip: float = 5.0
    shuffle: bool = True


@dataclass
class TrainResult:
    model: ScorerModel
    losses: list[float]
    epoch_losses: list[float] = field(default_factory=list)


def example_loss(model: ScorerModel, example: TrainExample) -> torch.Tensor:
    """Mean cross-entropy over the example's non-separator tokens."""
    token_ids = model.text_encoder.encode_ids(example.tokens)
    outputs = model(
        token_ids,
        torch.as_tensor(example.features.frames, dtype=torch.float64),
        torch.as_tensor(example.profiles.vectors, dtype=torch.float64),
    )
    keep = torch.tensor(
        [i for i, t in enumerate(example.tokens) if not t.is_separator], dtype=torch.long
    )
    logits = outputs["logits"][keep]
    targets = torch.tensor(example.labels, dtype=torch.long)
    return torch.nn.functional.cross_entropy(logits, targets)


def train(
    model_or_config: ScorerModel | ScorerConfig,
    dataset: Sequence[TrainExample],
    optimizer: OptimizerConfig | None = None,
    seed: int = 0,
) -> TrainResult:
    """Minimize mean per-token cross-entropy with SGD + momentum.

    Deterministic given the seed: it fixes both model initialization
    (via the config seed when a config is passed) and the epoch shuffle
    order. Raises :class:`TrainingDiverged` on a non-finite loss.
    """
    if not dataset:
        raise ValueError("training dataset is empty")
    opt_cfg = optimizer or OptimizerConfig()
    model = (
        ScorerModel(model_or_config) if isinstance(model_or_config, ScorerConfig)
        else model_or_config
    )
    sgd = torch.optim.SGD(model.parameters(), lr=opt_cfg.lr, momentum=opt_cfg.momentum)
    rng = np.random.default_rng(seed)
    losses: list[float] = []
    epoch_losses: list[float] = []
    step = 0
    for _ in range(opt_cfg.epochs):
        order = rng.permutation(len(dataset)) if opt_cfg.shuffle else np.arange(len(dataset))
        epoch_total = 0.0
        for index in order:
            sgd.zero_grad()
            loss = example_loss(model, dataset[index])
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDiverged(step)
            loss.backward()
            if opt_cfg.grad_clip:
                torch.nn.utils.clip_grad_norm_(model.parameters(), opt_cfg.grad_clip)
            sgd.step()
            losses.append(value)
            epoch_total += value
            step += 1
        epoch_losses.append(epoch_total / len(dataset))
    return TrainResult(model, losses, epoch_losses)


def grad_check(
    model: ScorerModel,
    example: TrainExample,
    epsilon: float = 1e-4,
    min_coords: int = 200,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference grads.

    Samples at least ``min_coords`` coordinates spread over every
    parameter tensor (at least one per tensor).
    """
    params = [p for _, p in sorted(model.named_parameters()) if p.requires_grad]
    return finite_difference_max_rel_error(
        lambda: example_loss(model, example), params, epsilon, min_coords, seed
    )


def finite_difference_max_rel_error(
    loss_fn, params: Sequence[torch.Tensor], epsilon: float, min_coords: int = 200, seed: int = 0
) -> float:
    """Central finite differences against autograd on sampled coordinates."""
    rng = np.random.default_rng(seed)
    for p in params:
        p.grad = None
    loss = loss_fn()
    loss.backward()
    total = sum(p.numel() for p in params)
    worst = 0.0
    for p in params:
        n = max(1, round(min_coords * p.numel() / total))
        flat = p.detach().view(-1)
        grad = p.grad.detach().view(-1) if p.grad is not None else torch.zeros_like(flat)
        for idx in rng.choice(p.numel(), size=min(n, p.numel()), replace=False):
            original = flat[idx].item()
            with torch.no_grad():
                flat[idx] = original + epsilon
                plus = float(loss_fn())
                flat[idx] = original - epsilon
                minus = float(loss_fn())
                flat[idx] = original
            fd = (plus - minus) / (2 * epsilon)
            an = float(grad[idx])
            err = abs(fd - an) / max(abs(fd), abs(an), 1e-8)
            worst = max(worst, err)
    return worst

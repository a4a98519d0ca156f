"""Value types consumed by the word-level diarization scorer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FeatureSequence:
    """Frame-level speech features: a T x d_feat matrix plus frame step."""

    frames: np.ndarray
    frame_step: float

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise ValueError(f"frames must be a T x d matrix with T >= 1, got {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise ValueError("frames contain non-finite values")
        if self.frame_step <= 0:
            raise ValueError(f"frame_step must be positive, got {self.frame_step}")
        object.__setattr__(self, "frames", frames)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


@dataclass(frozen=True)
class SpeakerProfiles:
    """Raw (pre-encoder) speaker embeddings for one meeting's candidates."""

    speakers: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self) -> None:
        vectors = np.asarray(self.vectors, dtype=np.float64)
        object.__setattr__(self, "speakers", tuple(self.speakers))
        if vectors.ndim != 2 or vectors.shape[0] != len(self.speakers):
            raise ValueError(
                f"need one embedding row per speaker, got {vectors.shape} for {len(self.speakers)}"
            )
        if len(self.speakers) < 1:
            raise ValueError("at least one candidate speaker required")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("embeddings contain non-finite values")
        object.__setattr__(self, "vectors", vectors)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def index_of(self, speaker: str) -> int:
        return self.speakers.index(speaker)

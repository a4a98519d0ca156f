import numpy as np
import pytest
from hypothesis import strategies as st

from sattr.core import Meeting, Segment, Token, Utterance

CJK = [chr(0x4E00 + i) for i in range(30)]


def utt(speaker, text, start, duration=None):
    tokens = tuple(Token(c) for c in text)
    if duration is None:
        duration = 0.25 * max(len(tokens), 1)
    return Utterance(speaker, start, start + duration, tokens)


def small_meeting():
    """Two segments, three speakers, hand-placed with one overlap."""
    utterances = (
        utt("alice", "甲乙丙", 0.5),
        utt("bob", "丁戊", 1.0),
        utt("carol", "己庚辛壬", 2.5),
        utt("alice", "癸子", 5.0),
        utt("bob", "丑寅卯", 5.6),
    )
    segments = (Segment("m0", 0.25, 4.0), Segment("m0", 4.75, 7.0))
    return Meeting("m0", ("alice", "bob", "carol"), utterances, segments)


ids = st.sampled_from(["spk0", "spk1", "spk2", "spk3"])
texts = st.text(alphabet=CJK, min_size=1, max_size=8)


@st.composite
def utterances_in_window(draw, lo=0.0, hi=20.0, max_n=6):
    n = draw(st.integers(min_value=1, max_value=max_n))
    out = []
    for _ in range(n):
        start = draw(st.floats(min_value=lo, max_value=hi - 1.0, allow_nan=False))
        dur = draw(st.floats(min_value=0.1, max_value=3.0, allow_nan=False))
        out.append(utt(draw(ids), draw(texts), round(start, 3), round(dur, 3)))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

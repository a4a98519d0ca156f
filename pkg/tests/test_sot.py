import pytest
from hypothesis import given
from hypothesis import strategies as st

from sattr.core import SC_TOKEN, Token, sort_fifo
from sattr.sot import SotStream, deserialize, serialize

from conftest import utt, utterances_in_window


def test_serialize_separator_count_and_order():
    utts = [utt("b", "丙丁", 1.0), utt("a", "甲乙", 0.0), utt("a", "戊", 2.0)]
    stream = serialize(utts)
    assert stream.text == "甲 乙 <sc> 丙 丁 <sc> 戊"
    assert sum(t.is_separator for t in stream.tokens) == len(utts) - 1
    assert stream.is_canonical()


def test_serialize_speaker_mode_groups_turns():
    utts = [utt("b", "丙", 1.0), utt("a", "甲", 0.0), utt("b", "丁", 2.0)]
    assert serialize(utts, mode="speaker").text == "甲 <sc> 丙 <sc> 丁"


def test_serialize_single_and_empty():
    assert serialize([utt("a", "甲", 0.0)]).text == "甲"
    assert serialize([]).tokens == ()
    with pytest.raises(ValueError):
        serialize([utt("a", "甲", 0.0), utt("b", "", 1.0)])


def test_deserialize_canonical_stream():
    runs, stats = deserialize(serialize([utt("a", "甲乙", 0.0), utt("b", "丙", 1.0)]))
    assert [[t.text for t in run] for run in runs] == [["甲", "乙"], ["丙"]]
    assert stats.total_fixes == 0


@pytest.mark.parametrize(
    "layout, want_runs, collapsed, stripped",
    [
        ("|a", [["a"]], 0, 1),
        ("a|", [["a"]], 0, 1),
        ("a||b", [["a"], ["b"]], 1, 0),
        ("||a|||b||", [["a"], ["b"]], 3, 3),
        ("|", [], 0, 1),
        ("", [], 0, 0),
    ],
)
def test_deserialize_normalizes_malformed(layout, want_runs, collapsed, stripped):
    tokens = tuple(SC_TOKEN if c == "|" else Token(c) for c in layout)
    runs, stats = deserialize(SotStream(tokens))
    assert [[t.text for t in r] for r in runs] == want_runs
    assert stats.collapsed_separators == collapsed
    assert stats.stripped_edge_separators == stripped


@given(utterances_in_window(), st.sampled_from(["utterance", "speaker"]))
def test_round_trip_recovers_fifo_runs(utterances, mode):
    runs, stats = deserialize(serialize(utterances, mode))
    want = [list(u.tokens) for u in sort_fifo(utterances, mode)]
    assert runs == want
    assert stats.total_fixes == 0


@given(st.lists(st.sampled_from("ab|"), max_size=12))
def test_deserialize_never_emits_empty_runs(layout):
    tokens = tuple(SC_TOKEN if c == "|" else Token(c) for c in layout)
    runs, stats = deserialize(SotStream(tokens))
    assert all(runs)
    content = [t for t in tokens if not t.is_separator]
    assert [t for run in runs for t in run] == content
    n_sep = sum(t.is_separator for t in tokens)
    assert stats.total_fixes == n_sep - (len(runs) - 1 if runs else 0)

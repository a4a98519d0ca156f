"""Scorer numerics checked against naive-loop reimplementations, plus
labeling, training, and checkpoint behavior."""

import math

import numpy as np
import pytest
import torch

from sattr.core import SC_TOKEN, Segment, Token
from sattr.sot import SotStream, serialize
from sattr.wdsot import (
    ContextAttention,
    CrossAttentionBlock,
    OptimizerConfig,
    ScorerConfig,
    ScorerModel,
    SpeakerProfiles,
    TrainExample,
    cd_scores,
    ci_scores,
    cross_attend,
    example_loss,
    grad_check,
    label_tokens,
    load_model,
    models_equal,
    positional_encoding,
    predict,
    save_model,
    train,
)
from sattr.wdsot.types import FeatureSequence

from conftest import utt

VOCAB = tuple(chr(0x4E00 + i) for i in range(24))


def toy_config(**overrides):
    base = dict(
        vocab=VOCAB, d_feat=5, d_emb=4, d_model=8, text_layers=1, text_heads=2, seed=0
    )
    base.update(overrides)
    return ScorerConfig(**base)


def toy_example(rng, n_tokens=5, n_frames=7, n_speakers=3, d_feat=5, d_emb=4):
    tokens = [Token(VOCAB[int(i)]) for i in rng.integers(0, len(VOCAB), size=n_tokens)]
    tokens.insert(2, SC_TOKEN)
    features = FeatureSequence(rng.normal(size=(n_frames, d_feat)), 0.08)
    profiles = SpeakerProfiles(
        tuple(f"spk{i}" for i in range(n_speakers)), rng.normal(size=(n_speakers, d_emb))
    )
    labels = tuple(int(i) for i in rng.integers(0, n_speakers, size=n_tokens))
    return TrainExample(tuple(tokens), features, profiles, labels)


# ── naive-loop oracles ──────────────────────────────────────────────

def naive_positional_encoding(n, d, scale):
    pe = np.zeros((n, d))
    for pos in range(n):
        p = pos / max(n - 1, 1) * scale
        for i in range(0, d, 2):
            div = 10000.0 ** (i / d)
            pe[pos, i] = math.sin(p / div)
            if i + 1 < d:
                pe[pos, i + 1] = math.cos(p / div)
    return pe


def naive_softmax_rows(scores):
    out = np.zeros_like(scores)
    for l in range(scores.shape[0]):
        row = scores[l] - scores[l].max()
        e = np.exp(row)
        out[l] = e / e.sum()
    return out


def naive_cross_attend(h, x, w_q, w_k, w_v, scaled):
    L, T = h.shape[0], x.shape[0]
    scores = np.zeros((L, T))
    for l in range(L):
        for t in range(T):
            scores[l, t] = float(np.dot(w_q @ h[l], w_k @ x[t]))
    if scaled:
        scores /= math.sqrt(w_q.shape[0])
    attention = naive_softmax_rows(scores)
    aggregated = np.zeros((L, w_v.shape[0]))
    for l in range(L):
        for t in range(T):
            aggregated[l] += attention[l, t] * (w_v @ x[t])
    return aggregated, attention


def naive_context(a, w_q, w_k, w_v, w_o, scaled):
    L, d = a.shape
    scores = np.zeros((L, L))
    for i in range(L):
        for j in range(L):
            scores[i, j] = float(np.dot(w_q @ a[i], w_k @ a[j]))
    if scaled:
        scores /= math.sqrt(d)
    attn = naive_softmax_rows(scores)
    mixed = np.zeros_like(a)
    for i in range(L):
        for j in range(L):
            mixed[i] += attn[i, j] * (w_v @ a[j])
    return a + mixed @ w_o.T


class TestNumerics:
    def test_positional_encoding_matches_naive(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 12))
            d = int(rng.integers(1, 5)) * 2
            scale = float(rng.uniform(1.0, 200.0))
            got = positional_encoding(n, d, scale).numpy()
            np.testing.assert_allclose(got, naive_positional_encoding(n, d, scale), atol=1e-10)

    def test_positional_encoding_single_position_is_origin(self):
        pe = positional_encoding(1, 6, 100.0).numpy()
        np.testing.assert_allclose(pe[0, 0::2], 0.0, atol=1e-12)
        np.testing.assert_allclose(pe[0, 1::2], 1.0, atol=1e-12)

    @pytest.mark.parametrize("scaled", [False, True])
    def test_cross_attend_matches_naive_on_100_shapes(self, rng, scaled):
        for _ in range(100):
            L = int(rng.integers(1, 7))
            T = int(rng.integers(1, 9))
            d_in = int(rng.integers(1, 6))
            d_k = int(rng.integers(1, 6))
            h = rng.normal(size=(L, d_in))
            x = rng.normal(size=(T, d_in))
            w_q = rng.normal(size=(d_k, d_in))
            w_k = rng.normal(size=(d_k, d_in))
            w_v = rng.normal(size=(d_k, d_in))
            agg, attn = cross_attend(h, x, w_q, w_k, w_v, scaled=scaled)
            want_agg, want_attn = naive_cross_attend(h, x, w_q, w_k, w_v, scaled)
            np.testing.assert_allclose(agg.numpy(), want_agg, atol=1e-10)
            np.testing.assert_allclose(attn.numpy(), want_attn, atol=1e-10)
            np.testing.assert_allclose(attn.numpy().sum(axis=1), 1.0, atol=1e-10)

    def test_ci_scores_matches_naive(self, rng):
        for _ in range(100):
            L, N, d = (int(rng.integers(1, 7)) for _ in range(3))
            r = rng.normal(size=(L, d))
            v = rng.normal(size=(N, d))
            want = np.array([[np.dot(r[l], v[n]) for n in range(N)] for l in range(L)])
            np.testing.assert_allclose(ci_scores(r, v).numpy(), want, atol=1e-10)
        with pytest.raises(ValueError):
            ci_scores(np.zeros((2, 3)), np.zeros((2, 4)))

    def test_cd_scores_matches_naive(self, rng):
        for _ in range(100):
            L = int(rng.integers(1, 6))
            N = int(rng.integers(1, 5))
            d = int(rng.integers(1, 4)) * 2
            context = ContextAttention(d)
            with torch.no_grad():
                for p in context.parameters():
                    p.copy_(torch.tensor(rng.normal(size=p.shape)))
            r = rng.normal(size=(L, d))
            v = rng.normal(size=(N, d))
            weights = {k: p.detach().numpy() for k, p in context.named_parameters()}
            ctx = naive_context(
                r, weights["w_q.weight"], weights["w_k.weight"],
                weights["w_v.weight"], weights["w_o.weight"], scaled=False,
            )
            want = ctx @ v.T
            got = cd_scores(r, v, context).detach().numpy()
            np.testing.assert_allclose(got, want, atol=1e-10)

    def test_multi_head_block_matches_per_head_naive(self, rng):
        d_model, heads = 6, 2
        block = CrossAttentionBlock(d_model, heads=heads)
        with torch.no_grad():
            for p in block.parameters():
                p.copy_(torch.tensor(rng.normal(size=p.shape)))
        h = rng.normal(size=(4, d_model))
        x = rng.normal(size=(5, d_model))
        w = {k: p.detach().numpy() for k, p in block.named_parameters()}
        d_k = d_model // heads
        per_head, attns = [], []
        for head in range(heads):
            rows = slice(head * d_k, (head + 1) * d_k)
            agg, attn = naive_cross_attend(
                h, x, w["w_q.weight"][rows], w["w_k.weight"][rows], w["w_v.weight"][rows], False
            )
            per_head.append(agg)
            attns.append(attn)
        want = np.concatenate(per_head, axis=1) @ w["w_o.weight"].T
        got_agg, got_attn = block(torch.tensor(h), torch.tensor(x))
        np.testing.assert_allclose(got_agg.detach().numpy(), want, atol=1e-10)
        np.testing.assert_allclose(got_attn.detach().numpy(), np.mean(attns, axis=0), atol=1e-10)

    def test_non_finite_inputs_are_rejected(self):
        bad = np.array([[1.0, float("nan")]])
        with pytest.raises(ValueError):
            cross_attend(bad, bad, np.eye(2), np.eye(2), np.eye(2))


class TestModel:
    def test_construction_is_deterministic(self):
        a, b = ScorerModel(toy_config()), ScorerModel(toy_config())
        assert models_equal(a, b)
        assert not models_equal(a, ScorerModel(toy_config(seed=1)))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            toy_config(d_model=7)
        with pytest.raises(ValueError):
            toy_config(d_model=8, text_heads=3)

    def test_forward_shapes_and_posterior_sums(self, rng):
        model = ScorerModel(toy_config())
        example = toy_example(rng)
        out = model(
            model.text_encoder.encode_ids(example.tokens),
            torch.tensor(example.features.frames),
            torch.tensor(example.profiles.vectors),
        )
        L = len(example.tokens)
        assert out["logits"].shape == (L, 3)
        assert out["attention"].shape == (L, example.features.num_frames)
        posteriors = torch.softmax(out["logits"], dim=-1)
        np.testing.assert_allclose(posteriors.sum(dim=-1).detach().numpy(), 1.0, atol=1e-9)
        np.testing.assert_allclose(out["attention"].sum(dim=-1).detach().numpy(), 1.0, atol=1e-9)

    def test_no_context_zeroes_cd_branch(self, rng):
        model = ScorerModel(toy_config(use_context=False))
        example = toy_example(rng)
        out = model(
            model.text_encoder.encode_ids(example.tokens),
            torch.tensor(example.features.frames),
            torch.tensor(example.profiles.vectors),
        )
        assert torch.all(out["cd"] == 0)

    def test_unknown_tokens_map_to_unk_and_separators_to_sc(self):
        model = ScorerModel(toy_config())
        ids = model.text_encoder.encode_ids((Token("越"), SC_TOKEN, Token(VOCAB[0])))
        assert ids[0].item() == 0
        assert ids[1].item() == 1
        assert ids[2].item() >= 2

    def test_predict_excludes_separators(self, rng):
        model = ScorerModel(toy_config())
        example = toy_example(rng)
        prediction = predict(model, SotStream(example.tokens), example.features, example.profiles)
        assert len(prediction.speakers) == 5
        assert prediction.token_positions == (0, 1, 3, 4, 5)
        np.testing.assert_allclose(prediction.posteriors.sum(axis=1), 1.0, atol=1e-9)
        with pytest.raises(ValueError):
            predict(model, SotStream((SC_TOKEN,)), example.features, example.profiles)

    def test_predict_is_equivariant_under_profile_reordering(self, rng):
        model = ScorerModel(toy_config())
        example = toy_example(rng)
        forward = predict(model, SotStream(example.tokens), example.features, example.profiles)
        perm = [2, 0, 1]
        shuffled = SpeakerProfiles(
            tuple(example.profiles.speakers[i] for i in perm),
            example.profiles.vectors[perm],
        )
        backward = predict(model, SotStream(example.tokens), example.features, shuffled)
        assert forward.speakers == backward.speakers
        np.testing.assert_allclose(
            forward.posteriors, backward.posteriors[:, np.argsort(perm)], atol=1e-12
        )

    def test_save_load_round_trip(self, rng, tmp_path):
        model = ScorerModel(toy_config(seed=3))
        path = tmp_path / "scorer.pt"
        save_model(model, path)
        clone = load_model(path)
        assert models_equal(model, clone)
        example = toy_example(rng)
        a = predict(model, SotStream(example.tokens), example.features, example.profiles)
        b = predict(clone, SotStream(example.tokens), example.features, example.profiles)
        assert a.speakers == b.speakers
        np.testing.assert_array_equal(a.posteriors, b.posteriors)


class TestLabeling:
    def build(self):
        utts = (
            utt("a", "甲乙", 0.0),
            utt("b", "丙丁", 1.0),
        )
        return utts

    def test_exact_hypothesis_inherits_speakers(self):
        utts = self.build()
        stream = serialize(utts, "utterance")
        assert label_tokens(stream, utts) == ["a", "a", "b", "b"]

    def test_substituted_token_keeps_aligned_speaker(self):
        utts = self.build()
        tokens = (Token("甲"), Token("戊"), SC_TOKEN, Token("丙"), Token("丁"))
        assert label_tokens(SotStream(tokens), utts) == ["a", "a", "b", "b"]

    def test_inserted_token_inherits_preceding_label(self):
        utts = self.build()
        tokens = (Token("甲"), Token("乙"), Token("己"), SC_TOKEN, Token("丙"), Token("丁"))
        assert label_tokens(SotStream(tokens), utts) == ["a", "a", "a", "b", "b"]

    def test_leading_insertion_takes_following_label(self):
        utts = self.build()
        tokens = (Token("庚"), Token("辛"), Token("丙"), Token("丁"))
        labels = label_tokens(SotStream(tokens), utts)
        assert len(labels) == 4
        assert labels[2:] == ["b", "b"]
        assert labels[0] in ("a", "b")

    def test_empty_reference_raises(self):
        with pytest.raises(ValueError):
            label_tokens(SotStream((Token("甲"),)), ())


class TestTraining:
    def test_example_loss_is_masked_cross_entropy(self, rng):
        model = ScorerModel(toy_config())
        example = toy_example(rng)
        got = example_loss(model, example)
        out = model(
            model.text_encoder.encode_ids(example.tokens),
            torch.tensor(example.features.frames),
            torch.tensor(example.profiles.vectors),
        )
        keep = [i for i, t in enumerate(example.tokens) if not t.is_separator]
        logp = torch.log_softmax(out["logits"][keep], dim=-1)
        want = -logp[range(len(keep)), list(example.labels)].mean()
        assert got.item() == pytest.approx(want.item(), abs=1e-12)

    def test_label_count_validation(self, rng):
        example = toy_example(rng)
        with pytest.raises(ValueError):
            TrainExample(example.tokens, example.features, example.profiles, (0,))
        with pytest.raises(ValueError):
            TrainExample(example.tokens, example.features, example.profiles, (9,) * 5)

    def test_train_reduces_loss_and_is_deterministic(self, rng):
        examples = [toy_example(rng) for _ in range(4)]
        opt = OptimizerConfig(lr=0.05, epochs=8)
        a = train(toy_config(), examples, opt, seed=7)
        b = train(toy_config(), examples, opt, seed=7)
        assert a.losses == b.losses
        assert a.epoch_losses[-1] < a.epoch_losses[0]
        assert len(a.losses) == len(examples) * opt.epochs

    def test_train_rejects_empty_dataset(self):
        with pytest.raises(ValueError):
            train(toy_config(), [])


def test_grad_check_small_model(rng):
    model = ScorerModel(toy_config(d_model=6, text_heads=2, post_hidden=4))
    example = toy_example(rng)
    assert grad_check(model, example, epsilon=1e-4, min_coords=150, seed=0) < 1e-3

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scaffolding.encoders import (
    PAD,
    UNK,
    LstmLayer,
    Vocabulary,
    embedding_table,
    encode_batch,
    encode_question,
    encode_sentence,
    lstm_stack_forward,
    pad_ids,
    tokenize,
    travel_tokens,
)
from scaffolding.memory import (
    AttentionParams,
    EpisodeMemory,
    GateParams,
    gate,
    memory_update,
    reset,
    soft_attention,
)
from scaffolding.numerics import ContractError, Parameter, ShapeError, Tensor, grad_check, mul, total


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


class TestTokenize:
    def test_multiword_attractions_become_one_token(self):
        assert tokenize("The Coffee Shop is on my east.") == ["the", "coffee-shop", "is", "on", "my", "east"]

    def test_travel_tokens_drop_function_words_but_keep_relations(self):
        assert travel_tokens("the park is on the north of the museum") == ["park", "on", "north", "of", "museum"]

    def test_dialog_tokens_keep_underscored_entities(self):
        assert tokenize("api_call italian paris six cheap") == ["api_call", "italian", "paris", "six", "cheap"]


class TestVocabulary:
    def test_reserved_ids(self):
        v = Vocabulary(["park"])
        assert v.index("<pad>") == PAD and v.index("<unk>") == UNK
        assert v.index("park") == 2
        assert v.index("nowhere") == UNK

    def test_frozen_vocabulary_refuses_new_tokens(self):
        v = Vocabulary(["a"]).freeze()
        assert v.add("a") == 2
        with pytest.raises(ContractError):
            v.add("b")

    def test_save_load_roundtrip(self, tmp_path):
        v = Vocabulary(["museum", "north", "coffee-shop"])
        v.save(tmp_path / "vocab.txt")
        w = Vocabulary.load(tmp_path / "vocab.txt")
        assert w.tokens() == v.tokens()
        assert w.frozen

    @given(st.lists(st.sampled_from(["a", "b", "c", "d"]), max_size=12))
    def test_encode_decode_roundtrip(self, words):
        v = Vocabulary("abcd")
        assert v.decode(v.encode(words)) == words


class TestPadding:
    def test_pad_ids(self):
        ids, mask = pad_ids([[5, 6, 7], [8]])
        np.testing.assert_array_equal(ids, [[5, 6, 7], [8, PAD, PAD]])
        np.testing.assert_array_equal(mask, [[1, 1, 1], [1, 0, 0]])

    def test_batch_equals_single_encoding(self):
        rng = np.random.default_rng(0)
        table = embedding_table(rng, 12, 4)
        layer = LstmLayer.create(rng, 4, 4, "enc")
        seqs = [[3, 4, 5, 6], [7, 2], [9]]
        _, _, last = encode_batch(seqs, table, layer)
        for row, s in enumerate(seqs):
            single = encode_sentence(s, table, layer)
            np.testing.assert_allclose(last.data[row], single.h_last.data, atol=1e-14)
            np.testing.assert_allclose(single.H.data[-1], single.h_last.data)

    def test_empty_inputs_are_contract_errors(self):
        rng = np.random.default_rng(0)
        table = embedding_table(rng, 5, 3)
        layer = LstmLayer.create(rng, 3, 3, "enc")
        with pytest.raises(ContractError):
            encode_sentence([], table, layer)
        with pytest.raises(ContractError):
            encode_question([], table, layer)

    def test_stack_width_mismatch(self):
        rng = np.random.default_rng(0)
        layers = [LstmLayer.create(rng, 3, 4, "l1"), LstmLayer.create(rng, 3, 3, "l2")]
        with pytest.raises(ShapeError):
            lstm_stack_forward(Tensor(np.zeros((2, 3))), layers)

    def test_initial_hidden_only_enters_first_layer(self):
        rng = np.random.default_rng(3)
        layers = [LstmLayer.create(rng, 3, 3, f"l{k}") for k in range(2)]
        x = Tensor(rng.normal(size=(4, 3)))
        h0 = Tensor(rng.normal(size=3))
        _, with_h0 = lstm_stack_forward(x, layers, initial_hidden=h0)
        first = layers[0](Tensor(x.data[None]), np.ones((1, 4)), Tensor(h0.data[None]))
        expected = layers[1](first, np.ones((1, 4))).data[0, -1]
        np.testing.assert_allclose(with_h0.data, expected)


class TestSoftAttention:
    def setup_method(self):
        rng = np.random.default_rng(0)
        self.d = 3
        self.params = AttentionParams.create(rng, self.d)
        self.H = rng.normal(size=(4, self.d))
        self.M = rng.normal(size=self.d)

    def test_columns_match_scalar_formula(self):
        rec = soft_attention(Tensor(self.H), Tensor(self.M), self.params, n_max=6)
        wx, wh = self.params.w_x.data, self.params.w_h.data
        for i in range(4):
            col = _sigmoid(self.H[i] @ wx + self.M @ wh)
            np.testing.assert_allclose(rec.columns.data[i], col)
            np.testing.assert_allclose(rec.m_matrix[:, i], col)

    def test_flattening_pads_with_zeros(self):
        rec = soft_attention(Tensor(self.H), Tensor(self.M), self.params, n_max=6)
        assert rec.m_flat.shape == (6 * self.d,)
        np.testing.assert_allclose(rec.m_flat.data[: 4 * self.d], rec.columns.data.ravel())
        assert np.all(rec.m_flat.data[4 * self.d :] == 0)

    def test_flattening_truncates_long_sentences(self):
        rec = soft_attention(Tensor(self.H), Tensor(self.M), self.params, n_max=2)
        np.testing.assert_allclose(rec.m_flat.data, rec.columns.data[:2].ravel())

    def test_attention_is_strictly_between_zero_and_one(self):
        rec = soft_attention(Tensor(self.H * 50), Tensor(self.M), self.params, n_max=4)
        assert np.all(rec.columns.data >= 0) and np.all(rec.columns.data <= 1)

    def test_m_bar_ignores_padding(self):
        H = np.concatenate([self.H, np.zeros((2, self.d))])[None]
        mask = np.array([[1, 1, 1, 1, 0, 0]])
        rec = soft_attention(Tensor(H), Tensor(self.M[None]), self.params, n_max=6, mask=mask)
        single = soft_attention(Tensor(self.H), Tensor(self.M), self.params, n_max=6)
        np.testing.assert_allclose(rec.m_bar[0], single.m_bar)
        np.testing.assert_allclose(rec.m_bar[0], single.columns.data.mean(axis=0))
        np.testing.assert_allclose(single.m_sum(), single.columns.data.sum(axis=0))

    def test_gradient(self):
        H = Parameter(self.H.copy(), "H")
        M = Parameter(self.M.copy(), "M")
        weights = np.random.default_rng(1).normal(size=6 * self.d)

        def closure():
            return total(mul(soft_attention(H, M, self.params, 6).m_flat, weights))

        assert grad_check(closure, [H, M, *self.params.parameters()]).passed


class TestGatedMemory:
    def test_update_matches_formula(self):
        rng = np.random.default_rng(2)
        params = GateParams.create(rng, 4)
        h = rng.normal(size=4)
        M = rng.normal(size=4)
        g, mem = memory_update(Tensor(h), EpisodeMemory(Tensor(M), 3), params)
        g_ref = np.tanh(h @ params.w_c.data + M @ params.w_p.data)
        np.testing.assert_allclose(g.data, g_ref)
        np.testing.assert_allclose(mem.M.data, h + g_ref * M)
        assert mem.t == 4

    def test_first_update_from_empty_memory_is_the_sentence(self):
        rng = np.random.default_rng(3)
        params = GateParams.create(rng, 5)
        h = rng.normal(size=5)
        _, mem = memory_update(Tensor(h), EpisodeMemory.empty(5), params)
        np.testing.assert_array_equal(mem.M.data, h)

    def test_reset(self):
        mem = reset(EpisodeMemory(Tensor(np.ones(3)), 7))
        assert mem.t == 0 and not mem.M.data.any()

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_gate_in_open_interval(self, seed):
        rng = np.random.default_rng(seed)
        params = GateParams.create(rng, 3)
        g = gate(Tensor(rng.normal(size=3) * 10), Tensor(rng.normal(size=3) * 10), params).data
        assert np.all(np.abs(g) <= 1.0)

    def test_gradient(self):
        rng = np.random.default_rng(4)
        params = GateParams.create(rng, 3)
        h = Parameter(rng.normal(size=3), "h")
        M = Parameter(rng.normal(size=3), "M")

        def closure():
            _, mem = memory_update(h, EpisodeMemory(M), params)
            return total(mul(mem.M, mem.M))

        assert grad_check(closure, [h, M, *params.parameters()]).passed

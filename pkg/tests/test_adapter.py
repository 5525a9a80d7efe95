"""Tests for the reprogramming adapter."""

import pytest
import torch

from trajreason.errors import ConfigError
from trajreason.models.batch import DTYPE
from trajreason.models.reprogramming_adapter import ReprogrammingAdapter, build_prototypes, reprogram


def _vocab(v=12, d=8, seed=0):
    return torch.randn(v, d, generator=torch.Generator().manual_seed(seed), dtype=DTYPE)


@pytest.fixture
def adapter():
    torch.manual_seed(0)
    return ReprogrammingAdapter(d_scene=6, d_llm=8, vocab_size=12, prototypes=5)


class TestPrototypes:
    """Tests for prototype construction."""

    def test_one_hot_rows_copy_vocabulary(self, adapter):
        """Test that one-hot combination rows select vocabulary embeddings."""
        vocab = _vocab()
        picks = [3, 0, 11, 7, 7]
        with torch.no_grad():
            adapter.mapping.weight.zero_()
            for row, col in enumerate(picks):
                adapter.mapping.weight[row, col] = 1.0

        bank = build_prototypes(vocab, adapter)

        assert torch.equal(bank, vocab[picks])

    def test_uniform_row_is_vocabulary_mean(self, adapter):
        """Test that a uniform row averages the vocabulary."""
        vocab = _vocab()
        with torch.no_grad():
            adapter.mapping.weight.fill_(1.0 / 12)

        bank = adapter.build_prototypes(vocab)

        torch.testing.assert_close(bank[0], vocab.mean(dim=0), rtol=1e-12, atol=1e-12)

    def test_bank_shape(self):
        """Test the bank shape for P = 10, V = 128."""
        adapter = ReprogrammingAdapter(d_scene=4, d_llm=16, vocab_size=128, prototypes=10)

        assert adapter.build_prototypes(_vocab(128, 16)).shape == (10, 16)

    def test_vocabulary_is_read_only(self, adapter):
        """Test that building prototypes leaves the vocabulary untouched."""
        vocab = _vocab()
        before = vocab.clone()

        adapter(torch.randn(2, 3, 6, dtype=DTYPE), vocab).sum().backward()

        assert torch.equal(vocab, before)
        assert vocab.grad is None

    @pytest.mark.parametrize("shape", [(11, 8), (12, 7)])
    def test_shape_mismatch(self, adapter, shape):
        """Test that a vocabulary of the wrong size is rejected."""
        with pytest.raises(ConfigError, match="does not match adapter"):
            adapter.build_prototypes(torch.zeros(*shape, dtype=DTYPE))

    def test_rejects_zero_prototypes(self):
        """Test that at least one prototype is required."""
        with pytest.raises(ConfigError):
            ReprogrammingAdapter(4, 8, 12, prototypes=0)


class TestReprogram:
    """Tests for prototype cross-attention."""

    def test_output_shape(self, adapter):
        """Test that features map to backbone-width tokens per timestep."""
        tokens = adapter(torch.randn(3, 4, 6, dtype=DTYPE), _vocab())

        assert tokens.shape == (3, 4, 8)

    def test_weights_sum_to_one(self, adapter):
        """Test that each query distributes weight 1 over prototypes."""
        bank = adapter.build_prototypes(_vocab())

        _, weights = adapter.reprogram(torch.randn(2, 4, 6, dtype=DTYPE), bank, return_weights=True)

        assert weights.shape == (2, 4, 5)
        torch.testing.assert_close(weights.sum(dim=-1), torch.ones(2, 4, dtype=DTYPE), rtol=0, atol=1e-9)

    def test_single_prototype_is_constant(self):
        """Test that with P = 1 every output token is the same vector."""
        torch.manual_seed(1)
        adapter = ReprogrammingAdapter(d_scene=6, d_llm=8, vocab_size=12, prototypes=1)

        tokens = adapter(torch.randn(1, 5, 6, dtype=DTYPE), _vocab())

        torch.testing.assert_close(tokens[0], tokens[0, :1].expand(5, 8), rtol=0, atol=1e-12)

    def test_distinct_inputs_distinct_tokens(self, adapter):
        """Test that different features give different tokens."""
        bank = adapter.build_prototypes(_vocab())
        features = torch.randn(2, 6, dtype=DTYPE)

        tokens = reprogram(features, bank, adapter)

        assert not torch.allclose(tokens[0], tokens[1])

    def test_timesteps_are_independent(self, adapter):
        """Test that changing one timestep only changes its own token."""
        bank = adapter.build_prototypes(_vocab())
        features = torch.randn(4, 6, dtype=DTYPE)
        changed = features.clone()
        changed[2] += 1.0

        a, b = adapter.reprogram(features, bank), adapter.reprogram(changed, bank)

        torch.testing.assert_close(a[[0, 1, 3]], b[[0, 1, 3]], rtol=0, atol=1e-15)
        assert not torch.allclose(a[2], b[2])

    def test_feature_width_checked(self, adapter):
        """Test that features of the wrong width raise ConfigError."""
        with pytest.raises(ConfigError):
            adapter.reprogram(torch.zeros(2, 5, dtype=DTYPE), adapter.build_prototypes(_vocab()))

    def test_gradients_match_finite_differences(self, param_gradcheck):
        """Test analytic gradients at d_scene=4, d_llm=8, P=3."""
        torch.manual_seed(3)
        adapter = ReprogrammingAdapter(d_scene=4, d_llm=8, vocab_size=6, prototypes=3)
        vocab = _vocab(6, 8, seed=2)
        features = torch.randn(2, 4, dtype=DTYPE, generator=torch.Generator().manual_seed(7))

        assert param_gradcheck(adapter, lambda module: module(features, vocab))

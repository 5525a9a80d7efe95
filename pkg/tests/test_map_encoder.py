"""Tests for the map encoder."""

import pytest
import torch

from trajreason.errors import ConfigError
from trajreason.models.batch import DTYPE
from trajreason.models.map_encoder import MapEncoder, encode_map
from trajreason.scenes.synthetic import generate_synthetic_scene


@pytest.fixture
def encoder():
    torch.manual_seed(0)
    return MapEncoder(d_map=8, raster_size=16, widths=(4, 4, 8))


def _random_raster(batch=2, size=16, seed=0):
    generator = torch.Generator().manual_seed(seed)
    return (torch.rand(batch, 3, size, size, generator=generator) > 0.5).to(DTYPE)


class TestMapEncoder:
    """Tests for MapEncoder."""

    def test_default_grid_is_13_by_13(self):
        """Test the default stride schedule on a 100x100 raster."""
        encoder = MapEncoder()
        feature = encoder(torch.zeros(1, 3, 100, 100, dtype=DTYPE))

        assert encoder.grid_shape == (13, 13)
        assert feature.grid_tokens.shape == (1, 169, 64)
        assert feature.grid_size == 169

    def test_pooled_is_token_mean(self, encoder):
        """Test that the pooled vector is the mean of the grid tokens."""
        feature = encoder(_random_raster())

        torch.testing.assert_close(feature.pooled, feature.grid_tokens.mean(dim=1), rtol=0, atol=1e-6)

    def test_zero_raster_gives_constant_tokens(self, encoder):
        """Test that an all-zero raster produces one repeated token."""
        feature = encoder(torch.zeros(1, 3, 16, 16, dtype=DTYPE))

        tokens = feature.grid_tokens[0]
        torch.testing.assert_close(tokens, tokens[:1].expand_as(tokens), rtol=0, atol=1e-12)
        torch.testing.assert_close(feature.pooled[0], tokens[0], rtol=0, atol=1e-12)

    def test_deterministic(self, encoder):
        """Test that the same raster gives bit-identical features."""
        raster = _random_raster()

        a, b = encoder(raster), encoder(raster)

        assert torch.equal(a.grid_tokens, b.grid_tokens)
        assert torch.equal(a.pooled, b.pooled)

    def test_complement_differs(self, encoder):
        """Test that a raster and its complement encode differently."""
        raster = _random_raster(batch=1)

        assert not torch.allclose(encoder(raster).pooled, encoder(1 - raster).pooled)

    @pytest.mark.parametrize("shape", [(1, 3, 12, 16), (1, 2, 16, 16), (3, 16, 16)])
    def test_shape_mismatch(self, encoder, shape):
        """Test that a wrong raster shape names expected and actual dims."""
        with pytest.raises(ConfigError, match=r"\(3, 16, 16\)"):
            encoder(torch.zeros(*shape, dtype=DTYPE))

    def test_requires_a_stage(self):
        """Test that an empty stage list is rejected."""
        with pytest.raises(ConfigError):
            MapEncoder(widths=())

    def test_encode_map_drops_batch_axis(self):
        """Test encoding a scene raster directly."""
        scene = generate_synthetic_scene("intersection", 2)
        encoder = MapEncoder(d_map=16)

        feature = encode_map(scene.map_raster, encoder)

        assert feature.pooled.shape == (16,)
        assert feature.grid_tokens.shape == (169, 16)

    def test_gradients_match_finite_differences(self, param_gradcheck):
        """Test analytic gradients on a tiny 8x8 raster with two channels per stage."""
        torch.manual_seed(2)
        encoder = MapEncoder(d_map=4, raster_size=8, widths=(2, 2, 2))
        raster = _random_raster(batch=1, size=8, seed=5)

        def outputs(module):
            feature = module(raster)
            return feature.grid_tokens, feature.pooled

        assert param_gradcheck(encoder, outputs)

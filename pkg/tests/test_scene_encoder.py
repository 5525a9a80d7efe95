"""Tests for the scene encoder."""

import math

import numpy as np
import pytest
import torch

from trajreason.models.batch import DTYPE, collate_scenes
from trajreason.models.scene_encoder import (
    SceneEncoder,
    encode_scene,
    masked_softmax,
    vectorize,
    vectorize_tensors,
)
from trajreason.scenes.normalize import normalize_scene, transform_scene


def _t(values):
    return torch.tensor(values, dtype=DTYPE)


@pytest.fixture
def encoder():
    torch.manual_seed(0)
    return SceneEncoder(d_scene=8)


def _random_inputs(batch=2, neighbors=3, length=5, seed=1):
    generator = torch.Generator().manual_seed(seed)
    ego = torch.randn(batch, length, 2, generator=generator, dtype=DTYPE)
    nbr = torch.randn(batch, neighbors, length, 2, generator=generator, dtype=DTYPE)
    present = torch.ones(batch, neighbors, length, dtype=torch.bool)
    return ego, nbr, present


class TestVectorize:
    """Tests for state vectorization."""

    def test_stationary_ego_is_zero(self):
        """Test that a stationary ego has all-zero states."""
        ego = torch.zeros(1, 5, 2, dtype=DTYPE)
        ego_states, _, _ = vectorize_tensors(ego, torch.zeros(1, 0, 5, 2, dtype=DTYPE), torch.zeros(1, 0, 5, dtype=torch.bool))

        assert torch.all(ego_states == 0)
        assert ego_states.shape == (1, 4, 4)

    def test_hand_evaluated_neighbor_state(self):
        """Test displacement and ego-relative offset of one neighbor step."""
        ego = _t([[[0.0, 0.0], [1.0, 0.0]]])
        nbr = _t([[[[2.0, 4.0], [3.0, 4.0]]]])
        present = torch.ones(1, 1, 2, dtype=torch.bool)

        _, nbr_states, valid = vectorize_tensors(ego, nbr, present)

        assert nbr_states[0, 0, 0].tolist() == [1.0, 0.0, 2.0, 4.0]
        assert valid.all()

    def test_absent_predecessor_masks_step(self):
        """Test that a neighbor absent at t-1 is masked at t."""
        ego = torch.zeros(1, 3, 2, dtype=DTYPE)
        nbr = torch.ones(1, 1, 3, 2, dtype=DTYPE)
        present = torch.tensor([[[False, True, True]]])

        _, nbr_states, valid = vectorize_tensors(ego, nbr, present)

        assert valid[0, 0].tolist() == [False, True]
        assert torch.all(nbr_states[0, 0, 0] == 0)

    def test_vectorize_scene_puts_ego_first(self, tiny_scenes):
        """Test the per-scene view stacks the ego before its neighbors."""
        scene = normalize_scene(tiny_scenes[0])

        states = vectorize(scene)

        assert states.states.shape == (1 + len(scene.neighbors), 4, 4)
        assert states.mask[0].all()


class TestMaskedSoftmax:
    """Tests for the masked softmax."""

    def test_rows_without_entries_are_zero(self):
        """Test that a fully masked row gets zero weights."""
        weights = masked_softmax(_t([[1.0, 2.0], [3.0, 4.0]]), torch.tensor([[True, False], [False, False]]))

        assert weights[0].tolist() == [1.0, 0.0]
        assert weights[1].tolist() == [0.0, 0.0]


class TestInteractions:
    """Tests for ego-to-neighbor cross-attention."""

    def test_single_neighbor_returns_its_value(self, encoder):
        """Test that one neighbor receives the full attention weight."""
        ego, nbr, present = _random_inputs(neighbors=1)
        ego_states, nbr_states, valid = vectorize_tensors(ego, nbr, present)

        h_prime = encoder.encode_interactions(ego_states, nbr_states, valid)

        expected = encoder.w_v(encoder.phi(nbr_states))[:, 0]
        torch.testing.assert_close(h_prime, expected, rtol=1e-12, atol=1e-12)

    def test_identical_neighbors_average_to_one_value(self, encoder):
        """Test that two identical neighbors give the same value vector."""
        ego, nbr, present = _random_inputs(neighbors=1)
        twins = torch.cat([nbr, nbr], dim=1)
        ego_states, nbr_states, valid = vectorize_tensors(ego, twins, present.repeat(1, 2, 1))

        h_prime = encoder.encode_interactions(ego_states, nbr_states, valid)

        expected = encoder.w_v(encoder.phi(nbr_states))[:, 0]
        torch.testing.assert_close(h_prime, expected, rtol=1e-12, atol=1e-12)

    def test_no_neighbors_gives_zero(self, encoder):
        """Test the zero-vector convention for an empty neighbor set."""
        ego, nbr, present = _random_inputs(neighbors=0)
        ego_states, nbr_states, valid = vectorize_tensors(ego, nbr, present)

        h_prime = encoder.encode_interactions(ego_states, nbr_states, valid)

        assert h_prime.shape == (2, 4, 8)
        assert torch.all(h_prime == 0)

    def test_all_masked_neighbors_give_zero(self, encoder):
        """Test that masked neighbors contribute nothing."""
        ego, nbr, _ = _random_inputs(neighbors=2)
        present = torch.zeros(2, 2, 5, dtype=torch.bool)

        h_prime = encoder.encode_interactions(*vectorize_tensors(ego, nbr, present))

        assert torch.all(h_prime == 0)

    def test_weights_sum_to_one(self, encoder):
        """Test that attention weights over valid neighbors sum to 1."""
        ego, nbr, present = _random_inputs(neighbors=4)
        present[:, 1, 2] = False

        _, weights = encoder.encode_interactions(*vectorize_tensors(ego, nbr, present), return_weights=True)

        torch.testing.assert_close(weights.sum(dim=-1), torch.ones(2, 4, dtype=DTYPE), rtol=0, atol=1e-9)
        assert torch.all(weights[:, 1:3, 1] == 0)


class TestGate:
    """Tests for the gated fusion."""

    def test_alpha_zero(self):
        """Test the gate at alpha = 0."""
        h_prime, h_ego = _t([1.0, 2.0]), _t([3.0, -1.0])

        fused = SceneEncoder.fuse_gate(h_prime, h_ego, torch.zeros(2, dtype=DTYPE))

        sig1 = 1.0 / (1.0 + math.exp(-1.0))
        torch.testing.assert_close(fused, 0.5 * h_prime + sig1 * h_ego, rtol=1e-15, atol=1e-15)

    @pytest.mark.parametrize("alpha,expect_prime", [(40.0, True), (-40.0, False)])
    def test_saturation(self, alpha, expect_prime):
        """Test that a saturated gate selects one input."""
        h_prime, h_ego = _t([1.0, 2.0, -3.0]), _t([0.5, -7.0, 4.0])

        fused = SceneEncoder.fuse_gate(h_prime, h_ego, torch.full((3,), alpha, dtype=DTYPE))

        expected = h_prime if expect_prime else h_ego
        torch.testing.assert_close(fused, expected, rtol=1e-12, atol=0)


class TestSceneEncoder:
    """Tests for the full encoder."""

    def test_neighbor_permutation_invariance(self, encoder):
        """Test that reordering neighbors leaves the output unchanged."""
        ego, nbr, present = _random_inputs(neighbors=4)
        present[0, 2, :2] = False
        order = torch.tensor([3, 1, 0, 2])

        a = encoder(ego, nbr, present)
        b = encoder(ego, nbr[:, order], present[:, order])

        torch.testing.assert_close(a, b, rtol=0, atol=1e-9)

    def test_ego_only_scene(self, encoder):
        """Test that an ego-only scene reduces to the gated ego embedding."""
        ego, nbr, present = _random_inputs(neighbors=0)

        out = encoder(ego, nbr, present)

        ego_states, _, _ = vectorize_tensors(ego, nbr, present)
        expected = torch.sigmoid(1.0 - encoder.alpha) * encoder.phi(ego_states)
        torch.testing.assert_close(out, expected, rtol=1e-12, atol=1e-12)

    def test_rigid_transform_invariance(self, encoder, tiny_scenes):
        """Test that encoding normalized scenes ignores the world pose."""
        scene = tiny_scenes[2]
        moved = transform_scene(scene, -2.1, (300.0, -120.0))

        a = encode_scene(normalize_scene(scene), encoder)
        b = encode_scene(normalize_scene(moved), encoder)

        np.testing.assert_allclose(a, b, atol=1e-5)

    def test_use_neighbors_false_drops_neighbors(self, encoder, tiny_scenes):
        """Test that disabling neighbors matches a scene without them."""
        scene = normalize_scene(next(s for s in tiny_scenes if s.neighbors))

        a = encode_scene(scene, encoder, use_neighbors=False)
        b = encode_scene(scene.with_neighbors(()), encoder)

        np.testing.assert_array_equal(a, b)

    def test_gradients_match_finite_differences(self, param_gradcheck):
        """Test analytic parameter gradients against central differences."""
        torch.manual_seed(4)
        encoder = SceneEncoder(d_scene=4)
        with torch.no_grad():
            encoder.alpha.copy_(torch.randn(4, dtype=DTYPE))
        ego, nbr, present = _random_inputs(batch=1, neighbors=2, length=3, seed=9)
        present[0, 1, 0] = False

        assert param_gradcheck(encoder, lambda module: module(ego, nbr, present))

    def test_gradients_reach_every_group(self, encoder):
        """Test that a scalar loss gives every parameter a gradient."""
        ego, nbr, present = _random_inputs()

        encoder(ego, nbr, present).pow(2).sum().backward()

        for name, param in encoder.named_parameters():
            assert param.grad is not None, name
            assert torch.any(param.grad != 0), name


class TestCollate:
    """Tests for scene batching."""

    def test_pads_neighbors_and_normalizes(self, tiny_scenes):
        """Test padding to the widest neighbor list."""
        batch = collate_scenes(tiny_scenes[:4])
        widest = max(len(s.neighbors) for s in tiny_scenes[:4])

        assert batch.neighbor_history.shape == (4, widest, 5, 2)
        assert torch.all(batch.ego_history[:, -1] == 0)
        assert batch.raster.shape == (4, 3, 8, 8)
        assert batch.future.shape == (4, 12, 2)

    def test_missing_map_is_a_modality_error(self, tiny_scenes):
        """Test that map-enabled collation names scenes without rasters."""
        from trajreason.errors import ModalityError

        scenes = [tiny_scenes[0].without_map(), tiny_scenes[1]]

        with pytest.raises(ModalityError, match=tiny_scenes[0].id):
            collate_scenes(scenes)

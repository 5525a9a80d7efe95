"""Shared fixtures: tiny configurations, synthetic scenes and gradient checking."""

import os
from dataclasses import replace

import pytest
import torch
from torch.autograd import gradcheck
from torch.func import functional_call

import trajreason.telemetry.telemetry as telemetry_module
from trajreason.harness.config import (
    BackboneConfig,
    DataConfig,
    EvaluationConfig,
    ModalityConfig,
    ModelConfig,
    OptimizerConfig,
    TrainConfig,
)
from trajreason.models.backbone import ToyBackbone
from trajreason.scenes.synthetic import GeneratorConfig, generate_dataset
from trajreason.scenes.types import RasterConfig

TINY_RASTER = RasterConfig(extent=8.0, resolution=1.0)


def pytest_collection_modifyitems(config, items):
    if os.environ.get("TRAJREASON_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set TRAJREASON_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def reset_telemetry():
    """Each test starts without a configured telemetry instance."""
    telemetry_module._telemetry = None
    yield
    telemetry_module._telemetry = None


@pytest.fixture
def tiny_config() -> TrainConfig:
    """A configuration small enough to train in well under a second."""
    return TrainConfig(
        data=DataConfig(raster=TINY_RASTER, synthetic_count=20, fractions=(0.6, 0.2, 0.2)),
        modality=ModalityConfig(prompt_text="go"),
        model=ModelConfig(d_scene=8, d_map=8, map_widths=(4, 4), prototypes=4, fusion_heads=2),
        backbone=BackboneConfig(d_llm=16, vocab_size=64, layers=1, n_heads=2, max_sequence_length=64),
        optimizer=OptimizerConfig(steps=5, batch_size=4),
        evaluation=EvaluationConfig(warmup=0),
        run_name="unit",
    ).validate()


@pytest.fixture
def tiny_backbone(tiny_config) -> ToyBackbone:
    b = tiny_config.backbone
    return ToyBackbone(b.seed, b.d_llm, b.vocab_size, b.layers, b.n_heads, b.max_sequence_length)


@pytest.fixture(scope="session")
def tiny_scenes():
    """Twenty world-frame synthetic scenes of every kind on an 8x8 raster."""
    return generate_dataset(20, seed=3, params=GeneratorConfig(raster=TINY_RASTER))


@pytest.fixture
def with_steps():
    def apply(config: TrainConfig, steps: int, **optimizer) -> TrainConfig:
        return replace(config, optimizer=replace(config.optimizer, steps=steps, **optimizer))

    return apply


@pytest.fixture
def param_gradcheck():
    """
    Compare analytic gradients of every parameter of ``module`` with central
    finite differences. ``call`` receives a function behaving like the module
    and returns the tensor(s) to differentiate.
    """

    def check(module: torch.nn.Module, call, eps: float = 1e-6) -> bool:
        names = [name for name, p in module.named_parameters() if p.requires_grad]
        values = tuple(
            p.detach().clone().requires_grad_(True) for _, p in module.named_parameters() if p.requires_grad
        )

        def run(*params):
            bound = dict(zip(names, params))
            return call(lambda *args, **kwargs: functional_call(module, bound, args, kwargs))

        return gradcheck(run, values, eps=eps, atol=1e-6, rtol=1e-3)

    return check

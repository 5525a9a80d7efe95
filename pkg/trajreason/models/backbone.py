"""
Frozen transformer backbones.

Every backbone exposes the same surface: a read-only vocabulary embedding
table, prompt tokenization and embedding, and a causal forward pass over
already-embedded sequences returning the final hidden states. Parameters
never receive gradients; gradients still flow through to the inputs.
"""

import hashlib
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
import torch
import torch.nn as nn

from trajreason.errors import ConfigError
from trajreason.models.batch import DTYPE

logger = logging.getLogger("trajreason.models.backbone")

TOY_IDENTITY = "toy-v1"

# Short names for the external pretrained backbones the harness compares.
BACKBONE_ALIASES: Dict[str, str] = {
    "llama2": "meta-llama/Llama-2-7b-hf",
    "llama3": "meta-llama/Meta-Llama-3-8B",
    "qwen2.5": "Qwen/Qwen2.5-7B",
    "mistral": "mistralai/Mistral-7B-v0.1",
    "vicuna": "lmsys/vicuna-7b-v1.5",
    "wizardlm": "WizardLMTeam/WizardLM-13B-V1.2",
}


@dataclass(frozen=True)
class BackboneSpec:
    d_llm: int
    vocab_size: int
    layers: int
    n_heads: int
    max_sequence_length: int
    identity: str

    def __post_init__(self):
        for name in ("d_llm", "vocab_size", "layers", "n_heads", "max_sequence_length"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"backbone {name} must be positive, got {getattr(self, name)}")
        if self.d_llm % self.n_heads:
            raise ConfigError(f"d_llm={self.d_llm} is not divisible by n_heads={self.n_heads}")

    def to_dict(self) -> Dict[str, object]:
        return {
            "d_llm": self.d_llm,
            "vocab_size": self.vocab_size,
            "layers": self.layers,
            "n_heads": self.n_heads,
            "max_sequence_length": self.max_sequence_length,
            "identity": self.identity,
        }


class FrozenBackbone(nn.Module, ABC):
    """Base class for all frozen backbones."""

    @property
    @abstractmethod
    def spec(self) -> BackboneSpec:
        pass

    @property
    @abstractmethod
    def vocab_embeddings(self) -> torch.Tensor:
        """(V, d_llm) float64 table; callers must not modify it."""
        pass

    @abstractmethod
    def tokenize(self, text: str) -> List[int]:
        pass

    @abstractmethod
    def embed_tokens(self, token_ids: List[int]) -> torch.Tensor:
        pass

    @abstractmethod
    def forward(self, inputs: torch.Tensor) -> torch.Tensor:
        """Hidden states (..., S, d_llm) for embedded inputs (..., S, d_llm)."""
        pass

    @property
    def seed(self) -> Optional[int]:
        return None

    def freeze(self) -> "FrozenBackbone":
        self.requires_grad_(False)
        self.eval()
        return self

    def train(self, mode: bool = True) -> "FrozenBackbone":
        # dropout-free and never trained; always stays in eval mode
        return super().train(False)

    def check_length(self, length: int) -> None:
        limit = self.spec.max_sequence_length
        if length > limit:
            raise ConfigError(f"sequence length {length} exceeds backbone limit {limit}")

    def embed_prompt(self, text: str, reserved: int = 0) -> torch.Tensor:
        """
        Embed a task prompt as (P, d_llm).

        ``reserved`` positions (the scene tokens) must still fit after it.
        """
        token_ids = self.tokenize(text) if text else []
        allowed = self.spec.max_sequence_length - reserved
        if len(token_ids) > allowed:
            raise ConfigError(f"prompt has {len(token_ids)} tokens, only {allowed} allowed")
        if not token_ids:
            return torch.zeros(0, self.spec.d_llm, dtype=DTYPE)
        with torch.no_grad():
            return self.embed_tokens(token_ids).to(DTYPE)

    def parameter_checksum(self) -> str:
        """sha256 over identity, parameter names, shapes and raw bytes in name order."""
        digest = hashlib.sha256(self.spec.identity.encode())
        for name, tensor in sorted(self.state_dict().items()):
            array = np.ascontiguousarray(tensor.detach().cpu().numpy())
            digest.update(name.encode())
            digest.update(str(tuple(array.shape)).encode())
            digest.update(str(array.dtype).encode())
            digest.update(array.tobytes())
        return digest.hexdigest()


def _sinusoidal_positions(length: int, width: int) -> torch.Tensor:
    position = torch.arange(length, dtype=DTYPE)[:, None]
    rate = torch.exp(torch.arange(0, width, 2, dtype=DTYPE) * (-math.log(10000.0) / width))
    table = torch.zeros(length, width, dtype=DTYPE)
    table[:, 0::2] = torch.sin(position * rate)
    table[:, 1::2] = torch.cos(position * rate)[:, : width // 2]
    return table


class _CausalSelfAttention(nn.Module):
    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        self.n_heads = n_heads
        self.head_dim = d_model // n_heads
        self.qkv = nn.Linear(d_model, 3 * d_model)
        self.out = nn.Linear(d_model, d_model)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        *lead, length, width = x.shape
        q, k, v = self.qkv(x).chunk(3, dim=-1)
        q, k, v = (t.reshape(*lead, length, self.n_heads, self.head_dim).transpose(-3, -2) for t in (q, k, v))
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.head_dim)
        future = torch.triu(torch.ones(length, length, dtype=torch.bool, device=x.device), diagonal=1)
        weights = torch.softmax(scores.masked_fill(future, float("-inf")), dim=-1)
        attended = (weights @ v).transpose(-3, -2).reshape(*lead, length, width)
        return self.out(attended)


class _DecoderBlock(nn.Module):
    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        self.ln_attn = nn.LayerNorm(d_model)
        self.attn = _CausalSelfAttention(d_model, n_heads)
        self.ln_mlp = nn.LayerNorm(d_model)
        self.mlp = nn.Sequential(
            nn.Linear(d_model, 4 * d_model),
            nn.GELU(),
            nn.Linear(4 * d_model, d_model),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.ln_attn(x))
        return x + self.mlp(self.ln_mlp(x))


class ToyBackbone(FrozenBackbone):
    """
    Small pre-norm causal transformer with a byte-level vocabulary.

    Weights are drawn once from ``seed`` and frozen. Two instances built
    with the same seed and dimensions are bit-identical.
    """

    def __init__(
        self,
        seed: int = 0,
        d_llm: int = 64,
        vocab_size: int = 256,
        layers: int = 2,
        n_heads: int = 4,
        max_sequence_length: int = 512,
    ):
        super().__init__()
        self._spec = BackboneSpec(d_llm, vocab_size, layers, n_heads, max_sequence_length, TOY_IDENTITY)
        self._seed = int(seed)
        self.token_embedding = nn.Embedding(vocab_size, d_llm)
        self.blocks = nn.ModuleList([_DecoderBlock(d_llm, n_heads) for _ in range(layers)])
        self.ln_final = nn.LayerNorm(d_llm)
        self.register_buffer("positions", _sinusoidal_positions(max_sequence_length, d_llm), persistent=False)
        self.to(DTYPE)
        self._initialize()
        self.freeze()
        logger.debug(f"Built {TOY_IDENTITY} backbone seed={seed} d_llm={d_llm} layers={layers}")

    def _initialize(self) -> None:
        generator = torch.Generator().manual_seed(abs(self._seed) * 2 + (self._seed < 0))
        with torch.no_grad():
            for name, param in sorted(self.named_parameters()):
                if name == "token_embedding.weight":
                    param.copy_(torch.randn(param.shape, generator=generator, dtype=DTYPE))
                elif ".ln_" in name or name.startswith("ln_"):
                    param.fill_(1.0 if name.endswith("weight") else 0.0)
                elif name.endswith("bias"):
                    param.zero_()
                else:
                    std = 1.0 / math.sqrt(param.shape[1])
                    param.copy_(torch.randn(param.shape, generator=generator, dtype=DTYPE) * std)

    @property
    def spec(self) -> BackboneSpec:
        return self._spec

    @property
    def seed(self) -> Optional[int]:
        return self._seed

    @property
    def vocab_embeddings(self) -> torch.Tensor:
        return self.token_embedding.weight

    def tokenize(self, text: str) -> List[int]:
        tokens = list(text.encode("utf-8"))
        if self._spec.vocab_size < 256:
            tokens = [t % self._spec.vocab_size for t in tokens]
        return tokens

    def embed_tokens(self, token_ids: List[int]) -> torch.Tensor:
        return self.token_embedding(torch.as_tensor(token_ids, dtype=torch.long))

    def forward(self, inputs: torch.Tensor) -> torch.Tensor:
        length = inputs.shape[-2]
        self.check_length(length)
        x = inputs + self.positions[:length]
        for block in self.blocks:
            x = block(x)
        return self.ln_final(x)


class HuggingFaceBackbone(FrozenBackbone):
    """
    A pretrained causal language model from ``transformers``.

    Weights keep their native dtype; inputs are cast to it and hidden states
    come back as float64. Requires the ``hf`` extra.
    """

    def __init__(self, model_id: str, model_path: Optional[str] = None, max_sequence_length: Optional[int] = None):
        super().__init__()
        try:
            from transformers import AutoModelForCausalLM, AutoTokenizer
        except ImportError as e:
            raise ConfigError(
                f"backbone '{model_id}' needs the transformers package: pip install trajreason[hf]"
            ) from e

        source = model_path or model_id
        logger.info(f"Loading pretrained backbone {source}")
        self.tokenizer = AutoTokenizer.from_pretrained(source)
        self.model = AutoModelForCausalLM.from_pretrained(source)
        config = self.model.config
        self._spec = BackboneSpec(
            d_llm=config.hidden_size,
            vocab_size=config.vocab_size,
            layers=config.num_hidden_layers,
            n_heads=config.num_attention_heads,
            max_sequence_length=max_sequence_length or getattr(config, "max_position_embeddings", 2048),
            identity=model_id,
        )
        self.freeze()

    @property
    def spec(self) -> BackboneSpec:
        return self._spec

    @property
    def vocab_embeddings(self) -> torch.Tensor:
        return self.model.get_input_embeddings().weight.to(DTYPE)

    def tokenize(self, text: str) -> List[int]:
        return self.tokenizer(text, add_special_tokens=False)["input_ids"]

    def embed_tokens(self, token_ids: List[int]) -> torch.Tensor:
        ids = torch.as_tensor(token_ids, dtype=torch.long)
        return self.model.get_input_embeddings()(ids).to(DTYPE)

    def forward(self, inputs: torch.Tensor) -> torch.Tensor:
        self.check_length(inputs.shape[-2])
        squeeze = inputs.dim() == 2
        batch = inputs[None] if squeeze else inputs
        native = self.model.get_input_embeddings().weight.dtype
        outputs = self.model(inputs_embeds=batch.to(native), output_hidden_states=True)
        hidden = outputs.hidden_states[-1].to(DTYPE)
        return hidden[0] if squeeze else hidden


def create_backbone(
    name: str = "toy",
    seed: int = 0,
    d_llm: int = 64,
    vocab_size: int = 256,
    layers: int = 2,
    n_heads: int = 4,
    max_sequence_length: int = 512,
    model_path: Optional[str] = None,
) -> FrozenBackbone:
    """
    Build a backbone by name.

    ``toy`` / ``toy-v1`` give the bundled toy backbone; the keys of
    :data:`BACKBONE_ALIASES` and ``hf:<model id>`` load a pretrained model.
    """
    key = name.lower()
    if key in ("toy", TOY_IDENTITY):
        return ToyBackbone(seed, d_llm, vocab_size, layers, n_heads, max_sequence_length)
    if key in BACKBONE_ALIASES:
        return HuggingFaceBackbone(BACKBONE_ALIASES[key], model_path)
    if key.startswith("hf:") and len(name) > 3:
        return HuggingFaceBackbone(name[3:], model_path)
    raise ConfigError(
        f"Unknown backbone: {name}. Use 'toy', 'hf:<model id>' or one of {sorted(BACKBONE_ALIASES)}"
    )


def embed_prompt(text: str, backbone: FrozenBackbone, reserved: int = 0) -> torch.Tensor:
    return backbone.embed_prompt(text, reserved)


def parameter_checksum(backbone: FrozenBackbone) -> str:
    return backbone.parameter_checksum()

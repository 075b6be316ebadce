"""The full encoder with knowledge infusion after a chosen layer, plus
deterministic initialization and checkpoint round-tripping.

Checkpoints are a JSON manifest (config, tensor names, shapes, codes) next
to one packed blob of row-major little-endian values: float tensors as
32-bit IEEE-754, integer tensors as 64-bit. Loading restores parameters in
the model's working precision.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn

from ..config import ModelConfig
from ..errors import CheckpointError
from ..tokenizer import MentionSpan
from .encoder import EncoderState, TransformerEncoder
from .heads import MentionPoolHead, MlmHead, SopHead
from .infusion import InfusionLayer

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


def torch_dtype(config: ModelConfig) -> torch.dtype:
    return _DTYPES[config.dtype]


class KnowledgeModel(nn.Module):
    def __init__(
        self,
        config: ModelConfig,
        entity_emb: np.ndarray | torch.Tensor,
        entity_types: np.ndarray | torch.Tensor,
    ):
        super().__init__()
        config.validate()
        self.config = config
        self.encoder = TransformerEncoder(config)
        self.infusion = InfusionLayer(config.d1, config.d2)
        self.mlm_head = MlmHead(config.d1, config.vocab_size)
        self.sop_head = SopHead(config.d1)
        self.mention_head = MentionPoolHead(config.d1, config.d2)

        emb = torch.as_tensor(np.asarray(entity_emb))
        types = torch.as_tensor(np.asarray(entity_types), dtype=torch.int64)
        if emb.ndim != 2 or emb.shape[1] != config.d2:
            raise CheckpointError(
                f"entity embeddings must be (num_entities, {config.d2}), "
                f"got {tuple(emb.shape)}"
            )
        if types.shape != emb.shape[:1]:
            raise CheckpointError(
                f"entity types shape {tuple(types.shape)} does not match "
                f"{emb.shape[0]} entities"
            )
        self.register_buffer("entity_emb", emb)
        self.register_buffer("entity_types", types)

        self.to(torch_dtype(config))
        self.reset_parameters(config.seed)

    def reset_parameters(self, seed: int) -> None:
        """Reinitialize every weight from one seeded generator.

        Walking modules in sorted name order makes the draw sequence a
        function of the architecture alone, not of construction order, so
        fixed seeds reproduce bit-for-bit across refactors of __init__.
        """
        generator = torch.Generator().manual_seed(seed)
        for _, module in sorted(self.named_modules(), key=lambda kv: kv[0]):
            if isinstance(module, nn.Linear):
                module.weight.data.normal_(0.0, 0.02, generator=generator)
                if module.bias is not None:
                    module.bias.data.zero_()
            elif isinstance(module, nn.Embedding):
                module.weight.data.normal_(0.0, 0.02, generator=generator)
            elif isinstance(module, nn.LayerNorm):
                module.weight.data.fill_(1.0)
                module.bias.data.zero_()

    def forward(
        self,
        ids: torch.Tensor,
        segments: torch.Tensor,
        mask: torch.Tensor,
        mentions: Sequence[Sequence[MentionSpan]] | None = None,
    ) -> EncoderState:
        """Encode a batch, infusing knowledge after the configured layer.

        The recorded state for the injection layer is the post-infusion
        matrix, which is exactly what the next layer consumes. Passing
        ``mentions=None`` (or all-empty lists) reduces to the plain encoder.
        """
        x = self.encoder.embed(ids, segments)
        hidden = [x]
        for idx, layer in enumerate(self.encoder.layers, start=1):
            x = layer(x, mask)
            if idx == self.config.injection_layer and mentions is not None:
                x = self.infusion(x, mentions, self.entity_emb, self.entity_types)
            hidden.append(x)
        return EncoderState(hidden=hidden)

    def input_embedding_table(self) -> torch.Tensor:
        """Raw token embedding rows, the table the frozen snapshot copies."""
        return self.encoder.token_embedding.weight


_MANIFEST_NAME = "manifest.json"
_WEIGHTS_NAME = "weights.bin"


def _codes(tensor: torch.Tensor) -> str:
    return "i8" if not tensor.is_floating_point() else "f4"


def save_model(model: KnowledgeModel, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    state = model.state_dict()
    names = sorted(state)
    manifest = {
        "config": model.config.to_dict(),
        "tensors": [[n, list(state[n].shape), _codes(state[n])] for n in names],
    }
    (directory / _MANIFEST_NAME).write_text(json.dumps(manifest, indent=1))
    with open(directory / _WEIGHTS_NAME, "wb") as fh:
        for name in names:
            arr = state[name].detach().cpu().numpy()
            code = "<" + _codes(state[name])
            fh.write(np.ascontiguousarray(arr).astype(code).tobytes())


def load_model(directory: str | Path) -> KnowledgeModel:
    directory = Path(directory)
    manifest_path = directory / _MANIFEST_NAME
    if not manifest_path.exists():
        raise CheckpointError(f"no {_MANIFEST_NAME} in {directory}")
    manifest = json.loads(manifest_path.read_text())
    config = ModelConfig.from_dict(manifest["config"])

    shapes = {name: tuple(shape) for name, shape, _ in manifest["tensors"]}
    if "entity_emb" not in shapes or "entity_types" not in shapes:
        raise CheckpointError("manifest lacks the entity embedding buffers")
    num_entities = shapes["entity_emb"][0]
    model = KnowledgeModel(
        config,
        entity_emb=np.zeros((num_entities, config.d2)),
        entity_types=np.zeros(num_entities, dtype=np.int64),
    )

    raw = (directory / _WEIGHTS_NAME).read_bytes()
    itemsize = {"f4": 4, "i8": 8}
    expected = sum(
        int(np.prod(shape)) * itemsize[code]
        for _, shape, code in manifest["tensors"]
    )
    if len(raw) != expected:
        raise CheckpointError(
            f"{_WEIGHTS_NAME} has {len(raw)} bytes, manifest expects {expected}"
        )

    state = {}
    offset = 0
    for name, shape, code in manifest["tensors"]:
        count = int(np.prod(shape))
        size = count * itemsize[code]
        arr = np.frombuffer(raw, dtype="<" + code, count=count, offset=offset)
        state[name] = torch.as_tensor(arr.copy()).reshape(tuple(shape))
        offset += size

    target = model.state_dict()
    cast = {
        name: tensor.to(target[name].dtype) for name, tensor in state.items()
    }
    missing = sorted(set(target) - set(cast))
    if missing:
        raise CheckpointError(f"checkpoint lacks tensors: {missing}")
    model.load_state_dict(cast)
    return model

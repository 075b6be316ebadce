from .encoder import EncoderState, TransformerEncoder
from .heads import MentionPoolHead, MlmHead, SopHead
from .infusion import InfusionLayer
from .knowledge_model import KnowledgeModel, load_model, save_model, torch_dtype
from .pooling import SpanPooler

__all__ = [
    "EncoderState",
    "TransformerEncoder",
    "MentionPoolHead",
    "MlmHead",
    "SopHead",
    "InfusionLayer",
    "KnowledgeModel",
    "load_model",
    "save_model",
    "torch_dtype",
    "SpanPooler",
]

"""Knowledge-graph-infused language model pretraining on a desk scale.

The package covers the full pipeline: loading a typed knowledge graph,
training translation-based graph embeddings, ranking an entity's neighbors
with personalized PageRank, infusing ranked neighbor knowledge into a small
transformer encoder, pretraining it with masked-language, sentence-order,
masked-neighbor and masked-mention objectives, and evaluating the result on
entity-similarity datasets.
"""

from .config import ModelConfig
from .errors import (
    CheckpointError,
    ConfigError,
    FormatError,
    KgfuseError,
    UnknownIdError,
)
from .kg import (
    FrequencyTable,
    KnowledgeGraph,
    count_mention_frequencies,
    load_kg,
    load_saved_kg,
    read_corpus_jsonl,
    save_kg,
    scan_mentions,
)
from .pagerank import PeprResult, pepr_scores, top_k_neighbors
from .sampling import AliasTable, NegativeSampler, sample_negatives
from .tokenizer import (
    MentionSpan,
    Vocab,
    detokenize,
    encode_pair,
    link_mentions,
    tokenize,
    tokenize_words,
)
from .transr import (
    KgEmbeddings,
    hits_at_k,
    init_embeddings,
    load_embeddings,
    save_embeddings,
    score_triple,
    train_transr,
)

__all__ = [
    "AliasTable",
    "CheckpointError",
    "ConfigError",
    "FormatError",
    "FrequencyTable",
    "KgEmbeddings",
    "KgfuseError",
    "KnowledgeGraph",
    "MentionSpan",
    "ModelConfig",
    "NegativeSampler",
    "PeprResult",
    "UnknownIdError",
    "Vocab",
    "count_mention_frequencies",
    "detokenize",
    "encode_pair",
    "hits_at_k",
    "init_embeddings",
    "link_mentions",
    "load_embeddings",
    "load_kg",
    "load_saved_kg",
    "pepr_scores",
    "read_corpus_jsonl",
    "sample_negatives",
    "save_embeddings",
    "save_kg",
    "scan_mentions",
    "score_triple",
    "tokenize",
    "tokenize_words",
    "top_k_neighbors",
    "train_transr",
]

__version__ = "0.1.0"

"""Command-line entry point.

Subcommands: kg (graph stats), kg-embed (train graph embeddings), pepr
(neighbor ranking), pretrain (toy pretraining run), sweep-k (neighbor-count
sweep), eval-sim (similarity datasets and Acc@1). Options come from an
optional JSON config file with individual flags overriding it; --seed
falls back to the SEED environment variable. Exit codes: 0 success, 2 user
error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import ModelConfig
from .errors import ConfigError, KgfuseError
from .kg import (
    KnowledgeGraph,
    count_mention_frequencies,
    load_kg,
    read_corpus_jsonl,
    save_kg,
)
from .pagerank import top_k_neighbors
from .sampling import NegativeSampler
from .simeval import (
    acc_at_1,
    build_similarity_datasets,
    dataset_entities,
    embed_entities_via_model,
    load_provider_tsv,
    provider_for_entities,
    save_dataset,
)
from .synthetic import EQUIVALENCE
from .tokenizer import Vocab
from .batching import neighbor_cache
from .training import RunManifest, train
from .transr import hits_at_k, load_embeddings, save_embeddings, train_transr


def _add_kg_inputs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--triples", required=True, help="TSV of head, relation, tail")
    parser.add_argument("--types", required=True, help="TSV of entity, type")


def _seed(args: argparse.Namespace, default: int = 42) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"SEED environment variable {env!r} is not an integer")
    return default

def _load_world(args: argparse.Namespace) -> tuple[KnowledgeGraph, list[str] | None]:
    kg = load_kg(args.triples, args.types)
    corpus = None
    if getattr(args, "corpus", None):
        corpus = list(read_corpus_jsonl(args.corpus))
    return kg, corpus


_CONFIG_FLAGS = (
    "d1", "d2", "layers", "heads", "max_len", "k", "mu",
    "lambda1", "lambda2", "k_neg", "injection_layer", "alpha", "dtype",
)


def _build_config(args: argparse.Namespace, vocab_size: int | None = None) -> ModelConfig:
    if getattr(args, "config", None):
        config = ModelConfig.from_json(args.config)
    else:
        config = ModelConfig()
    overrides = {
        name: getattr(args, name)
        for name in _CONFIG_FLAGS
        if getattr(args, name, None) is not None
    }
    if vocab_size is not None:
        overrides["vocab_size"] = vocab_size
    overrides["seed"] = _seed(args, config.seed)
    config = config.replace(**overrides)
    config.validate()
    return config


def cmd_kg(args: argparse.Namespace) -> int:
    kg, _ = _load_world(args)
    print(f"entities\t{kg.num_entities}")
    print(f"relations\t{kg.num_relations}")
    print(f"triples\t{kg.triples.shape[0]}")
    print(f"types\t{len(kg.type_names)}")
    for type_id, name in enumerate(kg.type_names):
        members = len(kg.type_index.get(type_id, []))
        print(f"type\t{name}\t{members}")
    if args.save:
        save_kg(kg, args.save)
        print(f"saved\t{args.save}")
    return 0


def cmd_kg_embed(args: argparse.Namespace) -> int:
    kg, corpus = _load_world(args)
    emb, losses = train_transr(
        kg,
        dim=args.dim,
        epochs=args.epochs,
        lr=args.lr,
        margin=args.margin,
        seed=_seed(args),
    )
    out = Path(args.out)
    save_embeddings(emb, out)
    hits = hits_at_k(emb, kg, k=10)
    print(f"dim\t{emb.dim}")
    print(f"epochs\t{len(losses)}")
    if losses:
        print(f"final_epoch_loss\t{losses[-1]:.6f}")
    print(f"hits_at_10\t{hits:.4f}")
    print(f"saved\t{out}")
    return 0


def cmd_pepr(args: argparse.Namespace) -> int:
    kg, corpus = _load_world(args)
    freq = count_mention_frequencies(corpus, kg) if corpus is not None else None
    entity = kg.entity_id(args.entity)
    result = top_k_neighbors(
        kg, freq, entity, k=args.k, alpha=args.alpha
    )
    rel_of: dict[int, int] = {}
    for rel, nbr, _ in kg.adjacency[entity]:
        if nbr not in rel_of or rel < rel_of[nbr]:
            rel_of[nbr] = rel
    for rank, (nbr, score) in enumerate(result.ranked, start=1):
        relation = kg.relations[rel_of[nbr]]
        print(f"{rank}\t{kg.entities[nbr]}\t{relation}\t{score:.10g}")
    return 0


def _prepare_pretrain(args: argparse.Namespace):
    kg, corpus = _load_world(args)
    if corpus is None:
        raise ConfigError("pretraining requires --corpus")
    freq = count_mention_frequencies(corpus, kg)
    vocab = Vocab.from_texts(corpus)
    config = _build_config(args, vocab_size=len(vocab))
    emb = load_embeddings(args.kg_embed)
    if emb.dim != config.d2:
        raise ConfigError(
            f"embedding dim {emb.dim} does not match configured d2 {config.d2}"
        )
    if emb.num_entities != kg.num_entities:
        raise ConfigError(
            f"embeddings cover {emb.num_entities} entities, graph has "
            f"{kg.num_entities}"
        )
    sampler = NegativeSampler(kg, freq, smoothing=args.smoothing)
    return kg, corpus, freq, vocab, config, emb, sampler


def _run_training(args, kg, corpus, freq, vocab, config, emb, sampler, log_path):
    from .model.knowledge_model import KnowledgeModel, torch_dtype
    from .objectives import kg_tensors

    model = KnowledgeModel(config, emb.entity, kg.entity_types)
    kg_t = kg_tensors(emb, dtype=torch_dtype(config))
    result = train(
        model,
        corpus,
        kg,
        freq,
        vocab,
        kg_t,
        sampler,
        config,
        steps=args.steps,
        batch_size=args.batch_size,
        lr=args.lr,
        seed=config.seed,
        log_path=log_path,
        hit_ratio=args.hit_ratio,
        warmup_steps=args.warmup_steps,
    )
    return model, result


def cmd_pretrain(args: argparse.Namespace) -> int:
    from .model.knowledge_model import save_model

    kg, corpus, freq, vocab, config, emb, sampler = _prepare_pretrain(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "losses.jsonl"
    model, result = _run_training(
        args, kg, corpus, freq, vocab, config, emb, sampler, log_path
    )

    save_model(model, out / "model")
    vocab.save(out / "vocab.txt")
    manifest = RunManifest(
        config=config.to_dict(),
        seed=config.seed,
        wall_clock_s=result.wall_clock_s,
        loss_log=str(log_path),
    )
    for label in ("corpus", "triples", "types"):
        manifest.add_input(label, getattr(args, label))
    manifest.outputs = {"model": str(out / "model"), "vocab": str(out / "vocab.txt")}
    manifest.save(out / "run.json")

    first, last = result.history[0], result.history[-1]
    print(f"steps\t{len(result.history)}")
    print(f"first_total\t{first['total']:.6f}")
    print(f"last_total\t{last['total']:.6f}")
    print(f"saved\t{out}")
    return 0


def cmd_sweep_k(args: argparse.Namespace) -> int:
    kg, corpus, freq, vocab, config, emb, sampler = _prepare_pretrain(args)
    try:
        k_values = [int(x) for x in args.k_list.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--k-list must be comma-separated integers, got {args.k_list!r}")
    if not k_values:
        raise ConfigError("--k-list is empty")

    datasets = build_similarity_datasets(
        kg, freq, args.equivalence, seed=config.seed
    )
    needed = dataset_entities(datasets)

    rows = []
    for k in k_values:
        k_config = config.replace(k=k)
        model, _ = _run_training(
            args, kg, corpus, freq, vocab, k_config, emb, sampler, log_path=None
        )
        neighbors = neighbor_cache(kg, freq, needed, k_config.k, alpha=k_config.alpha)
        vectors = embed_entities_via_model(model, kg, vocab, needed, neighbors)
        row = [str(k)] + [f"{acc_at_1(ds, vectors):.4f}" for ds in datasets]
        rows.append(row)

    header = ["k"] + [f"acc_{ds.variant.lower()}" for ds in datasets]
    lines = ["\t".join(header)] + ["\t".join(row) for row in rows]
    report = "\n".join(lines)
    print(report)
    if args.out:
        Path(args.out).write_text(report + "\n")
    return 0


def cmd_eval_sim(args: argparse.Namespace) -> int:
    kg, corpus = _load_world(args)
    freq = count_mention_frequencies(corpus, kg) if corpus is not None else None
    datasets = build_similarity_datasets(
        kg,
        freq,
        args.equivalence,
        jw_threshold=args.jw_threshold,
        jaccard_threshold=args.jaccard_threshold,
        min_common=args.min_common,
        low_freq_cap=args.low_freq_cap,
        num_negatives=args.negatives,
        seed=_seed(args),
    )
    if args.dataset_out:
        out = Path(args.dataset_out)
        out.mkdir(parents=True, exist_ok=True)
        for ds in datasets:
            save_dataset(ds, kg, out / f"{ds.variant.lower()}.jsonl")

    needed = dataset_entities(datasets)
    if args.provider:
        table = load_provider_tsv(args.provider)
        vectors = provider_for_entities(table, kg, needed)
    elif args.model:
        from .model.knowledge_model import load_model

        run_dir = Path(args.model)
        model = load_model(run_dir / "model")
        vocab = Vocab.load(run_dir / "vocab.txt")
        neighbors = neighbor_cache(
            kg, freq, needed, model.config.k, alpha=model.config.alpha
        )
        vectors = embed_entities_via_model(model, kg, vocab, needed, neighbors)
    else:
        raise ConfigError("eval-sim needs --provider or --model")

    print("variant\tsamples\tacc_at_1")
    for ds in datasets:
        print(f"{ds.variant}\t{len(ds)}\t{acc_at_1(ds, vectors):.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgfuse",
        description="Knowledge-graph-infused toy language model pretraining",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_kg = sub.add_parser("kg", help="load a graph and print statistics")
    _add_kg_inputs(p_kg)
    p_kg.add_argument("--save", help="directory to persist the validated graph")
    p_kg.set_defaults(func=cmd_kg)

    p_emb = sub.add_parser("kg-embed", help="train graph embeddings")
    _add_kg_inputs(p_emb)
    p_emb.add_argument("--out", required=True)
    p_emb.add_argument("--dim", type=int, default=32)
    p_emb.add_argument("--epochs", type=int, default=50)
    p_emb.add_argument("--lr", type=float, default=0.01)
    p_emb.add_argument("--margin", type=float, default=1.0)
    p_emb.add_argument("--seed", type=int)
    p_emb.set_defaults(func=cmd_kg_embed)

    p_pepr = sub.add_parser("pepr", help="personalized neighbor ranking")
    p_pepr.add_argument("action", choices=["rank"])
    _add_kg_inputs(p_pepr)
    p_pepr.add_argument("--corpus", help="JSONL corpus for frequency statistics")
    p_pepr.add_argument("--entity", required=True, help="entity surface form")
    p_pepr.add_argument("--k", type=int, default=10)
    p_pepr.add_argument("--alpha", type=float, default=0.85)
    p_pepr.set_defaults(func=cmd_pepr)

    def add_training_flags(p: argparse.ArgumentParser) -> None:
        _add_kg_inputs(p)
        p.add_argument("--corpus", required=True)
        p.add_argument("--kg-embed", dest="kg_embed", required=True,
                       help="directory of trained graph embeddings")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--steps", type=int, default=300)
        p.add_argument("--batch-size", dest="batch_size", type=int, default=8)
        p.add_argument("--warmup-steps", dest="warmup_steps", type=int, default=200)
        p.add_argument("--lr", type=float, default=1e-3)
        p.add_argument("--hit-ratio", dest="hit_ratio", type=float, default=1.0)
        p.add_argument("--smoothing", type=float, default=1.0)
        p.add_argument("--seed", type=int)
        for name in _CONFIG_FLAGS:
            flag = "--" + name.replace("_", "-")
            if name == "dtype":
                p.add_argument(flag, choices=["float32", "float64"])
            elif name in ("mu", "lambda1", "lambda2", "alpha"):
                p.add_argument(flag, type=float)
            else:
                p.add_argument(flag, type=int)

    p_pre = sub.add_parser("pretrain", help="run toy pretraining")
    add_training_flags(p_pre)
    p_pre.add_argument("--out", required=True)
    p_pre.set_defaults(func=cmd_pretrain)

    p_sweep = sub.add_parser("sweep-k", help="train and evaluate across K values")
    add_training_flags(p_sweep)
    p_sweep.add_argument("--k-list", dest="k_list", default="5,10,20,30")
    p_sweep.add_argument("--equivalence", default=EQUIVALENCE)
    p_sweep.add_argument("--out", help="optional TSV report path")
    p_sweep.set_defaults(func=cmd_sweep_k)

    p_eval = sub.add_parser("eval-sim", help="similarity datasets and Acc@1")
    _add_kg_inputs(p_eval)
    p_eval.add_argument("--corpus", help="JSONL corpus for frequency statistics")
    p_eval.add_argument("--equivalence", default=EQUIVALENCE)
    p_eval.add_argument("--provider", help="TSV of surface<TAB>floats")
    p_eval.add_argument("--model", help="pretrain output directory")
    p_eval.add_argument("--dataset-out", dest="dataset_out")
    p_eval.add_argument("--jw-threshold", dest="jw_threshold", type=float, default=0.6)
    p_eval.add_argument(
        "--jaccard-threshold", dest="jaccard_threshold", type=float, default=0.75
    )
    p_eval.add_argument("--min-common", dest="min_common", type=int, default=3)
    p_eval.add_argument("--low-freq-cap", dest="low_freq_cap", type=int, default=200)
    p_eval.add_argument("--negatives", type=int, default=19)
    p_eval.add_argument("--seed", type=int)
    p_eval.set_defaults(func=cmd_eval_sim)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KgfuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 -- the contract maps these to 3
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Whitespace tokenizer, vocabulary, and token-span entity linking.

Tokens are whitespace-separated words. Entity surfaces may span several
words; linking joins candidate word windows with single spaces and looks
them up against the graph's surface table, longest match first, left to
right, without overlaps. Spans are word-indexed here; batch construction
shifts them to positions in the padded input sequence.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import FormatError
from .kg import KnowledgeGraph

SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
PAD_ID, UNK_ID, CLS_ID, SEP_ID, MASK_ID = range(len(SPECIAL_TOKENS))


class Vocab:
    def __init__(self, tokens: list[str]):
        if list(tokens[: len(SPECIAL_TOKENS)]) != list(SPECIAL_TOKENS):
            raise FormatError(
                f"vocabulary must start with the special tokens {SPECIAL_TOKENS}"
            )
        self.tokens = list(tokens)
        self.token_to_id = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.token_to_id) != len(self.tokens):
            raise FormatError("vocabulary contains duplicate tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def id(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        return self.tokens[idx]

    @classmethod
    def from_texts(cls, texts: Iterable[str], min_count: int = 1) -> "Vocab":
        """Frequency-sorted vocabulary (count descending, then lexicographic)."""
        counts: Counter[str] = Counter()
        for text in texts:
            counts.update(text.split())
        kept = sorted(
            (tok for tok, c in counts.items() if c >= min_count),
            key=lambda tok: (-counts[tok], tok),
        )
        return cls(list(SPECIAL_TOKENS) + kept)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            "\n".join(self.tokens) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([line for line in lines if line])


@dataclass(frozen=True)
class MentionSpan:
    start: int   # first token index, inclusive
    end: int     # last token index, inclusive
    entity: int  # linked entity id
    neighbors: tuple[tuple[int, int], ...] = ()  # ranked (relation, entity) pairs

    @property
    def width(self) -> int:
        return self.end - self.start + 1

    def shifted(self, offset: int) -> "MentionSpan":
        return MentionSpan(
            self.start + offset, self.end + offset, self.entity, self.neighbors
        )

    def with_neighbors(
        self, neighbors: Iterable[tuple[int, int]]
    ) -> "MentionSpan":
        return MentionSpan(
            self.start, self.end, self.entity, tuple(neighbors)
        )


def tokenize_words(text: str, vocab: Vocab) -> list[str]:
    """Greedy longest-match segmentation against the vocabulary.

    Whitespace separates chunks and never appears inside a token. Within a
    chunk the longest vocabulary token matching at the cursor is taken;
    with no match at all, one character is consumed as [UNK].
    """
    out: list[str] = []
    for chunk in text.split():
        if chunk in vocab:
            out.append(chunk)
            continue
        i = 0
        while i < len(chunk):
            matched = None
            for end in range(len(chunk), i, -1):
                if chunk[i:end] in vocab:
                    matched = chunk[i:end]
                    break
            if matched is None:
                out.append(SPECIAL_TOKENS[UNK_ID])
                i += 1
            else:
                out.append(matched)
                i += len(matched)
    return out


def tokenize(text: str, vocab: Vocab, max_len: int) -> np.ndarray:
    """[CLS] tokens [SEP] as ids, truncated and padded to ``max_len``."""
    if max_len < 2:
        raise FormatError(f"max_len must be >= 2, got {max_len}")
    words = tokenize_words(text, vocab)[: max_len - 2]
    ids = np.full(max_len, PAD_ID, dtype=np.int64)
    ids[0] = CLS_ID
    for pos, word in enumerate(words, start=1):
        ids[pos] = vocab.id(word)
    ids[len(words) + 1] = SEP_ID
    return ids


def link_mentions(words: list[str], kg: KnowledgeGraph) -> list[MentionSpan]:
    """Longest-match, left-to-right, non-overlapping entity spans over words.

    Returned spans index into ``words`` (end inclusive). Multi-word
    surfaces match windows joined by single spaces, so tokenization that
    collapses other whitespace still links.
    """
    if not kg.surface_to_id:
        return []
    max_words = max(s.count(" ") for s in kg.surface_to_id) + 1
    spans: list[MentionSpan] = []
    i = 0
    n = len(words)
    while i < n:
        matched = None
        for width in range(min(max_words, n - i), 0, -1):
            candidate = " ".join(words[i : i + width])
            if candidate in kg.surface_to_id:
                matched = (width, kg.surface_to_id[candidate])
                break
        if matched is None:
            i += 1
        else:
            width, eid = matched
            spans.append(MentionSpan(start=i, end=i + width - 1, entity=eid))
            i += width
    return spans


@dataclass
class InputEncoding:
    ids: np.ndarray         # (max_len,) token ids, padded
    segments: np.ndarray    # (max_len,) 0 for first segment, 1 for second
    mask: np.ndarray        # (max_len,) 1 on real tokens including specials
    kept_a: int             # words of segment A that survived truncation
    kept_b: int

    @property
    def length(self) -> int:
        return int(self.mask.sum())


def encode_pair(
    words_a: list[str],
    words_b: list[str],
    vocab: Vocab,
    max_len: int,
) -> InputEncoding:
    """[CLS] A [SEP] B [SEP] layout, padded to ``max_len``.

    When the pair is too long the longer segment loses words from its end
    first, the usual pair-truncation rule, so short segments are preserved.
    """
    if max_len < 4:
        raise FormatError(f"max_len must be >= 4, got {max_len}")
    budget = max_len - 3
    kept_a, kept_b = len(words_a), len(words_b)
    while kept_a + kept_b > budget:
        if kept_a >= kept_b:
            kept_a -= 1
        else:
            kept_b -= 1

    ids = np.full(max_len, PAD_ID, dtype=np.int64)
    segments = np.zeros(max_len, dtype=np.int64)
    mask = np.zeros(max_len, dtype=np.int64)

    pos = 0
    ids[pos] = CLS_ID
    pos += 1
    for word in words_a[:kept_a]:
        ids[pos] = vocab.id(word)
        pos += 1
    ids[pos] = SEP_ID
    pos += 1
    b_start = pos
    for word in words_b[:kept_b]:
        ids[pos] = vocab.id(word)
        pos += 1
    ids[pos] = SEP_ID
    pos += 1
    segments[b_start:pos] = 1
    mask[:pos] = 1
    return InputEncoding(
        ids=ids, segments=segments, mask=mask, kept_a=kept_a, kept_b=kept_b
    )


def place_spans(
    spans_a: list[MentionSpan],
    spans_b: list[MentionSpan],
    encoding: InputEncoding,
) -> list[MentionSpan]:
    """Shift word-level spans into padded-sequence positions.

    Segment A starts after [CLS]; segment B after A's [SEP]. Spans cut by
    truncation are dropped entirely rather than clipped, keeping every
    retained span aligned with a full surface occurrence.
    """
    placed: list[MentionSpan] = []
    for span in spans_a:
        if span.end < encoding.kept_a:
            placed.append(span.shifted(1))
    offset_b = encoding.kept_a + 2
    for span in spans_b:
        if span.end < encoding.kept_b:
            placed.append(span.shifted(offset_b))
    return placed


def detokenize(ids: Iterable[int], vocab: Vocab, sep: str = "") -> str:
    """Inverse of tokenize on its covered set: specials are dropped and the
    remaining tokens concatenated, so whitespace-free in-vocab text round
    trips exactly."""
    words = []
    for idx in ids:
        idx = int(idx)
        if idx < len(SPECIAL_TOKENS):
            continue
        words.append(vocab.token(idx))
    return sep.join(words)

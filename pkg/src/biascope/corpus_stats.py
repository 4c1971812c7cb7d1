"""Streaming pronoun/occupation co-occurrence counts over a tokenized corpus.

Counting semantics: matching is case-folded; occupations (possibly
multi-token) are matched greedily, longest first, without overlap; within a
sentence every (pronoun occurrence, occupation occurrence) pair increments
one co-occurrence cell, so a sentence with two male pronouns and two
occupations contributes four pairs.
"""

from __future__ import annotations

import json
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import MergeError
from .lexicon import FEMALE, MALE, GenderLexicon

COOC_CELLS = ((MALE, MALE), (MALE, FEMALE), (FEMALE, MALE), (FEMALE, FEMALE))

_STRIP_CHARS = string.punctuation


def tokenize(line: str) -> list[str]:
    """Whitespace split, then strip leading/trailing ASCII punctuation."""
    out = []
    for raw in line.split():
        tok = raw.strip(_STRIP_CHARS)
        if tok:
            out.append(tok)
    return out


def iter_corpus(path: str | Path, pretokenized: bool = False) -> Iterator[list[str]]:
    """Yield one token list per line; blank lines are skipped."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            yield line.split() if pretokenized else tokenize(line)


@dataclass
class CorpusStats:
    """Immutable-by-convention counting result; combine with :func:`merge`."""

    male_total: int = 0
    female_total: int = 0
    cooc: dict[tuple[str, str], int] = field(
        default_factory=lambda: {cell: 0 for cell in COOC_CELLS}
    )
    sentences_seen: int = 0
    tokens_seen: int = 0
    lexicon_hash: str = ""

    @classmethod
    def zero(cls, lexicon_hash: str = "") -> "CorpusStats":
        return cls(lexicon_hash=lexicon_hash)

    def to_json_dict(self) -> dict:
        return {
            "male_total": self.male_total,
            "female_total": self.female_total,
            "cooc": {f"{g}_{s}": self.cooc[(g, s)] for g, s in COOC_CELLS},
            "sentences_seen": self.sentences_seen,
            "tokens_seen": self.tokens_seen,
            "lexicon_hash": self.lexicon_hash,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "CorpusStats":
        return cls(
            male_total=d["male_total"],
            female_total=d["female_total"],
            cooc={(g, s): d["cooc"][f"{g}_{s}"] for g, s in COOC_CELLS},
            sentences_seen=d["sentences_seen"],
            tokens_seen=d["tokens_seen"],
            lexicon_hash=d["lexicon_hash"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"


class _OccupationMatcher:
    """Greedy longest-match-first scanner for (multi-token) occupation surfaces."""

    def __init__(self, occupations: Sequence[tuple[tuple[str, ...], str]]):
        self.by_surface = dict(occupations)
        self.max_len = max((len(s) for s in self.by_surface), default=0)

    def labels_in(self, tokens_lower: Sequence[str]) -> list[str]:
        labels = []
        n = len(tokens_lower)
        i = 0
        while i < n and self.max_len:
            matched = False
            for length in range(min(self.max_len, n - i), 0, -1):
                label = self.by_surface.get(tuple(tokens_lower[i : i + length]))
                if label is not None:
                    labels.append(label)
                    i += length
                    matched = True
                    break
            if not matched:
                i += 1
        return labels


def scan(sentences: Iterable[Sequence[str]], lexicon: GenderLexicon) -> CorpusStats:
    """Count pronoun totals and sentence-level pronoun/occupation pairs."""
    matcher = _OccupationMatcher(lexicon.occupations)
    stats = CorpusStats.zero(lexicon.lexicon_hash)
    male_set, female_set = lexicon.male_pronouns, lexicon.female_pronouns
    for tokens in sentences:
        lower = [t.lower() for t in tokens]
        n_male = sum(1 for t in lower if t in male_set)
        n_female = sum(1 for t in lower if t in female_set)
        stats.male_total += n_male
        stats.female_total += n_female
        stats.sentences_seen += 1
        stats.tokens_seen += len(tokens)
        if n_male or n_female:
            occ_labels = matcher.labels_in(lower)
            if occ_labels:
                n_m_occ = occ_labels.count(MALE)
                n_f_occ = len(occ_labels) - n_m_occ
                stats.cooc[(MALE, MALE)] += n_male * n_m_occ
                stats.cooc[(MALE, FEMALE)] += n_male * n_f_occ
                stats.cooc[(FEMALE, MALE)] += n_female * n_m_occ
                stats.cooc[(FEMALE, FEMALE)] += n_female * n_f_occ
    return stats


def merge(a: CorpusStats, b: CorpusStats) -> CorpusStats:
    """Field-wise sum; both operands must come from the same lexicon."""
    if a.lexicon_hash != b.lexicon_hash:
        raise MergeError(
            f"lexicon hash mismatch: {a.lexicon_hash[:12]}... vs {b.lexicon_hash[:12]}..."
        )
    return CorpusStats(
        male_total=a.male_total + b.male_total,
        female_total=a.female_total + b.female_total,
        cooc={cell: a.cooc[cell] + b.cooc[cell] for cell in COOC_CELLS},
        sentences_seen=a.sentences_seen + b.sentences_seen,
        tokens_seen=a.tokens_seen + b.tokens_seen,
        lexicon_hash=a.lexicon_hash,
    )


def scan_sharded(
    sentences: Sequence[Sequence[str]], lexicon: GenderLexicon, workers: int = 1
) -> CorpusStats:
    """Shard the sentence list, scan shards concurrently, merge in shard order.

    Merging is commutative and associative, so the result is independent of
    the worker count.
    """
    if workers <= 1 or len(sentences) < 2:
        return scan(sentences, lexicon)
    n = len(sentences)
    bounds = [n * i // workers for i in range(workers + 1)]
    shards = [sentences[bounds[i] : bounds[i + 1]] for i in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda s: scan(s, lexicon), shards))
    out = CorpusStats.zero(lexicon.lexicon_hash)
    for part in parts:
        out = merge(out, part)
    return out

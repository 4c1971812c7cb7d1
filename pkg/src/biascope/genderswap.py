"""Deterministic gender swapping of token sequences and coreference documents.

Swaps are strictly 1 token -> 1 token and preserve the capitalization pattern
class of the original (all-lower, Initial-cap, ALL-CAPS). Ambiguous tokens
("her" -> his/him) are resolved by POS tag when available, otherwise by a
positional heuristic: "her" followed by an alphabetic non-auxiliary token is
read as possessive.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .errors import DocumentError, SwapError
from .lexicon import GenderLexicon

# Tokens that block the possessive reading of a following "her" ("told her
# was...", "saw her is..." are objective contexts).
_AUXILIARIES = frozenset(
    {
        "is", "was", "are", "were", "am", "be", "been", "being",
        "has", "have", "had", "having",
        "do", "does", "did",
        "will", "would", "shall", "should", "can", "could", "may", "might", "must",
        "not",
    }
)


def _match_case(replacement: str, original: str) -> str:
    """Re-apply the capitalization pattern class of ``original``."""
    if original.isupper() and len(original) > 1:
        return replacement.upper()
    if original[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement


@dataclass(frozen=True)
class SwapResult:
    """Swapped token sequence plus a per-position audit trail."""

    tokens: tuple[str, ...]
    swapped_positions: tuple[int, ...]
    direction_map: tuple[tuple[str, str, str], ...]  # (original, replacement, rule)


def _resolve_ambiguous(
    targets: tuple[str, ...],
    tag: str,
    tokens: Sequence[str],
    idx: int,
    pos: Optional[Sequence[str]],
) -> Optional[tuple[str, str]]:
    """Return (replacement, rule label) or None to leave the token unswapped."""
    if tag == "always":
        return targets[0], "ambig:always"
    if tag == "poss_only":
        if pos is not None and pos[idx].startswith("PRP"):
            return targets[0], "ambig:poss_only"
        return None
    # tag == "her": possessive vs objective
    if pos is not None:
        if pos[idx] == "PRP$":
            return targets[0], "ambig:her:pos"
        if pos[idx] == "PRP":
            return targets[1], "ambig:her:pos"
    nxt = tokens[idx + 1] if idx + 1 < len(tokens) else None
    if nxt is not None and nxt.isalpha() and nxt.lower() not in _AUXILIARIES:
        return targets[0], "ambig:her:heuristic"
    return targets[1], "ambig:her:heuristic"


def swap_sentence(
    tokens: Sequence[str],
    lexicon: GenderLexicon,
    pos: Optional[Sequence[str]] = None,
) -> SwapResult:
    """Swap every gendered token in ``tokens`` to its opposite-gender form."""
    if not tokens:
        raise SwapError("empty token sequence")
    if pos is not None and len(pos) != len(tokens):
        raise SwapError(f"POS length {len(pos)} != token length {len(tokens)}")
    out = list(tokens)
    swapped: list[int] = []
    trail: list[tuple[str, str, str]] = []
    ambiguous = lexicon.ambiguous_map
    pairs = lexicon.swap_map
    for i, tok in enumerate(tokens):
        low = tok.lower()
        if low in ambiguous:
            targets, tag = ambiguous[low]
            resolved = _resolve_ambiguous(targets, tag, tokens, i, pos)
            if resolved is None:
                continue
            replacement, rule = resolved
        elif low in pairs:
            replacement, rule = pairs[low], "pair"
        else:
            continue
        out[i] = _match_case(replacement, tok)
        swapped.append(i)
        trail.append((tok, out[i], rule))
    return SwapResult(tuple(out), tuple(swapped), tuple(trail))


@dataclass
class CorefDocument:
    """Tokenized document with coreference spans and optional POS/NER columns.

    ``coref_spans`` entries are (cluster id, sentence index, start token,
    end token), token bounds inclusive.
    """

    doc_id: str
    sentences: list[list[str]]
    coref_spans: list[tuple[int, int, int, int]] = field(default_factory=list)
    pos: Optional[list[list[str]]] = None
    ner: Optional[list[list[str]]] = None

    def validate(self) -> None:
        for col, name in ((self.pos, "pos"), (self.ner, "ner")):
            if col is not None:
                if len(col) != len(self.sentences) or any(
                    len(c) != len(s) for c, s in zip(col, self.sentences)
                ):
                    raise DocumentError(f"{self.doc_id}: {name} column shape mismatch")
        seen: set[tuple[int, int, int]] = set()
        for cluster, sent, start, end in self.coref_spans:
            if not 0 <= sent < len(self.sentences):
                raise DocumentError(f"{self.doc_id}: span sentence {sent} out of range")
            if not (0 <= start <= end < len(self.sentences[sent])):
                raise DocumentError(
                    f"{self.doc_id}: span ({sent},{start},{end}) out of bounds"
                )
            mention = (sent, start, end)
            if mention in seen:
                raise DocumentError(
                    f"{self.doc_id}: mention {mention} appears in more than one cluster entry"
                )
            seen.add(mention)


def _anonymize_person_spans(
    sentences: list[list[str]],
    original: Sequence[Sequence[str]],
    ner: Sequence[Sequence[str]],
) -> None:
    """Replace tokens inside PERSON NER spans by E1, E2, ... placeholders.

    Placeholders are keyed on the original lowercase surface, so repeated
    names stay stable within the document. Mutates ``sentences`` in place.
    """
    placeholder: dict[str, str] = {}
    for s_idx, tags in enumerate(ner):
        for t_idx, tag in enumerate(tags):
            if tag != "PERSON":
                continue
            key = original[s_idx][t_idx].lower()
            if key not in placeholder:
                placeholder[key] = f"E{len(placeholder) + 1}"
            sentences[s_idx][t_idx] = placeholder[key]


def swap_coref_document(
    doc: CorefDocument, lexicon: GenderLexicon, anonymize: bool = False
) -> CorefDocument:
    """Swap word tokens of ``doc``; spans, cluster ids, POS and NER are kept."""
    doc.validate()
    new_sentences = []
    for s_idx, sentence in enumerate(doc.sentences):
        pos_row = doc.pos[s_idx] if doc.pos is not None else None
        new_sentences.append(list(swap_sentence(sentence, lexicon, pos_row).tokens))
    if anonymize and doc.ner is not None:
        _anonymize_person_spans(new_sentences, doc.sentences, doc.ner)
    return CorefDocument(
        doc_id=doc.doc_id,
        sentences=new_sentences,
        coref_spans=list(doc.coref_spans),
        pos=[list(r) for r in doc.pos] if doc.pos is not None else None,
        ner=[list(r) for r in doc.ner] if doc.ner is not None else None,
    )


def augment_corpus(
    docs: Sequence[CorefDocument], lexicon: GenderLexicon, anonymize: bool = False
) -> list[CorefDocument]:
    """Original documents followed by their gender-swapped companions.

    Companion ids get the ``_swapped`` suffix; originals are passed through
    untouched.
    """
    swapped = []
    for doc in docs:
        companion = swap_coref_document(doc, lexicon, anonymize=anonymize)
        companion.doc_id = doc.doc_id + "_swapped"
        swapped.append(companion)
    return list(docs) + swapped

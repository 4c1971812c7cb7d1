"""CoNLL-2012-style reader/writer for coreference documents.

Layout: documents delimited by ``#begin document <id>`` / ``#end document``;
one token per line with tab-separated columns

    doc_id  token_index  word  pos  ner  coref

sentences separated by blank lines. ``-`` marks an absent POS/NER tag and an
empty coref column. The coref column uses the usual open/close notation:
``(3`` opens cluster 3, ``3)`` closes it, ``(3)`` is a one-token mention,
multiple pieces are joined with ``|``.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Iterable, TextIO

from .errors import DocumentError
from .genderswap import CorefDocument

_COREF_PIECE = re.compile(r"^(\()?(\d+)(\))?$")


def _coref_column(doc: CorefDocument, sent: int, tok: int) -> str:
    pieces = []
    opens = [sp for sp in doc.coref_spans if sp[1] == sent and sp[2] == tok]
    closes = [sp for sp in doc.coref_spans if sp[1] == sent and sp[3] == tok]
    # single-token mentions render as (id); sort for stable output
    for span in sorted(opens, key=lambda sp: (-sp[3], sp[0])):
        if span in closes:
            pieces.append(f"({span[0]})")
        else:
            pieces.append(f"({span[0]}")
    for span in sorted(closes, key=lambda sp: (sp[2], sp[0])):
        if span not in opens:
            pieces.append(f"{span[0]})")
    return "|".join(pieces) if pieces else "-"


def write_documents(docs: Iterable[CorefDocument], dest: str | Path | TextIO) -> None:
    own = isinstance(dest, (str, Path))
    fh: TextIO = open(dest, "w", encoding="utf-8") if own else dest  # type: ignore[arg-type]
    try:
        for doc in docs:
            doc.validate()
            fh.write(f"#begin document {doc.doc_id}\n")
            for s_idx, sentence in enumerate(doc.sentences):
                for t_idx, word in enumerate(sentence):
                    pos = doc.pos[s_idx][t_idx] if doc.pos is not None else "-"
                    ner = doc.ner[s_idx][t_idx] if doc.ner is not None else "-"
                    coref = _coref_column(doc, s_idx, t_idx)
                    fh.write(f"{doc.doc_id}\t{t_idx}\t{word}\t{pos}\t{ner}\t{coref}\n")
                fh.write("\n")
            fh.write("#end document\n")
    finally:
        if own:
            fh.close()


def _finish_sentence(state: dict) -> None:
    if state["words"]:
        state["sentences"].append(state["words"])
        state["pos"].append(state["postags"])
        state["ner"].append(state["nertags"])
    state["words"], state["postags"], state["nertags"] = [], [], []


def _parse_coref_column(column: str, sent: int, tok: int, state: dict, line_no: int) -> None:
    if column == "-":
        return
    for piece in column.split("|"):
        m = _COREF_PIECE.match(piece)
        if not m:
            raise DocumentError(f"line {line_no}: bad coref piece {piece!r}")
        opener, cid_str, closer = m.groups()
        cid = int(cid_str)
        if opener:
            state["stacks"].setdefault(cid, []).append((sent, tok))
        if closer:
            stack = state["stacks"].get(cid)
            if not stack:
                raise DocumentError(f"line {line_no}: close of unopened cluster {cid}")
            s_open, t_open = stack.pop()
            if s_open != sent:
                raise DocumentError(
                    f"line {line_no}: cluster {cid} span crosses a sentence boundary"
                )
            state["spans"].append((cid, sent, t_open, tok))


def read_documents(source: str | Path | TextIO) -> list[CorefDocument]:
    own = isinstance(source, (str, Path))
    fh: TextIO = open(source, encoding="utf-8") if own else source  # type: ignore[arg-type]
    docs: list[CorefDocument] = []
    state: dict = {}
    doc_id = None
    try:
        for line_no, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if line.startswith("#begin document"):
                if doc_id is not None:
                    raise DocumentError(f"line {line_no}: nested #begin document")
                doc_id = line[len("#begin document") :].strip()
                state = {
                    "sentences": [], "pos": [], "ner": [],
                    "words": [], "postags": [], "nertags": [],
                    "spans": [], "stacks": {},
                }
                continue
            if line.startswith("#end document"):
                if doc_id is None:
                    raise DocumentError(f"line {line_no}: #end document without begin")
                _finish_sentence(state)
                open_clusters = [c for c, st in state["stacks"].items() if st]
                if open_clusters:
                    raise DocumentError(
                        f"line {line_no}: unclosed coref spans for clusters {open_clusters}"
                    )
                pos = state["pos"] if any(t != "-" for row in state["pos"] for t in row) else None
                ner = state["ner"] if any(t != "-" for row in state["ner"] for t in row) else None
                doc = CorefDocument(
                    doc_id=doc_id,
                    sentences=state["sentences"],
                    coref_spans=sorted(state["spans"]),
                    pos=pos,
                    ner=ner,
                )
                doc.validate()
                docs.append(doc)
                doc_id = None
                continue
            if doc_id is None:
                if line.strip():
                    raise DocumentError(f"line {line_no}: content outside a document")
                continue
            if not line.strip():
                _finish_sentence(state)
                continue
            cols = line.split("\t")
            if len(cols) != 6:
                raise DocumentError(f"line {line_no}: expected 6 columns, got {len(cols)}")
            _, _, word, pos_tag, ner_tag, coref = cols
            sent_idx = len(state["sentences"])
            tok_idx = len(state["words"])
            state["words"].append(word)
            state["postags"].append(pos_tag)
            state["nertags"].append(ner_tag)
            _parse_coref_column(coref, sent_idx, tok_idx, state, line_no)
        if doc_id is not None:
            raise DocumentError("unterminated document (missing #end document)")
    finally:
        if own:
            fh.close()
    return docs

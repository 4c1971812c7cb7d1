#!/usr/bin/env python3
"""Regenerate the committed test fixtures under tests/fixtures/.

Everything is seeded, so reruns reproduce the files byte-for-byte. Run from
the repository root:

    python3 scripts/gen_fixtures.py
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from biascope.conll import write_documents
from biascope.genderswap import CorefDocument, swap_sentence
from biascope.lexicon import load_default_lexicon
from biascope.store import write_store

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"

M_OCCS = [
    "driver", "supervisor", "cook", "developer", "carpenter", "manager",
    "lawyer", "farmer", "physician", "guard", "analyst", "mechanic", "sheriff",
]
F_OCCS = [
    "attendant", "cashier", "teacher", "nurse", "assistant", "secretary",
    "cleaner", "receptionist", "clerk", "designer", "writer", "baker", "editor",
]
FILLERS = [
    "yesterday", "quietly", "office", "street", "meeting", "report", "coffee",
    "morning", "again", "later", "project", "door", "letter", "quickly",
]
NAMES_M = ["John", "Paul", "Peter", "James", "Henry"]
NAMES_F = ["Mary", "Sarah", "Anna", "Alice", "Clara"]


def gen_corpus_200() -> None:
    rng = np.random.default_rng(20190404)
    lines = []
    pronouns_m = ["he", "his", "him", "He", "His", "HE"]
    pronouns_f = ["she", "her", "She", "Her", "SHE"]
    for i in range(200):
        kind = rng.integers(0, 10)
        words: list[str] = []
        if kind < 4:  # male-context sentence
            words = [str(rng.choice(pronouns_m)), "paid", "the", str(rng.choice(M_OCCS + F_OCCS))]
            if rng.random() < 0.4:
                words += ["and", "the", str(rng.choice(F_OCCS))]
            if rng.random() < 0.3:
                words += ["near", str(rng.choice(pronouns_m)).lower()]
        elif kind < 7:  # female-context sentence
            words = [str(rng.choice(pronouns_f)), "met", "the", str(rng.choice(M_OCCS + F_OCCS))]
            if rng.random() < 0.3:
                words += ["with", str(rng.choice(pronouns_f)).lower(), "friend"]
        elif kind < 8:  # multi-token occupation, mixed pronouns
            words = [
                str(rng.choice(["He", "She"])), "saw", "the", "construction", "worker",
                "and", "told", str(rng.choice(["him", "her"])),
            ]
        else:  # no gendered content
            words = ["the", str(rng.choice(FILLERS)), "was", str(rng.choice(FILLERS))]
        if rng.random() < 0.5:
            words.append(".")
        elif rng.random() < 0.2:
            words[-1] = words[-1] + ","
        lines.append(" ".join(words))
    (FIXTURES / "corpus_200.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def gen_docs_20() -> None:
    rng = np.random.default_rng(77)
    lexicon = load_default_lexicon()
    docs = []
    for i in range(20):
        male = bool(rng.random() < 0.65)
        name = str(rng.choice(NAMES_M if male else NAMES_F))
        occ = str(rng.choice(M_OCCS if male else F_OCCS))
        pro, poss = ("he", "his") if male else ("she", "her")
        s1 = [name, "the", occ, "said", pro, "was", "late"]
        s2 = ["Everyone", "heard", poss, "excuse", "."]
        sentences = [s1, s2] if rng.random() < 0.7 else [s1]
        spans = [(0, 0, 0, 0), (0, 0, 4, 4)]
        pos = None
        ner = [["PERSON"] + ["-"] * (len(s1) - 1)] + (
            [["-"] * len(s2)] if len(sentences) == 2 else []
        )
        if len(sentences) == 2:
            spans.append((0, 1, 2, 2))
            if rng.random() < 0.5:
                pos = [
                    ["NNP", "DT", "NN", "VBD", "PRP", "VBD", "JJ"],
                    ["NN", "VBD", "PRP$", "NN", "."],
                ]
        docs.append(
            CorefDocument(
                doc_id=f"doc{i:02d}",
                sentences=sentences,
                coref_spans=spans,
                pos=pos,
                ner=ner,
            )
        )
    write_documents(docs, FIXTURES / "docs_20.conll")


WINOBIAS_TEMPLATES = [
    ("developer", "secretary", "he"),
    ("mechanic", "receptionist", "he"),
    ("sheriff", "cashier", "he"),
    ("lawyer", "nurse", "he"),
    ("farmer", "teacher", "he"),
    ("manager", "cleaner", "he"),
    ("nurse", "developer", "she"),
    ("teacher", "driver", "she"),
    ("secretary", "supervisor", "she"),
    ("cashier", "carpenter", "she"),
    ("designer", "guard", "she"),
    ("writer", "physician", "she"),
]

_OPPOSITE = {"he": "she", "she": "he"}


def _winobias_line(idx: int, occ: str, other: str, pronoun: str) -> str:
    return (
        f"{idx} [The {occ}] argued with the {other} because [{pronoun}] "
        f"was tired of the work ."
    )


def gen_winobias() -> None:
    pro_lines = []
    anti_lines = []
    for idx, (occ, other, pronoun) in enumerate(WINOBIAS_TEMPLATES, 1):
        pro_lines.append(_winobias_line(idx, occ, other, pronoun))
        anti_lines.append(_winobias_line(idx, occ, other, _OPPOSITE[pronoun]))
    (FIXTURES / "winobias_pro.txt").write_text("\n".join(pro_lines) + "\n", encoding="utf-8")
    (FIXTURES / "winobias_anti.txt").write_text("\n".join(anti_lines) + "\n", encoding="utf-8")


def gen_predictions() -> None:
    # Tokens: The(0) occ(1) argued(2) with(3) the(4) other(5) because(6)
    # pronoun(7) was(8) tired(9) of(10) the(11) work(12) .(13)
    gold_cluster = [[0, 1], [7, 7]]
    wrong_cluster = [[12, 12], [13, 13]]  # disjoint from gold: zero metric credit
    for name, n_correct in (("preds_pro.jsonl", 10), ("preds_anti.jsonl", 6)):
        rows = []
        for idx in range(1, 13):
            clusters = [gold_cluster] if idx <= n_correct else [wrong_cluster]
            rows.append(json.dumps({"instance_id": str(idx), "clusters": clusters}))
        (FIXTURES / name).write_text("\n".join(rows) + "\n", encoding="utf-8")


def gen_stores() -> None:
    rng = np.random.default_rng(8128)
    lexicon = load_default_lexicon()
    dim = 16
    g_ctx = rng.standard_normal(dim)
    g_ctx /= np.linalg.norm(g_ctx)
    g_occ = rng.standard_normal(dim)
    g_occ -= (g_occ @ g_ctx) * g_ctx
    g_occ /= np.linalg.norm(g_occ)
    base_cache: dict[str, np.ndarray] = {}

    def base(token: str) -> np.ndarray:
        if token not in base_cache:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=4).digest()
            tok_rng = np.random.default_rng(int.from_bytes(digest, "little"))
            base_cache[token] = tok_rng.standard_normal(dim) * 0.4
        return base_cache[token]

    def embed(tokens: list[str], occ_idx: int, occ_sign: float, noise_key: int) -> np.ndarray:
        lower = {t.lower() for t in tokens}
        ctx = 1.0 if lower & lexicon.male_pronouns else -1.0
        noise_rng = np.random.default_rng(noise_key)
        rows = []
        for j, tok in enumerate(tokens):
            v = base(tok.lower()) + 0.6 * ctx * g_ctx + 0.05 * noise_rng.standard_normal(dim)
            if j == occ_idx:
                v = v + 0.3 * occ_sign * g_occ
            rows.append(v)
        return np.asarray(rows, dtype=np.float32)

    entries_a = []
    entries_b = []
    targets = []
    manifest_rows = []
    occs = M_OCCS[:6] + F_OCCS[:6]
    for i in range(24):
        occ = occs[i % len(occs)]
        occ_sign = 1.0 if occ in M_OCCS else -1.0
        male = i % 2 == 0
        pronoun = "he" if male else "she"
        tokens = ["the", occ, "said", pronoun, "was", "busy"]
        swapped = list(swap_sentence(tokens, lexicon).tokens)
        sid = f"s{i:02d}"
        occ_idx = 1
        entries_a.append((sid, tokens, embed(tokens, occ_idx, occ_sign, 1000 + i)))
        entries_b.append((sid, swapped, embed(swapped, occ_idx, occ_sign, 2000 + i)))
        targets.append(json.dumps({"sentence_id": sid, "token_index": occ_idx}))
        for store_name, toks in (("orig.cemb", tokens), ("swapped.cemb", swapped)):
            gender = "M" if {t.lower() for t in toks} & lexicon.male_pronouns else "F"
            manifest_rows.append(
                json.dumps(
                    {
                        "store": store_name,
                        "sentence_id": sid,
                        "token_index": occ_idx,
                        "gender": gender,
                    }
                )
            )
    write_store(entries_a, dim, FIXTURES / "orig.cemb", layer="top")
    write_store(entries_b, dim, FIXTURES / "swapped.cemb", layer="top")
    (FIXTURES / "targets.jsonl").write_text("\n".join(targets) + "\n", encoding="utf-8")
    (FIXTURES / "probe_manifest.jsonl").write_text(
        "\n".join(manifest_rows) + "\n", encoding="utf-8"
    )


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    gen_corpus_200()
    gen_docs_20()
    gen_winobias()
    gen_predictions()
    gen_stores()
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()

"""Gender lexicon: pronoun sets, stereotyped occupations, and swap rules.

The on-disk format is a UTF-8 TSV with one record per line. Record kinds:

    pronoun_m <tok>
    pronoun_f <tok>
    occ <surface> <M|F>              # surface may hold several space-separated tokens
    pair <male> <female>             # unambiguous 1:1 swap
    ambig <source> <t1[,t2]> <rule>  # directional swap resolved by a named rule

Lines starting with ``#`` are comments. Rule tags understood by the swapper:
``always`` (single target, unconditional), ``her`` (possessive/objective
disambiguation of "her"), ``poss_only`` (apply only when a pronoun POS tag is
present).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

from .errors import LexiconError, LexiconParseError

MALE = "M"
FEMALE = "F"

DEFAULT_MALE_PRONOUNS = frozenset({"he", "his", "him"})
DEFAULT_FEMALE_PRONOUNS = frozenset({"she", "her"})

KNOWN_RULE_TAGS = frozenset({"always", "her", "poss_only"})
_TARGET_COUNT = {"always": 1, "her": 2, "poss_only": 1}


@dataclass(frozen=True)
class GenderLexicon:
    """Validated word lists driving counting and swapping.

    ``occupations`` holds (token-tuple surface, stereotype) entries where the
    stereotype is ``"M"`` or ``"F"``. ``swap_pairs`` are (male, female) and
    bijective; ``ambiguous_rules`` are directional (source, targets, rule-tag)
    entries taking precedence over pair lookup.
    """

    male_pronouns: frozenset[str] = DEFAULT_MALE_PRONOUNS
    female_pronouns: frozenset[str] = DEFAULT_FEMALE_PRONOUNS
    occupations: tuple[tuple[tuple[str, ...], str], ...] = ()
    swap_pairs: tuple[tuple[str, str], ...] = ()
    ambiguous_rules: tuple[tuple[str, tuple[str, ...], str], ...] = ()

    def __post_init__(self):
        overlap = self.male_pronouns & self.female_pronouns
        if overlap:
            raise LexiconError(f"pronoun sets overlap: {sorted(overlap)}")
        males = [m for m, _ in self.swap_pairs]
        females = [f for _, f in self.swap_pairs]
        for name, column in (("male", males), ("female", females)):
            dupes = {t for t in column if column.count(t) > 1}
            if dupes:
                raise LexiconError(
                    f"duplicate {name} column among unambiguous pairs: {sorted(dupes)}"
                )
        seen_occ: dict[tuple[str, ...], str] = {}
        for surface, label in self.occupations:
            if label not in (MALE, FEMALE):
                raise LexiconError(f"bad stereotype label {label!r} for {surface}")
            if seen_occ.get(surface, label) != label:
                raise LexiconError(f"occupation {' '.join(surface)!r} has two labels")
            seen_occ[surface] = label
        pair_tokens = set(males) | set(females)
        seen_src: set[str] = set()
        for source, targets, tag in self.ambiguous_rules:
            if tag not in KNOWN_RULE_TAGS:
                raise LexiconError(f"unknown ambiguity rule tag {tag!r}")
            if len(targets) != _TARGET_COUNT[tag]:
                raise LexiconError(
                    f"rule {tag!r} for {source!r} needs {_TARGET_COUNT[tag]} target(s)"
                )
            if source in pair_tokens:
                raise LexiconError(f"{source!r} is both a pair column and an ambig source")
            if source in seen_src:
                raise LexiconError(f"duplicate ambig source {source!r}")
            seen_src.add(source)

    @cached_property
    def swap_map(self) -> dict[str, str]:
        """Bidirectional token map built from the unambiguous pairs."""
        m = {male: female for male, female in self.swap_pairs}
        m.update({female: male for male, female in self.swap_pairs})
        return m

    @cached_property
    def ambiguous_map(self) -> dict[str, tuple[tuple[str, ...], str]]:
        return {src: (targets, tag) for src, targets, tag in self.ambiguous_rules}

    @cached_property
    def lexicon_hash(self) -> str:
        """Stable content hash used to guard stats merging."""
        parts = [
            "m:" + ",".join(sorted(self.male_pronouns)),
            "f:" + ",".join(sorted(self.female_pronouns)),
        ]
        parts += sorted(f"occ:{' '.join(s)}:{lab}" for s, lab in self.occupations)
        parts += sorted(f"pair:{m}:{f}" for m, f in self.swap_pairs)
        parts += sorted(f"ambig:{s}:{','.join(t)}:{r}" for s, t, r in self.ambiguous_rules)
        return hashlib.sha256("\n".join(parts).encode("utf-8")).hexdigest()


def _parse_line(fields: list[str], line_no: int, state: dict) -> None:
    kind = fields[0]
    if kind in ("pronoun_m", "pronoun_f"):
        if len(fields) != 2:
            raise LexiconParseError(f"{kind} record needs 1 field", line_no)
        state[kind].add(fields[1].lower())
    elif kind == "occ":
        if len(fields) != 3:
            raise LexiconParseError("occ record needs 2 fields", line_no)
        surface = tuple(fields[1].lower().split())
        if not surface:
            raise LexiconParseError("empty occupation surface", line_no)
        label = fields[2].upper()
        if label not in (MALE, FEMALE):
            raise LexiconParseError(f"occupation label must be M or F, got {fields[2]!r}", line_no)
        state["occ"].append((surface, label))
    elif kind == "pair":
        if len(fields) != 3:
            raise LexiconParseError("pair record needs 2 fields", line_no)
        state["pair"].append((fields[1].lower(), fields[2].lower()))
    elif kind == "ambig":
        if len(fields) != 4:
            raise LexiconParseError("ambig record needs 3 fields", line_no)
        targets = tuple(t.lower() for t in fields[2].split(",") if t)
        state["ambig"].append((fields[1].lower(), targets, fields[3]))
    else:
        raise LexiconParseError(f"unknown record kind {kind!r}", line_no)


def load_lexicon(path: str | Path) -> GenderLexicon:
    """Parse and validate a lexicon TSV file."""
    state: dict = {"pronoun_m": set(), "pronoun_f": set(), "occ": [], "pair": [], "ambig": []}
    n_records = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = [f.strip() for f in line.split("\t")]
            _parse_line(fields, line_no, state)
            n_records += 1
    if n_records == 0:
        raise LexiconError(f"{path}: empty lexicon (no pronouns defined)")
    male = frozenset(state["pronoun_m"]) or DEFAULT_MALE_PRONOUNS
    female = frozenset(state["pronoun_f"]) or DEFAULT_FEMALE_PRONOUNS
    return GenderLexicon(
        male_pronouns=male,
        female_pronouns=female,
        occupations=tuple(state["occ"]),
        swap_pairs=tuple(state["pair"]),
        ambiguous_rules=tuple(state["ambig"]),
    )


def default_lexicon_path() -> Path:
    return Path(resources.files("biascope").joinpath("data/default_lexicon.tsv"))  # type: ignore[arg-type]


def load_default_lexicon() -> GenderLexicon:
    """The shipped lexicon: pronouns, WinoBias occupations, ~120 swap pairs."""
    return load_lexicon(default_lexicon_path())

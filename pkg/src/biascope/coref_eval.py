"""WinoBias evaluation: bracket parsing, coreference metrics, significance.

Metrics follow the reference definitions: MUC (Vilain link partitions), B3
(mention overlap mass), CEAFe (optimal one-to-one cluster alignment under
phi4 = 2|G n S| / (|G| + |S|)), and their unweighted mean as the CoNLL
score. Sets of documents are micro-aggregated: numerators and denominators
are summed before ratios are taken. 0/0 is defined as 0 throughout.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Optional, Sequence, TextIO

import numpy as np

from .assignment import max_similarity_assignment
from .errors import ClusteringError, ParseError

PRO = "pro"
ANTI = "anti"
SEMANTICS_ONLY = "semantics_only"
SYNTACTIC_CUES = "syntactic_cues"

METRICS = ("muc", "b3", "ceafe", "conll")

PRONOUN_TOKENS = frozenset(
    {"he", "she", "his", "her", "him", "hers", "himself", "herself"}
)

_AR_BLOCK = 1000  # rounds per seeded block; fixed so results are worker-count independent


@dataclass(frozen=True)
class Clustering:
    """A partition of mentions into clusters."""

    clusters: tuple[frozenset, ...]

    @classmethod
    def from_iterable(cls, clusters: Iterable[Iterable[Hashable]]) -> "Clustering":
        out = []
        seen: set = set()
        for cluster in clusters:
            members = list(cluster)
            if not members:
                raise ClusteringError("empty cluster")
            for m in members:
                if m in seen:
                    raise ClusteringError(f"mention {m!r} appears in more than one cluster")
                seen.add(m)
            if len(set(members)) != len(members):
                raise ClusteringError("duplicate mention within a cluster")
            out.append(frozenset(members))
        return cls(tuple(out))

    def mentions(self) -> set:
        return {m for c in self.clusters for m in c}


@dataclass(frozen=True)
class WinoBiasInstance:
    instance_id: str
    tokens: tuple[str, ...]
    pronoun_span: tuple[int, int]
    occupation_span: tuple[int, int]
    condition: str  # "pro" | "anti"
    task_type: str  # "semantics_only" | "syntactic_cues"

    @property
    def gold_pair(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return (self.pronoun_span, self.occupation_span)

    def gold_clustering(self) -> Clustering:
        return Clustering.from_iterable([[self.pronoun_span, self.occupation_span]])


def _parse_bracketed_line(line: str, line_no: int) -> tuple[list[str], list[tuple[int, int]]]:
    raw_tokens = line.split()
    if raw_tokens and raw_tokens[0].isdigit():
        index_token: Optional[str] = raw_tokens[0]
        raw_tokens = raw_tokens[1:]
    else:
        index_token = None
    tokens: list[str] = []
    spans: list[tuple[int, int]] = []
    open_start: Optional[int] = None
    for raw in raw_tokens:
        opens = raw.startswith("[")
        closes = raw.endswith("]")
        word = raw.lstrip("[").rstrip("]")
        if not word:
            raise ParseError(f"empty bracketed token {raw!r}", line_no)
        if opens:
            if open_start is not None:
                raise ParseError("nested '[' bracket", line_no)
            open_start = len(tokens)
        tokens.append(word)
        if closes:
            if open_start is None:
                raise ParseError("']' without matching '['", line_no)
            spans.append((open_start, len(tokens) - 1))
            open_start = None
    if open_start is not None:
        raise ParseError("unclosed '[' bracket", line_no)
    if index_token is not None:
        tokens_id = index_token
    else:
        tokens_id = f"L{line_no}"
    if len(spans) != 2:
        raise ParseError(f"expected exactly 2 bracketed spans, found {len(spans)}", line_no)
    return [tokens_id] + tokens, spans


def parse_winobias(
    source: str | Path | TextIO, condition: str, task_type: str
) -> list[WinoBiasInstance]:
    """One instance per non-empty line; brackets mark the gold mention pair."""
    own = isinstance(source, (str, Path))
    fh: TextIO = open(source, encoding="utf-8") if own else source  # type: ignore[arg-type]
    instances = []
    try:
        for line_no, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            packed, spans = _parse_bracketed_line(line, line_no)
            instance_id, tokens = packed[0], tuple(packed[1:])
            pronoun_spans = [
                sp for sp in spans if sp[0] == sp[1] and tokens[sp[0]].lower() in PRONOUN_TOKENS
            ]
            if not pronoun_spans:
                raise ParseError("neither bracketed span is a single pronoun", line_no)
            if len(pronoun_spans) == 2:
                raise ParseError("both bracketed spans are pronouns", line_no)
            pronoun_span = pronoun_spans[0]
            occupation_span = spans[0] if spans[1] == pronoun_span else spans[1]
            instances.append(
                WinoBiasInstance(
                    instance_id=instance_id,
                    tokens=tokens,
                    pronoun_span=pronoun_span,
                    occupation_span=occupation_span,
                    condition=condition,
                    task_type=task_type,
                )
            )
    finally:
        if own:
            fh.close()
    return instances


def load_predictions(path: str | Path) -> dict[str, Clustering]:
    """JSONL of {"instance_id", "clusters": [[[start, end], ...], ...]}."""
    out: dict[str, Clustering] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
                instance_id = rec["instance_id"]
                clusters = [
                    [(int(s), int(e)) for s, e in cluster] for cluster in rec["clusters"]
                ]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad prediction record: {exc}", line_no) from exc
            if instance_id in out:
                raise ParseError(f"duplicate instance id {instance_id!r}", line_no)
            try:
                out[instance_id] = Clustering.from_iterable(clusters)
            except ClusteringError as exc:
                raise ParseError(str(exc), line_no) from exc
    return out


@dataclass
class PRCounts:
    """Micro-aggregable precision/recall numerators and denominators."""

    p_num: float = 0.0
    p_den: float = 0.0
    r_num: float = 0.0
    r_den: float = 0.0

    def __iadd__(self, other: "PRCounts") -> "PRCounts":
        self.p_num += other.p_num
        self.p_den += other.p_den
        self.r_num += other.r_num
        self.r_den += other.r_den
        return self

    def prf(self) -> tuple[float, float, float]:
        """(precision, recall, F1) in percent; 0/0 ratios are 0."""
        p = self.p_num / self.p_den if self.p_den > 0 else 0.0
        r = self.r_num / self.r_den if self.r_den > 0 else 0.0
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return 100.0 * p, 100.0 * r, 100.0 * f1


def _mention_map(clustering: Clustering) -> dict:
    return {m: i for i, c in enumerate(clustering.clusters) for m in c}


def _vilain(a: Clustering, b_map: dict) -> tuple[float, float]:
    num = 0
    den = 0
    for cluster in a.clusters:
        partitions = {b_map[m] for m in cluster if m in b_map}
        unaligned = sum(1 for m in cluster if m not in b_map)
        num += len(cluster) - len(partitions) - unaligned
        den += len(cluster) - 1
    return float(num), float(den)


def muc_counts(gold: Clustering, system: Clustering) -> PRCounts:
    r_num, r_den = _vilain(gold, _mention_map(system))
    p_num, p_den = _vilain(system, _mention_map(gold))
    return PRCounts(p_num, p_den, r_num, r_den)


def b3_counts(gold: Clustering, system: Clustering) -> PRCounts:
    overlap_by_pair: dict[tuple[int, int], int] = {}
    gold_map = _mention_map(gold)
    for sj, s_cluster in enumerate(system.clusters):
        for m in s_cluster:
            gi = gold_map.get(m)
            if gi is not None:
                key = (gi, sj)
                overlap_by_pair[key] = overlap_by_pair.get(key, 0) + 1
    p_num = sum(
        ov * ov / len(system.clusters[sj]) for (gi, sj), ov in overlap_by_pair.items()
    )
    r_num = sum(
        ov * ov / len(gold.clusters[gi]) for (gi, sj), ov in overlap_by_pair.items()
    )
    p_den = float(sum(len(c) for c in system.clusters))
    r_den = float(sum(len(c) for c in gold.clusters))
    return PRCounts(p_num, p_den, r_num, r_den)


def phi4(a: frozenset, b: frozenset) -> float:
    if not a or not b:
        return 0.0
    return 2.0 * len(a & b) / (len(a) + len(b))


def ceafe_counts(gold: Clustering, system: Clustering) -> PRCounts:
    if not gold.clusters or not system.clusters:
        total = 0.0
    else:
        sim = np.array(
            [[phi4(g, s) for s in system.clusters] for g in gold.clusters]
        )
        total, _ = max_similarity_assignment(sim)
    return PRCounts(total, float(len(system.clusters)), total, float(len(gold.clusters)))


_COUNTERS = {"muc": muc_counts, "b3": b3_counts, "ceafe": ceafe_counts}


def _aggregate(
    pairs: Iterable[tuple[Clustering, Clustering]]
) -> dict[str, PRCounts]:
    totals = {name: PRCounts() for name in _COUNTERS}
    for gold, system in pairs:
        for name, counter in _COUNTERS.items():
            totals[name] += counter(gold, system)
    return totals


def _scores_from_counts(totals: dict[str, PRCounts]) -> dict[str, tuple[float, float, float]]:
    scores = {name: counts.prf() for name, counts in totals.items()}
    scores["conll"] = tuple(
        sum(scores[name][i] for name in ("muc", "b3", "ceafe")) / 3.0 for i in range(3)
    )
    return scores


def score(
    gold: Clustering, system: Clustering, metric: str = "conll"
) -> tuple[float, float, float]:
    """(precision, recall, F1) in percent for one document."""
    return score_many([(gold, system)], metric)


def score_many(
    pairs: Sequence[tuple[Clustering, Clustering]], metric: str = "conll"
) -> tuple[float, float, float]:
    """Micro-aggregated (precision, recall, F1) in percent over documents."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    return _scores_from_counts(_aggregate(pairs))[metric]


def instance_score(gold: Clustering, system: Clustering, metric: str = "conll") -> float:
    """Single-instance score in [0, 1], used as the paired AR-test statistic."""
    return score(gold, system, metric)[2] / 100.0


def ar_test(
    paired_scores: Sequence[tuple[float, float]],
    iterations: int = 10_000,
    seed: int = 0,
    workers: int = 1,
) -> float:
    """Approximate randomization p-value for the paired score difference.

    Statistic: |mean(first) - mean(second)|. Each round independently swaps
    every pair with probability 1/2; p = (#rounds with statistic >= observed
    + 1) / (iterations + 1). Rounds are drawn in fixed-size blocks with
    per-block derived seeds, so the result does not depend on ``workers``.
    """
    if len(paired_scores) == 0:
        raise ValueError("empty pairing")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    pairs = np.asarray(paired_scores, dtype=np.float64)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError(f"expected (n, 2) paired scores, got shape {pairs.shape}")
    if np.any(pairs < 0.0) or np.any(pairs > 1.0):
        raise ValueError("paired scores must lie in [0, 1]")
    diffs = pairs[:, 0] - pairs[:, 1]
    observed = abs(float(diffs.mean()))

    n_blocks = (iterations + _AR_BLOCK - 1) // _AR_BLOCK

    def run_block(block: int) -> int:
        rounds = min(_AR_BLOCK, iterations - block * _AR_BLOCK)
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(block,)))
        signs = 1.0 - 2.0 * (rng.random((rounds, diffs.size)) < 0.5)
        stats = np.abs((signs * diffs).mean(axis=1))
        return int(np.sum(stats >= observed))

    if workers <= 1:
        hits = sum(run_block(b) for b in range(n_blocks))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(run_block, range(n_blocks)))
    return (hits + 1) / (iterations + 1)


@dataclass
class EvalReport:
    """Pro/anti comparison in Table-2 layout (percentages, one decimal)."""

    metric: str
    n_pro: int
    n_anti: int
    pro: dict[str, dict[str, float]]
    anti: dict[str, dict[str, float]]
    pro_f1: float
    anti_f1: float
    avg_f1: float
    abs_diff: float
    p_value: float
    ar_iterations: int
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "metric": self.metric,
            "instance_counts": {"pro": self.n_pro, "anti": self.n_anti},
            "pro": self.pro,
            "anti": self.anti,
            "pro_f1": self.pro_f1,
            "anti_f1": self.anti_f1,
            "avg_f1": self.avg_f1,
            "abs_diff": self.abs_diff,
            "p_value": self.p_value,
            "ar_iterations": self.ar_iterations,
            "seed": self.seed,
        }

    def csv_row(self, condition_label: str, subset_label: str) -> str:
        return (
            f"{condition_label},{subset_label},{self.pro_f1:.1f},{self.anti_f1:.1f},"
            f"{self.avg_f1:.1f},{self.abs_diff:.1f},{self.p_value:.6g}"
        )


def _check_system(instance: WinoBiasInstance, system: Clustering) -> None:
    n = len(instance.tokens)
    for mention in system.mentions():
        start, end = mention
        if not (0 <= start <= end < n):
            raise ClusteringError(
                f"instance {instance.instance_id!r}: system span {mention} out of bounds"
            )


def bias_report(
    pro: Sequence[tuple[WinoBiasInstance, Clustering]],
    anti: Sequence[tuple[WinoBiasInstance, Clustering]],
    metric: str = "conll",
    iterations: int = 10_000,
    seed: int = 0,
    workers: int = 1,
) -> EvalReport:
    """Score paired pro/anti predictions and test the difference for significance."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    pro_ids = [inst.instance_id for inst, _ in pro]
    anti_ids = [inst.instance_id for inst, _ in anti]
    if len(set(pro_ids)) != len(pro_ids) or len(set(anti_ids)) != len(anti_ids):
        raise ClusteringError("duplicate instance ids within a condition")
    unpaired = set(pro_ids) ^ set(anti_ids)
    if unpaired:
        raise ClusteringError(f"unpaired instance ids: {sorted(unpaired)}")
    for inst, system in list(pro) + list(anti):
        _check_system(inst, system)

    def condition_scores(items):
        totals = _aggregate((inst.gold_clustering(), system) for inst, system in items)
        return _scores_from_counts(totals)

    pro_scores = condition_scores(pro)
    anti_scores = condition_scores(anti)

    anti_by_id = {inst.instance_id: (inst, system) for inst, system in anti}
    paired = []
    for inst, system in pro:
        anti_inst, anti_system = anti_by_id[inst.instance_id]
        paired.append(
            (
                instance_score(inst.gold_clustering(), system, metric),
                instance_score(anti_inst.gold_clustering(), anti_system, metric),
            )
        )
    p_value = ar_test(paired, iterations=iterations, seed=seed, workers=workers)

    pro_f1 = pro_scores[metric][2]
    anti_f1 = anti_scores[metric][2]

    def rounded(scores):
        return {
            name: {
                "precision": round(scores[name][0], 1),
                "recall": round(scores[name][1], 1),
                "f1": round(scores[name][2], 1),
            }
            for name in METRICS
        }

    return EvalReport(
        metric=metric,
        n_pro=len(pro),
        n_anti=len(anti),
        pro=rounded(pro_scores),
        anti=rounded(anti_scores),
        pro_f1=round(pro_f1, 1),
        anti_f1=round(anti_f1, 1),
        avg_f1=round((pro_f1 + anti_f1) / 2.0, 1),
        abs_diff=round(abs(pro_f1 - anti_f1), 1),
        p_value=p_value,
        ar_iterations=iterations,
        seed=seed,
    )

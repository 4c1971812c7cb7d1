"""Command-line entry point wiring the analyses and mitigations together.

Subcommands: stats, swap, augment, pca, probe-train, probe-eval, neutralize,
eval, audit. All outputs are written atomically (temp file + rename) and are
byte-deterministic for fixed inputs and seed. Errors print one
machine-parsable line to stderr: usage problems exit 2, everything else 1.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import conll, corpus_stats, coref_eval, neutralize, probe, subspace
from .errors import BiascopeError
from .genderswap import augment_corpus, swap_coref_document, swap_sentence
from .lexicon import GenderLexicon, default_lexicon_path, load_lexicon
from .store import align_pair, open_store


def _atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _resolve_out(args, name: str) -> Path:
    path = Path(name)
    if path.is_absolute():
        return path
    return Path(args.out_dir) / path


def _require_inputs(*paths) -> None:
    missing = [str(p) for p in paths if p is not None and not Path(p).exists()]
    if missing:
        raise BiascopeError(f"missing input file(s): {', '.join(missing)}")


def _load_lexicon_arg(args) -> GenderLexicon:
    path = args.lexicon if args.lexicon else default_lexicon_path()
    _require_inputs(path)
    return load_lexicon(path)


# ---------------------------------------------------------------- subcommands


def _cmd_stats(args) -> int:
    _require_inputs(args.corpus)
    lexicon = _load_lexicon_arg(args)
    sentences = list(corpus_stats.iter_corpus(args.corpus, pretokenized=args.pretokenized))
    stats = corpus_stats.scan_sharded(sentences, lexicon, workers=args.threads)
    doc = stats.to_json_dict()
    doc["meta"] = {"cooc_counting": "all-pairs-per-sentence", "pretokenized": args.pretokenized}
    _atomic_write_text(_resolve_out(args, args.out), _dump_json(doc))
    return 0


def _cmd_swap(args) -> int:
    _require_inputs(args.infile)
    lexicon = _load_lexicon_arg(args)
    out_path = _resolve_out(args, args.out)
    if args.format == "text":
        lines = []
        with open(args.infile, encoding="utf-8") as fh:
            for line in fh:
                tokens = line.split()
                if not tokens:
                    lines.append("")
                    continue
                lines.append(" ".join(swap_sentence(tokens, lexicon).tokens))
        _atomic_write_text(out_path, "\n".join(lines) + "\n")
    else:
        docs = conll.read_documents(args.infile)
        swapped = [swap_coref_document(d, lexicon, anonymize=args.anonymize) for d in docs]
        buf = io.StringIO()
        conll.write_documents(swapped, buf)
        _atomic_write_text(out_path, buf.getvalue())
    return 0


def _cmd_augment(args) -> int:
    _require_inputs(args.infile)
    lexicon = _load_lexicon_arg(args)
    docs = conll.read_documents(args.infile)
    augmented = augment_corpus(docs, lexicon, anonymize=args.anonymize)
    buf = io.StringIO()
    conll.write_documents(augmented, buf)
    _atomic_write_text(_resolve_out(args, args.out), buf.getvalue())
    return 0


def _load_targets(path: Path) -> dict[str, int]:
    targets: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
                targets[rec["sentence_id"]] = int(rec["token_index"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise BiascopeError(f"{path}:{line_no}: bad target record: {exc}") from exc
    if not targets:
        raise BiascopeError(f"{path}: no target records")
    return targets


def _context_gender(tokens, lexicon: GenderLexicon) -> str | None:
    lower = {t.lower() for t in tokens}
    has_m = bool(lower & lexicon.male_pronouns)
    has_f = bool(lower & lexicon.female_pronouns)
    if has_m and not has_f:
        return "M"
    if has_f and not has_m:
        return "F"
    return None


def _subspace_analysis(args, lexicon: GenderLexicon):
    """Shared by `pca` and `audit`: difference PCA plus 2-D scatter rows."""
    store_a = open_store(args.pairs_a)
    store_b = open_store(args.pairs_b)
    targets = _load_targets(Path(args.targets))
    pairs = []
    for sid in store_a.sentence_ids():
        if sid in targets:
            pairs.append(align_pair(store_a, store_b, sid))
    if not pairs:
        raise BiascopeError("no sentence ids shared by the stores and the targets file")
    diff = subspace.difference_matrix(pairs, targets)
    d = diff.rows.shape[1]
    k = max(1, min(args.k, d))
    result = subspace.pca(diff, k=k, center=not args.no_center)
    scatter_rows = []
    if k >= 2:
        for pair in pairs:
            t = targets[pair.sentence_id]
            for tokens, vectors in ((pair.tokens_a, pair.vectors_a), (pair.tokens_b, pair.vectors_b)):
                gender = _context_gender(tokens, lexicon)
                if gender is None:
                    continue
                coords = subspace.project(vectors[t], result, 2)[0]
                scatter_rows.append(
                    (pair.sentence_id, tokens[t], gender, float(coords[0]), float(coords[1]))
                )
    return diff, result, scatter_rows


def _cmd_pca(args) -> int:
    _require_inputs(args.pairs_a, args.pairs_b, args.targets)
    lexicon = _load_lexicon_arg(args)
    _diff, result, scatter_rows = _subspace_analysis(args, lexicon)
    scree = io.StringIO()
    subspace.write_scree_csv(result, scree)
    _atomic_write_text(_resolve_out(args, "scree.csv"), scree.getvalue())
    scatter = io.StringIO()
    subspace.write_scatter_csv(scatter_rows, scatter)
    _atomic_write_text(_resolve_out(args, "scatter.csv"), scatter.getvalue())
    return 0


def _cmd_probe_train(args) -> int:
    _require_inputs(args.dataset)
    X, y, _groups = probe.load_probe_dataset(args.dataset)
    base = probe.ProbeConfig(
        nu=args.nu, gamma=args.gamma, seed=args.seed, standardize=args.standardize
    )
    tuning = None
    if args.tune:
        grid = [float(v) for v in args.grid.split(",")] if args.grid else list(
            round(0.1 * i, 1) for i in range(1, 11)
        )
        config, tuning = probe.tune_nu(
            X, y, grid=grid, heldout_fraction=args.heldout, seed=args.seed, base_config=base
        )
    else:
        config = base
    model = probe.train(X, y, config)
    probe.save_model(model, _resolve_out(args, args.out))
    if args.report:
        doc = {"config": {"nu": config.nu, "seed": args.seed}, "tuning": tuning,
               "metadata": model.metadata}
        _atomic_write_text(_resolve_out(args, args.report), _dump_json(doc))
    return 0


def _cmd_probe_eval(args) -> int:
    _require_inputs(args.model, args.dataset)
    model = probe.load_model(args.model)
    X, y, groups = probe.load_probe_dataset(args.dataset)
    report = probe.evaluate_by_group(model, X, y, groups)
    _atomic_write_text(_resolve_out(args, args.out), _dump_json(report))
    return 0


def _cmd_neutralize(args) -> int:
    _require_inputs(args.store, args.swapped_store)
    store_a = open_store(args.store)
    store_b = open_store(args.swapped_store)
    neutralize.neutralize_store(store_a, store_b, _resolve_out(args, args.out))
    return 0


def _cmd_eval(args) -> int:
    _require_inputs(args.gold_pro, args.gold_anti, args.pred_pro, args.pred_anti)
    task = coref_eval.SEMANTICS_ONLY if args.task_type == "semantics" else coref_eval.SYNTACTIC_CUES
    pro_instances = coref_eval.parse_winobias(args.gold_pro, coref_eval.PRO, task)
    anti_instances = coref_eval.parse_winobias(args.gold_anti, coref_eval.ANTI, task)
    pred_pro = coref_eval.load_predictions(args.pred_pro)
    pred_anti = coref_eval.load_predictions(args.pred_anti)

    def attach(instances, preds, which):
        missing = [i.instance_id for i in instances if i.instance_id not in preds]
        if missing:
            raise BiascopeError(f"missing {which} predictions for instances: {missing}")
        return [(inst, preds[inst.instance_id]) for inst in instances]

    report = coref_eval.bias_report(
        attach(pro_instances, pred_pro, "pro"),
        attach(anti_instances, pred_anti, "anti"),
        metric=args.metric,
        iterations=args.rounds,
        seed=args.seed,
        workers=args.threads,
    )
    _atomic_write_text(_resolve_out(args, args.out), _dump_json(report.to_json_dict()))
    if args.csv:
        header = "condition,subset,pro,anti,avg,abs_diff,p_value\n"
        row = report.csv_row(args.condition_label, args.task_type)
        _atomic_write_text(_resolve_out(args, args.csv), header + row + "\n")
    return 0


def _cmd_audit(args) -> int:
    sections: dict[str, dict] = {}
    failed = False

    def run_section(name, provided, fn):
        nonlocal failed
        if not provided:
            sections[name] = {"status": "skipped"}
            return
        try:
            sections[name] = {"status": "ok", **fn()}
        except (BiascopeError, ValueError, OSError) as exc:
            sections[name] = {"status": "failed", "error": str(exc)}
            failed = True

    lexicon = _load_lexicon_arg(args)

    def corpus_section():
        _require_inputs(args.corpus)
        sentences = list(
            corpus_stats.iter_corpus(args.corpus, pretokenized=args.pretokenized)
        )
        stats = corpus_stats.scan_sharded(sentences, lexicon, workers=args.threads)
        return {"stats": stats.to_json_dict()}

    def subspace_section():
        _require_inputs(args.pairs_a, args.pairs_b, args.targets)
        diff, centered, scatter_rows = _subspace_analysis(args, lexicon)
        k = centered.components.shape[0]
        uncentered = subspace.pca(diff, k=k, center=False)
        summary: dict[str, dict] = {}
        for sid, surface, gender, pc1, pc2 in scatter_rows:
            cell = summary.setdefault(gender, {"count": 0, "pc1_sum": 0.0, "pc2_sum": 0.0})
            cell["count"] += 1
            cell["pc1_sum"] += pc1
            cell["pc2_sum"] += pc2
        scatter_summary = {
            gender: {
                "count": cell["count"],
                "pc1_mean": cell["pc1_sum"] / cell["count"],
                "pc2_mean": cell["pc2_sum"] / cell["count"],
            }
            for gender, cell in sorted(summary.items())
        }
        return {
            "n_pairs": diff.rows.shape[0],
            "k": k,
            "explained_ratio_centered": centered.explained_ratio.tolist(),
            "explained_ratio_uncentered": uncentered.explained_ratio.tolist(),
            "scatter_summary": scatter_summary,
        }

    def probe_section():
        _require_inputs(args.probe_dataset)
        X, y, groups = probe.load_probe_dataset(args.probe_dataset)
        groups_arr = np.asarray(groups)
        rng = np.random.default_rng(args.seed)
        heldout_idx: list[int] = []
        train_idx: list[int] = []
        for cls in (1, -1):
            cls_idx = np.flatnonzero(y == cls)
            perm = cls_idx[rng.permutation(cls_idx.size)]
            n_held = max(1, min(int(round(0.2 * cls_idx.size)), cls_idx.size - 1))
            heldout_idx.extend(perm[:n_held].tolist())
            train_idx.extend(perm[n_held:].tolist())
        heldout_idx.sort()
        train_idx.sort()
        config = probe.ProbeConfig(nu=args.nu, seed=args.seed)
        model = probe.train(X[train_idx], y[train_idx], config)
        report = probe.evaluate_by_group(
            model, X[heldout_idx], y[heldout_idx], groups_arr[heldout_idx]
        )
        return {
            "nu": config.nu,
            "gamma": model.gamma,
            "train_size": len(train_idx),
            "heldout_size": len(heldout_idx),
            "heldout_accuracy": report,
        }

    run_section("corpus_stats", bool(args.corpus), corpus_section)
    run_section(
        "subspace", bool(args.pairs_a and args.pairs_b and args.targets), subspace_section
    )
    run_section("probe", bool(args.probe_dataset), probe_section)

    if all(s["status"] == "skipped" for s in sections.values()):
        raise BiascopeError("audit needs at least one of: corpus, store pair, probe dataset")
    doc = {"seed": args.seed, "sections": sections}
    _atomic_write_text(_resolve_out(args, args.out), _dump_json(doc))
    if failed and args.strict:
        print("error: audit section failed (see report)", file=sys.stderr)
        return 1
    return 0


# --------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biascope",
        description="Gender-bias diagnostics for contextual embeddings",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    common.add_argument("--threads", type=int, default=1, help="worker count (default 1)")
    common.add_argument("--out-dir", default=".", help="directory for relative outputs")
    common.add_argument("--strict", action="store_true", help="fail hard on section errors")
    common.add_argument("--lexicon", default=None, help="lexicon TSV (default: shipped)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", parents=[common], help="corpus pronoun/occupation counts")
    p.add_argument("--corpus", required=True)
    p.add_argument("--pretokenized", action="store_true")
    p.add_argument("--out", default="stats.json")
    p.set_defaults(handler=_cmd_stats)

    p = sub.add_parser("swap", parents=[common], help="gender-swap a corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=("text", "conll"), default="text")
    p.add_argument("--anonymize", action="store_true")
    p.add_argument("--out", default="swapped.txt")
    p.set_defaults(handler=_cmd_swap)

    p = sub.add_parser("augment", parents=[common], help="union augmentation of CoNLL docs")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--anonymize", action="store_true")
    p.add_argument("--out", default="augmented.conll")
    p.set_defaults(handler=_cmd_augment)

    p = sub.add_parser("pca", parents=[common], help="gender-subspace PCA scree + scatter")
    p.add_argument("--pairs-a", required=True, help="store of original sentences")
    p.add_argument("--pairs-b", required=True, help="store of swapped sentences")
    p.add_argument("--targets", required=True, help="JSONL sentence_id -> token_index")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--no-center", action="store_true")
    p.set_defaults(handler=_cmd_pca)

    p = sub.add_parser("probe-train", parents=[common], help="train the gender probe")
    p.add_argument("--dataset", required=True, help="probe dataset manifest JSONL")
    p.add_argument("--nu", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--tune", action="store_true", help="grid-search nu")
    p.add_argument("--grid", default=None, help="comma-separated nu grid")
    p.add_argument("--heldout", type=float, default=0.2)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--out", default="probe_model.json")
    p.add_argument("--report", default=None)
    p.set_defaults(handler=_cmd_probe_train)

    p = sub.add_parser("probe-eval", parents=[common], help="per-gender probe accuracy")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", default="probe_eval.json")
    p.set_defaults(handler=_cmd_probe_eval)

    p = sub.add_parser("neutralize", parents=[common], help="average paired stores")
    p.add_argument("--store", required=True)
    p.add_argument("--swapped-store", required=True)
    p.add_argument("--out", default="neutralized.cemb")
    p.set_defaults(handler=_cmd_neutralize)

    p = sub.add_parser("eval", parents=[common], help="WinoBias pro/anti report")
    p.add_argument("--gold-pro", required=True)
    p.add_argument("--gold-anti", required=True)
    p.add_argument("--pred-pro", required=True)
    p.add_argument("--pred-anti", required=True)
    p.add_argument("--metric", choices=coref_eval.METRICS, default="conll")
    p.add_argument("--task-type", choices=("semantics", "syntactic"), default="semantics")
    p.add_argument("--condition-label", default="system")
    p.add_argument("--rounds", type=int, default=10_000)
    p.add_argument("--out", default="report.json")
    p.add_argument("--csv", default=None)
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("audit", parents=[common], help="combined corpus/subspace/probe audit")
    p.add_argument("--corpus", default=None)
    p.add_argument("--pretokenized", action="store_true")
    p.add_argument("--pairs-a", default=None)
    p.add_argument("--pairs-b", default=None)
    p.add_argument("--targets", default=None)
    p.add_argument("--probe-dataset", default=None)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--no-center", action="store_true")
    p.add_argument("--nu", type=float, default=0.5)
    p.add_argument("--out", default="audit.json")
    p.set_defaults(handler=_cmd_audit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except BiascopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

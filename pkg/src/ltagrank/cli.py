"""Command line interface: check, parse, rank, eval, split, train."""

from __future__ import annotations

import argparse
import json
import sys

from . import grammar as gmod
from . import heuristics as hmod
from . import parseval, training
from .pipeline import PipelineConfig, analyze_sentence
from .tagging import read_tagged_corpus


class CliError(Exception):
    pass


def _load_grammar(args) -> gmod.Grammar:
    return gmod.load_grammar(args.grammar, getattr(args, "freq", None))


def _load_registry(args) -> hmod.HeuristicRegistry:
    if getattr(args, "registry", None):
        return hmod.load_registry(args.registry)
    return hmod.default_registry()


def _load_weights(args, registry) -> list[float]:
    if getattr(args, "weights", None):
        return hmod.load_weights(args.weights, registry)
    return hmod.uniform_weights(registry)


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(
        start=args.start,
        filter_k=None if args.filter_k == 0 else args.filter_k,
        adjunction_cap=None if args.adjunction_cap == 0 else args.adjunction_cap,
        check_features=args.check_features,
        open_class_fallback=args.open_class_fallback,
        max_parses=args.max_parses,
    )


def _write_report(path, records) -> None:
    if not path:
        return
    with open(path, "w") as handle:
        for record in records:
            handle.write(json.dumps(record) + "\n")


def _config_record(args) -> dict:
    config = {key: value for key, value in sorted(vars(args).items())
              if key not in ("func",) and not callable(value)}
    config = {key: str(value) if not isinstance(
        value, (int, float, bool, str, type(None))) else value
        for key, value in config.items()}
    return {"type": "config", "command": args.command, **config}


def _table(headers, rows) -> str:
    widths = [len(h) for h in headers]
    text_rows = [[str(cell) for cell in row] for row in rows]
    for row in text_rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    for row in text_rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines)


def _fmt(value: float) -> str:
    return f"{value:.2f}"


# ---------------------------------------------------------------------------
# commands

def cmd_check(args) -> int:
    try:
        grammar = _load_grammar(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except gmod.GrammarValidationError as exc:
        for issue in exc.issues:
            print(f"error: {issue}", file=sys.stderr)
        return 1
    except gmod.GrammarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    initial = sum(1 for t in grammar.trees.values() if t.kind == gmod.INITIAL)
    print(f"trees: {len(grammar.trees)} ({initial} initial,"
          f" {len(grammar.trees) - initial} auxiliary)")
    print(f"families: {len(grammar.families)}")
    print(f"lexicon entries: {len(grammar.lexicon)}")
    print(f"frequency entries: {len(grammar.freq.entries)}")
    return 0


def _analyze_corpus(args, grammar, registry, weights):
    sentences = read_tagged_corpus(args.corpus)
    config = _pipeline_config(args)
    return [analyze_sentence(grammar, sentence, registry, weights, config)
            for sentence in sentences]


def cmd_parse(args) -> int:
    grammar = _load_grammar(args)
    registry = _load_registry(args)
    weights = _load_weights(args, registry)
    analyses = _analyze_corpus(args, grammar, registry, weights)

    records = [_config_record(args)]
    parsed = 0
    parse_counts = []
    for index, analysis in enumerate(analyses):
        if analysis.parsed:
            parsed += 1
            parse_counts.append(analysis.derivation_count)
        top = analysis.parses[:args.top_k]
        records.append({
            "type": "sentence", "index": index, "words": analysis.words,
            "n_parses": analysis.derivation_count,
            "filter": analysis.report.to_dict() if analysis.report else None,
            "parses": [{"penalty": rp.penalty, "vector": list(rp.vector),
                        "bracketing": rp.derived.to_string(),
                        "derivation": rp.derivation.to_dict()} for rp in top],
        })
        status = f"{analysis.derivation_count} parses" if analysis.parsed else "NO PARSE"
        print(f"[{index}] {' '.join(analysis.words)} -> {status}")
    n = len(analyses)
    pct = 100.0 * parsed / n if n else 0.0
    avg = sum(parse_counts) / len(parse_counts) if parse_counts else 0.0
    records.append({"type": "summary", "n_sentences": n, "parsed_pct": pct,
                    "avg_parses": avg})
    print()
    print(_table(["# of Sentences", "% Parsed", "Av. # of Parses/Sent"],
                 [[n, _fmt(pct), _fmt(avg)]]))
    _write_report(args.report, records)
    return 0


def cmd_rank(args) -> int:
    grammar = _load_grammar(args)
    registry = _load_registry(args)
    weights = _load_weights(args, registry)
    analyses = _analyze_corpus(args, grammar, registry, weights)
    records = [_config_record(args)]
    for index, analysis in enumerate(analyses):
        print(f"[{index}] {' '.join(analysis.words)}")
        for rank_no, rp in enumerate(analysis.parses[:args.top_k], start=1):
            print(f"  {rank_no}. penalty={rp.penalty:g} {rp.derived.to_string()}")
        if not analysis.parses:
            print("  NO PARSE")
        records.append({"type": "sentence", "index": index,
                        "parses": [{"penalty": rp.penalty,
                                    "bracketing": rp.derived.to_string()}
                                   for rp in analysis.parses[:args.top_k]]})
    _write_report(args.report, records)
    return 0


def _read_candidate_lines(path):
    with open(path) as handle:
        return [line.rstrip("\n") for line in handle]


def cmd_eval(args) -> int:
    candidate_lines = _read_candidate_lines(args.parses)  # blank line = no parse
    gold_lines = [line for line in _read_candidate_lines(args.gold) if line.strip()]
    if len(candidate_lines) != len(gold_lines):
        print(f"error: {args.parses} has {len(candidate_lines)} sentences but"
              f" {args.gold} has {len(gold_lines)}; first unmatched index"
              f" {min(len(candidate_lines), len(gold_lines))}", file=sys.stderr)
        return 1
    flatten_cats = _flatten_categories(args)
    pairs = []
    for index, (cand_line, gold_line) in enumerate(zip(candidate_lines, gold_lines)):
        gold_tree = parseval.read_bracketed(gold_line)
        candidates = []
        for chunk in cand_line.split("|||"):
            chunk = chunk.strip()
            if chunk:
                tree = parseval.read_bracketed(chunk)
                if flatten_cats:
                    tree = parseval.flatten(tree, flatten_cats)
                candidates.append(tree)
        for tree in candidates:
            if len(tree.leaves()) != len(gold_tree.leaves()):
                print(f"error: sentence {index}: candidate has"
                      f" {len(tree.leaves())} words, gold has"
                      f" {len(gold_tree.leaves())}", file=sys.stderr)
                return 1
        pairs.append((candidates, gold_tree))
    scores = parseval.score_corpus(pairs, top_k=args.top_k,
                                   aggregation=args.aggregation,
                                   mode=args.recall_mode)
    print(_table(
        ["# of sentences", "Zero Crossing Bracket %", "Crossing Bracket Average",
         "Recall %", "Precision %"],
        [[scores.n_sentences, _fmt(scores.zero_crossing_pct),
          _fmt(scores.crossing_avg), _fmt(scores.recall_pct),
          _fmt(scores.precision_pct)]]))
    if scores.coverage_failures:
        print(f"coverage failures: {scores.coverage_failures}")
    _write_report(args.report, [
        _config_record(args),
        {"type": "corpus", "n_sentences": scores.n_sentences,
         "coverage_failures": scores.coverage_failures,
         "zero_crossing_pct": scores.zero_crossing_pct,
         "crossing_avg": scores.crossing_avg, "recall_pct": scores.recall_pct,
         "precision_pct": scores.precision_pct}])
    return 0


def cmd_split(args) -> int:
    with open(args.corpus) as handle:
        n = sum(1 for line in handle if line.strip())
    proportions = _parse_proportions(args)
    spec = training.split(range(n), proportions, args.seed)
    print(f"train: {len(spec.train_ids)}  heldout: {len(spec.heldout_ids)}"
          f"  test: {len(spec.test_ids)}")
    _write_report(args.report, [
        _config_record(args),
        {"type": "split", "seed": spec.seed, "train": list(spec.train_ids),
         "heldout": list(spec.heldout_ids), "test": list(spec.test_ids)}])
    return 0


def _parse_proportions(args):
    text = args.sizes or args.ratios or "626,205,100"
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise CliError(f"bad proportions {text!r}")
    if len(values) != 3:
        raise CliError("proportions need exactly three comma-separated numbers")
    return values


def _flatten_categories(args):
    if not getattr(args, "flatten", None):
        return frozenset()
    return frozenset(c for c in args.flatten.split(",") if c)


def build_records(analyses, gold_trees, recall_mode, flatten_cats):
    """Cache each sentence's candidate vectors and gold metrics for training."""
    records = {}
    for index, (analysis, gold) in enumerate(zip(analyses, gold_trees)):
        candidates = []
        for rp in analysis.parses:
            tree = rp.derived.root
            scored = parseval.flatten(tree, flatten_cats) if flatten_cats else tree
            scores = parseval.evaluate_parse(scored, gold, recall_mode)
            candidates.append(training.Candidate(rp.vector, scores))
        records[index] = training.SentenceRecord(index, candidates)
    return records


def cmd_train(args) -> int:
    grammar = _load_grammar(args)
    registry = _load_registry(args)
    initial = _load_weights(args, registry)
    analyses = _analyze_corpus(args, grammar, registry, initial)
    gold_trees = parseval.read_bracketed_corpus(args.gold)
    if len(gold_trees) != len(analyses):
        print(f"error: corpus has {len(analyses)} sentences but gold has"
              f" {len(gold_trees)}; first unmatched index"
              f" {min(len(analyses), len(gold_trees))}", file=sys.stderr)
        return 1
    flatten_cats = _flatten_categories(args)
    records = build_records(analyses, gold_trees, args.recall_mode, flatten_cats)

    spec = training.split(range(len(records)), _parse_proportions(args),
                          args.split_seed if args.split_seed is not None else args.seed)
    config = training.TrainConfig(
        top_k=args.top_k, aggregation=args.aggregation,
        delta_scale=args.delta_scale, strike_limit=args.strike_limit,
        max_iterations=args.max_iterations, seed=args.seed,
        require_all_metrics=args.require_all_metrics)
    resume_state = training.read_log_state(args.resume) if args.resume else None
    result = training.train(records, spec, config, initial,
                            heuristic_names=registry.names(),
                            resume_state=resume_state)

    hmod.save_weights(args.weights_out, registry, result.weights)
    training.write_log(args.log, result, config, spec)

    rows = []
    for group_name, ids in (("HELD-OUT", spec.heldout_ids), ("TEST", spec.test_ids)):
        group = [records[sid] for sid in ids]
        for label, weights in (
                ("No heuristics", hmod.zero_weights(registry)),
                ("No preference", hmod.uniform_weights(registry)),
                ("Preferences Trained", result.weights)):
            scores = training.evaluate_set(group, weights, config)
            rows.append([group_name, label, _fmt(scores.zero_crossing_pct),
                         _fmt(scores.crossing_avg), _fmt(scores.recall_pct),
                         _fmt(scores.precision_pct)])
    print(_table(["Sentence Group", "Experiment", "Zero Crossing Bracket %",
                  "Crossing Bracket Average", "Recall %", "Precision %"], rows))
    print(f"\naccepted {result.state.accepted} of {result.state.attempts} attempts;"
          f" weights written to {args.weights_out}, log to {args.log}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing

def _add_grammar_flags(parser, freq_required=False):
    parser.add_argument("--grammar", required=True, help="grammar file")
    parser.add_argument("--freq", required=freq_required, default=None,
                        help="tree frequency table")
    parser.add_argument("--registry", default=None, help="heuristic registry file")
    parser.add_argument("--weights", default=None, help="heuristic weights file")


def _add_pipeline_flags(parser):
    parser.add_argument("--top-k", type=int, default=6, dest="top_k")
    parser.add_argument("--filter-k", type=int, default=3, dest="filter_k",
                        help="frequency filter size; 0 disables filtering")
    parser.add_argument("--start", default="S", help="start category")
    parser.add_argument("--adjunction-cap", type=int, default=3, dest="adjunction_cap",
                        help="max stacked adjunctions along a spine; 0 removes the cap")
    parser.add_argument("--max-parses", type=int, default=None, dest="max_parses",
                        help="cap on enumerated parses per sentence")
    parser.add_argument("--check-features", action="store_true", dest="check_features")
    parser.add_argument("--open-class-fallback", action="store_true",
                        dest="open_class_fallback",
                        help="give unknown words every tree their tags anchor")


def _add_eval_flags(parser):
    parser.add_argument("--aggregation", choices=parseval.AGGREGATIONS,
                        default="mean_of_k")
    parser.add_argument("--recall-mode", choices=parseval.RECALL_MODES,
                        default="standard", dest="recall_mode")
    parser.add_argument("--flatten", default=None,
                        help="comma-separated categories to flatten before scoring")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltagrank",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate a grammar file")
    p.add_argument("grammar")
    p.add_argument("--freq", default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("parse", help="parse a tagged corpus")
    _add_grammar_flags(p)
    _add_pipeline_flags(p)
    p.add_argument("corpus", help="tagged sentences, word/TAG tokens")
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("rank", help="print ranked parses with scores")
    _add_grammar_flags(p)
    _add_pipeline_flags(p)
    p.add_argument("corpus")
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval", help="score candidate parses against a gold treebank")
    p.add_argument("parses", help="one sentence per line; '|||' separates n-best parses")
    p.add_argument("--gold", required=True)
    p.add_argument("--top-k", type=int, default=6, dest="top_k")
    _add_eval_flags(p)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("split", help="random TRAIN/HELD-OUT/TEST partition")
    p.add_argument("corpus")
    p.add_argument("--sizes", default=None, help="exact sizes, e.g. 626,205,100")
    p.add_argument("--ratios", default=None, help="ratios, e.g. 6,2,1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train heuristic weights against a gold treebank")
    _add_grammar_flags(p)
    _add_pipeline_flags(p)
    _add_eval_flags(p)
    p.add_argument("corpus")
    p.add_argument("--gold", required=True)
    p.add_argument("--sizes", default=None)
    p.add_argument("--ratios", default=None)
    p.add_argument("--seed", type=int, default=0, help="perturbation seed")
    p.add_argument("--split-seed", type=int, default=None, dest="split_seed")
    p.add_argument("--delta-scale", type=float, default=0.5, dest="delta_scale")
    p.add_argument("--strike-limit", type=int, default=3, dest="strike_limit")
    p.add_argument("--max-iterations", type=int, default=10000, dest="max_iterations")
    p.add_argument("--require-all-metrics", action="store_true",
                   dest="require_all_metrics",
                   help="accept a step only if all three metrics improve")
    p.add_argument("--weights-out", default="weights.tsv", dest="weights_out")
    p.add_argument("--log", default="train.log")
    p.add_argument("--resume", default=None, help="continue from a training log")
    p.set_defaults(func=cmd_train)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, gmod.GrammarError, hmod.RegistryError, training.TrainingError,
            parseval.BracketFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Bracketing comparison: crossing brackets, recall, precision, flattening.

Candidate and gold bracketings are compared after normalization; by default
labels are stripped and single-word and whole-sentence spans dropped, each
step individually switchable.  Two recall conventions are supported:
"standard" is correct/gold, "paper_literal" is candidate/gold (a pure
constituent-count ratio, which can exceed 100 for over-bracketed parses).
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import mean

AGGREGATIONS = ("first", "best_of_k", "mean_of_k")
RECALL_MODES = ("standard", "paper_literal")


class BracketFormatError(ValueError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at character {position})"
        super().__init__(message)


@dataclass(frozen=True)
class SimpleNode:
    """A plain labeled tree with words at the leaves."""

    label: str
    children: tuple = ()  # SimpleNode | str

    def to_string(self) -> str:
        parts = [c.to_string() if isinstance(c, SimpleNode) else c for c in self.children]
        return "(" + self.label + " " + " ".join(parts) + ")"

    def leaves(self) -> list[str]:
        out = []
        for child in self.children:
            if isinstance(child, SimpleNode):
                out.extend(child.leaves())
            else:
                out.append(child)
        return out


def read_bracketed(text: str) -> SimpleNode:
    """Parse one Penn-style bracketed tree, e.g. ``(S (NP (N dogs)) (VP (V bark)))``."""
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in "()":
            tokens.append((ch, i))
            i += 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            tokens.append((text[i:j], i))
            i = j
    pos = 0

    def parse_node():
        nonlocal pos
        if pos >= len(tokens):
            raise BracketFormatError("unexpected end of input", len(text))
        token, where = tokens[pos]
        if token != "(":
            raise BracketFormatError(f"expected '(' but found {token!r}", where)
        pos += 1
        if pos >= len(tokens) or tokens[pos][0] in "()":
            raise BracketFormatError("missing node label", where)
        label = tokens[pos][0]
        pos += 1
        children = []
        while pos < len(tokens) and tokens[pos][0] != ")":
            if tokens[pos][0] == "(":
                children.append(parse_node())
            else:
                children.append(tokens[pos][0])
                pos += 1
        if pos >= len(tokens):
            raise BracketFormatError("missing ')'", where)
        pos += 1
        if not children:
            raise BracketFormatError(f"node {label!r} has no children", where)
        return SimpleNode(label, tuple(children))

    node = parse_node()
    if pos != len(tokens):
        raise BracketFormatError("trailing material after tree", tokens[pos][1])
    return node


def read_bracketed_corpus(path) -> list[SimpleNode]:
    trees = []
    with open(path) as handle:
        for raw in handle:
            line = raw.strip()
            if line:
                trees.append(read_bracketed(line))
    return trees


@dataclass(frozen=True)
class Bracketing:
    length: int
    spans: frozenset  # of (start, end, label or None)


def _coerce_node(tree):
    if isinstance(tree, str):
        return read_bracketed(tree)
    root = getattr(tree, "root", None)
    return root if root is not None else tree


def brackets_of(tree) -> Bracketing:
    """One labeled span per internal node, single-word and root spans included."""
    node = _coerce_node(tree)
    spans = []

    def visit(item, start):
        if isinstance(item, str):
            return start + 1
        position = start
        for child in item.children:
            position = visit(child, position)
        spans.append((start, position, item.label))
        return position

    length = visit(node, 0)
    return Bracketing(length, frozenset(spans))


def normalize(bracketing: Bracketing, unlabeled: bool = True,
              drop_single: bool = True, drop_whole: bool = True) -> Bracketing:
    spans = set()
    for start, end, label in bracketing.spans:
        if drop_single and end - start <= 1:
            continue
        if drop_whole and start == 0 and end == bracketing.length:
            continue
        spans.add((start, end, None if unlabeled else label))
    return Bracketing(bracketing.length, frozenset(spans))


def _coerce_normalized(tree, **flags) -> Bracketing:
    bracketing = tree if isinstance(tree, Bracketing) else brackets_of(tree)
    return normalize(bracketing, **flags)


def _crosses(a, b) -> bool:
    return (a[0] < b[0] < a[1] < b[1]) or (b[0] < a[0] < b[1] < a[1])


def _check_lengths(cand: Bracketing, gb: Bracketing) -> None:
    if cand.length != gb.length:
        raise ValueError(f"length mismatch: candidate {cand.length}, gold {gb.length}")


def _crossing_count(cand: Bracketing, gb: Bracketing) -> int:
    return sum(1 for span in cand.spans
               if any(_crosses(span, other) for other in gb.spans))


def _recall_precision(cand: Bracketing, gb: Bracketing, mode: str):
    if mode not in RECALL_MODES:
        raise ValueError(f"unknown recall mode {mode!r}")
    if not cand.spans and not gb.spans:
        return 100.0, 100.0
    if not cand.spans or not gb.spans:
        return 0.0, 0.0
    correct = len(cand.spans & gb.spans)
    precision = 100.0 * correct / len(cand.spans)
    if mode == "standard":
        recall = 100.0 * correct / len(gb.spans)
    else:
        recall = 100.0 * len(cand.spans) / len(gb.spans)
    return recall, precision


def crossing(candidate, gold, **flags) -> int:
    """Number of candidate spans that overlap some gold span without nesting."""
    cand = _coerce_normalized(candidate, **flags)
    gb = _coerce_normalized(gold, **flags)
    _check_lengths(cand, gb)
    return _crossing_count(cand, gb)


def recall_precision(candidate, gold, mode: str = "standard", **flags):
    """(recall %, precision %).  When both span sets are empty both metrics are
    100; when exactly one is empty both are 0."""
    cand = _coerce_normalized(candidate, **flags)
    gb = _coerce_normalized(gold, **flags)
    _check_lengths(cand, gb)
    return _recall_precision(cand, gb, mode)


@dataclass(frozen=True)
class EvalScores:
    crossing_count: float
    zero_crossing: bool
    recall_pct: float
    precision_pct: float
    candidate_count: float
    gold_count: float
    correct_count: float


def evaluate_parse(candidate, gold, mode: str = "standard", **flags) -> EvalScores:
    cand = _coerce_normalized(candidate, **flags)
    gb = _coerce_normalized(gold, **flags)
    _check_lengths(cand, gb)
    crossings = _crossing_count(cand, gb)
    recall, precision = _recall_precision(cand, gb, mode)
    correct = len(cand.spans & gb.spans)
    return EvalScores(float(crossings), crossings == 0, recall, precision,
                      float(len(cand.spans)), float(len(gb.spans)), float(correct))


def aggregate_scores(scores: list[EvalScores], aggregation: str) -> EvalScores:
    """Collapse the per-parse scores of one sentence into a single record."""
    if aggregation not in AGGREGATIONS:
        raise ValueError(f"unknown aggregation {aggregation!r}")
    if not scores:
        raise ValueError("no scores to aggregate")
    if aggregation == "first":
        return scores[0]
    if aggregation == "best_of_k":
        return min(scores, key=lambda s: (s.crossing_count, -s.recall_pct, -s.precision_pct))
    crossing_avg = mean(s.crossing_count for s in scores)
    return EvalScores(
        crossing_avg,
        crossing_avg == 0,
        mean(s.recall_pct for s in scores),
        mean(s.precision_pct for s in scores),
        mean(s.candidate_count for s in scores),
        mean(s.gold_count for s in scores),
        mean(s.correct_count for s in scores),
    )


@dataclass(frozen=True)
class CorpusScores:
    n_sentences: int
    coverage_failures: int
    zero_crossing_pct: float
    crossing_avg: float
    recall_pct: float
    precision_pct: float

    def objective(self) -> float:
        """Zero-crossing %, recall % and precision % taken equally."""
        return (self.zero_crossing_pct + self.recall_pct + self.precision_pct) / 3.0


def corpus_scores(per_sentence: list) -> CorpusScores:
    """Aggregate per-sentence EvalScores; None marks a sentence with no parse.

    Parse failures count as non-zero-crossing with recall and precision 0 and
    are excluded from the crossing average.
    """
    if not per_sentence:
        raise ValueError("empty corpus")
    n = len(per_sentence)
    scored = [s for s in per_sentence if s is not None]
    zero_hits = sum(1 for s in scored if s.zero_crossing)
    return CorpusScores(
        n_sentences=n,
        coverage_failures=n - len(scored),
        zero_crossing_pct=100.0 * zero_hits / n,
        crossing_avg=mean(s.crossing_count for s in scored) if scored else 0.0,
        recall_pct=sum(s.recall_pct for s in scored) / n,
        precision_pct=sum(s.precision_pct for s in scored) / n,
    )


def score_corpus(pairs, top_k: int = 6, aggregation: str = "mean_of_k",
                 mode: str = "standard", **flags) -> CorpusScores:
    """Evaluate (ranked candidate parses, gold) pairs over a corpus.

    Per sentence the top ``min(top_k, available)`` parses are scored and
    collapsed with ``aggregation``; sentences with no parses are coverage
    failures.
    """
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    per_sentence = []
    for candidates, gold in pairs:
        if not candidates:
            per_sentence.append(None)
            continue
        scores = [evaluate_parse(c, gold, mode, **flags) for c in candidates[:top_k]]
        per_sentence.append(aggregate_scores(scores, aggregation))
    return corpus_scores(per_sentence)


# ---------------------------------------------------------------------------
# flattening

def flatten(tree, categories) -> SimpleNode:
    """Remove the internal structure of the given categories.

    Each topmost node labeled in ``categories`` keeps its label but its
    category-labeled descendants are spliced out and preterminals beneath it
    dissolve into their words; subtrees with other labels survive intact
    (and are flattened internally in turn).
    """
    cats = frozenset(categories)
    node = _coerce_node(tree)
    return _flatten_node(node, cats)


def _is_preterminal(node) -> bool:
    return bool(node.children) and all(isinstance(c, str) for c in node.children)


def _flatten_node(node, cats):
    if isinstance(node, str):
        return node
    if node.label in cats:
        return SimpleNode(node.label, tuple(_gather(node, cats)))
    return SimpleNode(node.label,
                      tuple(_flatten_node(child, cats) for child in node.children))


def _gather(node, cats):
    for child in node.children:
        if isinstance(child, str):
            yield child
        elif _is_preterminal(child):
            yield from child.children
        elif child.label in cats:
            yield from _gather(child, cats)
        else:
            yield _flatten_node(child, cats)

"""Lexicalized tree grammars: elementary trees, tree families, lexicon, frequencies.

Grammar files are plain text, one declaration per line:

    tree NAME : initial (S NP^ (VP V@ NP^))
    tree NAME : auxiliary (VP VP* (PP P@ NP^))
    family NAME = tree, tree, ...
    lex WORD POS -> name, name, ...

In tree expressions a parenthesised form is an internal node; leaves must
carry a marker: ``label@`` is the anchor, ``label^`` a substitution slot and
``label*`` the foot of an auxiliary tree.  Any node may carry a flat feature
map written ``label[attr=val,attr=val]`` (after the marker, for leaves).
Blank lines and ``#`` comments are ignored.

Tree unigram frequencies live in a separate two-column file with lines of
the form ``tree_name<TAB>probability``.

Node addresses are Gorn addresses: the root is the empty tuple and the k-th
child of the node at ``a`` is ``a + (k,)``, counting children from 1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

INITIAL = "initial"
AUXILIARY = "auxiliary"

INTERNAL = "internal"
ANCHOR = "anchor"
SUBSTITUTION = "substitution"
FOOT = "foot"

_MARKER_KIND = {"@": ANCHOR, "^": SUBSTITUTION, "*": FOOT}
_KIND_MARKER = {ANCHOR: "@", SUBSTITUTION: "^", FOOT: "*", INTERNAL: ""}

Address = tuple[int, ...]


def format_address(address: Address) -> str:
    """Dotted rendering of a Gorn address; the root prints as 'e'."""
    return ".".join(str(k) for k in address) if address else "e"


class GrammarError(Exception):
    """Base class for grammar loading and validation problems."""


class GrammarFormatError(GrammarError):
    """Malformed grammar or frequency file; carries the offending position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)


class GrammarValidationError(GrammarError):
    """One or more structural invariants failed; all issues are collected."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(self.issues))


@dataclass(frozen=True)
class TreeNode:
    """A node of an elementary tree.

    Internal nodes have at least one child; anchor, substitution and foot
    nodes are childless.  Features are a flat attribute -> atomic value map,
    stored as a sorted tuple of pairs so nodes stay hashable.
    """

    label: str
    kind: str = INTERNAL
    children: tuple["TreeNode", ...] = ()
    features: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.kind == INTERNAL and not self.children:
            raise ValueError(f"internal node {self.label!r} must have children")
        if self.kind != INTERNAL and self.children:
            raise ValueError(f"{self.kind} node {self.label!r} cannot have children")

    def feature_map(self) -> dict[str, str]:
        return dict(self.features)

    @property
    def is_leaf(self) -> bool:
        return self.kind != INTERNAL


@dataclass(frozen=True)
class ElementaryTree:
    """An initial or auxiliary tree, lexicalized by exactly one anchor node."""

    name: str
    kind: str
    root: TreeNode
    anchor_pos: str
    anchor_address: Address
    foot_address: Address | None

    @classmethod
    def build(cls, name: str, kind: str, root: TreeNode) -> "ElementaryTree":
        """Validate the shape of ``root`` and derive the anchor/foot addresses."""
        issues = []
        anchors = []
        feet = []
        for address, node in _walk(root):
            if node.kind == ANCHOR:
                anchors.append((address, node))
            elif node.kind == FOOT:
                feet.append((address, node))
        if len(anchors) != 1:
            issues.append(f"tree {name!r} must have exactly one anchor, found {len(anchors)}")
        if kind == AUXILIARY:
            if len(feet) != 1:
                issues.append(f"auxiliary tree {name!r} must have exactly one foot, found {len(feet)}")
            elif feet[0][1].label != root.label:
                issues.append(
                    f"auxiliary tree {name!r} has foot label {feet[0][1].label!r}"
                    f" but root label {root.label!r}"
                )
        elif kind == INITIAL:
            if feet:
                issues.append(f"initial tree {name!r} may not contain foot nodes")
        else:
            issues.append(f"tree {name!r} has unknown kind {kind!r}")
        if issues:
            raise GrammarValidationError(issues)
        anchor_address, anchor_node = anchors[0]
        foot_address = feet[0][0] if feet else None
        return cls(name, kind, root, anchor_node.label, anchor_address, foot_address)

    def node_at(self, address: Address) -> TreeNode:
        node = self.root
        for k in address:
            node = node.children[k - 1]
        return node

    def addresses(self):
        """Pre-order (address, node) pairs."""
        return list(_walk(self.root))

    @cached_property
    def frontier(self) -> tuple[tuple[Address, TreeNode], ...]:
        """Leaf (address, node) pairs in left-to-right order."""
        return tuple((a, n) for a, n in _walk(self.root) if n.is_leaf)

    @cached_property
    def internal_addresses(self) -> tuple[Address, ...]:
        return tuple(a for a, n in _walk(self.root) if n.kind == INTERNAL)

    @cached_property
    def substitution_addresses(self) -> tuple[Address, ...]:
        return tuple(a for a, n in self.frontier if n.kind == SUBSTITUTION)

    @cached_property
    def spine(self) -> frozenset[Address]:
        """Addresses on the root-to-foot path (empty for initial trees)."""
        if self.foot_address is None:
            return frozenset()
        return frozenset(self.foot_address[:i] for i in range(len(self.foot_address) + 1))

    @cached_property
    def modifier_info(self) -> tuple[str, str] | None:
        """(category, side) of the modifier material of an auxiliary tree.

        The modifier is the highest non-spine subtree containing the anchor;
        side is 'left' or 'right' of the foot in frontier order.  None for
        initial trees and for auxiliaries with material on both sides.
        """
        if self.foot_address is None:
            return None
        mod_address = None
        for i in range(1, len(self.anchor_address) + 1):
            prefix = self.anchor_address[:i]
            if prefix not in self.spine:
                mod_address = prefix
                break
        if mod_address is None:
            return None
        leaf_addresses = [a for a, _ in self.frontier]
        foot_pos = leaf_addresses.index(self.foot_address)
        anchor_pos = leaf_addresses.index(self.anchor_address)
        # material on both sides of the foot makes the height heuristics moot
        before = any(i < foot_pos for i, a in enumerate(leaf_addresses) if a != self.foot_address)
        after = any(i > foot_pos for i, a in enumerate(leaf_addresses) if a != self.foot_address)
        if before and after:
            return None
        side = "left" if anchor_pos < foot_pos else "right"
        return self.node_at(mod_address).label, side


def _walk(node: TreeNode, address: Address = ()):
    yield address, node
    for k, child in enumerate(node.children, start=1):
        yield from _walk(child, address + (k,))


@dataclass(frozen=True)
class TreeFamily:
    name: str
    members: tuple[str, ...]


@dataclass(frozen=True)
class LexEntry:
    lemma: str
    pos: str
    selects: tuple[str, ...]


@dataclass
class FrequencyTable:
    """Tree-name -> unigram probability; absent trees count as probability 0."""

    entries: dict[str, float] = field(default_factory=dict)

    def probability(self, tree_name: str) -> float:
        return self.entries.get(tree_name, 0.0)


@dataclass
class Grammar:
    """Trees, families, lexicon and tree frequencies.

    Treated as immutable once loaded; safe to share across concurrent
    sentence processors.
    """

    trees: dict[str, ElementaryTree]
    families: dict[str, TreeFamily]
    lexicon: dict[tuple[str, str], LexEntry]
    freq: FrequencyTable = field(default_factory=FrequencyTable)

    def trees_for_word(self, word: str, pos: str) -> set[str]:
        """All tree names the lexicon selects for (word, pos), families expanded.

        Unknown (word, pos) pairs yield the empty set.
        """
        entry = self.lexicon.get((word, pos))
        if entry is None:
            return set()
        out: set[str] = set()
        for name in entry.selects:
            family = self.families.get(name)
            if family is not None:
                out.update(family.members)
            else:
                out.add(name)
        return out

    def pos_tags_for_word(self, word: str) -> set[str]:
        return {pos for (lemma, pos) in self.lexicon if lemma == word}

    def trees_with_anchor_pos(self, pos: str) -> set[str]:
        return {name for name, tree in self.trees.items() if tree.anchor_pos == pos}

    def dumps(self) -> str:
        """Canonical text form; loading it back yields an equal Grammar."""
        lines = []
        for name in sorted(self.trees):
            tree = self.trees[name]
            lines.append(f"tree {name} : {tree.kind} {_node_text(tree.root)}")
        for name in sorted(self.families):
            family = self.families[name]
            lines.append(f"family {name} = " + ", ".join(family.members))
        for (lemma, pos) in sorted(self.lexicon):
            entry = self.lexicon[(lemma, pos)]
            lines.append(f"lex {lemma} {pos} -> " + ", ".join(entry.selects))
        return "\n".join(lines) + "\n"

    def dump(self, path) -> None:
        with open(path, "w") as handle:
            handle.write(self.dumps())


def _node_text(node: TreeNode) -> str:
    feats = ""
    if node.features:
        feats = "[" + ",".join(f"{k}={v}" for k, v in node.features) + "]"
    if node.kind == INTERNAL:
        inner = " ".join(_node_text(child) for child in node.children)
        return f"({node.label}{feats} {inner})"
    return f"{node.label}{_KIND_MARKER[node.kind]}{feats}"


# ---------------------------------------------------------------------------
# file format

_TREE_LINE = re.compile(r"^tree\s+(\S+)\s*:\s*(\S+)\s+(.*)$")
_FAMILY_LINE = re.compile(r"^family\s+(\S+)\s*=\s*(.*)$")
_LEX_LINE = re.compile(r"^lex\s+(\S+)\s+(\S+)\s*->\s*(.*)$")
_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_LEAF_TOKEN = re.compile(r"^([^@^*\[\]()]+)([@^*]?)(?:\[([^\]]*)\])?$")


def _parse_features(text: str, lineno: int, column: int) -> tuple[tuple[str, str], ...]:
    if not text:
        return ()
    pairs = []
    for item in text.split(","):
        if "=" not in item:
            raise GrammarFormatError(f"bad feature {item!r}", lineno, column)
        key, value = item.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return tuple(sorted(pairs))


def _parse_token(text: str, lineno: int, column: int):
    match = _LEAF_TOKEN.match(text)
    if not match:
        raise GrammarFormatError(f"bad node token {text!r}", lineno, column)
    label, marker, feats = match.groups()
    kind = _MARKER_KIND.get(marker, INTERNAL)
    return label, kind, _parse_features(feats or "", lineno, column)


def _parse_tree_expr(text: str, lineno: int, offset: int) -> TreeNode:
    tokens = [(m.group(0), offset + m.start() + 1) for m in _TOKEN.finditer(text)]
    pos = 0

    def parse_node() -> TreeNode:
        nonlocal pos
        if pos >= len(tokens):
            raise GrammarFormatError("unexpected end of tree expression", lineno)
        token, column = tokens[pos]
        pos += 1
        if token == "(":
            if pos >= len(tokens):
                raise GrammarFormatError("unterminated '('", lineno, column)
            head, head_col = tokens[pos]
            pos += 1
            label, kind, feats = _parse_token(head, lineno, head_col)
            if kind != INTERNAL:
                raise GrammarFormatError(
                    f"marked node {head!r} cannot have children", lineno, head_col)
            children = []
            while pos < len(tokens) and tokens[pos][0] != ")":
                children.append(parse_node())
            if pos >= len(tokens):
                raise GrammarFormatError("missing ')'", lineno, column)
            pos += 1  # consume ')'
            if not children:
                raise GrammarFormatError(
                    f"internal node {label!r} needs at least one child", lineno, head_col)
            return TreeNode(label, INTERNAL, tuple(children), feats)
        if token == ")":
            raise GrammarFormatError("unexpected ')'", lineno, column)
        label, kind, feats = _parse_token(token, lineno, column)
        if kind == INTERNAL:
            raise GrammarFormatError(
                f"leaf {token!r} must be marked with one of @ ^ *", lineno, column)
        return TreeNode(label, kind, (), feats)

    node = parse_node()
    if pos != len(tokens):
        raise GrammarFormatError("trailing material after tree expression",
                                 lineno, tokens[pos][1])
    return node


def _split_names(text: str, lineno: int) -> tuple[str, ...]:
    names = tuple(name.strip() for name in text.split(",") if name.strip())
    if not names:
        raise GrammarFormatError("empty name list", lineno)
    return names


def loads(text: str, freq_text: str | None = None) -> Grammar:
    """Parse grammar text (and optional frequency text) into a validated Grammar."""
    trees: dict[str, ElementaryTree] = {}
    families: dict[str, TreeFamily] = {}
    lexicon: dict[tuple[str, str], LexEntry] = {}
    issues: list[str] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("tree"):
            match = _TREE_LINE.match(line)
            if not match:
                raise GrammarFormatError("malformed tree line", lineno)
            name, kind, expr = match.groups()
            if kind not in (INITIAL, AUXILIARY):
                raise GrammarFormatError(f"unknown tree kind {kind!r}", lineno)
            if name in trees:
                raise GrammarFormatError(f"duplicate tree {name!r}", lineno)
            try:
                root = _parse_tree_expr(expr, lineno, raw.index(expr))
            except ValueError as exc:
                raise GrammarFormatError(str(exc), lineno)
            try:
                trees[name] = ElementaryTree.build(name, kind, root)
            except GrammarValidationError as exc:
                issues.extend(exc.issues)
        elif line.startswith("family"):
            match = _FAMILY_LINE.match(line)
            if not match:
                raise GrammarFormatError("malformed family line", lineno)
            name, members = match.groups()
            if name in families:
                raise GrammarFormatError(f"duplicate family {name!r}", lineno)
            families[name] = TreeFamily(name, _split_names(members, lineno))
        elif line.startswith("lex"):
            match = _LEX_LINE.match(line)
            if not match:
                raise GrammarFormatError("malformed lexicon line", lineno)
            word, pos, selects = match.groups()
            names = _split_names(selects, lineno)
            key = (word, pos)
            if key in lexicon:
                # multiple lines for one (word, pos) accumulate
                merged = lexicon[key].selects + tuple(
                    n for n in names if n not in lexicon[key].selects)
                lexicon[key] = LexEntry(word, pos, merged)
            else:
                lexicon[key] = LexEntry(word, pos, names)
        else:
            raise GrammarFormatError(f"unrecognized declaration {line.split()[0]!r}", lineno)

    for family in families.values():
        for member in family.members:
            if member not in trees:
                issues.append(f"family {family.name!r} references unknown tree {member!r}")
    for (word, pos), entry in lexicon.items():
        for name in entry.selects:
            if name not in trees and name not in families:
                issues.append(
                    f"lexicon entry {word}/{pos} references unknown tree or family {name!r}")
    if issues:
        raise GrammarValidationError(issues)

    freq = parse_frequencies(freq_text) if freq_text is not None else FrequencyTable()
    return Grammar(trees, families, lexicon, freq)


def load_grammar(path, freq_path=None) -> Grammar:
    """Load a grammar file, optionally together with its frequency table."""
    with open(path) as handle:
        text = handle.read()
    freq_text = None
    if freq_path is not None:
        with open(freq_path) as handle:
            freq_text = handle.read()
    return loads(text, freq_text)


def parse_frequencies(text: str) -> FrequencyTable:
    entries: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GrammarFormatError("expected 'tree_name<TAB>probability'", lineno)
        name, prob_text = parts
        try:
            prob = float(prob_text)
        except ValueError:
            raise GrammarFormatError(f"bad probability {prob_text!r}", lineno)
        if not 0.0 <= prob <= 1.0:
            raise GrammarFormatError(f"probability {prob} outside [0, 1]", lineno)
        if name in entries:
            raise GrammarFormatError(f"duplicate frequency entry {name!r}", lineno)
        entries[name] = prob
    return FrequencyTable(entries)


def load_frequencies(path) -> FrequencyTable:
    with open(path) as handle:
        return parse_frequencies(handle.read())

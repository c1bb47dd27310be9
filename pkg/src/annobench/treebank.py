"""Domain model for argument-structure trees.

Sentences are annotated as hierarchies of phrase nodes over POS-tagged
tokens, with a labeled edge from every token/node to its parent (or to
the virtual root 0).  Branches may cross: a phrase may dominate tokens
that are not adjacent in the surface string, so sibling order is defined
through per-phrase anchor positions rather than through yields.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

#: Parent id of the virtual root.
VIRTUAL_ROOT = 0
#: Edge label reserved for children of the virtual root.
ROOT_EDGE = "--"
#: Lowest admissible phrase-node id; token positions stay below this.
MIN_NODE_ID = 500
#: Phrase category whose anchor is the last noun-kernel element.
NOUN_PHRASE_CATEGORY = "NP"
#: Edge label marking noun-kernel elements.
NOUN_KERNEL = "NK"
#: Edge label marking the head of a phrase.
HEAD = "HD"
#: Labels that can never appear in an edge tagset ("--" marks root edges,
#: "$" is the taggers' boundary symbol).
RESERVED_EDGE_LABELS = frozenset({ROOT_EDGE, "$"})


class TreebankError(Exception):
    """Domain error: operation applied to an object that violates its
    preconditions (unknown node, cyclic tree, ...)."""


@dataclass(frozen=True)
class LabelEntry:
    """One tagset entry: a label plus its human-readable description."""

    label: str
    description: str = ""


def _check_labels(entries: tuple[LabelEntry, ...], section: str) -> None:
    if not entries:
        raise TreebankError(f"tagset section {section!r} is empty")
    seen = set()
    for entry in entries:
        label = entry.label
        if not label or any(ch.isspace() for ch in label):
            raise TreebankError(
                f"bad label {label!r} in section {section!r}: labels must be "
                "non-empty and contain no whitespace")
        if label in seen:
            raise TreebankError(f"duplicate label {label!r} in section {section!r}")
        seen.add(label)


@dataclass(frozen=True)
class TagsetTriple:
    """The three label inventories a corpus is annotated with."""

    word_tags: tuple[LabelEntry, ...]
    phrase_categories: tuple[LabelEntry, ...]
    edge_labels: tuple[LabelEntry, ...]

    def __post_init__(self) -> None:
        _check_labels(self.word_tags, "words")
        _check_labels(self.phrase_categories, "phrases")
        _check_labels(self.edge_labels, "edges")
        reserved = RESERVED_EDGE_LABELS & {e.label for e in self.edge_labels}
        if reserved:
            raise TreebankError(
                f"edge labels {sorted(reserved)} are reserved markers")

    @cached_property
    def word_tag_labels(self) -> frozenset[str]:
        return frozenset(e.label for e in self.word_tags)

    @cached_property
    def phrase_category_labels(self) -> frozenset[str]:
        return frozenset(e.label for e in self.phrase_categories)

    @cached_property
    def edge_label_labels(self) -> frozenset[str]:
        return frozenset(e.label for e in self.edge_labels)


@dataclass(frozen=True)
class Token:
    """A surface token: 1-based position, form, and POS tag."""

    position: int
    form: str
    pos: str


@dataclass(frozen=True)
class PhraseNode:
    """An inner node: id (>= MIN_NODE_ID) and phrase category."""

    id: int
    category: str


@dataclass(frozen=True)
class Edge:
    """Links a child (token position or node id) to its parent node
    (or VIRTUAL_ROOT) under a grammatical-function label."""

    child: int
    parent: int
    label: str


#: A phrase's daughters as a label sequence (word tags or categories).
DaughterSeq = tuple[str, ...]


@dataclass(frozen=True)
class SyntaxTree:
    """One sentence: tokens, phrase nodes, edges, optional comment.

    Instances are immutable; edits produce new trees.  Derived indexes
    are cached on first use and assume a structurally sound tree; use
    :func:`validate` first when provenance is doubtful.
    """

    tokens: tuple[Token, ...]
    nodes: tuple[PhraseNode, ...] = ()
    edges: tuple[Edge, ...] = ()
    comment: Optional[str] = None

    @cached_property
    def token_by_position(self) -> dict[int, Token]:
        return {t.position: t for t in self.tokens}

    @cached_property
    def node_by_id(self) -> dict[int, PhraseNode]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def parent_edge(self) -> dict[int, Edge]:
        return {e.child: e for e in self.edges}

    @cached_property
    def children_of(self) -> dict[int, tuple[Edge, ...]]:
        """Parent id -> edges to its children, in edge-list order."""
        out: dict[int, list[Edge]] = {}
        for e in self.edges:
            out.setdefault(e.parent, []).append(e)
        return {p: tuple(es) for p, es in out.items()}

    def unit_label(self, ident: int) -> str:
        """POS tag of a token position, or category of a node id."""
        if ident in self.token_by_position:
            return self.token_by_position[ident].pos
        if ident in self.node_by_id:
            return self.node_by_id[ident].category
        raise TreebankError(f"unknown token/node id {ident}")

    def roots(self) -> tuple[int, ...]:
        """Children of the virtual root, in edge order."""
        return tuple(e.child for e in self.children_of.get(VIRTUAL_ROOT, ()))


def anchor(node: PhraseNode, tree: SyntaxTree) -> int:
    """Token position that stands for ``node`` when ordering siblings.

    Recursively: an NP anchors at its last noun-kernel child (the NK
    child with the greatest anchor position); any other phrase anchors
    at its unique HD child if there is exactly one; the fallback is the
    smallest anchor position among the children.  A token anchors at its
    own position.
    """
    if tree.node_by_id.get(node.id) != node:
        raise TreebankError(f"node {node.id} does not belong to this tree")
    return _anchor_of(node.id, tree, set())


def _anchor_of(ident: int, tree: SyntaxTree, visiting: set[int]) -> int:
    if ident in tree.token_by_position:
        return ident
    if ident not in tree.node_by_id:
        raise TreebankError(f"unknown token/node id {ident}")
    if ident in visiting:
        raise TreebankError(f"cycle through node {ident}")
    visiting.add(ident)
    try:
        edges = tree.children_of.get(ident, ())
        if not edges:
            raise TreebankError(f"node {ident} has no children")
        node = tree.node_by_id[ident]
        if node.category == NOUN_PHRASE_CATEGORY:
            kernel = [e.child for e in edges if e.label == NOUN_KERNEL]
            if kernel:
                return max(_anchor_of(c, tree, visiting) for c in kernel)
        else:
            heads = [e.child for e in edges if e.label == HEAD]
            if len(heads) == 1:
                return _anchor_of(heads[0], tree, visiting)
        return min(_anchor_of(e.child, tree, visiting) for e in edges)
    finally:
        visiting.discard(ident)


def unit_anchor(tree: SyntaxTree, ident: int) -> int:
    """Anchor position of any unit: a token anchors at itself, a phrase
    node per the anchor() rules."""
    return _anchor_of(ident, tree, set())


def ordered_daughters(
        node: PhraseNode, tree: SyntaxTree) -> tuple[DaughterSeq, tuple[str, ...]]:
    """Daughter labels and edge labels of ``node``, sorted by anchor.

    Returns ``(labels, functions)`` in parallel order; labels are POS
    tags for token children and categories for node children.  For trees
    without crossing branches this equals surface yield order.
    """
    if node.id not in tree.node_by_id:
        raise TreebankError(f"node {node.id} does not belong to this tree")
    edges = tree.children_of.get(node.id, ())
    if not edges:
        raise TreebankError(f"node {node.id} has no children")
    ranked = sorted(edges, key=lambda e: _anchor_of(e.child, tree, set()))
    labels = tuple(tree.unit_label(e.child) for e in ranked)
    functions = tuple(e.label for e in ranked)
    return labels, functions


@dataclass(frozen=True)
class Violation:
    """One appropriateness-check finding.

    ``severity`` is "error" for invariant breaches and "warning" for
    annotation oddities (e.g. several HD children) that remain legal.
    """

    rule: str
    subject: str
    message: str
    severity: str = "error"


def _violation(rule: str, subject: str, message: str, severity: str = "error"):
    return Violation(rule=rule, subject=subject, message=message, severity=severity)


def validate(tree: SyntaxTree, tagsets: TagsetTriple) -> list[Violation]:
    """Appropriateness checks; returns [] iff the tree is well-formed.

    Never raises: structural problems are reported as data so callers
    can show them to the annotator.
    """
    out: list[Violation] = []
    if not tree.tokens:
        out.append(_violation("empty-sentence", "sentence", "sentence has no tokens"))
    if len(tree.tokens) >= MIN_NODE_ID:
        out.append(_violation(
            "too-many-tokens", "sentence",
            f"at most {MIN_NODE_ID - 1} tokens per sentence (token positions "
            "must stay below the node-id range)"))

    positions = [t.position for t in tree.tokens]
    if positions != sorted(positions):
        out.append(_violation("token-order", "sentence",
                              "tokens are not listed in surface order"))
    expected = list(range(1, len(tree.tokens) + 1))
    if sorted(positions) != expected:
        out.append(_violation(
            "token-positions", "sentence",
            f"token positions {sorted(positions)} are not contiguous 1..{len(tree.tokens)}"))
    for tok in tree.tokens:
        if tok.pos not in tagsets.word_tag_labels:
            out.append(_violation(
                "unknown-word-tag", f"token {tok.position}",
                f"POS tag {tok.pos!r} not in the word tagset"))

    node_ids = set()
    for node in tree.nodes:
        if node.id < MIN_NODE_ID:
            out.append(_violation(
                "node-id-range", f"node {node.id}",
                f"node ids must be >= {MIN_NODE_ID}"))
        if node.id in node_ids:
            out.append(_violation(
                "duplicate-node-id", f"node {node.id}", "node id used twice"))
        node_ids.add(node.id)
        if node.category not in tagsets.phrase_category_labels:
            out.append(_violation(
                "unknown-category", f"node {node.id}",
                f"category {node.category!r} not in the phrase tagset"))

    unit_ids = {t.position for t in tree.tokens} | node_ids
    seen_children: set[int] = set()
    for edge in tree.edges:
        subject = f"edge {edge.child}->{edge.parent}"
        if edge.child not in unit_ids:
            out.append(_violation(
                "dangling-child", subject,
                f"edge child {edge.child} is neither a token position nor a node id"))
        if edge.parent != VIRTUAL_ROOT and edge.parent not in node_ids:
            out.append(_violation(
                "dangling-parent", subject,
                f"edge parent {edge.parent} is not a node id"))
        if edge.parent == VIRTUAL_ROOT:
            if edge.label != ROOT_EDGE:
                out.append(_violation(
                    "root-edge-label", subject,
                    f"children of the virtual root carry the {ROOT_EDGE!r} marker, "
                    f"not {edge.label!r}"))
        elif edge.label not in tagsets.edge_label_labels:
            out.append(_violation(
                "unknown-edge-label", subject,
                f"edge label {edge.label!r} not in the edge tagset"))
        if edge.child in seen_children:
            out.append(_violation(
                "multiple-parents", subject,
                f"unit {edge.child} has more than one parent edge"))
        seen_children.add(edge.child)

    for ident in sorted(unit_ids):
        if ident not in seen_children:
            kind = "token" if ident < MIN_NODE_ID else "node"
            out.append(_violation(
                "unattached", f"{kind} {ident}",
                "every token and node needs a parent edge (use parent 0 for roots)"))

    children: dict[int, list[int]] = {}
    head_counts: dict[int, int] = {}
    for edge in tree.edges:
        children.setdefault(edge.parent, []).append(edge.child)
        if edge.label == HEAD:
            head_counts[edge.parent] = head_counts.get(edge.parent, 0) + 1
    for node in tree.nodes:
        if not children.get(node.id):
            out.append(_violation(
                "childless-node", f"node {node.id}", "phrase node has no children"))
    for parent, count in sorted(head_counts.items()):
        if count > 1 and parent in node_ids:
            out.append(_violation(
                "multiple-heads", f"node {parent}",
                f"{count} children carry {HEAD}; no unique head, the leftmost-"
                "child anchor default applies", severity="warning"))

    out.extend(_cycle_violations(tree, node_ids))
    return out


def _cycle_violations(tree: SyntaxTree, node_ids: set[int]) -> list[Violation]:
    parent_of = {e.child: e.parent for e in tree.edges}
    out = []
    flagged: set[int] = set()
    for start in sorted(node_ids):
        seen: set[int] = set()
        current = start
        while current in parent_of and current not in seen:
            seen.add(current)
            current = parent_of[current]
            if current == start and start not in flagged:
                out.append(_violation(
                    "cycle", f"node {start}", "node is its own ancestor"))
                flagged.update(seen)
                break
    return out


def is_valid(tree: SyntaxTree, tagsets: TagsetTriple) -> bool:
    """True when validate() reports no error-severity violations."""
    return not any(v.severity == "error" for v in validate(tree, tagsets))


@dataclass(frozen=True)
class Sentence:
    """A corpus entry: stable sentence id plus its tree."""

    id: int
    tree: SyntaxTree


@dataclass(frozen=True)
class Corpus:
    """Ordered sentences plus the tagsets they are annotated with."""

    sentences: tuple[Sentence, ...]
    tagsets: TagsetTriple

    def __post_init__(self) -> None:
        ids = [s.id for s in self.sentences]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise TreebankError(f"duplicate sentence ids {dupes}")

    @cached_property
    def by_id(self) -> dict[int, SyntaxTree]:
        return {s.id: s.tree for s in self.sentences}

    def get(self, sentence_id: int) -> SyntaxTree:
        try:
            return self.by_id[sentence_id]
        except KeyError:
            raise TreebankError(f"no sentence with id {sentence_id}") from None

    def with_tree(self, sentence_id: int, tree: SyntaxTree) -> "Corpus":
        """New corpus with one sentence's tree replaced."""
        if sentence_id not in self.by_id:
            raise TreebankError(f"no sentence with id {sentence_id}")
        replaced = tuple(
            Sentence(s.id, tree) if s.id == sentence_id else s
            for s in self.sentences)
        return Corpus(replaced, self.tagsets)

    def violations(self) -> list[tuple[int, Violation]]:
        """All per-sentence findings, tagged with the sentence id."""
        out = []
        for sentence in self.sentences:
            for v in validate(sentence.tree, self.tagsets):
                out.append((sentence.id, v))
        return out

    def is_valid(self) -> bool:
        return not any(v.severity == "error" for _, v in self.violations())

"""Reading and writing corpora, tagsets, and trained models.

All formats are UTF-8 with LF line endings and tab-separated columns,
and serialization is canonical to the byte.

Corpus file::

    %% treebank 1
    %% words
    ADV<TAB>adverb
    ...
    %% phrases
    ...
    %% edges
    ...
    #BOS 1
    #CMT<TAB>optional sentence comment
    Selbst<TAB>ADV<TAB>MO<TAB>500
    ...
    #500<TAB>VP<TAB>OC<TAB>501
    #501<TAB>S<TAB>--<TAB>0
    #EOS 1

Token lines are FORM/POS/EDGE/PARENT in surface order (positions are
implicit); node lines are #ID/CATEGORY/EDGE/PARENT with ids from 500
up, listed in ascending order.  Parent 0 is the virtual root and its
children carry the reserved edge marker ``--``.  The three tagset
sections double as the standalone tagset sidecar format handled by
:func:`parse_tagsets` / :func:`serialize_tagsets`.

Model archives are JSON documents carrying raw counts, the derived
probabilities (cross-checked against the counts on load), interpolation
weights, the tagsets trained against, and training metadata.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

from .tagger import CategoryModel
from .treebank import (
    MIN_NODE_ID,
    VIRTUAL_ROOT,
    Corpus,
    Edge,
    LabelEntry,
    PhraseNode,
    Sentence,
    SyntaxTree,
    TagsetTriple,
    Token,
    TreebankError,
    Violation,
)

CORPUS_HEADER = "%% treebank 1"
CORPUS_FORMAT_VERSION = 1
ARCHIVE_FORMAT = "annobench-models"
ARCHIVE_VERSION = 1

_BOS_RE = re.compile(r"^#BOS (\d+)$")
_EOS_RE = re.compile(r"^#EOS (\d+)$")
_NODE_RE = re.compile(r"^#(\d+)\t([^\t]+)\t([^\t]+)\t(\d+)$")
_TOKEN_RE = re.compile(r"^([^\t]+)\t([^\t]+)\t([^\t]+)\t(\d+)$")

TOKEN_LAYOUT = "FORM<TAB>POS<TAB>EDGE<TAB>PARENT"
NODE_LAYOUT = "#ID<TAB>CATEGORY<TAB>EDGE<TAB>PARENT"


class CorpusIOError(Exception):
    """Base class for all corpus/tagset/model IO failures."""


class CorpusFormatError(CorpusIOError):
    """Malformed input; carries the 1-based line number when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class CorpusValidationError(CorpusIOError):
    """A corpus that breaks domain invariants; carries the findings."""

    def __init__(self, message: str,
                 violations: list[tuple[int, Violation]] | None = None):
        self.violations = violations or []
        detail = "; ".join(
            f"sentence {sid}: {v.subject}: {v.message}"
            for sid, v in self.violations[:5])
        super().__init__(f"{message}: {detail}" if detail else message)


class ModelArchiveError(CorpusIOError):
    """Unreadable, corrupt, or unsupported model archive."""


class _Cursor:
    """Line-oriented scanner that tracks 1-based line numbers."""

    def __init__(self, lines: list[str]):
        self.lines = lines
        self.index = 0

    def peek(self) -> Optional[str]:
        return self.lines[self.index] if self.index < len(self.lines) else None

    def advance(self) -> str:
        line = self.lines[self.index]
        self.index += 1
        return line

    @property
    def line_no(self) -> int:
        return self.index  # number of the line just consumed

    @property
    def next_line_no(self) -> int:
        return self.index + 1


def _decode_lines(data: bytes, what: str) -> list[str]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusFormatError(f"{what} is not valid UTF-8: {exc}") from None
    if "\r" in text:
        raise CorpusFormatError(
            f"{what} must use LF line endings (found a carriage return)")
    if text and not text.endswith("\n"):
        raise CorpusFormatError(f"{what} must end with a newline")
    return text.split("\n")[:-1] if text else []


def _parse_section(cur: _Cursor, name: str) -> tuple[LabelEntry, ...]:
    header = cur.peek()
    if header != f"%% {name}":
        raise CorpusFormatError(
            f"expected section header '%% {name}', found {header!r}",
            cur.next_line_no)
    cur.advance()
    entries: list[LabelEntry] = []
    seen: set[str] = set()
    while True:
        line = cur.peek()
        if line is None or line.startswith("%%") or line.startswith("#BOS"):
            break
        cur.advance()
        parts = line.split("\t")
        if len(parts) > 2 or not parts[0]:
            raise CorpusFormatError(
                f"tagset entries are 'LABEL' or 'LABEL<TAB>description', "
                f"found {line!r}", cur.line_no)
        label = parts[0]
        if any(ch.isspace() for ch in label):
            raise CorpusFormatError(
                f"label {label!r} contains whitespace", cur.line_no)
        if label in seen:
            raise CorpusFormatError(
                f"duplicate label {label!r} in section '{name}'", cur.line_no)
        seen.add(label)
        entries.append(LabelEntry(label, parts[1] if len(parts) == 2 else ""))
    if not entries:
        raise CorpusFormatError(f"section '{name}' is empty", cur.next_line_no)
    return tuple(entries)


def _parse_tagset_sections(cur: _Cursor) -> TagsetTriple:
    words = _parse_section(cur, "words")
    phrases = _parse_section(cur, "phrases")
    edges = _parse_section(cur, "edges")
    try:
        return TagsetTriple(words, phrases, edges)
    except TreebankError as exc:
        raise CorpusFormatError(str(exc), cur.line_no) from None


def parse_tagsets(data: bytes) -> TagsetTriple:
    """Parse a standalone tagset file (the three %% sections)."""
    cur = _Cursor(_decode_lines(data, "tagset file"))
    tagsets = _parse_tagset_sections(cur)
    if cur.peek() is not None:
        raise CorpusFormatError(
            f"unexpected content after the edge section: {cur.peek()!r}",
            cur.next_line_no)
    return tagsets


def serialize_tagsets(tagsets: TagsetTriple) -> bytes:
    """Canonical bytes of the three tagset sections."""
    return _tagset_text(tagsets).encode("utf-8")


def _tagset_text(tagsets: TagsetTriple) -> str:
    out: list[str] = []
    for name, entries in (("words", tagsets.word_tags),
                          ("phrases", tagsets.phrase_categories),
                          ("edges", tagsets.edge_labels)):
        out.append(f"%% {name}\n")
        for entry in entries:
            if "\t" in entry.description or "\n" in entry.description:
                raise CorpusValidationError(
                    f"description of {entry.label!r} contains a tab or newline")
            if entry.description:
                out.append(f"{entry.label}\t{entry.description}\n")
            else:
                out.append(f"{entry.label}\n")
    return "".join(out)


def _parse_sentence(cur: _Cursor, sentence_id: int) -> SyntaxTree:
    tokens: list[Token] = []
    nodes: list[PhraseNode] = []
    edges: list[Edge] = []
    node_edges: list[Edge] = []
    node_ids: set[int] = set()
    comment: Optional[str] = None
    saw_content = False
    while True:
        line = cur.peek()
        if line is None:
            raise CorpusFormatError(
                f"end of file inside sentence {sentence_id} (missing #EOS)",
                cur.next_line_no)
        cur.advance()
        if line.startswith("#"):
            eos = _EOS_RE.match(line)
            if eos:
                if int(eos.group(1)) != sentence_id:
                    raise CorpusFormatError(
                        f"#EOS id {eos.group(1)} does not match #BOS id "
                        f"{sentence_id}", cur.line_no)
                break
            if line.startswith("#EOS"):
                raise CorpusFormatError(
                    f"malformed #EOS line {line!r}", cur.line_no)
            if line.startswith("#BOS"):
                raise CorpusFormatError(
                    f"sentence {sentence_id} has no #EOS", cur.line_no)
            if line.startswith("#CMT"):
                parts = line.split("\t", 1)
                if parts[0] != "#CMT" or len(parts) != 2:
                    raise CorpusFormatError(
                        "comment lines are '#CMT<TAB>text'", cur.line_no)
                if saw_content or comment is not None:
                    raise CorpusFormatError(
                        "#CMT must come right after #BOS, once", cur.line_no)
                comment = parts[1]
                continue
            node_m = _NODE_RE.match(line)
            if not node_m:
                raise CorpusFormatError(
                    f"malformed node line {line!r}; expected {NODE_LAYOUT}",
                    cur.line_no)
            saw_content = True
            node_id = int(node_m.group(1))
            if node_id < MIN_NODE_ID:
                raise CorpusFormatError(
                    f"node id {node_id} below {MIN_NODE_ID}", cur.line_no)
            if node_id in node_ids:
                raise CorpusFormatError(
                    f"duplicate node id {node_id} in sentence {sentence_id}",
                    cur.line_no)
            node_ids.add(node_id)
            nodes.append(PhraseNode(id=node_id, category=node_m.group(2)))
            node_edges.append(Edge(child=node_id, parent=int(node_m.group(4)),
                                   label=node_m.group(3)))
        else:
            token_m = _TOKEN_RE.match(line)
            if not token_m:
                raise CorpusFormatError(
                    f"malformed token line {line!r}; expected {TOKEN_LAYOUT}",
                    cur.line_no)
            saw_content = True
            position = len(tokens) + 1
            tokens.append(Token(position=position, form=token_m.group(1),
                                pos=token_m.group(2)))
            edges.append(Edge(child=position, parent=int(token_m.group(4)),
                              label=token_m.group(3)))
    if not saw_content:
        raise CorpusFormatError(
            f"empty sentence {sentence_id}", cur.line_no)
    for edge in edges + node_edges:
        if edge.parent != VIRTUAL_ROOT and edge.parent not in node_ids:
            raise CorpusFormatError(
                f"sentence {sentence_id}: parent id {edge.parent} of child "
                f"{edge.child} does not exist", cur.line_no)
    return SyntaxTree(tokens=tuple(tokens), nodes=tuple(nodes),
                      edges=tuple(edges + node_edges), comment=comment)


def parse_corpus(data: bytes) -> Corpus:
    """Parse a corpus file; total over valid inputs, every failure is a
    :class:`CorpusIOError` with position information."""
    cur = _Cursor(_decode_lines(data, "corpus file"))
    header = cur.peek()
    if header is None:
        raise CorpusFormatError("empty file; expected '%% treebank 1' header")
    if not header.startswith("%% treebank"):
        raise CorpusFormatError(
            f"expected '%% treebank 1' header, found {header!r}", 1)
    if header != CORPUS_HEADER:
        raise CorpusFormatError(
            f"unsupported corpus format version in {header!r}", 1)
    cur.advance()
    tagsets = _parse_tagset_sections(cur)

    sentences: list[Sentence] = []
    seen_ids: set[int] = set()
    while cur.peek() is not None:
        line = cur.advance()
        bos = _BOS_RE.match(line)
        if not bos:
            raise CorpusFormatError(
                f"expected '#BOS <id>', found {line!r}", cur.line_no)
        sentence_id = int(bos.group(1))
        if sentence_id < 1:
            raise CorpusFormatError("sentence ids start at 1", cur.line_no)
        if sentence_id in seen_ids:
            raise CorpusFormatError(
                f"duplicate sentence id {sentence_id}", cur.line_no)
        seen_ids.add(sentence_id)
        sentences.append(
            Sentence(sentence_id, _parse_sentence(cur, sentence_id)))

    try:
        corpus = Corpus(tuple(sentences), tagsets)
    except TreebankError as exc:  # unreachable, ids checked; belt and braces
        raise CorpusFormatError(str(exc)) from None
    errors = [(sid, v) for sid, v in corpus.violations() if v.severity == "error"]
    if errors:
        raise CorpusValidationError("corpus violates tree invariants", errors)
    return corpus


def _serialized_form(form: str) -> str:
    if (not form or "\t" in form or "\n" in form
            or form.startswith("#") or form.startswith("%%")):
        raise CorpusValidationError(
            f"token form {form!r} cannot be serialized: forms must be "
            "non-empty, contain no tab/newline, and not start with '#' or '%%'")
    return form


def serialize_corpus(corpus: Corpus) -> bytes:
    """Canonical corpus bytes: tokens in surface order, nodes ascending
    by id, one blank-free block per sentence."""
    errors = [(sid, v) for sid, v in corpus.violations() if v.severity == "error"]
    if errors:
        raise CorpusValidationError("cannot serialize an invalid corpus", errors)
    out = [CORPUS_HEADER + "\n", _tagset_text(corpus.tagsets)]
    for sentence in corpus.sentences:
        if sentence.id < 1:
            raise CorpusValidationError(
                f"sentence id {sentence.id} is not a positive integer")
        tree = sentence.tree
        out.append(f"#BOS {sentence.id}\n")
        if tree.comment is not None:
            if "\n" in tree.comment:
                raise CorpusValidationError(
                    f"sentence {sentence.id}: comment contains a newline")
            out.append(f"#CMT\t{tree.comment}\n")
        for token in sorted(tree.tokens, key=lambda t: t.position):
            edge = tree.parent_edge[token.position]
            out.append(f"{_serialized_form(token.form)}\t{token.pos}\t"
                       f"{edge.label}\t{edge.parent}\n")
        for node in sorted(tree.nodes, key=lambda n: n.id):
            edge = tree.parent_edge[node.id]
            out.append(f"#{node.id}\t{node.category}\t{edge.label}\t"
                       f"{edge.parent}\n")
        out.append(f"#EOS {sentence.id}\n")
    return "".join(out).encode("utf-8")


def canonical_tree(tree: SyntaxTree) -> SyntaxTree:
    """Tree with tokens in surface order, nodes ascending, and edges in
    serialization order (token edges first, then node edges)."""
    tokens = tuple(sorted(tree.tokens, key=lambda t: t.position))
    nodes = tuple(sorted(tree.nodes, key=lambda n: n.id))
    edges = tuple(tree.parent_edge[t.position] for t in tokens) + tuple(
        tree.parent_edge[n.id] for n in nodes)
    return SyntaxTree(tokens=tokens, nodes=nodes, edges=edges,
                      comment=tree.comment)


def canonical_corpus(corpus: Corpus) -> Corpus:
    """Corpus with every tree in canonical member order; parsing always
    produces this form, so parse(serialize(c)) == canonical_corpus(c)."""
    return Corpus(
        tuple(Sentence(s.id, canonical_tree(s.tree)) for s in corpus.sentences),
        corpus.tagsets)


def corpus_sha256(corpus: Corpus) -> str:
    """Hash of the canonical serialization, for model provenance."""
    return hashlib.sha256(serialize_corpus(corpus)).hexdigest()


@dataclass(frozen=True)
class ModelArchive:
    """Versioned container for a trained model generation."""

    tagsets: TagsetTriple
    models: dict[str, CategoryModel]
    corpus_hash: str
    created: str
    version: int = ARCHIVE_VERSION

    def __post_init__(self) -> None:
        known = self.tagsets.phrase_category_labels
        for category, model in self.models.items():
            if model.category != category:
                raise ModelArchiveError(
                    f"model stored under {category!r} claims category "
                    f"{model.category!r}")
            if category not in known:
                raise ModelArchiveError(
                    f"model category {category!r} is not in the phrase tagset")


def make_archive(models: dict[str, CategoryModel], tagsets: TagsetTriple,
                 corpus: Optional[Corpus] = None,
                 created: Optional[str] = None) -> ModelArchive:
    """Bundle trained models with provenance metadata."""
    return ModelArchive(
        tagsets=tagsets,
        models=dict(models),
        corpus_hash=corpus_sha256(corpus) if corpus is not None else "",
        created=created if created is not None else
        datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def _tagsets_doc(tagsets: TagsetTriple) -> dict:
    return {
        "words": [[e.label, e.description] for e in tagsets.word_tags],
        "phrases": [[e.label, e.description] for e in tagsets.phrase_categories],
        "edges": [[e.label, e.description] for e in tagsets.edge_labels],
    }


def _model_doc(model: CategoryModel) -> dict:
    return {
        "functions": list(model.functions),
        "lambdas": list(model.lambdas),
        "emission_epsilon": model.emission_epsilon,
        "trigram_counts": [[a, b, c, n] for (a, b, c), n
                           in sorted(model.trigram_counts.items())],
        "bigram_counts": [[b, c, n] for (b, c), n
                          in sorted(model.bigram_counts.items())],
        "unigram_counts": [[c, n] for c, n
                           in sorted(model.unigram_counts.items())],
        "emission_counts": [[g, t, n] for (g, t), n
                            in sorted(model.emission_counts.items())],
        "transition_probabilities": [
            [a, b, c, model.transition_prob(a, b, c)]
            for (a, b, c) in sorted(model.trigram_counts)],
        "emission_probabilities": [
            [g, t, model.emission_prob(g, t)]
            for (g, t) in sorted(model.emission_counts)],
    }


def save_model(archive: ModelArchive) -> bytes:
    """Canonical JSON bytes of a model archive."""
    doc = {
        "format": ARCHIVE_FORMAT,
        "version": archive.version,
        "created": archive.created,
        "corpus_hash": archive.corpus_hash,
        "tagsets": _tagsets_doc(archive.tagsets),
        "models": {c: _model_doc(m) for c, m in sorted(archive.models.items())},
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ModelArchiveError(message)


def _read_counts(rows, arity: int, what: str) -> dict:
    counts = {}
    _require(isinstance(rows, list), f"{what} must be a list")
    for row in rows:
        _require(isinstance(row, list) and len(row) == arity + 1,
                 f"{what} rows carry {arity} labels and a count")
        *labels, n = row
        _require(all(isinstance(x, str) for x in labels),
                 f"{what} labels must be strings")
        _require(isinstance(n, int) and not isinstance(n, bool) and n > 0,
                 f"{what} counts must be positive integers")
        key = tuple(labels) if arity > 1 else labels[0]
        _require(key not in counts, f"duplicate {what} entry {key!r}")
        counts[key] = n
    return counts


def _load_tagsets(doc) -> TagsetTriple:
    _require(isinstance(doc, dict), "tagsets must be an object")
    sections = []
    for name in ("words", "phrases", "edges"):
        rows = doc.get(name)
        _require(isinstance(rows, list) and rows, f"tagset section {name} missing")
        entries = []
        for row in rows:
            _require(isinstance(row, list) and len(row) == 2
                     and all(isinstance(x, str) for x in row),
                     f"tagset entries are [label, description] pairs ({name})")
            entries.append(LabelEntry(row[0], row[1]))
        sections.append(tuple(entries))
    try:
        return TagsetTriple(*sections)
    except TreebankError as exc:
        raise ModelArchiveError(f"bad tagsets in archive: {exc}") from None


def _load_model(category: str, doc) -> CategoryModel:
    _require(isinstance(doc, dict), f"model {category} must be an object")
    for key in ("functions", "lambdas", "emission_epsilon", "trigram_counts",
                "bigram_counts", "unigram_counts", "emission_counts",
                "transition_probabilities", "emission_probabilities"):
        _require(key in doc, f"model {category} is missing {key!r}")
    functions = doc["functions"]
    _require(isinstance(functions, list) and functions
             and all(isinstance(f, str) for f in functions),
             f"model {category}: functions must be a non-empty string list")
    lambdas = doc["lambdas"]
    _require(isinstance(lambdas, list) and len(lambdas) == 3
             and all(isinstance(x, (int, float)) and not isinstance(x, bool)
                     and x >= 0 for x in lambdas),
             f"model {category}: lambdas must be three non-negative numbers")
    _require(math.isclose(sum(lambdas), 1.0, rel_tol=0, abs_tol=1e-9),
             f"model {category}: lambdas must sum to 1")
    eps = doc["emission_epsilon"]
    _require(isinstance(eps, (int, float)) and not isinstance(eps, bool)
             and eps > 0, f"model {category}: emission_epsilon must be > 0")
    model = CategoryModel(
        category=category,
        functions=tuple(functions),
        trigram_counts=_read_counts(doc["trigram_counts"], 3,
                                    f"model {category} trigram_counts"),
        bigram_counts=_read_counts(doc["bigram_counts"], 2,
                                   f"model {category} bigram_counts"),
        unigram_counts=_read_counts(doc["unigram_counts"], 1,
                                    f"model {category} unigram_counts"),
        emission_counts=_read_counts(doc["emission_counts"], 2,
                                     f"model {category} emission_counts"),
        lambdas=(float(lambdas[0]), float(lambdas[1]), float(lambdas[2])),
        emission_epsilon=float(eps),
    )
    for row in doc["transition_probabilities"]:
        _require(isinstance(row, list) and len(row) == 4,
                 f"model {category}: bad transition probability row")
        a, b, c, p = row
        recomputed = model.transition_prob(a, b, c)
        _require(recomputed == p,
                 f"model {category}: stored P({c}|{a},{b})={p} does not match "
                 f"the counts (recomputed {recomputed})")
    for row in doc["emission_probabilities"]:
        _require(isinstance(row, list) and len(row) == 3,
                 f"model {category}: bad emission probability row")
        g, t, p = row
        recomputed = model.emission_prob(g, t)
        _require(recomputed == p,
                 f"model {category}: stored P({t}|{g})={p} does not match "
                 f"the counts (recomputed {recomputed})")
    return model


def load_model(data: bytes) -> ModelArchive:
    """Load and integrity-check a model archive."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelArchiveError(f"truncated or malformed archive: {exc}") from None
    _require(isinstance(doc, dict), "archive must be a JSON object")
    _require(doc.get("format") == ARCHIVE_FORMAT,
             f"not a model archive (format {doc.get('format')!r})")
    version = doc.get("version")
    if version != ARCHIVE_VERSION:
        raise ModelArchiveError(
            f"unsupported archive version {version!r} "
            f"(this build reads version {ARCHIVE_VERSION})")
    for key in ("created", "corpus_hash", "tagsets", "models"):
        _require(key in doc, f"archive is missing {key!r}")
    _require(isinstance(doc["created"], str), "created must be a string")
    _require(isinstance(doc["corpus_hash"], str), "corpus_hash must be a string")
    tagsets = _load_tagsets(doc["tagsets"])
    _require(isinstance(doc["models"], dict) and doc["models"],
             "archive carries no models")
    models = {c: _load_model(c, m) for c, m in doc["models"].items()}
    return ModelArchive(tagsets=tagsets, models=models,
                        corpus_hash=doc["corpus_hash"],
                        created=doc["created"], version=version)

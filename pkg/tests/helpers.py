"""Shared test utilities: brute-force oracles and random generators.

The oracles enumerate the full search space and accumulate log terms in
the same order as the production code so that exact ties break the same
way; everything else (path search, beams, backpointers) is independent.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from annobench.corpus_io import canonical_tree
from annobench.tagger import BOUNDARY, NEG_INF, CategoryModel, Grade, classify_ratio
from annobench.treebank import (
    MIN_NODE_ID,
    ROOT_EDGE,
    VIRTUAL_ROOT,
    Corpus,
    Edge,
    LabelEntry,
    PhraseNode,
    Sentence,
    SyntaxTree,
    TagsetTriple,
    Token,
)


def sequence_log_score(model: CategoryModel, functions: Sequence[str],
                       daughters: Sequence[str]) -> float:
    """Direct product formula, same accumulation order as the decoder."""
    total = 0.0
    prev2, prev1 = BOUNDARY, BOUNDARY
    for g, t in zip(functions, daughters):
        total += model.transition_logprob(prev2, prev1, g)
        total += model.emission_logprob(g, t)
        prev2, prev1 = prev1, g
    total += model.transition_logprob(prev2, prev1, BOUNDARY)
    return total


@dataclass
class OraclePosition:
    label: str
    grade: Grade
    ratio: float
    second_log: Optional[float]


@dataclass
class OracleDecode:
    functions: tuple[str, ...]
    log_probability: float
    positions: list[OraclePosition]


def oracle_decode(model: CategoryModel, daughters: Sequence[str],
                  theta1: float, theta2: float) -> OracleDecode:
    """Exhaustive enumeration over all |G|^k function sequences."""
    functions = sorted(model.functions)
    k = len(daughters)
    scored: list[tuple[tuple[str, ...], float]] = []
    best_seq: Optional[tuple[str, ...]] = None
    best_log = NEG_INF
    for seq in itertools.product(functions, repeat=k):
        lg = sequence_log_score(model, seq, daughters)
        scored.append((seq, lg))
        if best_seq is None or lg > best_log:
            best_seq, best_log = seq, lg
    assert best_seq is not None

    positions = []
    for i in range(k):
        per_function: dict[str, float] = {}
        for seq, lg in scored:
            if seq[i] != best_seq[i]:
                if lg > per_function.get(seq[i], NEG_INF):
                    per_function[seq[i]] = lg
        if not per_function:
            positions.append(OraclePosition(best_seq[i], Grade.RELIABLE,
                                            math.inf, None))
            continue
        second_log = max(per_function.values())
        if best_log == NEG_INF:
            positions.append(OraclePosition(
                best_seq[i], classify_ratio(1.0, theta1, theta2), 1.0,
                second_log))
            continue
        if second_log < best_log - math.log(theta2):
            positions.append(OraclePosition(best_seq[i], Grade.RELIABLE,
                                            math.inf, None))
            continue
        diff = best_log - second_log
        ratio = math.exp(diff) if diff < 700 else math.inf
        positions.append(OraclePosition(
            best_seq[i], classify_ratio(ratio, theta1, theta2), ratio,
            second_log))
    return OracleDecode(best_seq, best_log, positions)


def oracle_decode_phrase(models: Mapping[str, CategoryModel],
                         daughters: Sequence[str]) -> tuple[str, tuple[str, ...], float]:
    """Brute-force max over all (category, function sequence) pairs."""
    best: Optional[tuple[str, tuple[str, ...], float]] = None
    for category in sorted(models):
        model = models[category]
        for seq in itertools.product(sorted(model.functions),
                                     repeat=len(daughters)):
            lg = sequence_log_score(model, seq, daughters)
            if best is None or lg > best[2]:
                best = (category, seq, lg)
    assert best is not None
    return best


def random_model(rng: random.Random, max_functions: int = 5,
                 category: str = "Q") -> CategoryModel:
    """Model trained on a handful of random sequences (random counts
    that are consistent by construction)."""
    n_functions = rng.randint(1, max_functions)
    pool = [f"F{i}" for i in range(n_functions)]
    labels = [f"T{i}" for i in range(rng.randint(1, 4))]
    sequences = []
    for _ in range(rng.randint(1, 8)):
        k = rng.randint(1, 6)
        sequences.append((
            [rng.choice(pool) for _ in range(k)],
            [rng.choice(labels) for _ in range(k)],
        ))
    return CategoryModel.from_sequences(category, sequences)


def random_daughters(rng: random.Random, model_labels: Sequence[str],
                     k: int) -> list[str]:
    pool = list(model_labels) + ["T-unseen"]
    return [rng.choice(pool) for _ in range(k)]


# ---------------------------------------------------------------------------
# Random trees and corpora


def random_tagsets(rng: random.Random) -> TagsetTriple:
    words = tuple(LabelEntry(f"W{i}", f"word tag {i}")
                  for i in range(rng.randint(2, 5)))
    phrases = tuple(LabelEntry(p, f"phrase {p}")
                    for p in ["NP", "P1", "P2"][:rng.randint(1, 3)])
    edges = tuple(LabelEntry(e, f"edge {e}")
                  for e in ["HD", "NK", "E1", "E2"][:rng.randint(2, 4)])
    return TagsetTriple(words, phrases, edges)


_FORM_CHARS = "abcdefghijklmnopqrstuvwxyzäöüß"


def _random_form(rng: random.Random) -> str:
    return "".join(rng.choice(_FORM_CHARS) for _ in range(rng.randint(1, 6)))


def random_tree(rng: random.Random, tagsets: TagsetTriple,
                allow_crossing: bool) -> SyntaxTree:
    """Random valid tree; contiguous grouping keeps it crossing-free."""
    n_tokens = rng.randint(1, 8)
    word_tags = [e.label for e in tagsets.word_tags]
    categories = [e.label for e in tagsets.phrase_categories]
    edge_labels = [e.label for e in tagsets.edge_labels]
    tokens = tuple(Token(i + 1, _random_form(rng), rng.choice(word_tags))
                   for i in range(n_tokens))
    units: list[int] = [t.position for t in tokens]
    nodes: list[PhraseNode] = []
    edges: list[Edge] = []
    next_id = MIN_NODE_ID
    while len(units) > 1 and rng.random() < 0.75:
        size = rng.randint(1, min(4, len(units)))
        if allow_crossing:
            picked = sorted(rng.sample(range(len(units)), size))
        else:
            start = rng.randrange(len(units) - size + 1)
            picked = list(range(start, start + size))
        children = [units[i] for i in picked]
        node = PhraseNode(next_id, rng.choice(categories))
        next_id += 1
        nodes.append(node)
        for child in children:
            edges.append(Edge(child, node.id, rng.choice(edge_labels)))
        units = [u for i, u in enumerate(units) if i not in set(picked)]
        units.insert(picked[0], node.id)
    for u in units:
        edges.append(Edge(u, VIRTUAL_ROOT, ROOT_EDGE))
    comment = None
    if rng.random() < 0.3:
        comment = rng.choice(["", "check attachment", "nötig \t tab", "ok?"])
    return canonical_tree(SyntaxTree(tokens, tuple(nodes), tuple(edges), comment))


def random_corpus(rng: random.Random, allow_crossing: bool = True) -> Corpus:
    tagsets = random_tagsets(rng)
    n = rng.randint(1, 5)
    sentences = tuple(
        Sentence(i + 1, random_tree(rng, tagsets, allow_crossing))
        for i in range(n))
    return Corpus(sentences, tagsets)


# ---------------------------------------------------------------------------
# Generator models for synthetic evaluation corpora

GENERATOR_TAGSETS = TagsetTriple(
    word_tags=tuple(LabelEntry(w) for w in
                    ("ADJA", "ADV", "ART", "CARD", "NN", "VAFIN", "VVPP")),
    phrase_categories=tuple(LabelEntry(p) for p in ("NM", "NP", "S", "VP")),
    edge_labels=tuple(LabelEntry(e) for e in
                      ("HD", "MO", "NK", "OA", "OC", "SB")),
)

_GENERATOR_PATTERNS: dict[str, list[tuple[int, list[tuple[str, str]]]]] = {
    # weight, [(function, daughter label), ...]
    "S": [
        (60, [("SB", "NP"), ("HD", "VAFIN"), ("OA", "NP")]),
        (15, [("OA", "NP"), ("HD", "VAFIN"), ("SB", "NP")]),
        (25, [("SB", "NP"), ("HD", "VAFIN"), ("OA", "NP"), ("MO", "ADV")]),
        (20, [("MO", "ADV"), ("HD", "VAFIN"), ("SB", "NP")]),
        (30, [("SB", "NP"), ("HD", "VAFIN"), ("OC", "VP")]),
    ],
    "VP": [
        (20, [("MO", "ADV"), ("HD", "VVPP")]),
        (20, [("OA", "NP"), ("HD", "VVPP")]),
        (10, [("HD", "VVPP")]),
    ],
    "NP": [
        (50, [("NK", "ART"), ("NK", "NN")]),
        (30, [("NK", "ART"), ("NK", "ADJA"), ("NK", "NN")]),
        (10, [("NK", "CARD"), ("NK", "NN")]),
    ],
    "NM": [
        (12, [("NK", "CARD"), ("NK", "NN")]),
    ],
}


def generator_models() -> dict[str, CategoryModel]:
    """Models trained on weighted hand-designed patterns; used to sample
    synthetic corpora with a controlled mix of reliability grades."""
    out = {}
    for category, patterns in _GENERATOR_PATTERNS.items():
        sequences = []
        for weight, pairs in patterns:
            functions = [g for g, _t in pairs]
            daughters = [t for _g, t in pairs]
            sequences.extend([(functions, daughters)] * weight)
        out[category] = CategoryModel.from_sequences(category, sequences)
    return out


def yield_positions(tree: SyntaxTree, ident: int) -> set[int]:
    """All token positions dominated by a unit (brute force)."""
    if ident in tree.token_by_position:
        return {ident}
    out: set[int] = set()
    for edge in tree.children_of.get(ident, ()):
        out |= yield_positions(tree, edge.child)
    return out


def flat_corpus(tagsets: TagsetTriple,
                pattern_counts: Sequence[tuple[int, str, Sequence[tuple[str, str]]]],
                ) -> Corpus:
    """Corpus of one-level trees: (copies, category, [(function, tag)...])."""
    sentences = []
    next_id = 1
    for copies, category, pairs in pattern_counts:
        for _ in range(copies):
            tokens = tuple(Token(i + 1, tag.lower(), tag)
                           for i, (_fn, tag) in enumerate(pairs))
            node = PhraseNode(MIN_NODE_ID, category)
            edges = tuple(Edge(i + 1, MIN_NODE_ID, fn)
                          for i, (fn, _tag) in enumerate(pairs))
            edges += (Edge(MIN_NODE_ID, VIRTUAL_ROOT, ROOT_EDGE),)
            sentences.append(
                Sentence(next_id, SyntaxTree(tokens, (node,), edges)))
            next_id += 1
    return Corpus(tuple(sentences), tagsets)
